use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{InnerSpace, LinearMap, ScalarField};
use crate::linalg::{self, C64};
use crate::tol;

/// The pivot pair of the evolution problem: a state space with two norms,
/// `|x|_H <= c |x|_U`, where the `H` inner product extends to the duality
/// pairing (a source valued in `H` acts on test states through `<f, w>_H`).
#[derive(Debug, Clone)]
pub struct GelfandTriple {
    u_space: Arc<InnerSpace>,
    h_space: Arc<InnerSpace>,
    embed_const: f64,
}

impl GelfandTriple {
    pub fn new(gram_u: DMatrix<C64>, gram_h: DMatrix<C64>, field: ScalarField) -> Result<Self> {
        let u_space = InnerSpace::new(gram_u, field)?;
        let h_space = InnerSpace::new(gram_h.clone(), field)?;
        if u_space.dim() != h_space.dim() {
            return Err(Error::Dimension {
                what: "pivot-space gram",
                expected: u_space.dim(),
                found: h_space.dim(),
            });
        }
        // largest generalized eigenvalue of (G_H, G_U)
        let rep = u_space.to_orthonormal_cols(
            &u_space.from_orthonormal_on_right(&u_space.apply_gram_inverse(&gram_h)),
        );
        let embed_const = if u_space.dim() == 0 {
            0.0
        } else {
            let (vals, _) = linalg::hermitian_eigen_asc(&rep);
            vals.last().unwrap().max(0.0).sqrt()
        };
        Ok(GelfandTriple {
            u_space,
            h_space,
            embed_const,
        })
    }

    pub fn scalar() -> Self {
        Self::new(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            ScalarField::Real,
        )
        .expect("identity grams")
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(
            DMatrix::identity(n, n),
            DMatrix::identity(n, n),
            ScalarField::Real,
        )
        .expect("identity grams")
    }

    pub fn n(&self) -> usize {
        self.u_space.dim()
    }

    pub fn u_space(&self) -> &Arc<InnerSpace> {
        &self.u_space
    }

    pub fn h_space(&self) -> &Arc<InnerSpace> {
        &self.h_space
    }

    /// The computed constant `c` with `|x|_H <= c |x|_U`.
    pub fn embed_const(&self) -> f64 {
        self.embed_const
    }
}

/// Preset coefficient families for the non-autonomous form.
#[derive(Debug, Clone)]
pub enum FormFamily {
    Constant(DMatrix<C64>),
    /// `M(t) = sum_j t^j C_j`.
    Polynomial(Vec<DMatrix<C64>>),
    /// `M(t) = mean + cos(omega t) C + sin(omega t) S`.
    Trigonometric {
        mean: DMatrix<C64>,
        cos_amp: DMatrix<C64>,
        sin_amp: DMatrix<C64>,
        omega: f64,
    },
}

/// The time-dependent sesquilinear form `a(t, v, w) = w^H M(t) v`, together
/// with its claimed coercivity and continuity bounds with respect to the
/// `U` norm. The claims are validated by sampling; the evaluator itself is
/// a black box.
#[derive(Debug, Clone)]
pub struct NonAutonomousForm {
    family: FormFamily,
    alpha: f64,
    bound: f64,
}

impl NonAutonomousForm {
    pub fn new(family: FormFamily, alpha: f64, bound: f64) -> Self {
        NonAutonomousForm {
            family,
            alpha,
            bound,
        }
    }

    pub fn constant(matrix: DMatrix<C64>, alpha: f64, bound: f64) -> Self {
        Self::new(FormFamily::Constant(matrix), alpha, bound)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The pairing matrix `M(t)`.
    pub fn pairing(&self, t: f64) -> DMatrix<C64> {
        match &self.family {
            FormFamily::Constant(m) => m.clone(),
            FormFamily::Polynomial(coeffs) => {
                let n = coeffs[0].nrows();
                let mut acc = DMatrix::zeros(n, coeffs[0].ncols());
                let mut power = 1.0;
                for c in coeffs {
                    acc += c * linalg::c(power);
                    power *= t;
                }
                acc
            }
            FormFamily::Trigonometric {
                mean,
                cos_amp,
                sin_amp,
                omega,
            } => {
                mean + cos_amp * linalg::c((omega * t).cos())
                    + sin_amp * linalg::c((omega * t).sin())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            FormFamily::Constant(m) => m.nrows(),
            FormFamily::Polynomial(coeffs) => coeffs.first().map_or(0, |c| c.nrows()),
            FormFamily::Trigonometric { mean, .. } => mean.nrows(),
        }
    }

    /// Verifies the claimed bounds at the sampled times:
    /// `Re a(t,v,v) >= alpha |v|_U^2` and `|a(t,v,w)| <= bound |v|_U |w|_U`.
    pub fn validate_on(&self, triple: &GelfandTriple, times: &[f64]) -> Result<()> {
        let u = triple.u_space();
        for &t in times {
            let m = self.pairing(t);
            let euclid =
                u.to_orthonormal_cols(&u.from_orthonormal_on_right(&u.apply_gram_inverse(&m)));
            let herm = linalg::hermitianize(&euclid);
            let (vals, _) = linalg::hermitian_eigen_asc(&herm);
            if vals[0] < self.alpha - 1e-10 {
                return Err(Error::NotCoercive { alpha: vals[0] });
            }
            let (_, sigma, _) = linalg::svd_desc(&euclid);
            let norm = sigma.first().copied().unwrap_or(0.0);
            if norm > self.bound + 1e-10 {
                return Err(Error::Invalid {
                    what: format!(
                        "form exceeds its claimed continuity bound at t = {t}: {norm} > {}",
                        self.bound
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Closed-form trajectories used to manufacture problems with known exact
/// solutions.
#[derive(Debug, Clone)]
pub enum ManufacturedSolution {
    Constant(DVector<C64>),
    /// `u(t) = exp(-rate t) direction`.
    ExpDecay {
        rate: f64,
        direction: DVector<C64>,
    },
    /// `u(t) = cos(omega t) a + sin(omega t) b`.
    Trig {
        cos_amp: DVector<C64>,
        sin_amp: DVector<C64>,
        omega: f64,
    },
}

impl ManufacturedSolution {
    pub fn value(&self, t: f64) -> DVector<C64> {
        match self {
            ManufacturedSolution::Constant(v) => v.clone(),
            ManufacturedSolution::ExpDecay { rate, direction } => {
                direction * linalg::c((-rate * t).exp())
            }
            ManufacturedSolution::Trig {
                cos_amp,
                sin_amp,
                omega,
            } => cos_amp * linalg::c((omega * t).cos()) + sin_amp * linalg::c((omega * t).sin()),
        }
    }

    pub fn derivative(&self, t: f64) -> DVector<C64> {
        match self {
            ManufacturedSolution::Constant(v) => DVector::zeros(v.len()),
            ManufacturedSolution::ExpDecay { rate, direction } => {
                direction * linalg::c(-rate * (-rate * t).exp())
            }
            ManufacturedSolution::Trig {
                cos_amp,
                sin_amp,
                omega,
            } => {
                cos_amp * linalg::c(-omega * (omega * t).sin())
                    + sin_amp * linalg::c(omega * (omega * t).cos())
            }
        }
    }
}

/// Source-term presets; values live in the pivot space `H`.
#[derive(Debug, Clone)]
pub enum SourceTerm {
    Zero,
    Constant(DVector<C64>),
    /// `f(t) = mean + cos(omega t) a + sin(omega t) b`.
    Trigonometric {
        mean: DVector<C64>,
        cos_amp: DVector<C64>,
        sin_amp: DVector<C64>,
        omega: f64,
    },
    /// `f := u' + A(t) u` for the given exact trajectory; the boundary
    /// value is derived to match.
    Manufactured(ManufacturedSolution),
}

/// The evolution problem `u' + A(t) u = f` on `(0, T)` with the boundary
/// coupling `u(0) - Phi^* u(T) = y0` for an `H`-contraction `Phi`.
#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    triple: GelfandTriple,
    form: NonAutonomousForm,
    source: SourceTerm,
    horizon: f64,
    phi: DMatrix<C64>,
    phi_adjoint: DMatrix<C64>,
    y0: DVector<C64>,
}

impl EvolutionProblem {
    pub fn new(
        triple: GelfandTriple,
        form: NonAutonomousForm,
        source: SourceTerm,
        horizon: f64,
        phi: DMatrix<C64>,
        y0: DVector<C64>,
    ) -> Result<Self> {
        let n = triple.n();
        if form.dim() != n {
            return Err(Error::Dimension {
                what: "form coefficients",
                expected: n,
                found: form.dim(),
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid {
                what: format!("horizon must be positive, got {horizon}"),
            });
        }
        if phi.nrows() != n || phi.ncols() != n {
            return Err(Error::Dimension {
                what: "boundary coupling",
                expected: n,
                found: phi.nrows().max(phi.ncols()),
            });
        }
        let h = triple.h_space();
        let phi_map = LinearMap::new(h.clone(), h.clone(), phi.clone())?;
        let norm = phi_map.operator_norm();
        if norm > 1.0 + tol::CONTRACTION {
            return Err(Error::NotContractive { norm });
        }
        let phi_adjoint = phi_map.adjoint().coeffs().clone();
        if y0.len() != n {
            return Err(Error::Dimension {
                what: "boundary value",
                expected: n,
                found: y0.len(),
            });
        }

        // sample-based validation of the claimed form bounds
        let samples: Vec<f64> = (0..=64).map(|j| horizon * j as f64 / 64.0).collect();
        form.validate_on(&triple, &samples)?;

        let y0 = match &source {
            SourceTerm::Manufactured(exact) => {
                exact.value(0.0) - &phi_adjoint * exact.value(horizon)
            }
            _ => y0,
        };
        Ok(EvolutionProblem {
            triple,
            form,
            source,
            horizon,
            phi,
            phi_adjoint,
            y0,
        })
    }

    pub fn triple(&self) -> &GelfandTriple {
        &self.triple
    }

    pub fn form(&self) -> &NonAutonomousForm {
        &self.form
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn phi(&self) -> &DMatrix<C64> {
        &self.phi
    }

    pub fn phi_adjoint(&self) -> &DMatrix<C64> {
        &self.phi_adjoint
    }

    pub fn y0(&self) -> &DVector<C64> {
        &self.y0
    }

    pub fn n(&self) -> usize {
        self.triple.n()
    }

    /// The source value `f(t)` in pivot-space coordinates.
    pub fn source_value(&self, t: f64) -> DVector<C64> {
        match &self.source {
            SourceTerm::Zero => DVector::zeros(self.n()),
            SourceTerm::Constant(v) => v.clone(),
            SourceTerm::Trigonometric {
                mean,
                cos_amp,
                sin_amp,
                omega,
            } => {
                mean + cos_amp * linalg::c((omega * t).cos())
                    + sin_amp * linalg::c((omega * t).sin())
            }
            SourceTerm::Manufactured(exact) => {
                let h = self.triple.h_space();
                let au = h.apply_gram_inverse(&self.form.pairing(t)) * exact.value(t);
                exact.derivative(t) + au
            }
        }
    }

    pub fn is_manufactured(&self) -> bool {
        matches!(self.source, SourceTerm::Manufactured(_))
    }

    pub fn exact_solution(&self, t: f64) -> Option<DVector<C64>> {
        match &self.source {
            SourceTerm::Manufactured(exact) => Some(exact.value(t)),
            _ => None,
        }
    }
}
