//! JSON run configuration: problem presets, discretization, verification
//! options and output paths. Matrices are row-major nested arrays; the
//! boundary coupling presets cover the standard cases by name.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use lions_core::evolution::{
    EvolutionProblem, FormFamily, GelfandTriple, ManufacturedSolution, NonAutonomousForm,
    SourceTerm,
};
use lions_core::hilbert::{LinearMap, ScalarField};

type C64 = Complex<f64>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Converge,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Solve => write!(f, "solve"),
            Mode::Verify => write!(f, "verify"),
            Mode::Converge => write!(f, "converge"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    /// Defaults to the identity when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_u: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_h: Option<Vec<Vec<f64>>>,
    pub form: FormConfig,
    pub source: SourceConfig,
    pub phi: PhiConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormConfig {
    Constant {
        matrix: Vec<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    /// `M(t) = sum_j t^j C_j` with the listed coefficient matrices.
    Polynomial {
        coefficients: Vec<Vec<Vec<f64>>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    /// `M(t) = mean + cos(omega t) cos_amp + sin(omega t) sin_amp`.
    Trigonometric {
        mean: Vec<Vec<f64>>,
        cos_amp: Vec<Vec<f64>>,
        sin_amp: Vec<Vec<f64>>,
        omega: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    Constant {
        vector: Vec<f64>,
    },
    Trigonometric {
        #[serde(skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        cos_amp: Vec<f64>,
        sin_amp: Vec<f64>,
        omega: f64,
    },
    /// Source and boundary value derived from a closed-form trajectory.
    Manufactured {
        solution: SolutionConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolutionConfig {
    Constant {
        value: Vec<f64>,
    },
    ExpDecay {
        rate: f64,
        direction: Vec<f64>,
    },
    Trig {
        cos_amp: Vec<f64>,
        sin_amp: Vec<f64>,
        omega: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiConfig {
    /// `Phi = 0`: plain initial-value coupling.
    Initial,
    /// `Phi = Id`: periodic coupling.
    Periodic,
    /// `Phi = -Id`: anti-periodic coupling.
    Antiperiodic,
    /// `c R(angle)` in two dimensions, `|c| <= 1`.
    ScaledRotation {
        factor: f64,
        angle: f64,
    },
    Explicit {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub steps: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Multiplies every suite tolerance; 0 forces every check to fail,
    /// which is how one proves the harness reports violations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub steps: Vec<usize>,
    pub thetas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

fn to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<C64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{what}: expected a {n}x{n} row-major matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| c(rows[i][j])))
}

fn to_vector(entries: &[f64], n: usize, what: &str) -> Result<DVector<C64>, String> {
    if entries.len() != n {
        return Err(format!(
            "{what}: expected {n} entries, got {}",
            entries.len()
        ));
    }
    Ok(DVector::from_iterator(n, entries.iter().map(|&x| c(x))))
}

impl ProblemConfig {
    /// Builds the evolution problem, estimating undeclared form bounds by
    /// sampling (with a safety margin below/above the sampled extremes).
    pub fn build(&self) -> Result<EvolutionProblem, String> {
        let n = self.dimension;
        if n == 0 {
            return Err("problem dimension must be positive".into());
        }
        let gram_u = match &self.gram_u {
            Some(rows) => to_matrix(rows, n, "gram_u")?,
            None => DMatrix::identity(n, n),
        };
        let gram_h = match &self.gram_h {
            Some(rows) => to_matrix(rows, n, "gram_h")?,
            None => DMatrix::identity(n, n),
        };
        let triple = GelfandTriple::new(gram_u, gram_h, ScalarField::Real)
            .map_err(|e| format!("gram matrices: {e}"))?;

        let (family, alpha, bound) = self.form_family(n)?;
        let (alpha, bound) = match (alpha, bound) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                let (a_est, b_est) = estimate_bounds(&triple, &family, self.horizon);
                (alpha.unwrap_or(a_est), bound.unwrap_or(b_est))
            }
        };
        let form = NonAutonomousForm::new(family, alpha, bound);

        let source = self.source_term(n)?;
        let phi = self.phi_matrix(n, triple.h_space())?;
        let y0 = match &self.y0 {
            Some(entries) => to_vector(entries, n, "y0")?,
            None => DVector::zeros(n),
        };
        EvolutionProblem::new(triple, form, source, self.horizon, phi, y0)
            .map_err(|e| e.to_string())
    }

    fn form_family(&self, n: usize) -> Result<(FormFamily, Option<f64>, Option<f64>), String> {
        match &self.form {
            FormConfig::Constant {
                matrix,
                alpha,
                bound,
            } => Ok((
                FormFamily::Constant(to_matrix(matrix, n, "form matrix")?),
                *alpha,
                *bound,
            )),
            FormConfig::Polynomial {
                coefficients,
                alpha,
                bound,
            } => {
                if coefficients.is_empty() {
                    return Err("polynomial form needs at least one coefficient".into());
                }
                let mats = coefficients
                    .iter()
                    .map(|m| to_matrix(m, n, "polynomial coefficient"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((FormFamily::Polynomial(mats), *alpha, *bound))
            }
            FormConfig::Trigonometric {
                mean,
                cos_amp,
                sin_amp,
                omega,
                alpha,
                bound,
            } => Ok((
                FormFamily::Trigonometric {
                    mean: to_matrix(mean, n, "form mean")?,
                    cos_amp: to_matrix(cos_amp, n, "form cos amplitude")?,
                    sin_amp: to_matrix(sin_amp, n, "form sin amplitude")?,
                    omega: *omega,
                },
                *alpha,
                *bound,
            )),
        }
    }

    fn source_term(&self, n: usize) -> Result<SourceTerm, String> {
        Ok(match &self.source {
            SourceConfig::Zero => SourceTerm::Zero,
            SourceConfig::Constant { vector } => {
                SourceTerm::Constant(to_vector(vector, n, "source vector")?)
            }
            SourceConfig::Trigonometric {
                mean,
                cos_amp,
                sin_amp,
                omega,
            } => SourceTerm::Trigonometric {
                mean: match mean {
                    Some(m) => to_vector(m, n, "source mean")?,
                    None => DVector::zeros(n),
                },
                cos_amp: to_vector(cos_amp, n, "source cos amplitude")?,
                sin_amp: to_vector(sin_amp, n, "source sin amplitude")?,
                omega: *omega,
            },
            SourceConfig::Manufactured { solution } => SourceTerm::Manufactured(match solution {
                SolutionConfig::Constant { value } => {
                    ManufacturedSolution::Constant(to_vector(value, n, "exact value")?)
                }
                SolutionConfig::ExpDecay { rate, direction } => ManufacturedSolution::ExpDecay {
                    rate: *rate,
                    direction: to_vector(direction, n, "exact direction")?,
                },
                SolutionConfig::Trig {
                    cos_amp,
                    sin_amp,
                    omega,
                } => ManufacturedSolution::Trig {
                    cos_amp: to_vector(cos_amp, n, "exact cos amplitude")?,
                    sin_amp: to_vector(sin_amp, n, "exact sin amplitude")?,
                    omega: *omega,
                },
            }),
        })
    }

    fn phi_matrix(
        &self,
        n: usize,
        h: &std::sync::Arc<lions_core::hilbert::InnerSpace>,
    ) -> Result<DMatrix<C64>, String> {
        let phi = match &self.phi {
            PhiConfig::Initial => DMatrix::zeros(n, n),
            PhiConfig::Periodic => DMatrix::identity(n, n),
            PhiConfig::Antiperiodic => DMatrix::identity(n, n) * c(-1.0),
            PhiConfig::ScaledRotation { factor, angle } => {
                if n != 2 {
                    return Err(format!(
                        "scaled-rotation coupling needs dimension 2, problem has {n}"
                    ));
                }
                let (s, co) = angle.sin_cos();
                DMatrix::from_row_slice(2, 2, &[co, -s, s, co]).map(|x| c(x * factor))
            }
            PhiConfig::Explicit { matrix } => to_matrix(matrix, n, "phi matrix")?,
        };
        // early contraction check for a named error at config level
        let norm = LinearMap::new(h.clone(), h.clone(), phi.clone())
            .map_err(|e| e.to_string())?
            .operator_norm();
        if norm > 1.0 + lions_core::tol::CONTRACTION {
            return Err(format!(
                "boundary coupling violates the contraction invariant: |Phi|_H = {norm:.6} > 1"
            ));
        }
        Ok(phi)
    }
}

fn estimate_bounds(triple: &GelfandTriple, family: &FormFamily, horizon: f64) -> (f64, f64) {
    let form = NonAutonomousForm::new(family.clone(), f64::NEG_INFINITY, f64::INFINITY);
    let u = triple.u_space();
    let mut alpha = f64::INFINITY;
    let mut bound: f64 = 0.0;
    for j in 0..=256 {
        let t = horizon * j as f64 / 256.0;
        let m = form.pairing(t);
        let probe = LinearMap::new(u.clone(), u.clone(), u.apply_gram_inverse(&m))
            .expect("dimensions agree");
        alpha = alpha.min(probe.coercivity_constant().expect("endomorphism"));
        bound = bound.max(probe.operator_norm());
    }
    let spread = (bound - alpha).abs().max(1.0);
    (alpha - 1e-3 * spread - 1e-9, bound + 1e-3 * spread + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        r#"{
            "mode": "solve",
            "problem": {
                "dimension": 1,
                "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
                "source": {"preset": "zero"},
                "phi": {"preset": "initial"},
                "y0": [1.0],
                "horizon": 1.0
            },
            "discretization": {"steps": 16, "theta": 1.0},
            "seed": 7
        }"#
    }

    #[test]
    fn parse_emit_round_trip_is_stable() {
        let parsed: RunConfig = serde_json::from_str(sample()).unwrap();
        let emitted = serde_json::to_string_pretty(&parsed).unwrap();
        let reparsed: RunConfig = serde_json::from_str(&emitted).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(emitted, serde_json::to_string_pretty(&reparsed).unwrap());
    }

    #[test]
    fn builds_the_decay_problem() {
        let parsed: RunConfig = serde_json::from_str(sample()).unwrap();
        let p = parsed.problem.unwrap().build().unwrap();
        assert_eq!(p.n(), 1);
        assert!((p.y0()[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn estimates_missing_bounds() {
        let text = r#"{
            "problem": {
                "dimension": 1,
                "form": {"preset": "constant", "matrix": [[2.0]]},
                "source": {"preset": "zero"},
                "phi": {"preset": "periodic"},
                "horizon": 1.0
            }
        }"#;
        let parsed: RunConfig = serde_json::from_str(text).unwrap();
        let p = parsed.problem.unwrap().build().unwrap();
        assert!(p.form().alpha() > 1.9 && p.form().alpha() < 2.0);
    }

    #[test]
    fn rejects_expanding_couplings_with_a_named_error() {
        let text = r#"{
            "problem": {
                "dimension": 1,
                "form": {"preset": "constant", "matrix": [[1.0]], "alpha": 1.0, "bound": 1.0},
                "source": {"preset": "zero"},
                "phi": {"preset": "explicit", "matrix": [[1.5]]},
                "horizon": 1.0
            }
        }"#;
        let parsed: RunConfig = serde_json::from_str(text).unwrap();
        let err = parsed.problem.unwrap().build().unwrap_err();
        assert!(err.contains("contraction"), "error was: {err}");
    }
}
