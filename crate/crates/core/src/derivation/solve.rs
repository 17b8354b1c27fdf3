use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::LinearMap;
use crate::linalg::{self, C64};
use crate::tol;

use super::boundary::ContractionBC;
use super::instance::DerivationInstance;

/// Solution of the strong derivation problem, with its certificates.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub u: DVector<C64>,
    /// Relative residual of the stacked system.
    pub residual: f64,
    /// Smallest singular value of the stacked system (uniqueness witness).
    pub smallest_singular_value: f64,
    /// `|B0 u - Phi^* B1 u - y0|_H`.
    pub boundary_residual: f64,
}

/// Residuals of the weak formulation over a basis of `Z_Phi`.
#[derive(Debug, Clone)]
pub struct WdpReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

impl DerivationInstance {
    /// Checks that `a` is an endomorphism of the coordinate space and not
    /// genuinely indefinite. Positive-semidefinite-degenerate operators
    /// (coercivity constant zero up to rounding) are accepted: they arise
    /// from exact time-discretization assemblies, where unique solvability
    /// is certified by the singular value of the stacked system instead.
    fn check_operator(&self, a: &LinearMap) -> Result<f64> {
        if !a.domain().same_space(self.v_space()) || !a.codomain().same_space(self.v_space()) {
            return Err(Error::SpaceMismatch {
                what: "derivation problem operator",
            });
        }
        let alpha = a.coercivity_constant()?;
        if alpha < -1e-10 * (1.0 + a.operator_norm()) {
            return Err(Error::NotCoercive { alpha });
        }
        Ok(alpha)
    }

    /// Solves the strong problem: `Du + Au = f` in the antidual (tested
    /// against every coordinate direction) together with the boundary
    /// condition `B0 u - Phi^* B1 u = y0` over `Ran B0`, as one stacked
    /// least-squares system. The theory makes the stack injective and the
    /// data consistent; both are certified a posteriori.
    pub fn solve_sdp(
        &self,
        cbc: &ContractionBC,
        a: &LinearMap,
        f: &DVector<C64>,
        y0: &DVector<C64>,
    ) -> Result<SdpSolution> {
        self.check_operator(a)?;
        let bs = cbc.structure();
        if !bs.w_space().same_space(self.w_space()) {
            return Err(Error::SpaceMismatch {
                what: "boundary structure",
            });
        }
        let m = self.v_space().dim();
        if f.len() != m {
            return Err(Error::Dimension {
                what: "source term",
                expected: m,
                found: f.len(),
            });
        }
        let h = bs.h_space();
        if y0.len() != h.dim() {
            return Err(Error::Dimension {
                what: "boundary value",
                expected: h.dim(),
                found: y0.len(),
            });
        }
        if !bs.ran_b0().contains_vector(y0, tol::MEMBERSHIP) {
            let residual = h.norm(&(y0 - bs.ran_b0().project(y0)));
            return Err(Error::OutOfSubspace {
                what: "boundary value",
                residual,
            });
        }

        let r = bs.ran_b0().dim();
        let gv = self.v_space().gram();
        let top = gv * (self.derivation().coeffs() + a.coeffs());
        let q0 = bs.ran_b0().basis();
        let bc_coeffs = bs.b0().coeffs() - cbc.adjoint_matrix() * bs.b1().coeffs();
        let bottom = q0.adjoint() * h.gram() * &bc_coeffs;

        let mut stacked = DMatrix::zeros(m + r, m);
        stacked.rows_mut(0, m).copy_from(&top);
        stacked.rows_mut(m, r).copy_from(&bottom);
        let mut rhs = DVector::zeros(m + r);
        rhs.rows_mut(0, m).copy_from(&(gv * f));
        rhs.rows_mut(m, r)
            .copy_from(&(q0.adjoint() * h.gram() * y0));

        let (u, smin) = linalg::pinv_solve(&stacked, &rhs);
        if smin <= 0.0 {
            return Err(Error::SingularSystem {
                what: "stacked derivation system",
                smallest_singular_value: smin,
            });
        }
        let scale = 1.0 + rhs.norm() + stacked.norm() * u.norm();
        let residual = (&stacked * &u - &rhs).norm() / scale;
        if residual > tol::SDP_RESIDUAL {
            return Err(Error::SingularSystem {
                what: "stacked derivation system (inconsistent data)",
                smallest_singular_value: residual,
            });
        }
        let boundary_residual = h.norm(&(&bc_coeffs * &u - y0));
        Ok(SdpSolution {
            u,
            residual,
            smallest_singular_value: smin,
            boundary_residual,
        })
    }

    /// Evaluates the weak formulation
    ///
    /// `-conj(<Dz, u>) + <Au, z> = <f, z> + <y0, B0 z>_H`
    ///
    /// over every basis vector `z` of `Z_Phi`. This is the executable
    /// content of the equivalence between the weak and strong problems:
    /// solutions of the strong problem must pass it identically.
    pub fn verify_wdp(
        &self,
        cbc: &ContractionBC,
        a: &LinearMap,
        f: &DVector<C64>,
        y0: &DVector<C64>,
        u: &DVector<C64>,
    ) -> WdpReport {
        let bs = cbc.structure();
        let gv = self.v_space().gram();
        let gh = bs.h_space().gram();
        let z_phi = cbc.z_phi();
        let au = a.coeffs() * u;
        let mut residuals = Vec::with_capacity(z_phi.dim());
        let mut max_residual: f64 = 0.0;
        for j in 0..z_phi.dim() {
            let z = z_phi.basis_vector(j);
            let dz = self.derivation().apply(&z);
            let t1 = -(dz.adjoint() * gv * u)[(0, 0)];
            let t2 = (z.adjoint() * gv * &au)[(0, 0)];
            let t3 = (z.adjoint() * gv * f)[(0, 0)];
            let b0z = bs.b0().apply(&z);
            let t4 = (b0z.adjoint() * gh * y0)[(0, 0)];
            let scale = 1.0 + t1.norm() + t2.norm() + t3.norm() + t4.norm();
            let res = (t1 + t2 - t3 - t4).norm() / scale;
            residuals.push(res);
            max_residual = max_residual.max(res);
        }
        WdpReport {
            residuals,
            max_residual,
            pass: max_residual < tol::WDP_RESIDUAL,
        }
    }

    /// The stability constant: smallest gain of `D + A` restricted to the
    /// b-orthogonal of `Z_Phi` (which equals `Z_{Phi^*}`), measured from the
    /// graph norm of `W` into the antidual norm on `V`. Coercivity makes it
    /// strictly positive, uniformly in the discretization.
    pub fn stability_constant(&self, a: &LinearMap, cbc: &ContractionBC) -> Result<f64> {
        self.check_operator(a)?;
        let z_b = cbc.z_phi_adjoint();
        if z_b.dim() == 0 {
            return Ok(f64::INFINITY);
        }
        let coeffs = self.derivation().coeffs() + a.coeffs();
        let combined = LinearMap::new(self.w_space().clone(), self.v_space().clone(), coeffs)?;
        let beta = combined.restrict_to(&z_b)?.smallest_gain();
        if beta <= 1e-12 {
            return Err(Error::SingularSystem {
                what: "derivation operator on the b-orthogonal",
                smallest_singular_value: beta,
            });
        }
        Ok(beta)
    }
}
