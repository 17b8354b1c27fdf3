use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{InnerSpace, LinearMap, Subspace};
use crate::linalg::{self, C64};

/// A derivation on a finite-dimensional space: the extended operator `D`
/// (stored through its Riesz representative, as a map `W -> V`), the graph
/// space `W` over the same coordinates as `V` with Gram matrix
/// `G_V + D^H G_V D`, and the test subspace `R` against which the boundary
/// form vanishes identically.
///
/// The boundary form
///
/// `b(v, w) = <Dv, w> + conj(<Dw, v>) = w^H (G_V D + D^H G_V) v`
///
/// is Hermitian; the pairing matrix `G_V D + D^H G_V` is cached.
#[derive(Debug, Clone)]
pub struct DerivationInstance {
    v: Arc<InnerSpace>,
    w: Arc<InnerSpace>,
    d: LinearMap,
    r: Subspace,
    form: DMatrix<C64>,
}

impl DerivationInstance {
    /// Builds the graph space and validates that the form vanishes on
    /// `W x R` (the property the test space must carry).
    pub fn new(
        v: Arc<InnerSpace>,
        d_coeffs: DMatrix<C64>,
        r_spanning: &DMatrix<C64>,
    ) -> Result<Self> {
        let m = v.dim();
        if d_coeffs.nrows() != m || d_coeffs.ncols() != m {
            return Err(Error::Dimension {
                what: "derivation coefficients",
                expected: m,
                found: d_coeffs.nrows().max(d_coeffs.ncols()),
            });
        }
        let gram_w = v.gram() + d_coeffs.adjoint() * v.gram() * &d_coeffs;
        let w = InnerSpace::new(gram_w, v.field())?;
        let d = LinearMap::new(w.clone(), v.clone(), d_coeffs.clone())?;
        let form = v.gram() * &d_coeffs + d_coeffs.adjoint() * v.gram();
        let r = Subspace::from_spanning(w.clone(), r_spanning)?;

        let scale = linalg::max_abs(&form).max(1.0);
        for j in 0..r.dim() {
            let residual = (&form * r.basis_vector(j)).norm();
            if residual > 1e-10 * scale {
                return Err(Error::Invalid {
                    what: format!(
                        "boundary form does not vanish against the test space (residual {residual:.3e})"
                    ),
                });
            }
        }
        Ok(DerivationInstance { v, w, d, r, form })
    }

    /// Instance with identically vanishing boundary form: `D` is the Riesz
    /// representative of a skew pairing, and `R` may be the whole space.
    pub fn skew(v: Arc<InnerSpace>, skew_pairing: DMatrix<C64>) -> Result<Self> {
        let scale = linalg::max_abs(&skew_pairing).max(1.0);
        let defect = linalg::max_abs(&(&skew_pairing + skew_pairing.adjoint()));
        if defect > 1e-12 * scale {
            return Err(Error::Invalid {
                what: format!("pairing is not skew-Hermitian (defect {defect:.3e})"),
            });
        }
        let d_coeffs = v.apply_gram_inverse(&skew_pairing);
        let m = v.dim();
        let full = DMatrix::identity(m, m);
        Self::new(v, d_coeffs, &full)
    }

    pub fn v_space(&self) -> &Arc<InnerSpace> {
        &self.v
    }

    pub fn w_space(&self) -> &Arc<InnerSpace> {
        &self.w
    }

    /// The extended derivation, as a map `W -> V` (values are Riesz
    /// representatives of the antidual).
    pub fn derivation(&self) -> &LinearMap {
        &self.d
    }

    pub fn test_space(&self) -> &Subspace {
        &self.r
    }

    /// Pairing matrix of the boundary form.
    pub fn form_matrix(&self) -> &DMatrix<C64> {
        &self.form
    }

    /// `b(v, w)`; Hermitian in its arguments, real on the diagonal.
    pub fn boundary_form(&self, v: &DVector<C64>, w: &DVector<C64>) -> C64 {
        (w.adjoint() * &self.form * v)[(0, 0)]
    }

    /// `b(w, w)`, guaranteed real.
    pub fn boundary_value(&self, w: &DVector<C64>) -> f64 {
        self.boundary_form(w, w).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ScalarField;

    #[test]
    fn skew_instance_has_zero_form() {
        let v = InnerSpace::euclidean(3, ScalarField::Real);
        let pairing = linalg::complex_from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, -0.5, -1.0, 0.0, 2.0, 0.5, -2.0, 0.0],
        ));
        let inst = DerivationInstance::skew(v, pairing).unwrap();
        assert!(linalg::max_abs(inst.form_matrix()) < 1e-12);
        assert_eq!(inst.test_space().dim(), 3);
    }

    #[test]
    fn form_is_hermitian_and_real_on_diagonal() {
        let v = InnerSpace::weighted(&[1.0, 2.0], ScalarField::Real).unwrap();
        let d = linalg::complex_from_real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let inst = DerivationInstance::new(v, d, &DMatrix::zeros(2, 0)).unwrap();
        let x = DVector::from_vec(vec![linalg::c(1.0), linalg::c(-0.3)]);
        let y = DVector::from_vec(vec![linalg::c(0.4), linalg::c(2.0)]);
        let bxy = inst.boundary_form(&x, &y);
        let byx = inst.boundary_form(&y, &x);
        assert!((bxy - byx.conj()).norm() < 1e-13);
        assert!(inst.boundary_form(&x, &x).im.abs() < 1e-13);
    }

    #[test]
    fn rejects_test_space_that_sees_the_form() {
        let v = InnerSpace::euclidean(2, ScalarField::Real);
        // D = diag(1, 0): form = diag(2, 0), nonzero against e1
        let d = linalg::complex_from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let mut bad = DMatrix::zeros(2, 1);
        bad[(0, 0)] = linalg::c(1.0);
        assert!(DerivationInstance::new(v, d, &bad).is_err());
    }
}
