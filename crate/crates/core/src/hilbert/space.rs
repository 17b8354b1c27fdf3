use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tol;

/// Scalar field of a space. Instances over the reals carry complex storage
/// with vanishing imaginary parts; the tag records the intent and drives
/// random generation and output formatting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    Real,
    Complex,
}

/// A finite-dimensional inner-product space: an explicit Hermitian positive
/// definite Gram matrix defining `<x,y> = y^H G x` (linear in the first
/// argument, antilinear in the second).
///
/// Antilinear functionals are never stored in separate coordinates: a
/// functional is represented by the vector `r` with `f(v) = <r,v>`, and its
/// dual norm is the norm of `r`.
#[derive(Debug, Clone)]
pub struct InnerSpace {
    dim: usize,
    gram: DMatrix<C64>,
    field: ScalarField,
    /// Lower Cholesky factor, `gram = L L^H`.
    chol_l: DMatrix<C64>,
}

impl InnerSpace {
    /// Validates Hermitian symmetry (relative, entrywise) and strict positive
    /// definiteness before accepting the Gram matrix.
    pub fn new(gram: DMatrix<C64>, field: ScalarField) -> Result<Arc<Self>> {
        let dim = gram.nrows();
        if gram.ncols() != dim {
            return Err(Error::Dimension {
                what: "gram matrix",
                expected: dim,
                found: gram.ncols(),
            });
        }
        if dim == 0 {
            return Ok(Arc::new(InnerSpace {
                dim,
                gram: DMatrix::zeros(0, 0),
                field,
                chol_l: DMatrix::zeros(0, 0),
            }));
        }
        let scale = linalg::max_abs(&gram).max(1.0);
        let herm_dev = linalg::max_abs(&(&gram - gram.adjoint())) / scale;
        if herm_dev > tol::GRAM_HERMITIAN {
            return Err(Error::NotHermitian {
                deviation: herm_dev,
            });
        }
        if field == ScalarField::Real && !linalg::is_real_valued(&gram, tol::GRAM_HERMITIAN) {
            let max_im = gram.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            return Err(Error::NotRealValued {
                max_imaginary: max_im,
            });
        }
        let gram = linalg::hermitianize(&gram);
        // a Cholesky factor with strictly positive real diagonal certifies
        // positive definiteness (the complex routine happily takes imaginary
        // roots on indefinite input, so the diagonal must be inspected);
        // the smallest eigenvalue is only computed to report a failure
        let not_pd = || {
            let (eigs, _) = linalg::hermitian_eigen_asc(&gram);
            Error::NotPositiveDefinite {
                min_eigenvalue: eigs[0],
            }
        };
        let chol = gram.clone().cholesky().ok_or_else(not_pd)?;
        let l = chol.l();
        for i in 0..dim {
            let d = l[(i, i)];
            if d.re.is_nan() || d.re <= 0.0 || d.im.abs() > 1e-14 * d.re.abs().max(1.0) {
                return Err(not_pd());
            }
        }
        Ok(Arc::new(InnerSpace {
            dim,
            gram,
            field,
            chol_l: l,
        }))
    }

    pub fn new_real(gram: DMatrix<f64>, field: ScalarField) -> Result<Arc<Self>> {
        Self::new(linalg::complex_from_real(&gram), field)
    }

    /// Standard Euclidean space of the given dimension.
    pub fn euclidean(dim: usize, field: ScalarField) -> Arc<Self> {
        Self::new(DMatrix::identity(dim, dim), field).expect("identity gram is SPD")
    }

    /// Diagonal Gram matrix from positive weights.
    pub fn weighted(weights: &[f64], field: ScalarField) -> Result<Arc<Self>> {
        let diag = DVector::from_iterator(weights.len(), weights.iter().map(|&w| linalg::c(w)));
        Self::new(DMatrix::from_diagonal(&diag), field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    /// `<x,y> = y^H G x`.
    pub fn inner(&self, x: &DVector<C64>, y: &DVector<C64>) -> C64 {
        (y.adjoint() * &self.gram * x)[(0, 0)]
    }

    pub fn norm(&self, x: &DVector<C64>) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// Coordinates of `v` in an orthonormal basis: `L^H v`.
    pub fn to_orthonormal(&self, v: &DVector<C64>) -> DVector<C64> {
        self.chol_l.adjoint() * v
    }

    /// Inverse of [`Self::to_orthonormal`]: solves `L^H v = z`.
    pub fn from_orthonormal(&self, z: &DVector<C64>) -> DVector<C64> {
        self.chol_l
            .adjoint()
            .solve_upper_triangular(z)
            .expect("cholesky factor is invertible")
    }

    /// Column-wise [`Self::to_orthonormal`].
    pub fn to_orthonormal_cols(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.chol_l.adjoint() * m
    }

    /// Column-wise [`Self::from_orthonormal`], i.e. `L^{-H} m`.
    pub fn from_orthonormal_cols(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.chol_l
            .adjoint()
            .solve_upper_triangular(m)
            .expect("cholesky factor is invertible")
    }

    /// `m L^{-H}` (change of basis acting on the domain side).
    pub fn from_orthonormal_on_right(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        // m L^{-H} = (L^{-1} m^H)^H
        self.chol_l
            .solve_lower_triangular(&m.adjoint())
            .expect("cholesky factor is invertible")
            .adjoint()
    }

    /// `G^{-1} m`, via the cached factorization.
    pub fn apply_gram_inverse(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let y = self
            .chol_l
            .solve_lower_triangular(m)
            .expect("cholesky factor is invertible");
        self.chol_l
            .adjoint()
            .solve_upper_triangular(&y)
            .expect("cholesky factor is invertible")
    }

    pub fn apply_gram_inverse_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        let y = self
            .chol_l
            .solve_lower_triangular(v)
            .expect("cholesky factor is invertible");
        self.chol_l
            .adjoint()
            .solve_upper_triangular(&y)
            .expect("cholesky factor is invertible")
    }

    /// Same space, either by identity or by matching dimension, field and
    /// Gram matrix to machine accuracy.
    pub fn same_space(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        if Arc::ptr_eq(self, other) {
            return true;
        }
        if self.dim != other.dim || self.field != other.field {
            return false;
        }
        let scale = linalg::max_abs(&self.gram).max(1.0);
        linalg::max_abs(&(&self.gram - &other.gram)) <= 1e-13 * scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        let err = InnerSpace::new_real(g, ScalarField::Real).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn rejects_indefinite_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = InnerSpace::new_real(g, ScalarField::Real).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn weighted_inner_product_and_norm() {
        let space = InnerSpace::weighted(&[1.0, 4.0], ScalarField::Real).unwrap();
        let x = DVector::from_vec(vec![linalg::c(1.0), linalg::c(1.0)]);
        assert!((space.norm(&x) - 5.0_f64.sqrt()).abs() < 1e-14);
        let y = DVector::from_vec(vec![linalg::c(0.0), linalg::c(1.0)]);
        assert!((space.inner(&x, &y) - linalg::c(4.0)).norm() < 1e-14);
    }

    #[test]
    fn orthonormal_coordinates_round_trip() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let space = InnerSpace::new_real(g, ScalarField::Real).unwrap();
        let x = DVector::from_vec(vec![linalg::c(0.3), linalg::c(-1.2)]);
        let z = space.to_orthonormal(&x);
        // Euclidean norm of the coordinates equals the weighted norm.
        assert!((z.norm() - space.norm(&x)).abs() < 1e-14);
        let back = space.from_orthonormal(&z);
        assert!((back - &x).norm() < 1e-13);
    }

    #[test]
    fn positivity_of_the_inner_product() {
        let space = InnerSpace::weighted(&[0.5, 3.0, 1.0], ScalarField::Complex).unwrap();
        let x = DVector::from_vec(vec![
            C64::new(1.0, 2.0),
            C64::new(0.0, -1.0),
            linalg::c(0.7),
        ]);
        assert!(space.inner(&x, &x).re > 0.0);
        assert!(space.inner(&x, &x).im.abs() < 1e-14);
        let zero = DVector::zeros(3);
        assert_eq!(space.norm(&zero), 0.0);
    }
}
