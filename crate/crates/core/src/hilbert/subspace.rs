use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tol;

use super::space::InnerSpace;

/// A subspace of an inner-product space, represented by a basis whose
/// columns are orthonormal with respect to the ambient Gram matrix.
/// Zero columns means the zero subspace.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: Arc<InnerSpace>,
    basis: DMatrix<C64>,
}

impl Subspace {
    pub fn zero(ambient: Arc<InnerSpace>) -> Self {
        let n = ambient.dim();
        Subspace {
            ambient,
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn full(ambient: Arc<InnerSpace>) -> Self {
        let n = ambient.dim();
        let euclid = DMatrix::identity(n, n);
        Self::from_orthonormal_euclidean(ambient, euclid)
    }

    /// Subspace spanned by the given columns; the basis is Gram-weighted
    /// orthonormalized with rank truncation.
    pub fn from_spanning(ambient: Arc<InnerSpace>, spanning: &DMatrix<C64>) -> Result<Self> {
        if spanning.nrows() != ambient.dim() {
            return Err(Error::Dimension {
                what: "spanning set",
                expected: ambient.dim(),
                found: spanning.nrows(),
            });
        }
        if spanning.ncols() == 0 || ambient.dim() == 0 {
            return Ok(Self::zero(ambient));
        }
        let euclid = ambient.to_orthonormal_cols(spanning);
        let (u, sigma, _) = linalg::svd_desc(&euclid);
        let rank = linalg::numerical_rank(&sigma);
        Ok(Self::from_orthonormal_euclidean(
            ambient,
            u.columns(0, rank).into_owned(),
        ))
    }

    pub fn span_of(ambient: Arc<InnerSpace>, vectors: &[DVector<C64>]) -> Result<Self> {
        let n = ambient.dim();
        let mut m = DMatrix::zeros(n, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::Dimension {
                    what: "spanning vector",
                    expected: n,
                    found: v.len(),
                });
            }
            m.set_column(j, v);
        }
        Self::from_spanning(ambient, &m)
    }

    /// Internal: build from columns that are orthonormal in the Euclidean
    /// coordinates of the ambient space (`basis = L^{-H} q`). A Householder
    /// polish removes the residual non-orthogonality that eigenvector-based
    /// factorizations leave on clustered spectra.
    pub(crate) fn from_orthonormal_euclidean(ambient: Arc<InnerSpace>, q: DMatrix<C64>) -> Self {
        let q = if q.ncols() == 0 { q } else { q.qr().q() };
        let basis = ambient.from_orthonormal_cols(&q);
        Subspace { ambient, basis }
    }

    pub fn ambient(&self) -> &Arc<InnerSpace> {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn basis_vector(&self, j: usize) -> DVector<C64> {
        self.basis.column(j).into_owned()
    }

    /// Basis in Euclidean (orthonormal-ambient) coordinates.
    pub(crate) fn euclidean_basis(&self) -> DMatrix<C64> {
        self.ambient.to_orthonormal_cols(&self.basis)
    }

    /// Orthonormality defect of the stored basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        if k == 0 {
            return 0.0;
        }
        let g = self.basis.adjoint() * self.ambient.gram() * &self.basis;
        (g - DMatrix::identity(k, k)).norm()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<C64>) -> DVector<C64> {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient.dim());
        }
        let coords = self.basis.adjoint() * self.ambient.gram() * v;
        &self.basis * coords
    }

    /// Coordinates of the projection in the stored basis.
    pub fn coordinates(&self, v: &DVector<C64>) -> DVector<C64> {
        self.basis.adjoint() * self.ambient.gram() * v
    }

    /// Membership test: projection residual relative to the vector norm.
    pub fn contains_vector(&self, v: &DVector<C64>, tolerance: f64) -> bool {
        let nv = self.ambient.norm(v);
        if nv == 0.0 {
            return true;
        }
        let residual = self.ambient.norm(&(v - self.project(v)));
        residual <= tolerance * nv.max(1.0)
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        if !self.ambient.same_space(&other.ambient) {
            return Err(Error::SpaceMismatch {
                what: "subspace sum",
            });
        }
        let mut cols = DMatrix::zeros(self.ambient.dim(), self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim())
            .copy_from(&other.basis);
        Subspace::from_spanning(self.ambient.clone(), &cols)
    }

    pub fn intersection(&self, other: &Subspace) -> Result<Subspace> {
        if !self.ambient.same_space(&other.ambient) {
            return Err(Error::SpaceMismatch {
                what: "subspace intersection",
            });
        }
        let ka = self.dim();
        let kb = other.dim();
        if ka == 0 || kb == 0 {
            return Ok(Subspace::zero(self.ambient.clone()));
        }
        // Solve Qa x = Qb y: kernel of [Qa | -Qb] in coefficient space.
        let qa = self.euclidean_basis();
        let qb = other.euclidean_basis();
        let mut stacked = DMatrix::zeros(self.ambient.dim(), ka + kb);
        stacked.columns_mut(0, ka).copy_from(&qa);
        stacked.columns_mut(ka, kb).copy_from(&(-&qb));
        let (u, sigma, _) = linalg::svd_desc(&stacked.adjoint());
        let rank = linalg::numerical_rank(&sigma);
        let row_space = u.columns(0, rank).into_owned();
        let null = linalg::orthonormal_complement(&row_space);
        if null.ncols() == 0 {
            return Ok(Subspace::zero(self.ambient.clone()));
        }
        let x_part = null.rows(0, ka).into_owned();
        let vectors = &self.basis * x_part;
        Subspace::from_spanning(self.ambient.clone(), &vectors)
    }

    /// Gram-orthogonal complement inside the ambient space.
    pub fn complement(&self) -> Subspace {
        let q = self.euclidean_basis();
        let comp = linalg::orthonormal_complement(&q);
        Subspace::from_orthonormal_euclidean(self.ambient.clone(), comp)
    }

    /// Principal angles between two subspaces of the same ambient space,
    /// ascending, `min(dim, dim)` of them. Small angles are recovered from
    /// the projection residual (sine form) to stay accurate near zero, large
    /// ones from the cosine form.
    pub fn principal_angles(&self, other: &Subspace) -> Result<Vec<f64>> {
        if !self.ambient.same_space(&other.ambient) {
            return Err(Error::SpaceMismatch {
                what: "principal angles",
            });
        }
        let (small, large) = if self.dim() <= other.dim() {
            (self, other)
        } else {
            (other, self)
        };
        let p = small.dim();
        if p == 0 {
            return Ok(Vec::new());
        }
        let qs = small.euclidean_basis();
        let ql = large.euclidean_basis();
        let cross = ql.adjoint() * &qs;
        let (_, mut cosines, _) = linalg::svd_desc(&cross); // descending
        cosines.resize(p, 0.0);
        let residual = &qs - &ql * cross;
        let (_, mut sines_desc, _) = linalg::svd_desc(&residual);
        sines_desc.resize(p, 0.0);
        let sines_asc: Vec<f64> = sines_desc.into_iter().rev().collect();
        let mut angles = Vec::with_capacity(p);
        for i in 0..p {
            let c = cosines[i].clamp(0.0, 1.0);
            let s = sines_asc[i].clamp(0.0, 1.0);
            if c * c > 0.5 {
                angles.push(s.asin());
            } else {
                angles.push(c.acos());
            }
        }
        Ok(angles)
    }

    /// Equality as subspaces: equal dimensions and largest principal angle
    /// below the equality tolerance.
    pub fn coincides_with(&self, other: &Subspace) -> Result<bool> {
        if self.dim() != other.dim() {
            return Ok(false);
        }
        if self.dim() == 0 {
            return Ok(true);
        }
        let angles = self.principal_angles(other)?;
        Ok(angles.iter().copied().fold(0.0, f64::max) < tol::ANGLE_EQUALITY)
    }

    /// Containment `other` in `self`, via principal angles.
    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        if other.dim() > self.dim() {
            return Ok(false);
        }
        if other.dim() == 0 {
            return Ok(true);
        }
        let angles = other.principal_angles(self)?;
        Ok(angles.iter().copied().fold(0.0, f64::max) < tol::ANGLE_EQUALITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::space::ScalarField;
    use crate::hilbert::LinearMap;

    fn euclid(n: usize) -> Arc<InnerSpace> {
        InnerSpace::euclidean(n, ScalarField::Real)
    }

    fn unit(n: usize, i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(n);
        v[i] = linalg::c(1.0);
        v
    }

    #[test]
    fn sum_of_coordinate_spans() {
        let e3 = euclid(3);
        let a = Subspace::span_of(e3.clone(), &[unit(3, 0)]).unwrap();
        let b = Subspace::span_of(e3.clone(), &[unit(3, 1)]).unwrap();
        let s = a.sum(&b).unwrap();
        assert_eq!(s.dim(), 2);
        let expected = Subspace::span_of(e3, &[unit(3, 0), unit(3, 1)]).unwrap();
        assert!(s.coincides_with(&expected).unwrap());
    }

    #[test]
    fn principal_angles_of_a_space_with_itself_vanish() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]);
        let space = InnerSpace::new_real(g, ScalarField::Real).unwrap();
        let z = Subspace::span_of(
            space,
            &[
                DVector::from_vec(vec![linalg::c(1.0), linalg::c(2.0), linalg::c(0.0)]),
                DVector::from_vec(vec![linalg::c(0.0), linalg::c(1.0), linalg::c(-1.0)]),
            ],
        )
        .unwrap();
        let angles = z.principal_angles(&z).unwrap();
        assert_eq!(angles.len(), 2);
        assert!(angles.iter().all(|&a| a < 1e-12));
        assert!(z.coincides_with(&z).unwrap());
    }

    #[test]
    fn kernel_of_row_functional() {
        let e2 = euclid(2);
        let cod = euclid(1);
        let t = LinearMap::new_real(e2, cod, DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        let k = t.kernel();
        assert_eq!(k.dim(), 1);
        let direction = DVector::from_vec(vec![linalg::c(1.0), linalg::c(-1.0)]);
        assert!(k.contains_vector(&direction, 1e-10));
        // the reported basis is unit-norm
        assert!((k.ambient().norm(&k.basis_vector(0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_range_dimensions_and_orthogonality() {
        let dom = InnerSpace::weighted(&[1.0, 2.0, 0.5, 1.0], ScalarField::Real).unwrap();
        let cod = InnerSpace::weighted(&[1.0, 3.0], ScalarField::Real).unwrap();
        // rank 2 map
        let t = LinearMap::new_real(
            dom.clone(),
            cod,
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        let kern = t.kernel();
        let co_range = t.adjoint().range();
        assert_eq!(kern.dim() + co_range.dim(), dom.dim());
        let angles = kern.principal_angles(&co_range).unwrap();
        for a in angles {
            assert!(a > std::f64::consts::FRAC_PI_2 - 1e-8, "angle {a}");
        }
    }

    #[test]
    fn intersection_of_planes() {
        let e3 = euclid(3);
        let a = Subspace::span_of(e3.clone(), &[unit(3, 0), unit(3, 1)]).unwrap();
        let b = Subspace::span_of(e3.clone(), &[unit(3, 1), unit(3, 2)]).unwrap();
        let cap = a.intersection(&b).unwrap();
        assert_eq!(cap.dim(), 1);
        assert!(cap.contains_vector(&unit(3, 1), 1e-10));
        let disjoint = Subspace::span_of(e3, &[unit(3, 2)]).unwrap();
        assert_eq!(a.intersection(&disjoint).unwrap().dim(), 0);
    }

    #[test]
    fn complement_splits_the_space() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.0, 0.0, 0.0, 0.7]);
        let space = InnerSpace::new_real(g, ScalarField::Real).unwrap();
        let z = Subspace::span_of(space.clone(), &[unit(3, 0)]).unwrap();
        let comp = z.complement();
        assert_eq!(comp.dim(), 2);
        assert_eq!(z.sum(&comp).unwrap().dim(), 3);
        let angles = z.principal_angles(&comp).unwrap();
        assert!(angles[0] > std::f64::consts::FRAC_PI_2 - 1e-10);
    }
}
