use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{InnerSpace, LinearMap, Subspace};
use crate::linalg::{self, C64};
use crate::tol;

use super::instance::DerivationInstance;

/// A factorization of the boundary form through a trace space `H`:
///
/// `b(v, w) = <B1 v, B1 w>_H - <B0 v, B0 w>_H`,  `ker B0 + ker B1 = W`,
///
/// with the test space contained in both kernels. `B0` plays the initial
/// trace, `B1` the final trace.
#[derive(Debug, Clone)]
pub struct BoundaryStructure {
    w: Arc<InnerSpace>,
    h: Arc<InnerSpace>,
    b0: LinearMap,
    b1: LinearMap,
    r: Subspace,
    form: DMatrix<C64>,
    ran_b0: Subspace,
    ran_b1: Subspace,
    ker_b0: Subspace,
    ker_b1: Subspace,
}

/// Outcome of the admissibility test for a subspace `Z`.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub contains_test_space: bool,
    /// Largest value of `b(z, z)` over unit vectors of `Z`.
    pub max_on_subspace: f64,
    /// A unit vector attaining a positive value, when one exists.
    pub violation: Option<DVector<C64>>,
    pub admissible: bool,
}

/// Admissibility of `Z` together with nonnegativity of the form on the
/// b-orthogonal of `Z`.
#[derive(Debug, Clone)]
pub struct StrongAdmissibilityReport {
    pub base: AdmissibilityReport,
    /// Smallest value of `b(u, u)` over unit vectors of `Z^b`.
    pub min_on_b_orthogonal: f64,
    pub violation: Option<DVector<C64>>,
    pub strongly_admissible: bool,
}

impl BoundaryStructure {
    /// Validates the factorization against the instance's boundary form,
    /// the kernel-sum condition, and containment of the test space.
    pub fn new(
        inst: &DerivationInstance,
        h: Arc<InnerSpace>,
        b0: LinearMap,
        b1: LinearMap,
    ) -> Result<Arc<Self>> {
        let w = inst.w_space().clone();
        for (map, what) in [(&b0, "initial trace"), (&b1, "final trace")] {
            if !map.domain().same_space(&w) || !map.codomain().same_space(&h) {
                return Err(Error::SpaceMismatch { what });
            }
        }
        let form = inst.form_matrix().clone();
        let reconstructed = b1.coeffs().adjoint() * h.gram() * b1.coeffs()
            - b0.coeffs().adjoint() * h.gram() * b0.coeffs();
        let scale = linalg::max_abs(&form).max(1.0);
        let defect = linalg::max_abs(&(&reconstructed - &form)) / scale;
        if defect > 1e-10 {
            return Err(Error::Invalid {
                what: format!("trace maps do not factor the boundary form (defect {defect:.3e})"),
            });
        }
        let ker_b0 = b0.kernel();
        let ker_b1 = b1.kernel();
        if ker_b0.sum(&ker_b1)?.dim() != w.dim() {
            return Err(Error::Invalid {
                what: "kernels of the trace maps do not span the graph space".into(),
            });
        }
        let r = inst.test_space().clone();
        if !ker_b0.contains_subspace(&r)? || !ker_b1.contains_subspace(&r)? {
            return Err(Error::Invalid {
                what: "test space must lie in the kernel of both trace maps".into(),
            });
        }
        let ran_b0 = b0.range();
        let ran_b1 = b1.range();
        Ok(Arc::new(BoundaryStructure {
            w,
            h,
            b0,
            b1,
            r,
            form,
            ran_b0,
            ran_b1,
            ker_b0,
            ker_b1,
        }))
    }

    pub fn w_space(&self) -> &Arc<InnerSpace> {
        &self.w
    }

    pub fn h_space(&self) -> &Arc<InnerSpace> {
        &self.h
    }

    pub fn b0(&self) -> &LinearMap {
        &self.b0
    }

    pub fn b1(&self) -> &LinearMap {
        &self.b1
    }

    pub fn test_space(&self) -> &Subspace {
        &self.r
    }

    pub fn ran_b0(&self) -> &Subspace {
        &self.ran_b0
    }

    pub fn ran_b1(&self) -> &Subspace {
        &self.ran_b1
    }

    pub fn ker_b0(&self) -> &Subspace {
        &self.ker_b0
    }

    pub fn ker_b1(&self) -> &Subspace {
        &self.ker_b1
    }

    pub fn form_matrix(&self) -> &DMatrix<C64> {
        &self.form
    }

    pub fn boundary_form(&self, v: &DVector<C64>, w: &DVector<C64>) -> C64 {
        (w.adjoint() * &self.form * v)[(0, 0)]
    }

    /// The boundary form restricted to `Z`, as a Hermitian matrix in the
    /// coordinates of the (orthonormal) basis of `Z`.
    fn restricted_form(&self, z: &Subspace) -> DMatrix<C64> {
        linalg::hermitianize(&(z.basis().adjoint() * &self.form * z.basis()))
    }

    /// `Z` is admissible when it contains the test space and the boundary
    /// form is nonpositive on it.
    pub fn is_admissible(&self, z: &Subspace) -> Result<AdmissibilityReport> {
        if !z.ambient().same_space(&self.w) {
            return Err(Error::SpaceMismatch {
                what: "admissibility test",
            });
        }
        let contains_test_space = z.contains_subspace(&self.r)?;
        let (max_on_subspace, violation) = if z.dim() == 0 {
            (0.0, None)
        } else {
            let (vals, vecs) = linalg::hermitian_eigen_asc(&self.restricted_form(z));
            let max = *vals.last().unwrap();
            let witness = if max > tol::ADMISSIBLE {
                Some(z.basis() * vecs.column(vals.len() - 1).into_owned())
            } else {
                None
            };
            (max, witness)
        };
        Ok(AdmissibilityReport {
            contains_test_space,
            max_on_subspace,
            admissible: contains_test_space && max_on_subspace <= tol::ADMISSIBLE,
            violation,
        })
    }

    pub fn is_strongly_admissible(&self, z: &Subspace) -> Result<StrongAdmissibilityReport> {
        let base = self.is_admissible(z)?;
        let z_b = self.b_orthogonal(z)?;
        let (min_on_b_orthogonal, violation) = if z_b.dim() == 0 {
            (0.0, None)
        } else {
            let (vals, vecs) = linalg::hermitian_eigen_asc(&self.restricted_form(&z_b));
            let min = vals[0];
            let witness = if min < -tol::ADMISSIBLE {
                Some(z_b.basis() * vecs.column(0).into_owned())
            } else {
                None
            };
            (min, witness)
        };
        let strongly_admissible = base.admissible && min_on_b_orthogonal >= -tol::ADMISSIBLE;
        Ok(StrongAdmissibilityReport {
            base,
            min_on_b_orthogonal,
            violation,
            strongly_admissible,
        })
    }

    /// `Z^b = { u : b(u, z) = 0 for all z in Z }`, the nullspace of
    /// `w -> (b(w, z_j))_j` over a basis of `Z`.
    pub fn b_orthogonal(&self, z: &Subspace) -> Result<Subspace> {
        if !z.ambient().same_space(&self.w) {
            return Err(Error::SpaceMismatch {
                what: "b-orthogonal",
            });
        }
        let k = z.dim();
        if k == 0 {
            return Ok(Subspace::full(self.w.clone()));
        }
        let rows = z.basis().adjoint() * &self.form;
        let target = InnerSpace::euclidean(k, self.w.field());
        let map = LinearMap::new(self.w.clone(), target, rows)?;
        Ok(map.kernel())
    }

    /// A vector `w` with `B0 w = x0` and `B1 w = x1`, built by decomposing
    /// preimages along `ker B0 + ker B1` and recombining.
    pub fn joint_lift(&self, x0: &DVector<C64>, x1: &DVector<C64>) -> Result<DVector<C64>> {
        if !self.ran_b0.contains_vector(x0, tol::MEMBERSHIP) {
            let residual = self.h.norm(&(x0 - self.ran_b0.project(x0)));
            return Err(Error::OutOfSubspace {
                what: "joint lift initial value",
                residual,
            });
        }
        if !self.ran_b1.contains_vector(x1, tol::MEMBERSHIP) {
            let residual = self.h.norm(&(x1 - self.ran_b1.project(x1)));
            return Err(Error::OutOfSubspace {
                what: "joint lift final value",
                residual,
            });
        }
        let w1 = self.preimage(&self.b0, x0);
        let w2 = self.preimage(&self.b1, x1);
        // w1 = w10 + w11 and w2 = w20 + w21 along ker B0 + ker B1;
        // w = w11 + w20 keeps B0 w = B0 w1 and B1 w = B1 w2.
        let (_, w11) = self.split_along_kernels(&w1);
        let (w20, _) = self.split_along_kernels(&w2);
        let lift = w11 + w20;

        let scale = self.h.norm(x0).max(self.h.norm(x1)).max(1.0);
        let res0 = self.h.norm(&(self.b0.apply(&lift) - x0));
        let res1 = self.h.norm(&(self.b1.apply(&lift) - x1));
        if res0 > tol::LIFT_RESIDUAL * scale || res1 > tol::LIFT_RESIDUAL * scale {
            return Err(Error::SingularSystem {
                what: "joint lift",
                smallest_singular_value: res0.max(res1),
            });
        }
        Ok(lift)
    }

    fn preimage(&self, map: &LinearMap, x: &DVector<C64>) -> DVector<C64> {
        let e = map.orthonormal_matrix();
        let rhs = self.h.to_orthonormal(x);
        let (z, _) = linalg::pinv_solve(&e, &rhs);
        self.w.from_orthonormal(&z)
    }

    /// Splits `w = w0 + w1` with `w0` in `ker B0`, `w1` in `ker B1`
    /// (a least-squares choice; the splitting need not be unique).
    fn split_along_kernels(&self, w: &DVector<C64>) -> (DVector<C64>, DVector<C64>) {
        let k0 = self.ker_b0.dim();
        let k1 = self.ker_b1.dim();
        let q0 = self.ker_b0.euclidean_basis();
        let q1 = self.ker_b1.euclidean_basis();
        let mut stacked = DMatrix::zeros(self.w.dim(), k0 + k1);
        stacked.columns_mut(0, k0).copy_from(&q0);
        stacked.columns_mut(k0, k1).copy_from(&q1);
        let rhs = self.w.to_orthonormal(w);
        let (coeffs, _) = linalg::pinv_solve(&stacked, &rhs);
        let part0 = self.ker_b0.basis() * coeffs.rows(0, k0).into_owned();
        let part1 = self.ker_b1.basis() * coeffs.rows(k0, k1).into_owned();
        (part0, part1)
    }

    /// The contraction induced by an admissible subspace: `Phi(B0 w) = B1 w`
    /// on `B0 Z`, extended by zero on its orthocomplement inside `Ran B0`.
    pub fn induced_contraction(self: &Arc<Self>, z: &Subspace) -> Result<ContractionBC> {
        // Only the form condition matters here: the construction needs
        // |B1 w| <= |B0 w| on Z, and the test space lands in Z_Phi on its
        // own (it sits in both trace kernels).
        let report = self.is_admissible(z)?;
        if report.max_on_subspace > tol::ADMISSIBLE {
            return Err(Error::NotAdmissible {
                violation: report.max_on_subspace,
            });
        }
        let x0 = self.b0.coeffs() * z.basis();
        let x1 = self.b1.coeffs() * z.basis();
        // Weighted pseudoinverse: pinv(L^H X0) L^H kills both the
        // orthocomplement of B0 Z inside Ran B0 and the complement of
        // Ran B0 itself.
        let x0_euclid = self.h.to_orthonormal_cols(&x0);
        let lh = self
            .h
            .to_orthonormal_cols(&DMatrix::identity(self.h.dim(), self.h.dim()));
        let phi = x1 * linalg::pinv(&x0_euclid) * lh;
        let cbc = ContractionBC::new(self.clone(), &phi)?;
        if !cbc.z_phi().contains_subspace(z)? {
            return Err(Error::Invalid {
                what: "induced contraction does not extend the subspace".into(),
            });
        }
        Ok(cbc)
    }
}

/// A contraction `Phi : Ran B0 -> Ran B1` in trace-space coordinates,
/// stored pre-composed with the orthogonal projection onto `Ran B0`
/// (the map is only defined there; everything else is annihilated).
#[derive(Debug, Clone)]
pub struct ContractionBC {
    structure: Arc<BoundaryStructure>,
    phi: DMatrix<C64>,
}

impl ContractionBC {
    pub fn new(structure: Arc<BoundaryStructure>, phi_raw: &DMatrix<C64>) -> Result<Self> {
        let h = structure.h_space();
        let n = h.dim();
        if phi_raw.nrows() != n || phi_raw.ncols() != n {
            return Err(Error::Dimension {
                what: "contraction coefficients",
                expected: n,
                found: phi_raw.nrows().max(phi_raw.ncols()),
            });
        }
        let q0 = structure.ran_b0().basis();
        let projector = q0 * q0.adjoint() * h.gram();
        let phi = phi_raw * projector;

        // must land in Ran B1
        let q1 = structure.ran_b1().basis();
        let p1 = q1 * q1.adjoint() * h.gram();
        let outside = &phi - &p1 * &phi;
        let scale = linalg::max_abs(&phi).max(1.0);
        if linalg::max_abs(&outside) > 1e-10 * scale {
            return Err(Error::Invalid {
                what: "contraction must map the initial trace range into the final trace range"
                    .into(),
            });
        }

        let norm = restricted_norm(&phi, structure.ran_b0(), h);
        if norm > 1.0 + tol::CONTRACTION {
            return Err(Error::NotContractive { norm });
        }
        Ok(ContractionBC { structure, phi })
    }

    pub fn zero(structure: Arc<BoundaryStructure>) -> Self {
        let n = structure.h_space().dim();
        ContractionBC {
            structure,
            phi: DMatrix::zeros(n, n),
        }
    }

    /// `c` times the identification of `Ran B0` with itself (valid whenever
    /// `Ran B0` is contained in `Ran B1`, e.g. periodic traces), `|c| <= 1`.
    pub fn scaled_projection(structure: Arc<BoundaryStructure>, c: C64) -> Result<Self> {
        let q0 = structure.ran_b0().basis();
        let projector = q0 * q0.adjoint() * structure.h_space().gram();
        let phi = projector * c;
        Self::new(structure, &phi)
    }

    pub fn structure(&self) -> &Arc<BoundaryStructure> {
        &self.structure
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.phi
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        &self.phi * x
    }

    /// Operator norm of the restriction to `Ran B0` (trace-space norms).
    pub fn operator_norm(&self) -> f64 {
        restricted_norm(&self.phi, self.structure.ran_b0(), self.structure.h_space())
    }

    /// Trace-space adjoint `Phi^*`; it automatically annihilates the
    /// complement of `Ran B1` and maps into `Ran B0`.
    pub fn adjoint_matrix(&self) -> DMatrix<C64> {
        let h = self.structure.h_space();
        h.apply_gram_inverse(&(self.phi.adjoint() * h.gram()))
    }

    /// The maximal admissible subspace `Z_Phi = ker(B1 - Phi B0)`.
    pub fn z_phi(&self) -> Subspace {
        let bs = &self.structure;
        let coeffs = bs.b1().coeffs() - &self.phi * bs.b0().coeffs();
        let map = LinearMap::new(bs.w_space().clone(), bs.h_space().clone(), coeffs)
            .expect("trace dimensions agree");
        map.kernel()
    }

    /// `Z_{Phi^*} = { w : B0 w = Phi^* B1 w }`, the b-orthogonal of `Z_Phi`.
    pub fn z_phi_adjoint(&self) -> Subspace {
        let bs = &self.structure;
        let coeffs = bs.b0().coeffs() - self.adjoint_matrix() * bs.b1().coeffs();
        let map = LinearMap::new(bs.w_space().clone(), bs.h_space().clone(), coeffs)
            .expect("trace dimensions agree");
        map.kernel()
    }

    /// Coefficient gap against another contraction on the same structure
    /// (both stored pre-projected, so plain matrix distance is meaningful).
    pub fn coefficient_gap(&self, other: &ContractionBC) -> f64 {
        linalg::max_abs(&(&self.phi - &other.phi))
    }
}

fn restricted_norm(phi: &DMatrix<C64>, domain: &Subspace, h: &Arc<InnerSpace>) -> f64 {
    if domain.dim() == 0 {
        return 0.0;
    }
    let restricted = phi * domain.basis();
    let euclid = InnerSpace::euclidean(domain.dim(), h.field());
    LinearMap::new(euclid, h.clone(), restricted)
        .expect("dimensions agree")
        .operator_norm()
}

/// The spectral factorization of the boundary form: represent `b` by a
/// self-adjoint operator on `W`, split its spectrum into positive and
/// negative parts (eigenvalues within the split tolerance feed both
/// kernels), and take square roots. The final trace captures the positive
/// part, the initial trace the negative part, and `H = W`.
pub fn spectral_boundary_structure(inst: &DerivationInstance) -> Result<Arc<BoundaryStructure>> {
    let w = inst.w_space().clone();
    let m = w.dim();
    // Euclidean representative of b: L^{-1} Mb L^{-H}, Hermitian.
    let half = w.apply_gram_inverse(inst.form_matrix());
    let rep = w.to_orthonormal_cols(&w.from_orthonormal_on_right(&half));
    let (vals, vecs) = linalg::hermitian_eigen_asc(&rep);
    let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let split = tol::SPECTRAL_SPLIT * scale;
    let mut pos = DMatrix::zeros(m, m);
    let mut neg = DMatrix::zeros(m, m);
    for (i, &lambda) in vals.iter().enumerate() {
        let q = vecs.column(i);
        if lambda > split {
            pos += q * q.adjoint() * linalg::c(lambda.sqrt());
        } else if lambda < -split {
            neg += q * q.adjoint() * linalg::c((-lambda).sqrt());
        }
    }
    let b1 = LinearMap::from_orthonormal_matrix(&w, &w, &pos);
    let b0 = LinearMap::from_orthonormal_matrix(&w, &w, &neg);
    BoundaryStructure::new(inst, w, b0, b1)
}
