//! Seeded generators for random spaces, operators and vectors.
//!
//! All randomness in the crate flows through an explicitly seeded ChaCha
//! stream so that verification runs are reproducible.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{InnerSpace, LinearMap, ScalarField};
use crate::linalg::{self, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let mut u1: f64 = rng.random();
    while u1 <= f64::MIN_POSITIVE {
        u1 = rng.random();
    }
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn scalar<R: Rng>(rng: &mut R, field: ScalarField) -> C64 {
    match field {
        ScalarField::Real => C64::new(gauss(rng), 0.0),
        ScalarField::Complex => {
            C64::new(gauss(rng), gauss(rng)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
        }
    }
}

pub fn vector<R: Rng>(rng: &mut R, dim: usize, field: ScalarField) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| scalar(rng, field))
}

pub fn vector_in<R: Rng>(rng: &mut R, space: &Arc<InnerSpace>) -> DVector<C64> {
    vector(rng, space.dim(), space.field())
}

/// Nonzero vector of unit norm in the given space.
pub fn unit_vector_in<R: Rng>(rng: &mut R, space: &Arc<InnerSpace>) -> DVector<C64> {
    loop {
        let v = vector_in(rng, space);
        let n = space.norm(&v);
        if n > 1e-6 {
            return v.unscale(n);
        }
    }
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, field: ScalarField) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| scalar(rng, field))
}

/// Random unitary matrix (Q factor of a Gaussian sample).
pub fn unitary<R: Rng>(rng: &mut R, dim: usize, field: ScalarField) -> DMatrix<C64> {
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let m = matrix(rng, dim, dim, field);
    m.qr().q()
}

/// Hermitian positive definite Gram matrix with eigenvalues log-uniform in
/// `[0.3, 3]`, mild enough that weighted factorizations stay well
/// conditioned across chained operations.
pub fn gram<R: Rng>(rng: &mut R, dim: usize, field: ScalarField) -> DMatrix<C64> {
    let q = unitary(rng, dim, field);
    let eigs = DVector::from_fn(dim, |_, _| {
        let lo: f64 = 0.3_f64.ln();
        let hi: f64 = 3.0_f64.ln();
        let t: f64 = rng.random();
        linalg::c((lo + t * (hi - lo)).exp())
    });
    let g = &q * DMatrix::from_diagonal(&eigs) * q.adjoint();
    linalg::hermitianize(&g)
}

pub fn space<R: Rng>(rng: &mut R, dim: usize, field: ScalarField) -> Arc<InnerSpace> {
    InnerSpace::new(gram(rng, dim, field), field).expect("generated gram is SPD")
}

pub fn map_between<R: Rng>(
    rng: &mut R,
    domain: &Arc<InnerSpace>,
    codomain: &Arc<InnerSpace>,
) -> LinearMap {
    let coeffs = matrix(rng, codomain.dim(), domain.dim(), domain.field());
    LinearMap::new(domain.clone(), codomain.clone(), coeffs).expect("dimensions match")
}

/// Map with prescribed weighted singular values in `[smin, smax]`
/// (log-uniform), hence `smallest_gain` bounded away from zero when
/// `rows >= cols`.
pub fn conditioned_map<R: Rng>(
    rng: &mut R,
    domain: &Arc<InnerSpace>,
    codomain: &Arc<InnerSpace>,
    smin: f64,
    smax: f64,
) -> LinearMap {
    let field = domain.field();
    let (rows, cols) = (codomain.dim(), domain.dim());
    let k = rows.min(cols);
    let u = unitary(rng, rows, field);
    let v = unitary(rng, cols, field);
    let mut e = DMatrix::zeros(rows, cols);
    for i in 0..k {
        let t: f64 = rng.random();
        e[(i, i)] = linalg::c((smin.ln() + t * (smax.ln() - smin.ln())).exp());
    }
    let euclid = u.columns(0, rows).into_owned() * e * v.adjoint();
    LinearMap::from_orthonormal_matrix(domain, codomain, &euclid)
}

/// Map of the given rank (kernel dimension `cols - rank`).
pub fn rank_deficient_map<R: Rng>(
    rng: &mut R,
    domain: &Arc<InnerSpace>,
    codomain: &Arc<InnerSpace>,
    rank: usize,
) -> LinearMap {
    let field = domain.field();
    let (rows, cols) = (codomain.dim(), domain.dim());
    let rank = rank.min(rows).min(cols);
    let left = matrix(rng, rows, rank, field);
    let right = matrix(rng, rank, cols, field);
    LinearMap::new(domain.clone(), codomain.clone(), left * right).expect("dimensions match")
}

/// Coercive operator: `alpha * I + PSD + skew` in orthonormal coordinates.
pub fn coercive_operator<R: Rng>(rng: &mut R, space: &Arc<InnerSpace>, alpha: f64) -> LinearMap {
    let n = space.dim();
    let field = space.field();
    let m = matrix(rng, n, n, field);
    let psd = &m * m.adjoint() * linalg::c(0.5 / (n.max(1) as f64));
    let k = matrix(rng, n, n, field);
    let skew = (&k - k.adjoint()).scale(0.5);
    let e = DMatrix::identity(n, n) * linalg::c(alpha) + psd + skew;
    LinearMap::from_orthonormal_matrix(space, space, &e)
}

/// Self-adjoint coercive operator (vanishing antisymmetric part).
pub fn self_adjoint_coercive<R: Rng>(
    rng: &mut R,
    space: &Arc<InnerSpace>,
    alpha: f64,
) -> LinearMap {
    let n = space.dim();
    let m = matrix(rng, n, n, space.field());
    let psd = &m * m.adjoint() * linalg::c(0.5 / (n.max(1) as f64));
    let e = DMatrix::identity(n, n) * linalg::c(alpha) + psd;
    LinearMap::from_orthonormal_matrix(space, space, &e)
}

/// Dissipative operator: skew minus PSD in orthonormal coordinates, so
/// `Re<Bx,x> <= 0` holds exactly up to rounding.
pub fn dissipative_operator<R: Rng>(rng: &mut R, space: &Arc<InnerSpace>) -> LinearMap {
    let n = space.dim();
    let field = space.field();
    let k = matrix(rng, n, n, field);
    let skew = (&k - k.adjoint()).scale(0.5);
    let m = matrix(rng, n, n, field);
    let psd = &m * m.adjoint() * linalg::c(0.5 / (n.max(1) as f64));
    LinearMap::from_orthonormal_matrix(space, space, &(skew - psd))
}

/// Operator that clearly fails dissipativity: Hermitian part with spectrum
/// in `[0.5, 0.9]` plus a small skew part. The violation is strong enough
/// that the resolvent bound already fails at `t = 0.1`.
pub fn strictly_nondissipative<R: Rng>(rng: &mut R, space: &Arc<InnerSpace>) -> LinearMap {
    let n = space.dim();
    let field = space.field();
    let q = unitary(rng, n, field);
    let eigs = DVector::from_fn(n, |_, _| {
        let t: f64 = rng.random();
        linalg::c(0.5 + 0.4 * t)
    });
    let herm = &q * DMatrix::from_diagonal(&eigs) * q.adjoint();
    let k = matrix(rng, n, n, field);
    let kn = k.norm().max(1.0);
    let skew = (&k - k.adjoint()).scale(0.25 / kn);
    LinearMap::from_orthonormal_matrix(space, space, &(linalg::hermitianize(&herm) + skew))
}

/// Pick a scalar field, roughly half real and half complex.
pub fn field<R: Rng>(rng: &mut R) -> ScalarField {
    if rng.random::<bool>() {
        ScalarField::Real
    } else {
        ScalarField::Complex
    }
}

/// Recipe for a random derivation instance with a prescribed trace
/// factorization.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryOptions {
    pub w_dim: usize,
    pub h_dim: usize,
    pub rank_b0: usize,
    pub rank_b1: usize,
    pub field: ScalarField,
    /// Force the two trace ranges to coincide (needs equal ranks), so that
    /// identity-like couplings are available.
    pub shared_ranges: bool,
}

pub struct BoundarySetup {
    pub instance: crate::derivation::DerivationInstance,
    pub structure: Arc<crate::derivation::BoundaryStructure>,
}

/// Builds a random instance realizing the requested trace ranks: pick a
/// well-conditioned change of basis, send disjoint coordinate blocks to the
/// trace space through injective factors, and synthesize the derivation
/// from the resulting boundary form plus a random skew pairing. The
/// leftover middle block becomes the test space.
pub fn boundary_setup<R: Rng>(rng: &mut R, opts: &BoundaryOptions) -> BoundarySetup {
    let m = opts.w_dim;
    let h_dim = opts.h_dim;
    let (r0, r1) = (opts.rank_b0, opts.rank_b1);
    assert!(r0 + r1 <= m, "trace ranks exceed the space dimension");
    assert!(
        r0 <= h_dim && r1 <= h_dim,
        "trace ranks exceed the trace space"
    );
    let field = opts.field;

    // well-conditioned change of basis on W coordinates
    let omega = {
        let u = unitary(rng, m, field);
        let v = unitary(rng, m, field);
        let diag = DVector::from_fn(m, |_, _| {
            let t: f64 = rng.random();
            linalg::c(0.6 + t)
        });
        &u * DMatrix::from_diagonal(&diag) * v.adjoint()
    };
    let omega_inv = omega.clone().lu().try_inverse().expect("conditioned");

    let injective_factor = |rng: &mut R, rank: usize| -> DMatrix<C64> {
        let q = unitary(rng, h_dim, field);
        let mut x = q.columns(0, rank).into_owned();
        for j in 0..rank {
            let t: f64 = rng.random();
            let col = x.column(j) * linalg::c(0.5 + t);
            x.set_column(j, &col);
        }
        x
    };
    let x0 = injective_factor(rng, r0);
    let x1 = if opts.shared_ranges {
        assert_eq!(r0, r1, "shared ranges need equal ranks");
        let mix = conditioned_square(rng, r0, field);
        &x0 * mix
    } else {
        injective_factor(rng, r1)
    };

    let selector = |offset: usize, rank: usize| -> DMatrix<C64> {
        let mut s = DMatrix::zeros(rank, m);
        for i in 0..rank {
            s[(i, offset + i)] = linalg::c(1.0);
        }
        s
    };
    let b0_coeffs = &x0 * selector(0, r0) * &omega;
    let b1_coeffs = &x1 * selector(m - r1, r1) * &omega;

    let gram_h = gram(rng, h_dim, field);
    let h_space = InnerSpace::new(gram_h.clone(), field).expect("SPD");
    let form =
        b1_coeffs.adjoint() * &gram_h * &b1_coeffs - b0_coeffs.adjoint() * &gram_h * &b0_coeffs;

    let v_space = space(rng, m, field);
    let k_raw = matrix(rng, m, m, field);
    let skew = (&k_raw - k_raw.adjoint()).scale(0.25);
    let d_coeffs = v_space.apply_gram_inverse(&(form.scale(0.5) + skew));

    let middle = m - r0 - r1;
    let mut r_span = DMatrix::zeros(m, middle);
    for j in 0..middle {
        r_span.set_column(j, &omega_inv.column(r0 + j));
    }

    let instance = crate::derivation::DerivationInstance::new(v_space, d_coeffs, &r_span)
        .expect("generated instance is consistent");
    let b0 = LinearMap::new(instance.w_space().clone(), h_space.clone(), b0_coeffs)
        .expect("dimensions agree");
    let b1 = LinearMap::new(instance.w_space().clone(), h_space.clone(), b1_coeffs)
        .expect("dimensions agree");
    let structure = crate::derivation::BoundaryStructure::new(&instance, h_space, b0, b1)
        .expect("generated structure satisfies the trace axioms");
    BoundarySetup {
        instance,
        structure,
    }
}

fn conditioned_square<R: Rng>(rng: &mut R, n: usize, field: ScalarField) -> DMatrix<C64> {
    let u = unitary(rng, n, field);
    let v = unitary(rng, n, field);
    let diag = DVector::from_fn(n, |_, _| {
        let t: f64 = rng.random();
        linalg::c(0.5 + t)
    });
    &u * DMatrix::from_diagonal(&diag) * v.adjoint()
}

/// Contraction presets between the trace ranges of a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionKind {
    Zero,
    /// Identity of `Ran B0` (needs `Ran B0` inside `Ran B1`).
    IdentityOnRange,
    /// Negated identity of `Ran B0`.
    NegIdentityOnRange,
    /// Dense random contraction of the given spectral norm.
    Random,
    /// Rank-one contraction.
    RankDeficient,
}

pub fn contraction_on<R: Rng>(
    rng: &mut R,
    structure: &Arc<crate::derivation::BoundaryStructure>,
    kind: ContractionKind,
) -> crate::error::Result<crate::derivation::ContractionBC> {
    use crate::derivation::ContractionBC;
    let h = structure.h_space();
    let r0 = structure.ran_b0().dim();
    let r1 = structure.ran_b1().dim();
    match kind {
        ContractionKind::Zero => Ok(ContractionBC::zero(structure.clone())),
        ContractionKind::IdentityOnRange => {
            ContractionBC::scaled_projection(structure.clone(), linalg::c(1.0))
        }
        ContractionKind::NegIdentityOnRange => {
            ContractionBC::scaled_projection(structure.clone(), linalg::c(-1.0))
        }
        ContractionKind::Random | ContractionKind::RankDeficient => {
            let field = h.field();
            let core = match kind {
                ContractionKind::Random => matrix(rng, r1, r0, field),
                _ => {
                    if r0 == 0 || r1 == 0 {
                        DMatrix::zeros(r1, r0)
                    } else {
                        matrix(rng, r1, 1, field) * matrix(rng, 1, r0, field)
                    }
                }
            };
            let (_, sigma, _) = linalg::svd_desc(&core);
            let smax = sigma.first().copied().unwrap_or(0.0);
            let t: f64 = rng.random();
            let target = 0.3 + 0.7 * t;
            let scaled = if smax > 0.0 {
                core * linalg::c(target / smax)
            } else {
                core
            };
            let q0 = structure.ran_b0().basis();
            let q1 = structure.ran_b1().basis();
            let phi = q1 * scaled * q0.adjoint() * h.gram();
            ContractionBC::new(structure.clone(), &phi)
        }
    }
}
