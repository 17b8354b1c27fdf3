//! Constructive finite-dimensional oracles for the representation theorems
//! and the perturbation estimate with its explicit constant.
//!
//! The operator-level statement ties a uniform lower bound `|Tx| >= beta |x|`
//! to the existence of norm-controlled dual witnesses `x^* = y^* o T`,
//! `|y^*| <= |x^*| / beta`. In finite dimensions every piece of that
//! equivalence is computable: the best `beta` is the smallest weighted
//! singular value, and the minimal-norm witness is a least-squares solve in
//! the weighted geometry (the canonical replacement for the non-constructive
//! Hahn-Banach extension step).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::hilbert::{InnerSpace, LinearMap, Subspace};
use crate::linalg::{self, C64};
use crate::randgen;
use crate::tol;

use std::sync::Arc;

/// One dual witness: a functional on the domain (by its representing
/// vector), the minimal-norm functional on the codomain that factors it
/// through the operator, and the norm ratio `|y| / |x|`.
#[derive(Debug, Clone)]
pub struct WitnessTriple {
    pub functional: DVector<C64>,
    pub witness: DVector<C64>,
    pub norm_ratio: f64,
}

/// Outcome of the dual-witness verification.
///
/// When `beta > 0` the report certifies the forward direction of the
/// equivalence constructively: every sampled functional received a witness
/// and `max_ratio <= (1/beta)(1 + slack)`. When the operator has no uniform
/// lower bound, `near_kernel` carries a unit direction that the operator
/// nearly annihilates (the contrapositive of the reverse direction).
#[derive(Debug, Clone)]
pub struct DualWitnessReport {
    pub beta: f64,
    pub witnesses: Vec<WitnessTriple>,
    pub max_ratio: f64,
    pub near_kernel: Option<DVector<C64>>,
}

impl DualWitnessReport {
    pub fn certified(&self) -> bool {
        self.near_kernel.is_none()
    }

    /// `max_ratio * beta`, the quantity that must not exceed `1 + slack`.
    pub fn normalized_ratio(&self) -> f64 {
        self.max_ratio * self.beta
    }
}

/// Computes `beta = smallest_gain(T)` and, for `trials` random functionals
/// on the domain, the minimal-norm witness on the codomain solving
/// `T^* y = x`. With `beta = 0` the report instead exhibits a near-kernel
/// direction.
pub fn verify_operator_rtl(t: &LinearMap, trials: usize, seed: u64) -> DualWitnessReport {
    let mut rng = randgen::rng(seed);
    let beta = t.smallest_gain();
    let gain_floor = tol::RANK_FACTOR * t.operator_norm().max(1.0);
    if !beta.is_finite() || beta <= gain_floor {
        return DualWitnessReport {
            beta: 0.0,
            witnesses: Vec::new(),
            max_ratio: f64::INFINITY,
            near_kernel: t.least_gain_direction(),
        };
    }
    let adjoint = t.adjoint();
    let adj_euclid = adjoint.orthonormal_matrix();
    let mut witnesses = Vec::with_capacity(trials);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let functional = randgen::unit_vector_in(&mut rng, t.domain());
        let rhs = t.domain().to_orthonormal(&functional);
        let (y_euclid, _) = linalg::pinv_solve(&adj_euclid, &rhs);
        let witness = t.codomain().from_orthonormal(&y_euclid);
        let ratio = t.codomain().norm(&witness) / t.domain().norm(&functional);
        max_ratio = max_ratio.max(ratio);
        witnesses.push(WitnessTriple {
            functional,
            witness,
            norm_ratio: ratio,
        });
    }
    DualWitnessReport {
        beta,
        witnesses,
        max_ratio,
        near_kernel: None,
    }
}

/// Solves the form problem `a(x_L, y) = L(y)` for all `y` in a subspace `Y`
/// of `X`, where `a(x, y) = y^H M x` is given by its pairing matrix and the
/// functional by its representing vector (`L(y) = <ell, y>_X`).
///
/// The hypothesis `|a(y,y)| >= beta |y|^2` on `Y` is certified through the
/// two Hermitian parts of the restricted pairing: if either the Hermitian
/// part or the anti-Hermitian part (divided by i) is definite, its smallest
/// absolute eigenvalue is a valid `beta`. Inputs where neither part is
/// definite are rejected.
///
/// When `dim X > dim Y` the solution set is affine; the minimal-X-norm
/// representative is returned.
pub fn solve_form_problem(
    pairing: &DMatrix<C64>,
    x_space: &Arc<InnerSpace>,
    y: &Subspace,
    ell: &DVector<C64>,
) -> Result<DVector<C64>> {
    let n = x_space.dim();
    if pairing.nrows() != n || pairing.ncols() != n {
        return Err(Error::Dimension {
            what: "form pairing matrix",
            expected: n,
            found: pairing.nrows().max(pairing.ncols()),
        });
    }
    if !y.ambient().same_space(x_space) {
        return Err(Error::SpaceMismatch {
            what: "form test subspace",
        });
    }
    if ell.len() != n {
        return Err(Error::Dimension {
            what: "functional representative",
            expected: n,
            found: ell.len(),
        });
    }
    let k = y.dim();
    if k == 0 {
        return Ok(DVector::zeros(n));
    }

    // |a(y,y)| >= beta |y|^2 on Y, via the Hermitian parts.
    let restricted = y.basis().adjoint() * pairing * y.basis();
    let herm = linalg::hermitianize(&restricted);
    let anti = (&restricted - restricted.adjoint()).map(|z| z / C64::new(0.0, 2.0));
    let mut beta: f64 = 0.0;
    for part in [&herm, &anti] {
        let (vals, _) = linalg::hermitian_eigen_asc(part);
        let definite = vals.iter().all(|&v| v > 0.0) || vals.iter().all(|&v| v < 0.0);
        if definite {
            beta = beta.max(vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min));
        }
    }
    if beta < tol::FORM_COERCIVITY_MIN {
        return Err(Error::FormNotCoercive { bound: beta });
    }

    // Q^H M x = Q^H G ell, minimal-norm in the X geometry.
    let rows = y.basis().adjoint() * pairing;
    let rows_euclid = x_space.from_orthonormal_on_right(&rows);
    let rhs = y.basis().adjoint() * x_space.gram() * ell;
    let (z, _) = linalg::pinv_solve(&rows_euclid, &rhs);
    let x_l = x_space.from_orthonormal(&z);

    let residual = (&rows * &x_l - &rhs).norm();
    let scale = rhs.norm().max(x_space.norm(ell)).max(1.0);
    if residual > 1e-10 * scale {
        return Err(Error::SingularSystem {
            what: "form representation solve",
            smallest_singular_value: residual,
        });
    }
    Ok(x_l)
}

/// Resolvent check at one value of `t`.
#[derive(Debug, Clone)]
pub struct ResolventCheck {
    pub t: f64,
    /// `smallest_gain(I - t B^*)`.
    pub gain: f64,
    /// Whether every functional admits a norm-nonincreasing preimage,
    /// i.e. the gain is at least one (up to a `t`-scaled tolerance).
    pub dual_bound_holds: bool,
}

/// Report of the dual dissipativity characterization.
///
/// Dissipativity is equivalent to the dual resolvent bound holding at
/// *every* `t > 0`; a finite sample certifies the forward direction exactly,
/// and refutes dissipativity whenever it contains a small enough `t`
/// (large `t` alone cannot: `I - tB^*` regains a large gain once
/// `t |B| >> 1` regardless of sign conditions).
#[derive(Debug, Clone)]
pub struct DissipativityReport {
    pub max_rayleigh: f64,
    pub direct_dissipative: bool,
    pub per_t: Vec<ResolventCheck>,
    /// `direct_dissipative == (dual bound holds at every sampled t)`.
    pub consistent: bool,
}

/// Checks the direct dissipativity criterion `max Re<Bx,x>/|x|^2 <= 0`
/// against the dual one, `smallest_gain(I - tB^*) >= 1`, for each `t`.
pub fn check_dissipative_dual(b: &LinearMap, ts: &[f64]) -> Result<DissipativityReport> {
    if ts.is_empty() || ts.iter().any(|&t| t <= 0.0) {
        return Err(Error::Invalid {
            what: "resolvent parameters must be positive and nonempty".into(),
        });
    }
    let max_rayleigh = b.dissipativity_bound()?;
    let direct = max_rayleigh <= tol::DISSIPATIVE;
    let identity = LinearMap::identity(b.domain().clone());
    let adjoint = b.adjoint();
    let mut per_t = Vec::with_capacity(ts.len());
    for &t in ts {
        let op = identity.sub(&adjoint.scale(linalg::c(t)))?;
        let gain = op.smallest_gain();
        per_t.push(ResolventCheck {
            t,
            gain,
            dual_bound_holds: gain >= 1.0 - tol::DISSIPATIVE * (1.0 + t),
        });
    }
    let all_dual = per_t.iter().all(|c| c.dual_bound_holds);
    Ok(DissipativityReport {
        max_rayleigh,
        direct_dissipative: direct,
        per_t,
        consistent: direct == all_dual,
    })
}

/// The explicit constant of the perturbation estimate
/// `|(A - B)v|^2 >= beta^2 (|v|^2 + |Bv|^2)`, depending on `A` only.
#[derive(Debug, Clone)]
pub struct PerturbationConstant {
    pub alpha: f64,
    pub a_plus_norm: f64,
    /// `|S^{-1} A_-|` with `S` the positive square root of the symmetric part.
    pub cross_norm: f64,
    pub beta: f64,
    /// Vanishing antisymmetric part: the splitting step is unnecessary and
    /// the constant improves to `beta^2 = min(alpha^2, alpha / |A_+|)`.
    pub degenerate: bool,
}

/// Computes `A_+ = (A + A^*)/2`, `A_- = (A - A^*)/2`, `S = sqrt(A_+)` and
///
/// `beta^2 = min( alpha^2/2,  alpha^2 / ((alpha + 2 |S^{-1}A_-|^2) |A_+|) )`,
///
/// falling back to `beta^2 = min(alpha^2, alpha/|A_+|)` when `A_- = 0`.
pub fn perturbation_beta(a: &LinearMap) -> Result<PerturbationConstant> {
    let alpha = a.coercivity_constant()?;
    if alpha <= 0.0 {
        return Err(Error::NotCoercive { alpha });
    }
    let adjoint = a.adjoint();
    let a_plus = a.add(&adjoint)?.scale(linalg::c(0.5));
    let a_minus = a.sub(&adjoint)?.scale(linalg::c(0.5));
    let s = a_plus.sqrt_psd()?;
    let a_plus_norm = a_plus.operator_norm();

    let s_inv_coeffs = s
        .coeffs()
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularSystem {
            what: "square root inversion",
            smallest_singular_value: 0.0,
        })?;
    let s_inv = LinearMap::new(a.domain().clone(), a.domain().clone(), s_inv_coeffs)?;
    let cross_norm = s_inv.compose(&a_minus)?.operator_norm();

    let degenerate = cross_norm <= 1e-12 * (1.0 + a_plus_norm);
    let beta_sq = if degenerate {
        (alpha * alpha).min(alpha / a_plus_norm)
    } else {
        (alpha * alpha / 2.0)
            .min(alpha * alpha / ((alpha + 2.0 * cross_norm * cross_norm) * a_plus_norm))
    };
    Ok(PerturbationConstant {
        alpha,
        a_plus_norm,
        cross_norm,
        beta: beta_sq.sqrt(),
        degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct PerturbationReport {
    pub beta: f64,
    pub trials: usize,
    /// Smallest relative slack of `|(A-B)v|^2 - beta^2(|v|^2 + |Bv|^2)`.
    pub min_quadratic_slack: f64,
    /// Smallest relative slack of the sum form with `beta / sqrt(2)`.
    pub min_sum_slack: f64,
    pub holds: bool,
}

/// Randomized check of `|(A - B)v|^2 >= beta^2 (|v|^2 + |Bv|^2)` (and the
/// sum form with `beta/sqrt(2)`), for a dissipative `B` and coercive `A`.
pub fn verify_perturbation(
    a: &LinearMap,
    b: &LinearMap,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let rayleigh = b.dissipativity_bound()?;
    if rayleigh > tol::DISSIPATIVE {
        return Err(Error::NotDissipative { bound: rayleigh });
    }
    let alpha = a.coercivity_constant()?;
    if alpha <= 0.0 {
        return Err(Error::NotCoercive { alpha });
    }
    let diff = a.sub(b)?;
    let space = a.domain().clone();
    let mut rng = randgen::rng(seed);
    let mut min_quadratic_slack = f64::INFINITY;
    let mut min_sum_slack = f64::INFINITY;
    for _ in 0..trials {
        let v = randgen::unit_vector_in(&mut rng, &space);
        let lhs = space.norm(&diff.apply(&v)).powi(2);
        let nv = space.norm(&v).powi(2);
        let nbv = space.norm(&b.apply(&v)).powi(2);
        let rhs = beta * beta * (nv + nbv);
        min_quadratic_slack = min_quadratic_slack.min((lhs - rhs) / rhs.max(1e-300));

        let sum_lhs = lhs.sqrt();
        let sum_rhs = beta / std::f64::consts::SQRT_2 * (nv.sqrt() + nbv.sqrt());
        min_sum_slack = min_sum_slack.min((sum_lhs - sum_rhs) / sum_rhs.max(1e-300));
    }
    Ok(PerturbationReport {
        beta,
        trials,
        min_quadratic_slack,
        min_sum_slack,
        holds: min_quadratic_slack >= -tol::INEQ_SLACK && min_sum_slack >= -tol::INEQ_SLACK,
    })
}

/// Convenience used by the suites: sample a dissipative operator and verify
/// the bound computed from `A` alone.
pub fn verify_perturbation_with_random_b<R: Rng>(
    a: &LinearMap,
    trials: usize,
    rng: &mut R,
) -> Result<PerturbationReport> {
    let b = randgen::dissipative_operator(rng, a.domain());
    let constant = perturbation_beta(a)?;
    let seed: u64 = rng.random();
    verify_perturbation(a, &b, constant.beta, trials, seed)
}
