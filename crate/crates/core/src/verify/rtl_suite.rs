use nalgebra::DMatrix;
use rand::{Rng, RngExt};

use crate::hilbert::LinearMap;
use crate::linalg;
use crate::randgen;
use crate::rtl;
use crate::tol::Tolerances;

use super::SuiteReport;

/// Randomized checks for the dual-witness equivalence, the dual
/// dissipativity characterization and the explicit perturbation constant.
pub fn rtl_suite(seed: u64, tols: &Tolerances) -> SuiteReport {
    let mut report = SuiteReport::new("rtl", seed);
    let mut rng = randgen::rng(seed ^ 0x52544c);

    operator_dual_witnesses(&mut rng, tols, &mut report);
    dissipative_dual_equivalence(&mut rng, tols, &mut report);
    perturbation_constant(&mut rng, tols, &mut report);
    scaling_relations(&mut rng, &mut report);
    report
}

/// 200 operators, real and complex, dimensions up to 12, mixed Gram
/// weights. Injective instances must certify every one of 20 random
/// functionals with `|y| beta / |x| <= 1 + slack`; rank-deficient ones must
/// exhibit a near-kernel direction instead.
fn operator_dual_witnesses<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_kernel = 0.0f64;
    let mut pass = true;
    let mut deficient_count = 0;
    for case in 0..200 {
        let field = randgen::field(rng);
        let dom_dim = 1 + rng.random_range(0..12usize);
        let extra = rng.random_range(0..3usize);
        let cod_dim = (dom_dim + extra).min(12);
        let dom = randgen::space(rng, dom_dim, field);
        let cod = randgen::space(rng, cod_dim, field);
        let deficient = dom_dim > 1 && case % 4 == 3;
        let trial_seed: u64 = rng.random();
        if deficient {
            deficient_count += 1;
            let rank = dom_dim - 1 - rng.random_range(0..(dom_dim - 1).min(2));
            let t = randgen::rank_deficient_map(rng, &dom, &cod, rank);
            let outcome = rtl::verify_operator_rtl(&t, 20, trial_seed);
            let near = outcome
                .near_kernel
                .as_ref()
                .map(|x| cod.norm(&t.apply(x)) / dom.norm(x).max(1e-300));
            match near {
                Some(ratio) if !outcome.certified() => {
                    worst_kernel = worst_kernel.max(ratio);
                    if ratio > 1e-8 {
                        pass = false;
                    }
                }
                _ => pass = false,
            }
        } else {
            let t = randgen::conditioned_map(rng, &dom, &cod, 0.3, 2.5);
            let outcome = rtl::verify_operator_rtl(&t, 20, trial_seed);
            if !outcome.certified() {
                pass = false;
                continue;
            }
            let excess = outcome.normalized_ratio() - 1.0;
            worst_excess = worst_excess.max(excess);
            if excess > tols.witness_ratio {
                pass = false;
            }
        }
    }
    report.push(
        "operator_dual_witnesses",
        pass,
        200,
        worst_excess,
        format!(
            "worst witness-ratio excess over 1 (includes {deficient_count} rank-deficient cases, worst near-kernel gain {worst_kernel:.2e})"
        ),
    );
}

/// 200 operators times t in {0.1, 0.5, 1, 5, 10}: the direct sign criterion
/// and the resolvent gain bound must classify every operator the same way. The
/// non-dissipative samples carry a strong symmetric part, so the smallest
/// sampled t already refutes the bound (large t alone cannot).
fn dissipative_dual_equivalence<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let ts = [0.1, 0.5, 1.0, 5.0, 10.0];
    let mut pass = true;
    let mut worst_gap = 0.0f64;
    for case in 0..200 {
        let field = randgen::field(rng);
        let dim = 1 + rng.random_range(0..12usize);
        let space = randgen::space(rng, dim, field);
        let dissipative = case % 2 == 0;
        let b = if dissipative {
            randgen::dissipative_operator(rng, &space)
        } else {
            randgen::strictly_nondissipative(rng, &space)
        };
        let outcome = rtl::check_dissipative_dual(&b, &ts).expect("valid parameters");
        if outcome.direct_dissipative != dissipative {
            pass = false;
        }
        if !outcome.consistent {
            pass = false;
        }
        if dissipative {
            for check in &outcome.per_t {
                // gains may only fall short of 1 by the tolerance
                worst_gap = worst_gap.max((1.0 - check.gain).max(0.0));
                if 1.0 - check.gain > tols.dissipative * (1.0 + check.t) {
                    pass = false;
                }
            }
        }
    }
    report.push(
        "dissipative_dual_equivalence",
        pass,
        200,
        worst_gap,
        "worst shortfall of the resolvent gain below 1 on dissipative samples",
    );
}

/// 200 pairs (A coercive, B dissipative), dimensions up to 10, including
/// self-adjoint A exercising the vanishing-antisymmetric-part branch; the
/// bound must hold for 100 random vectors each. The hand value
/// `beta^2 = 1/3` for `[[1,1],[-1,1]]` is pinned exactly.
fn perturbation_constant<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst_slack = f64::INFINITY;
    let mut degenerate_count = 0;
    for case in 0..200 {
        let field = randgen::field(rng);
        let dim = 1 + rng.random_range(0..10usize);
        let space = randgen::space(rng, dim, field);
        let alpha = 0.3 + 1.7 * rng.random::<f64>();
        let a = if case % 4 == 0 {
            randgen::self_adjoint_coercive(rng, &space, alpha)
        } else {
            randgen::coercive_operator(rng, &space, alpha)
        };
        let constant = match rtl::perturbation_beta(&a) {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        if constant.degenerate {
            degenerate_count += 1;
        }
        let b = randgen::dissipative_operator(rng, &space);
        let seed: u64 = rng.random();
        match rtl::verify_perturbation(&a, &b, constant.beta, 100, seed) {
            Ok(outcome) => {
                worst_slack = worst_slack.min(outcome.min_quadratic_slack);
                if outcome.min_quadratic_slack < -tols.ineq_slack
                    || outcome.min_sum_slack < -tols.ineq_slack
                {
                    pass = false;
                }
            }
            Err(_) => pass = false,
        }
    }

    report.push(
        "perturbation_bound",
        pass,
        200,
        worst_slack,
        format!("smallest relative slack of the quadratic bound ({degenerate_count} degenerate-branch cases)"),
    );

    // pinned hand value
    let e2 = crate::hilbert::InnerSpace::euclidean(2, crate::hilbert::ScalarField::Real);
    let a = LinearMap::new_real(
        e2.clone(),
        e2,
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]),
    )
    .expect("dimensions agree");
    let constant = rtl::perturbation_beta(&a).expect("coercive");
    let gap = (constant.beta * constant.beta - 1.0 / 3.0).abs();
    report.push(
        "perturbation_hand_value",
        gap < 1e-12,
        1,
        gap,
        "distance of beta^2 from 1/3 on the pinned 2x2 instance",
    );
}

/// Computed-value scaling relations under `A -> cA`: the coercivity
/// constant and `|A_+|` scale linearly, the cross norm by sqrt(c), and in
/// the degenerate branch `beta` scales linearly while its first term rules.
fn scaling_relations<R: Rng>(rng: &mut R, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let field = randgen::field(rng);
        let dim = 1 + rng.random_range(0..8usize);
        let space = randgen::space(rng, dim, field);
        let alpha = 0.5 + rng.random::<f64>();
        let a = randgen::coercive_operator(rng, &space, alpha);
        let base = rtl::perturbation_beta(&a).expect("coercive");
        for c in [0.5, 2.0, 10.0] {
            let scaled = rtl::perturbation_beta(&a.scale(linalg::c(c))).expect("coercive");
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
            let e1 = rel(scaled.alpha, c * base.alpha);
            let e2 = rel(scaled.a_plus_norm, c * base.a_plus_norm);
            let e3 = if base.degenerate {
                0.0
            } else {
                rel(scaled.cross_norm, c.sqrt() * base.cross_norm)
            };
            worst = worst.max(e1).max(e2).max(e3);
            if e1 > 1e-9 || e2 > 1e-9 || e3 > 1e-8 {
                pass = false;
            }
        }
    }

    // degenerate branch with the first term active: A = 0.3 I, beta = alpha
    let e3 = crate::hilbert::InnerSpace::euclidean(3, crate::hilbert::ScalarField::Real);
    let a = LinearMap::identity(e3).scale(linalg::c(0.3));
    let base = rtl::perturbation_beta(&a).expect("coercive");
    let doubled = rtl::perturbation_beta(&a.scale(linalg::c(2.0))).expect("coercive");
    let gap = (doubled.beta - 2.0 * base.beta).abs();
    worst = worst.max(gap);
    if !(base.degenerate && doubled.degenerate && gap < 1e-12) {
        pass = false;
    }

    report.push(
        "scaling_relations",
        pass,
        50,
        worst,
        "largest relative deviation from the computed scaling laws",
    );
}
