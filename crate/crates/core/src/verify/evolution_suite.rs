use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};

use crate::evolution::{
    discrete_ibp_check, discretize, propagator_contraction, sdp_embedding, solve_all_at_once,
    solve_shooting, EvolutionProblem, FormFamily, GelfandTriple, NonAutonomousForm, SourceTerm,
};
use crate::hilbert::{LinearMap, ScalarField};
use crate::linalg::{self, C64};
use crate::randgen;
use crate::tol::Tolerances;

use super::SuiteReport;

/// Randomized and pinned checks for the time discretization: the exact
/// integration-by-parts identity, scheme convergence orders on problems
/// with known solutions, cross-solver agreement, the a-posteriori
/// stability bound and the propagator contraction.
pub fn evolution_suite(seed: u64, tols: &Tolerances) -> SuiteReport {
    let mut report = SuiteReport::new("evolution", seed);
    let mut rng = randgen::rng(seed ^ 0x45564f4c);

    integration_by_parts(&mut rng, tols, &mut report);
    initial_value_convergence(tols, &mut report);
    periodic_convergence(tols, &mut report);
    cross_solver_agreement(&mut rng, tols, &mut report);
    stability_bound(&mut rng, &mut report);
    propagator_checks(&mut rng, tols, &mut report);
    report
}

fn c(x: f64) -> C64 {
    linalg::c(x)
}

fn scalar_decay() -> EvolutionProblem {
    EvolutionProblem::new(
        GelfandTriple::scalar(),
        NonAutonomousForm::constant(DMatrix::identity(1, 1), 1.0, 1.0),
        SourceTerm::Zero,
        1.0,
        DMatrix::zeros(1, 1),
        DVector::from_vec(vec![c(1.0)]),
    )
    .expect("valid problem")
}

fn scalar_periodic_forced() -> EvolutionProblem {
    let omega = std::f64::consts::TAU;
    EvolutionProblem::new(
        GelfandTriple::scalar(),
        NonAutonomousForm::constant(DMatrix::identity(1, 1), 1.0, 1.0),
        SourceTerm::Trigonometric {
            mean: DVector::zeros(1),
            cos_amp: DVector::from_vec(vec![c(1.0)]),
            sin_amp: DVector::zeros(1),
            omega,
        },
        1.0,
        DMatrix::identity(1, 1),
        DVector::zeros(1),
    )
    .expect("valid problem")
}

fn exact_periodic(t: f64) -> f64 {
    let omega = std::f64::consts::TAU;
    ((omega * t).cos() + omega * (omega * t).sin()) / (1.0 + omega * omega)
}

/// Random non-autonomous problem with weighted grams, oscillating
/// coefficients and a scaled random contraction.
fn random_problem<R: Rng>(rng: &mut R, n: usize, zero_boundary: bool) -> EvolutionProblem {
    let gram_u = randgen::gram(rng, n, ScalarField::Real);
    let gram_h = randgen::gram(rng, n, ScalarField::Real);
    let triple = GelfandTriple::new(gram_u, gram_h, ScalarField::Real).expect("SPD grams");

    let base = randgen::matrix(rng, n, n, ScalarField::Real);
    let mean = triple.u_space().gram() * c(2.0)
        + (&base + base.adjoint()) * c(0.05)
        + (&base - base.adjoint()) * c(0.3);
    let osc = randgen::matrix(rng, n, n, ScalarField::Real) * c(0.1);
    let form = NonAutonomousForm::new(
        FormFamily::Trigonometric {
            mean,
            cos_amp: osc.clone(),
            sin_amp: osc * c(0.5),
            omega: 3.0,
        },
        0.5,
        100.0,
    );

    let phi_raw = randgen::matrix(rng, n, n, ScalarField::Real);
    let h = triple.h_space().clone();
    let phi_norm = LinearMap::new(h.clone(), h.clone(), phi_raw.clone())
        .expect("dimensions agree")
        .operator_norm();
    let phi = phi_raw * c(0.85 / phi_norm.max(1e-6));

    let source = SourceTerm::Trigonometric {
        mean: randgen::vector(rng, n, ScalarField::Real),
        cos_amp: randgen::vector(rng, n, ScalarField::Real),
        sin_amp: randgen::vector(rng, n, ScalarField::Real),
        omega: 2.0,
    };
    let y0 = if zero_boundary {
        DVector::zeros(n)
    } else {
        randgen::vector(rng, n, ScalarField::Real)
    };
    EvolutionProblem::new(triple, form, source, 1.0, phi, y0).expect("valid problem")
}

/// A thousand random grid-function pairs across random state dimensions
/// (up to 5) and grid sizes (up to 200), weighted pivot grams: the summed
/// difference pairing telescopes to the endpoint products, exactly.
fn integration_by_parts<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for _ in 0..20 {
        let n = 1 + rng.random_range(0..5usize);
        let p = random_problem(rng, n, false);
        let n_steps = 2 + rng.random_range(0..199usize);
        let seed: u64 = rng.random();
        let outcome = discrete_ibp_check(&p, n_steps, 50, seed, tols.ibp_exact);
        pairs += outcome.trials;
        worst = worst.max(outcome.max_relative_defect);
        if !outcome.pass {
            pass = false;
        }
    }
    report.push(
        "discrete_integration_by_parts",
        pass,
        pairs,
        worst,
        "largest relative telescoping defect",
    );
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Scalar decay problem with initial-value coupling: the final value must
/// converge to exp(-1) at first order for backward Euler and second order
/// for the midpoint rule over N = 16 .. 512.
fn initial_value_convergence(_tols: &Tolerances, report: &mut SuiteReport) {
    let p = scalar_decay();
    let exact = (-1.0f64).exp();
    let steps = [16usize, 32, 64, 128, 256, 512];
    let mut pass = true;
    let mut worst_dev = 0.0f64;
    for (theta, target, window) in [(1.0, 1.0, 0.15), (0.5, 2.0, 0.2)] {
        let errors: Vec<f64> = steps
            .iter()
            .map(|&n| {
                let sol = solve_all_at_once(&p, n, theta).expect("solvable");
                (sol.final_value()[0].re - exact).abs()
            })
            .collect();
        for order in observed_orders(&errors) {
            let dev = (order - target).abs();
            worst_dev = worst_dev.max(dev / window);
            if dev > window {
                pass = false;
            }
        }
    }
    report.push(
        "initial_value_convergence",
        pass,
        steps.len() * 2,
        worst_dev,
        "largest order deviation relative to the allowed window (e^-1 target)",
    );
}

/// Forced periodic problem u' + u = cos(2 pi t): convergence to the exact
/// periodic orbit at scheme order, with the wrap-around residual at
/// machine precision.
fn periodic_convergence(tols: &Tolerances, report: &mut SuiteReport) {
    let p = scalar_periodic_forced();
    let steps = [16usize, 32, 64, 128, 256, 512];
    let mut pass = true;
    let mut worst_dev = 0.0f64;
    let mut worst_wrap = 0.0f64;
    for (theta, target, window) in [(1.0, 1.0, 0.15), (0.5, 2.0, 0.2)] {
        let errors: Vec<f64> = steps
            .iter()
            .map(|&n| {
                let sol = solve_all_at_once(&p, n, theta).expect("solvable");
                let wrap = (sol.values[0][0] - sol.final_value()[0]).norm();
                worst_wrap = worst_wrap.max(wrap);
                if wrap >= 1e-12 {
                    pass = false;
                }
                sol.max_h_error(&p, |t| DVector::from_vec(vec![c(exact_periodic(t))]))
            })
            .collect();
        for order in observed_orders(&errors) {
            let dev = (order - target).abs();
            worst_dev = worst_dev.max(dev / window);
            if dev > window {
                pass = false;
            }
        }
    }
    let initial = solve_all_at_once(&p, 512, 0.5).expect("solvable");
    let anchor_gap = (initial.values[0][0].re - exact_periodic(0.0)).abs();
    if anchor_gap > 1e-5 {
        pass = false;
    }
    let _ = tols;
    report.push(
        "periodic_convergence",
        pass,
        steps.len() * 2,
        worst_dev,
        format!(
            "largest order deviation relative to the window (wrap residual {worst_wrap:.2e}, anchor gap {anchor_gap:.2e})"
        ),
    );
}

/// 20 random non-autonomous problems, n <= 4, N <= 64: shooting, the
/// all-at-once system and the derivation-instance solve agree within the
/// cross-solver tolerance on the same grid.
fn cross_solver_agreement<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 1 + rng.random_range(0..4usize);
        let p = random_problem(rng, n, false);
        let n_steps = 8 + rng.random_range(0..57usize);
        let theta = 0.5;
        let dense = match solve_all_at_once(&p, n_steps, theta) {
            Ok(s) => s,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let shot = match solve_shooting(&p, n_steps, theta) {
            Ok(s) => s,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let gap_solvers = dense.max_relative_gap(&p, &shot);

        let disc = discretize(&p, n_steps).expect("valid discretization");
        let emb = sdp_embedding(&p, &disc, theta).expect("assembly");
        let sdp = match disc
            .instance
            .solve_sdp(&emb.cbc, &emb.a_op, &emb.f_rep, &emb.y0)
        {
            Ok(s) => s,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let flat = disc.stack(&dense.values);
        let gap_sdp = (&sdp.u - &flat).norm() / flat.norm().max(1.0);

        worst = worst.max(gap_solvers).max(gap_sdp);
        if gap_solvers >= tols.cross_solver || gap_sdp >= tols.cross_solver {
            pass = false;
        }
    }
    report.push(
        "cross_solver_agreement",
        pass,
        20,
        worst,
        "largest relative gap among shooting, all-at-once and the derivation solve",
    );
}

/// 20 random problems with vanishing boundary value: the graph norm of the
/// solution is controlled by the antidual norm of the source through the
/// restricted-gain stability constant, which must be positive.
fn stability_bound<R: Rng>(rng: &mut R, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..20 {
        let n = 1 + rng.random_range(0..3usize);
        let p = random_problem(rng, n, true);
        let n_steps = 6 + rng.random_range(0..11usize);
        let disc = discretize(&p, n_steps).expect("valid discretization");
        let emb = sdp_embedding(&p, &disc, 0.5).expect("assembly");
        let beta = match disc.instance.stability_constant(&emb.a_op, &emb.cbc) {
            Ok(b) => b,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        if beta.is_nan() || beta <= 0.0 {
            pass = false;
            continue;
        }
        let sol = match disc
            .instance
            .solve_sdp(&emb.cbc, &emb.a_op, &emb.f_rep, &emb.y0)
        {
            Ok(s) => s,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let u_w = disc.instance.w_space().norm(&sol.u);
        let f_dual = disc.instance.v_space().norm(&emb.f_rep);
        let bound = f_dual / beta;
        // margin > 0 when the bound holds
        let margin = (bound - u_w) / bound.max(1e-300);
        worst_margin = worst_margin.min(margin);
        if u_w > bound * (1.0 + 1e-8) {
            pass = false;
        }
    }
    report.push(
        "stability_bound",
        pass,
        20,
        worst_margin,
        "smallest relative margin of |u|_W below |f|_dual / beta'",
    );
}

/// Propagator contraction: strictly below one for every coercive preset at
/// theta in {1/2, 1}, exactly (1 + 1/N)^(-N) for the scalar unit-decay
/// problem under backward Euler, and exactly one in the undamped
/// diagnostic case.
fn propagator_checks<R: Rng>(rng: &mut R, _tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut cases = 0;

    let decay = scalar_decay();
    for n_steps in [16usize, 64, 256] {
        let norm = propagator_contraction(&decay, n_steps, 1.0).expect("valid");
        let expected = (1.0 + 1.0 / n_steps as f64).powi(-(n_steps as i32));
        let gap = (norm - expected).abs();
        worst = worst.max(gap);
        cases += 1;
        if gap > 1e-12 {
            pass = false;
        }
    }

    let forced = scalar_periodic_forced();
    for theta in [0.5, 1.0] {
        for p in [&decay, &forced] {
            let norm = propagator_contraction(p, 32, theta).expect("valid");
            cases += 1;
            if norm.is_nan() || norm >= 1.0 {
                pass = false;
            }
        }
    }

    for _ in 0..10 {
        let n = 1 + rng.random_range(0..3usize);
        let p = random_problem(rng, n, false);
        for theta in [0.5, 1.0] {
            let norm = propagator_contraction(&p, 24, theta).expect("valid");
            cases += 1;
            if norm.is_nan() || norm >= 1.0 {
                pass = false;
            }
        }
    }

    let undamped = EvolutionProblem::new(
        GelfandTriple::scalar(),
        NonAutonomousForm::constant(DMatrix::zeros(1, 1), 0.0, 0.0),
        SourceTerm::Zero,
        1.0,
        DMatrix::zeros(1, 1),
        DVector::zeros(1),
    )
    .expect("valid problem");
    let one = propagator_contraction(&undamped, 16, 1.0).expect("valid");
    cases += 1;
    if one != 1.0 {
        pass = false;
    }

    report.push(
        "propagator_contraction",
        pass,
        cases,
        worst,
        "largest deviation from the closed-form scalar propagator norm",
    );
}
