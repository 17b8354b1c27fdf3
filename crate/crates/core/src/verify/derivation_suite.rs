use rand::{Rng, RngExt};

use crate::derivation::spectral_boundary_structure;
use crate::hilbert::{ScalarField, Subspace};
use crate::randgen::{self, BoundaryOptions, ContractionKind};
use crate::tol::Tolerances;

use super::SuiteReport;

/// Randomized checks for the trace classification of maximal admissible
/// subspaces: the b-orthogonal identity, double orthogonals, maximality,
/// recovery of the generating contraction, and the solver consistency on
/// boundary-free instances.
pub fn derivation_suite(seed: u64, tols: &Tolerances) -> SuiteReport {
    let mut report = SuiteReport::new("derivation", seed);
    let mut rng = randgen::rng(seed ^ 0x44455256);

    b_orthogonal_classification(&mut rng, tols, &mut report);
    maximality(&mut rng, &mut report);
    contraction_uniqueness(&mut rng, tols, &mut report);
    boundary_free_solver_consistency(&mut rng, tols, &mut report);
    report
}

fn random_options<R: Rng>(rng: &mut R, case: usize) -> BoundaryOptions {
    let field = if case.is_multiple_of(2) {
        ScalarField::Real
    } else {
        ScalarField::Complex
    };
    let w_dim = 3 + rng.random_range(0..8usize); // up to 10
    let shared_ranges = case.is_multiple_of(4);
    let h_dim = 1 + rng.random_range(0..4usize);
    let max_rank = h_dim.min((w_dim - 1) / 2);
    let rank_b0 = 1 + rng.random_range(0..max_rank.max(1));
    let rank_b1 = if shared_ranges {
        rank_b0
    } else {
        rng.random_range(0..=max_rank)
    };
    BoundaryOptions {
        w_dim,
        h_dim,
        rank_b0: rank_b0.min(max_rank.max(1)),
        rank_b1,
        field,
        shared_ranges,
    }
}

fn contraction_kind(case: usize, shared: bool) -> ContractionKind {
    match case % 5 {
        0 if shared => ContractionKind::IdentityOnRange,
        1 if shared => ContractionKind::NegIdentityOnRange,
        2 => ContractionKind::Zero,
        3 => ContractionKind::RankDeficient,
        _ => ContractionKind::Random,
    }
}

/// 100 random structures and contractions (zero, identity-like,
/// rank-deficient, dense): the b-orthogonal of `Z_Phi` must coincide with
/// `Z_{Phi^*}` (all principal angles below tolerance) and the double
/// b-orthogonal must return `Z_Phi`. Every structure also keeps the ranges
/// of the adjoint traces in trivial intersection, and `Z_Phi` strongly
/// admissible.
fn b_orthogonal_classification<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst_angle = 0.0f64;
    for case in 0..100 {
        let opts = random_options(rng, case);
        let setup = randgen::boundary_setup(rng, &opts);
        let bs = &setup.structure;
        let cbc = match randgen::contraction_on(rng, bs, contraction_kind(case, opts.shared_ranges))
        {
            Ok(c) => c,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let z_phi = cbc.z_phi();
        let direct = bs.b_orthogonal(&z_phi).expect("same ambient");
        let classified = cbc.z_phi_adjoint();

        let angle_gap = subspace_gap(&direct, &classified);
        worst_angle = worst_angle.max(angle_gap);
        if angle_gap >= tols.angle_equality {
            pass = false;
        }

        let double = bs.b_orthogonal(&direct).expect("same ambient");
        let double_gap = subspace_gap(&double, &z_phi);
        worst_angle = worst_angle.max(double_gap);
        if double_gap >= tols.angle_equality {
            pass = false;
        }

        // adjoint trace ranges intersect trivially
        let ran0 = bs.b0().adjoint().range();
        let ran1 = bs.b1().adjoint().range();
        if ran0.intersection(&ran1).expect("same ambient").dim() != 0 {
            pass = false;
        }

        if !bs
            .is_strongly_admissible(&z_phi)
            .expect("same ambient")
            .strongly_admissible
        {
            pass = false;
        }
    }
    report.push(
        "b_orthogonal_classification",
        pass,
        100,
        worst_angle,
        "largest principal angle between the b-orthogonal and its classified form",
    );
}

/// Largest principal angle when dimensions agree, infinity otherwise.
fn subspace_gap(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.principal_angles(b)
        .expect("same ambient")
        .into_iter()
        .fold(0.0, f64::max)
}

/// 50 structures, 200 random candidates each: adjoining any direction
/// outside `Z_Phi` must create a positive boundary-form direction, i.e. no
/// admissible strict extension exists.
fn maximality<R: Rng>(rng: &mut R, report: &mut SuiteReport) {
    let mut pass = true;
    let mut weakest_violation = f64::INFINITY;
    for case in 0..50 {
        let opts = random_options(rng, case);
        let setup = randgen::boundary_setup(rng, &opts);
        let bs = &setup.structure;
        let cbc = randgen::contraction_on(rng, bs, contraction_kind(case, opts.shared_ranges))
            .expect("norms are controlled");
        let z_phi = cbc.z_phi();
        let w_dim = bs.w_space().dim();
        if z_phi.dim() == w_dim {
            // already everything: nothing to extend
            continue;
        }
        for _ in 0..200 {
            let candidate = randgen::unit_vector_in(rng, bs.w_space());
            if z_phi.contains_vector(&candidate, 1e-8) {
                continue;
            }
            let extension = z_phi
                .sum(&Subspace::span_of(bs.w_space().clone(), &[candidate]).expect("unit vector"))
                .expect("same ambient");
            let outcome = bs.is_admissible(&extension).expect("same ambient");
            weakest_violation = weakest_violation.min(outcome.max_on_subspace);
            if outcome.max_on_subspace <= 1e-8 {
                pass = false;
            }
        }
    }
    report.push(
        "maximality_of_z_phi",
        pass,
        50,
        weakest_violation,
        "smallest positive boundary-form value found on one-dimensional extensions",
    );
}

/// 100 random contractions: building `Z_Psi` and inducing the contraction
/// back from it must recover `Psi` exactly (coefficient gap below
/// tolerance) — the trace classification is injective.
fn contraction_uniqueness<R: Rng>(rng: &mut R, tols: &Tolerances, report: &mut SuiteReport) {
    let mut pass = true;
    let mut worst_gap = 0.0f64;
    for case in 0..100 {
        let opts = random_options(rng, case);
        let setup = randgen::boundary_setup(rng, &opts);
        let bs = &setup.structure;
        let psi = randgen::contraction_on(rng, bs, contraction_kind(case, opts.shared_ranges))
            .expect("norms are controlled");
        let recovered = match bs.induced_contraction(&psi.z_phi()) {
            Ok(r) => r,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let gap = recovered.coefficient_gap(&psi);
        worst_gap = worst_gap.max(gap);
        if gap >= tols.uniqueness_gap {
            pass = false;
        }
    }
    report.push(
        "contraction_uniqueness",
        pass,
        100,
        worst_gap,
        "largest coefficient gap between a contraction and its recovery from Z_Phi",
    );
}

/// On boundary-free instances (identically vanishing form) the strong
/// solve must coincide with the plain dense solve of `(D + A)u = f`.
fn boundary_free_solver_consistency<R: Rng>(
    rng: &mut R,
    tols: &Tolerances,
    report: &mut SuiteReport,
) {
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let field = randgen::field(rng);
        let dim = 2 + rng.random_range(0..5usize);
        let v = randgen::space(rng, dim, field);
        let k_raw = randgen::matrix(rng, dim, dim, field);
        let skew_pairing = (&k_raw - k_raw.adjoint()).scale(0.5);
        let inst = crate::derivation::DerivationInstance::skew(v.clone(), skew_pairing)
            .expect("skew pairing");
        let bs = spectral_boundary_structure(&inst).expect("zero form splits");
        let cbc = crate::derivation::ContractionBC::zero(bs);
        let alpha = 0.5 + rng.random::<f64>();
        let a = randgen::coercive_operator(rng, &v, alpha);
        let f = randgen::vector_in(rng, &v);
        let y0 = nalgebra::DVector::zeros(dim);
        let sol = match inst.solve_sdp(&cbc, &a, &f, &y0) {
            Ok(s) => s,
            Err(_) => {
                pass = false;
                continue;
            }
        };
        let combined = inst.derivation().coeffs() + a.coeffs();
        let direct = combined.lu().solve(&f).expect("coercive system");
        let gap = (&sol.u - &direct).norm() / direct.norm().max(1.0);
        worst = worst.max(gap);
        if gap >= tols.sdp_residual {
            pass = false;
        }
    }
    report.push(
        "boundary_free_consistency",
        pass,
        10,
        worst,
        "largest relative gap between the strong solve and the dense solve",
    );
}
