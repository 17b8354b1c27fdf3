//! Central numeric tolerances.
//!
//! Every threshold used by constructors, solvers and the verification suites
//! is defined here rather than inline, so reproducibility studies can see
//! (and the CLI can scale) the exact values in one place.

/// Hermitian symmetry of a Gram matrix, relative entrywise.
pub const GRAM_HERMITIAN: f64 = 1e-12;

/// `adjoint(adjoint(T)) = T`, relative on coefficients.
pub const ADJOINT_INVOLUTION: f64 = 1e-12;

/// Orthonormality defect `Q^H G Q - I` allowed on subspace bases.
pub const BASIS_ORTHONORMAL: f64 = 1e-10;

/// Singular values below `RANK_FACTOR * max(sigma_max, 1)` count as zero.
pub const RANK_FACTOR: f64 = 1e-10;

/// Self-adjointness defect accepted by `sqrt_psd` and friends.
pub const SELF_ADJOINT: f64 = 1e-10;

/// Residual `S*S - T` accepted for a matrix square root.
pub const SQRT_RESIDUAL: f64 = 1e-10;

/// Largest principal angle under which two subspaces count as equal.
pub const ANGLE_EQUALITY: f64 = 1e-8;

/// `Re<Bx,x> <= DISSIPATIVE * |x|^2` still counts as dissipative.
pub const DISSIPATIVE: f64 = 1e-10;

/// Minimal coercivity bound accepted on the restricted form in the
/// form-representation solver.
pub const FORM_COERCIVITY_MIN: f64 = 1e-10;

/// Relative slack granted to the dual-witness ratio `|y| * beta / |x|`.
pub const WITNESS_RATIO: f64 = 1e-10;

/// Eigenvalues of the boundary form inside `[-SPECTRAL_SPLIT, SPECTRAL_SPLIT]`
/// are assigned to neither the positive nor the negative part.
pub const SPECTRAL_SPLIT: f64 = 1e-10;

/// Admissibility: largest eigenvalue of the boundary form on the subspace.
pub const ADMISSIBLE: f64 = 1e-10;

/// Relative residual accepted by the strong-derivation solve.
pub const SDP_RESIDUAL: f64 = 1e-9;

/// Residual accepted by the weak-formulation check.
pub const WDP_RESIDUAL: f64 = 1e-8;

/// Membership of a vector in a subspace (projection residual, relative).
pub const MEMBERSHIP: f64 = 1e-10;

/// Residual of the lifted vector in the joint boundary-trace lift.
pub const LIFT_RESIDUAL: f64 = 1e-9;

/// Operator norm excess accepted on a contraction.
pub const CONTRACTION: f64 = 1e-12;

/// Boundary residual `|u_0 - Phi^* u_N - y0|_H` after a successful solve.
pub const BOUNDARY_RESIDUAL: f64 = 1e-10;

/// Discrete integration-by-parts identity, relative to term magnitude.
pub const IBP_EXACT: f64 = 1e-13;

/// Relative slack for randomized inequality checks (perturbation bound,
/// gain lower bounds).
pub const INEQ_SLACK: f64 = 1e-10;

/// Bundle of the suite-level tolerances, so the verification driver can
/// override them wholesale (e.g. scaled to zero to prove the harness bites).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Tolerances {
    pub angle_equality: f64,
    pub ineq_slack: f64,
    pub witness_ratio: f64,
    pub dissipative: f64,
    pub ibp_exact: f64,
    pub sdp_residual: f64,
    pub wdp_residual: f64,
    pub admissible: f64,
    pub cross_solver: f64,
    pub boundary_residual: f64,
    pub contraction_excess: f64,
    pub uniqueness_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            angle_equality: ANGLE_EQUALITY,
            ineq_slack: INEQ_SLACK,
            witness_ratio: WITNESS_RATIO,
            dissipative: DISSIPATIVE,
            ibp_exact: IBP_EXACT,
            sdp_residual: SDP_RESIDUAL,
            wdp_residual: WDP_RESIDUAL,
            admissible: ADMISSIBLE,
            cross_solver: 1e-8,
            boundary_residual: BOUNDARY_RESIDUAL,
            contraction_excess: 1e-10,
            uniqueness_gap: 1e-9,
        }
    }
}

impl Tolerances {
    /// Multiply every tolerance by `factor` (0 makes every check fail,
    /// which is how the harness proves it reports violations).
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            angle_equality: self.angle_equality * factor,
            ineq_slack: self.ineq_slack * factor,
            witness_ratio: self.witness_ratio * factor,
            dissipative: self.dissipative * factor,
            ibp_exact: self.ibp_exact * factor,
            sdp_residual: self.sdp_residual * factor,
            wdp_residual: self.wdp_residual * factor,
            admissible: self.admissible * factor,
            cross_solver: self.cross_solver * factor,
            boundary_residual: self.boundary_residual * factor,
            contraction_excess: self.contraction_excess * factor,
            uniqueness_gap: self.uniqueness_gap * factor,
        }
    }
}
