//! Boundary forms, boundary structures and admissible subspaces.
//!
//! A derivation extends to a graph space `W` on which the boundary form
//! `b(v,w) = <Dv,w> + conj(<Dw,v>)` measures the failure of antisymmetry.
//! Factoring `b` through a trace space `(H, B0, B1)` turns time-boundary
//! conditions into kernels: the maximal admissible subspaces are exactly
//! `Z_Phi = ker(B1 - Phi B0)` for contractions `Phi` between the trace
//! ranges, their b-orthogonals are `Z_{Phi^*}`, and the strong derivation
//! problem `Du + Au = f`, `B0 u - Phi^* B1 u = y0` has a unique solution
//! for coercive `A`.

mod boundary;
mod instance;
mod solve;

pub use boundary::{
    spectral_boundary_structure, AdmissibilityReport, BoundaryStructure, ContractionBC,
    StrongAdmissibilityReport,
};
pub use instance::DerivationInstance;
pub use solve::{SdpSolution, WdpReport};
