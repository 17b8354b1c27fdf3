//! Finite-dimensional toolkit for derivation boundary-value problems.
//!
//! The crate instantiates, on explicit weighted coordinate spaces, the
//! representation-theorem machinery behind non-autonomous evolution
//! equations `u' + A(t)u = f` with contraction-coupled time boundary
//! conditions `u(0) - Phi^* u(T) = y0` (initial-value, periodic,
//! anti-periodic, or any contraction `Phi`):
//!
//! * [`hilbert`] - Gram-weighted spaces, operators, adjoints, subspaces;
//! * [`rtl`] - constructive checks for the representation theorems and the
//!   explicit perturbation constant;
//! * [`derivation`] - boundary forms, boundary structures `(H, B0, B1)`,
//!   maximal admissible subspaces `Z_Phi` and the strong-problem solver;
//! * [`evolution`] - theta-scheme discretizations of the evolution problem,
//!   an all-at-once solver, a shooting solver and convergence diagnostics;
//! * [`verify`] - seeded randomized suites exercising the theorems at scale.

pub mod derivation;
pub mod error;
pub mod evolution;
pub mod hilbert;
pub(crate) mod linalg;
pub mod randgen;
pub mod rtl;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use hilbert::{InnerSpace, LinearMap, ScalarField, Subspace};
pub use linalg::C64;
