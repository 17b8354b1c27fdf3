//! Weighted-inner-product linear algebra: spaces with explicit Gram
//! matrices, operators with Gram-aware adjoints, gains and square roots, and
//! subspace algebra (sums, intersections, kernels, ranges, principal
//! angles). Everything downstream builds on this substrate.
//!
//! Antiduals never get their own coordinates: a functional is stored as its
//! representing vector and dual norms are computed as vector norms.

mod map;
mod space;
mod subspace;

pub use map::LinearMap;
pub use space::{InnerSpace, ScalarField};
pub use subspace::Subspace;
