//! Model-agnostic machinery for structured reasoning trajectories:
//! a tag-delimited trajectory grammar with constrained-decoding masks,
//! a rooted reasoning tree with budgeted depth-first search and
//! backtracking, a four-component self-verification reward, and
//! experiment harnesses that validate the search guarantees empirically.
//!
//! Numeric code is generic over the scalar type via [`scalar::Real`];
//! the aliases below fix `f64` for ordinary use.

pub mod geometry;
pub mod grammar;
pub mod lemma;
pub mod parity;
pub mod reward;
pub mod scalar;
pub mod search;
pub mod tree;

pub use scalar::Real;

/// Bounding box over `f64` (pixel units).
pub type BBox = geometry::BoundingBox<f64>;
/// Layered parity graph with `f64` edge costs.
pub type LayeredGraph = parity::LayeredGraphT<f64>;
/// Closed-form parameters derived from `(gamma, delta, t_max)` over `f64`.
pub type DerivedParams = lemma::DerivedParamsT<f64>;
