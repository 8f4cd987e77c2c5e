//! Scalar abstraction for the numeric parts of the crate.
//!
//! Geometry, the closed-form probability bounds, and the layered-graph
//! costs are written against [`Real`] so they work for `f32` and `f64`
//! alike; the crate root exports `f64` aliases for everyday use.

use core::fmt::{Debug, Display};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Debug + Display + 'static
{
    /// Shorthand for converting small constants.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
