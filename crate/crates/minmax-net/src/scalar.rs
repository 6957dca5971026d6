//! Scalar abstraction: the whole crate is generic over the floating-point
//! type through this trait. `f32` and `f64` are the supported instances.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + Default
        + Debug
        + Display
        + FromStr
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
pub(crate) fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal must convert to the scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_for_both_widths() {
        let a: f64 = lit(0.25);
        let b: f32 = lit(0.25);
        assert_eq!(a, 0.25);
        assert_eq!(b, 0.25f32);
    }
}
