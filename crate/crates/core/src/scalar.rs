//! Scalar abstraction: the numeric core is generic over the float type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the numeric core (f32 or f64).
///
/// Probability tables, information metrics, the annealing solver, and the
/// convexity scores are all generic over this trait. Geometric predicates
/// (hull containment) always run internally in f64 regardless of the
/// instantiation; see `convexity`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    fn of_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_float_widths_satisfy_the_trait() {
        fn takes_scalar<S: Scalar>(x: S) -> f64 {
            x.as_f64()
        }
        assert_eq!(takes_scalar(1.5f32), 1.5);
        assert_eq!(takes_scalar(1.5f64), 1.5);
    }

    #[test]
    fn of_f64_round_trips_for_f64() {
        let x = <f64 as Scalar>::of_f64(0.123456789);
        assert_eq!(x, 0.123456789);
    }
}
