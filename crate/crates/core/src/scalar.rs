use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Number type the channel and tree math is written against.
///
/// Only ring operations, comparison and integer conversion are needed, so
/// `f32`, `f64` and `BigRational` all qualify.
pub trait Scalar:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }

    /// `2^-exp`, by repeated halving so binary floats stay exact.
    fn pow2_neg(exp: u32) -> Self {
        let half = Self::half();
        (0..exp).fold(Self::one(), |acc, _| acc * half.clone())
    }

    /// `2^exp`.
    fn pow2(exp: u32) -> Self {
        let two = Self::two();
        (0..exp).fold(Self::one(), |acc, _| acc * two.clone())
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl<T> Scalar for T where
    T: Num
        + Clone
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Binary float with one-ulp stepping, the primitive behind outward rounding.
pub trait RoundingFloat: Float + Debug + Display + Send + Sync + 'static {
    fn step_up(self) -> Self;
    fn step_down(self) -> Self;

    fn from_f64_lossy(x: f64) -> Self;
}

impl RoundingFloat for f64 {
    fn step_up(self) -> Self {
        self.next_up()
    }

    fn step_down(self) -> Self {
        self.next_down()
    }

    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl RoundingFloat for f32 {
    fn step_up(self) -> Self {
        self.next_up()
    }

    fn step_down(self) -> Self {
        self.next_down()
    }

    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}
