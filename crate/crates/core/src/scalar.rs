//! Scalar abstraction shared by every table, operator and solver.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Field elements the tabular machinery can run on.
///
/// Implemented for `f32`, `f64` and exact rationals ([`crate::Rational`]).
/// Nothing here needs transcendental functions, so Gaussian elimination,
/// Bellman backups and the error bookkeeping all stay exact for rationals.
pub trait Scalar:
    Num
    + NumAssign
    + Signed
    + Copy
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion used for tolerance checks and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Conversion from a literal; panics only for values the type cannot
    /// represent at all (NaN into a rational).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable in scalar type")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl<T> Scalar for T where
    T: Num
        + NumAssign
        + Signed
        + Copy
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
