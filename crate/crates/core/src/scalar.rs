//! Floating-point abstraction shared by the deterministic solvers.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the mean-field and analytic solvers can run on: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every finite `f64` maps to some value of
    /// the supported scalars, so this never fails for them.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Slack allowed when checking box invariants (`0 <= i`, `i + r <= f`)
    /// after a numerical step. `1e-9` in double precision; scaled to the
    /// machine epsilon for narrower types.
    #[inline]
    fn invariant_slack() -> Self {
        let eps = Self::epsilon() * Self::lit(64.0);
        eps.max(Self::lit(1e-9))
    }

    /// Tolerance on `sum(p) == 1` for a probability mass function.
    #[inline]
    fn normalization_slack() -> Self {
        let eps = Self::epsilon() * Self::lit(1024.0);
        eps.max(Self::lit(1e-12))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
