use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for fractions, shares and money amounts.
///
/// Implemented for `f32` and `f64`. Counting code stays in integers and only
/// converts at the point a fraction is formed, so the choice of scalar only
/// affects rounding of the derived quantities.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    /// `num / den` formed in the scalar type. `den` must be non-zero.
    fn ratio(num: usize, den: usize) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}
