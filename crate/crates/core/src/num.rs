use std::fmt::{Debug, Display};

/// Floating point scalar used by the information measures.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a count to the scalar type.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    /// Widens to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar")
    }
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// `x * log2(x)` with the convention `0 * log 0 = 0`.
pub fn xlog2x<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x * x.log2()
    } else {
        T::zero()
    }
}
