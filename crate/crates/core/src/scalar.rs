//! Floating point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the explainer computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the value is unrepresentable.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn from_usize_exact(value: usize) -> Self {
        Self::from_usize(value).expect("usize representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor for checks stated at `f64` precision, widened for
    /// lower-precision scalars.
    fn tolerance(requested: f64, scale: Self) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0) * scale.abs().max(Self::one());
        Self::lit(requested).max(floor)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
