//! Floating-point abstraction shared by the numeric kernels (simplex, regret
//! matching, perturbation bases).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default tolerance for optimality and pivot tests at this precision.
    fn default_tolerance() -> Self {
        Self::epsilon().sqrt() * Self::of(0.1)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
