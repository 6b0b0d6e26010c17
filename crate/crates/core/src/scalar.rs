//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`) underlying complex matrices,
/// control amplitudes and fidelities.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + std::fmt::LowerExp
    + FromStr
    + Default
    + rustfft::FftNum
{
    /// Max-entry tolerance for treating a matrix as Hermitian.
    const HERMITIAN_TOL: Self;
    /// Unit round-off scaled for matrix-sized accumulations.
    const ROUNDOFF: Self;

    /// Lossy conversion from `f64`, used for literal constants.
    fn lit(x: f64) -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::lit(0.5)
    }
}

macro_rules! impl_real {
    ($t:ty, $herm:expr, $eps:expr) => {
        impl Real for $t {
            const HERMITIAN_TOL: Self = $herm;
            const ROUNDOFF: Self = $eps;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
        }
    };
}

impl_real!(f32, 1e-5, 1e-6);
impl_real!(f64, 1e-12, 1e-14);
