//! Floating point abstraction shared by the numerical kernels.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar usable by every generic kernel in this crate (`f32`, `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + FftNum + Debug + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + FftNum + Debug + Default + Send + Sync + 'static {}
