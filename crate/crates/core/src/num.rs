//! Scalar abstraction: the whole crate is generic over the lattice scalar.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the voxel math runs on: `f32` or `f64`.
///
/// Bundles the field arithmetic from nalgebra with the conversions and FFT
/// support the correlation path needs.
pub trait Real: RealField + FromPrimitive + ToPrimitive + FftNum + Copy {
    /// Lossy conversion from `f64`; used for constants and config values.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Lossy conversion to `f64` for reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where T: RealField + FromPrimitive + ToPrimitive + FftNum + Copy {}
