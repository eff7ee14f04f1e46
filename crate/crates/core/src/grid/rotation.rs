use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::num::Real;

/// Validated proper rotation (orthonormal, det +1).
///
/// 2D problems rotate about the z axis only; the type is shared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Real> {
    matrix: Matrix3<T>,
}

/// Validation tolerance: 1e-9 for f64, scaled up for coarser scalars.
fn tolerance<T: Real>() -> T {
    T::of(1e-9).max(T::default_epsilon() * T::of(64.0))
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Build from an explicit matrix, checking `R^T R = I` and `det R = +1`.
    pub fn from_matrix(matrix: Matrix3<T>) -> Result<Self> {
        let tol = tolerance::<T>();
        let gram = matrix.transpose() * matrix;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > tol {
            return Err(Error::InvalidRotation(format!(
                "not orthonormal (max deviation {:e})",
                dev.as_f64()
            )));
        }
        let det = matrix.determinant();
        if (det - T::one()).abs() > tol {
            return Err(Error::InvalidRotation(format!(
                "determinant {} != +1",
                det.as_f64()
            )));
        }
        Ok(Self { matrix })
    }

    /// Rotation by `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vector3<T>, angle: T) -> Result<Self> {
        let norm = axis.norm();
        if norm <= T::default_epsilon() * T::of(16.0) {
            return Err(Error::InvalidRotation("zero rotation axis".into()));
        }
        let unit = Unit::new_normalize(axis);
        Ok(Self {
            matrix: *Rotation3::from_axis_angle(&unit, angle).matrix(),
        })
    }

    /// Planar rotation about the z axis; the 2D workhorse.
    pub fn about_z(angle: T) -> Self {
        Self::from_axis_angle(Vector3::z(), angle).expect("z axis is non-zero")
    }

    /// Minimal-angle rotation taking `from` onto `to` (both normalized
    /// internally). The antipodal case falls back to a half turn about the
    /// given `fallback_axis`.
    pub fn between(from: Vector3<T>, to: Vector3<T>, fallback_axis: Vector3<T>) -> Result<Self> {
        let f = from.normalize();
        let t = to.normalize();
        let dot = f.dot(&t).clamp(-T::one(), T::one());
        let one_eps = T::one() - T::of(1e-12).max(T::default_epsilon() * T::of(16.0));
        if dot >= one_eps {
            return Ok(Self::identity());
        }
        if dot <= -one_eps {
            return Self::from_axis_angle(fallback_axis, T::pi());
        }
        let axis = f.cross(&t);
        Self::from_axis_angle(axis, dot.acos())
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.matrix
    }

    #[inline]
    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        self.matrix * v
    }

    /// Inverse rotation (transpose).
    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// Composition: `self.compose(&other)` applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
        }
    }

    /// Max absolute entry difference; handy for approximate comparisons.
    pub fn distance(&self, other: &Self) -> T {
        (self.matrix - other.matrix).abs().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn axis_angle_basics() {
        let r = Rotation::<f64>::from_axis_angle(Vector3::x(), 0.0).unwrap();
        assert!(r.distance(&Rotation::identity()) < 1e-15);

        let r = Rotation::<f64>::about_z(FRAC_PI_2);
        let v = r.apply(&Vector3::new(0.0, 1.0, 0.0));
        assert!((v - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_axis_rejected() {
        assert!(Rotation::<f64>::from_axis_angle(Vector3::zeros(), 1.0).is_err());
    }

    #[test]
    fn from_matrix_validates() {
        let good = Rotation::<f64>::about_z(0.3);
        assert!(Rotation::from_matrix(*good.matrix()).is_ok());

        let mut bad = *good.matrix();
        bad[(0, 0)] += 1e-6;
        assert!(Rotation::from_matrix(bad).is_err());

        // reflection: orthonormal but det = -1
        let refl = Matrix3::<f64>::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Rotation::from_matrix(refl).is_err());
    }

    #[test]
    fn orthonormality_holds_for_generated_rotations() {
        for i in 0..36 {
            let r = Rotation::<f64>::about_z(2.0 * PI * i as f64 / 36.0);
            let gram = r.matrix().transpose() * r.matrix();
            assert!((gram - Matrix3::identity()).abs().max() < 1e-9);
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_and_compose() {
        let r = Rotation::<f64>::from_axis_angle(Vector3::new(1.0, 2.0, -0.5), 0.7).unwrap();
        let id = r.compose(&r.inverse());
        assert!(id.distance(&Rotation::identity()) < 1e-12);
    }

    #[test]
    fn between_maps_from_onto_to() {
        let b = Vector3::new(0.3, -0.4, 0.866).normalize();
        let r = Rotation::<f64>::between(b, Vector3::z(), Vector3::x()).unwrap();
        assert!((r.apply(&b) - Vector3::z()).norm() < 1e-12);

        // identity case
        let r = Rotation::<f64>::between(Vector3::z(), Vector3::z(), Vector3::x()).unwrap();
        assert!(r.distance(&Rotation::identity()) < 1e-15);

        // antipodal case: half turn about +x
        let r = Rotation::<f64>::between(-Vector3::z(), Vector3::z(), Vector3::x()).unwrap();
        let expect = Rotation::<f64>::from_axis_angle(Vector3::x(), PI).unwrap();
        assert!(r.distance(&expect) < 1e-12);
    }

    #[test]
    fn f32_rotations_validate_at_scaled_tolerance() {
        let r = Rotation::<f32>::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 0.9).unwrap();
        assert!(Rotation::from_matrix(*r.matrix()).is_ok());
    }
}
