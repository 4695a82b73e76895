use nalgebra::{Matrix3, Vector3};

use super::GeometryError;
use crate::scalar::{real, tolerance, Real};

/// Rigid transform `x ↦ R·x + T`.
///
/// For grasps this is the gripper frame expressed in the camera (or object)
/// frame: x is the approach axis, y the jaw-closing axis and z = x × y, with
/// the origin at the fingertip midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real = f64> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self { rotation, translation }
    }

    /// Builds a pose after checking `RᵀR = I` and `det R = +1`.
    pub fn try_new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        let pose = Self::new(rotation, translation);
        if pose.is_valid() {
            Ok(pose)
        } else {
            Err(GeometryError::InvalidRotation)
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    pub fn from_rotation(rotation: Matrix3<T>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    /// Orthonormality and handedness within 1e-9 (scaled for `f32`).
    pub fn is_valid(&self) -> bool {
        let tol = tolerance::<T>(1e-9);
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        gram.amax() <= tol && (self.rotation.determinant() - T::one()).abs() <= tol
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    pub fn apply_all(&self, points: &[Vector3<T>]) -> Vec<Vector3<T>> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose<T> {
        let rt = self.rotation.transpose();
        Pose::new(rt, -(rt * self.translation))
    }

    /// The same grasp rotated by π about its own approach (x) axis.
    pub fn flipped_about_x(&self) -> Pose<T> {
        let mut rotation = self.rotation;
        for r in 0..3 {
            rotation[(r, 1)] = -rotation[(r, 1)];
            rotation[(r, 2)] = -rotation[(r, 2)];
        }
        Pose::new(rotation, self.translation)
    }

    /// Gripper axis `i` (column of R).
    pub fn axis(&self, i: usize) -> Vector3<T> {
        self.rotation.column(i).into_owned()
    }

    /// Row-major rotation followed by the translation.
    pub fn to_row_major(&self) -> [T; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ]
    }

    pub fn from_row_major(v: &[T; 12]) -> Self {
        Self::new(
            Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]),
            Vector3::new(v[9], v[10], v[11]),
        )
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        let rotation = self.rotation.map(|x| real::<U>(crate::scalar::to_f64(x)));
        let translation = self.translation.map(|x| real::<U>(crate::scalar::to_f64(x)));
        Pose::new(rotation, translation)
    }
}

// Serialized as the 12 numbers of `to_row_major`.
impl<T: Real + serde::Serialize> serde::Serialize for Pose<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de, T: Real + serde::Deserialize<'de>> serde::Deserialize<'de> for Pose<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[T; 12]>::deserialize(d)?;
        Ok(Pose::from_row_major(&v))
    }
}

/// Applies `pose` to every point.
pub fn pose_apply<T: Real>(pose: &Pose<T>, points: &[Vector3<T>]) -> Vec<Vector3<T>> {
    pose.apply_all(points)
}

pub fn rot_x<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(T::one(), T::zero(), T::zero(), T::zero(), c, -s, T::zero(), s, c)
}

pub fn rot_y<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, T::zero(), s, T::zero(), T::one(), T::zero(), -s, T::zero(), c)
}

pub fn rot_z<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, T::zero(), s, c, T::zero(), T::zero(), T::zero(), T::one())
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn rot_axis<T: Real>(axis: &Vector3<T>, angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    let k = axis;
    let kx = Matrix3::new(T::zero(), -k.z, k.y, k.z, T::zero(), -k.x, -k.y, k.x, T::zero());
    Matrix3::identity() + kx * s + kx * kx * (T::one() - c)
}

/// Rotation matrix whose columns are the given frame axes.
pub fn from_axes<T: Real>(x: &Vector3<T>, y: &Vector3<T>, z: &Vector3<T>) -> Matrix3<T> {
    Matrix3::from_columns(&[*x, *y, *z])
}

/// Geodesic angle between two rotations, in `[0, π]`.
///
/// This is `arccos(½·tr(R₁R₂ᵀ) − ½)`, evaluated as `atan2(sin θ, cos θ)` from
/// the skew and trace parts of `R₁R₂ᵀ`, which stays accurate near 0 and π
/// where the plain arccos loses half the significant digits.
pub fn rotation_distance<T: Real>(r1: &Matrix3<T>, r2: &Matrix3<T>) -> T {
    let q = r1 * r2.transpose();
    let half = real::<T>(0.5);
    let cos = (q.trace() - T::one()) * half;
    let w = Vector3::new(
        q[(2, 1)] - q[(1, 2)],
        q[(0, 2)] - q[(2, 0)],
        q[(1, 0)] - q[(0, 1)],
    );
    let sin = w.norm() * half;
    sin.atan2(cos)
}

/// Rotation distance computed literally as a clamped arccos. Kept as the
/// reference formula; [`rotation_distance`] is the one used everywhere.
pub fn rotation_distance_acos<T: Real>(r1: &Matrix3<T>, r2: &Matrix3<T>) -> T {
    let q = r1 * r2.transpose();
    let arg = (q.trace() - T::one()) * real::<T>(0.5);
    let one = T::one();
    arg.clamp(-one, one).acos()
}

pub fn translation_distance<T: Real>(t1: &Vector3<T>, t2: &Vector3<T>) -> T {
    (t1 - t2).norm()
}

/// Nearest rotation matrix in the Frobenius sense.
pub fn project_to_rotation<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < T::zero() {
        d[(2, 2)] = -T::one();
    }
    u * d * v_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn apply_identity_translation_and_rotation() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(Pose::<f64>::identity().apply(&p), p);

        let shift = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(shift.apply(&Vector3::zeros()), Vector3::new(0.0, 0.0, 1.0));

        let rz = Pose::from_rotation(rot_z(FRAC_PI_2));
        let q = rz.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(q, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rotation_distance_reference_values() {
        let i = Matrix3::<f64>::identity();
        assert_eq!(rotation_distance(&i, &i), 0.0);
        assert_relative_eq!(rotation_distance(&i, &rot_z(FRAC_PI_2)), FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(rotation_distance(&i, &rot_x(PI)), PI, epsilon = 1e-12);
    }

    #[test]
    fn atan2_form_matches_acos_form() {
        for k in 1..30 {
            let a = k as f64 * 0.1;
            let r = rot_axis(&Vector3::new(1.0, 2.0, -0.5).normalize(), a);
            let i = Matrix3::identity();
            assert_relative_eq!(
                rotation_distance(&i, &r),
                rotation_distance_acos(&i, &r),
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn translation_distance_values() {
        let z = Vector3::<f64>::zeros();
        assert_eq!(translation_distance(&z, &z), 0.0);
        assert_eq!(translation_distance(&Vector3::new(1.0, 0.0, 0.0), &z), 1.0);
        assert_eq!(translation_distance(&Vector3::new(3.0, 4.0, 0.0), &z), 5.0);
    }

    #[test]
    fn row_major_round_trip() {
        let pose = Pose::new(rot_axis(&Vector3::new(0.0, 0.6, 0.8), 0.7), Vector3::new(0.1, -0.2, 0.9));
        assert_eq!(Pose::from_row_major(&pose.to_row_major()), pose);
    }

    #[test]
    fn try_new_rejects_reflection() {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::try_new(reflect, Vector3::zeros()).is_err());
        assert!(Pose::try_new(rot_y(0.3), Vector3::zeros()).is_ok());
    }

    #[test]
    fn compose_and_inverse() {
        let a = Pose::new(rot_x(0.3) * rot_z(-1.1), Vector3::new(0.2, 0.0, 1.0));
        let b = Pose::new(rot_y(0.9), Vector3::new(-0.1, 0.4, 0.3));
        let p = Vector3::new(0.3, -0.7, 0.05);
        assert_relative_eq!(a.compose(&b).apply(&p), a.apply(&b.apply(&p)), epsilon = 1e-12);
        assert_relative_eq!(a.inverse().apply(&a.apply(&p)), p, epsilon = 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let r = rot_z(0.5f32);
        let d = rotation_distance(&Matrix3::identity(), &r);
        assert!((d - 0.5).abs() < 1e-5);
        assert!(Pose::new(r, Vector3::zeros()).is_valid());
    }
}
