use nalgebra::{Matrix3, Vector3};

use crate::geometry::Pose;
use crate::scalar::{real, Real};

/// Least-squares rigid transform taking `src[i]` onto `dst[i]` (no scale).
/// `None` when the cross-covariance has no usable decomposition.
pub fn kabsch<T: Real>(src: &[Vector3<T>], dst: &[Vector3<T>]) -> Option<Pose<T>> {
    debug_assert_eq!(src.len(), dst.len());
    let n = real::<T>(src.len() as f64);
    let cs = src.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let cd = dst.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d - cd) * (s - cs).transpose();
    }
    let svd = h.try_svd(true, true, T::default_epsilon(), 0)?;
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < T::zero() {
        d[(2, 2)] = -T::one();
    }
    let r = u * d * v_t;
    Some(Pose::new(r, cd - r * cs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_axis, rotation_distance};

    #[test]
    fn recovers_rigid_motion_of_planar_set() {
        let src = [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 0.06),
            Vector3::new(-0.06, 0.0, 0.0),
            Vector3::new(-0.06, 0.0, 0.06),
        ];
        let truth = Pose::new(rot_axis(&Vector3::new(0.2, -0.9, 0.4).normalize(), 2.2), Vector3::new(0.1, 0.2, 0.7));
        let dst = truth.apply_all(&src);
        let est = kabsch(&src, &dst).unwrap();
        assert!(rotation_distance(&est.rotation, &truth.rotation) < 1e-12);
        assert!((est.translation - truth.translation).norm() < 1e-12);
    }
}
