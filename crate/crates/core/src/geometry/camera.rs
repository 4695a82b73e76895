use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::scalar::{real, tolerance, Real};

/// Pinhole intrinsics plus image size.
///
/// Pixel `(i, j)` is centred on the continuous coordinate `(i, j)`, so the
/// principal point `(cx, cy)` is the pixel hit by the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel<T: Real = f64> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraModel<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self, GeometryError> {
        let cam = Self { fx, fy, cx, cy, width, height };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let w = real::<T>(self.width as f64);
        let h = real::<T>(self.height as f64);
        let ok = self.fx > T::zero()
            && self.fy > T::zero()
            && self.cx > T::zero()
            && self.cx < w
            && self.cy > T::zero()
            && self.cy < h;
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidCamera)
        }
    }

    /// Projects a camera-frame point to pixels.
    pub fn project(&self, p: &Vector3<T>) -> Result<Vector2<T>, GeometryError> {
        if p.z <= tolerance::<T>(1e-9) {
            return Err(GeometryError::NonPositiveDepth);
        }
        Ok(Vector2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Back-projects a pixel at projective depth `z`.
    pub fn unproject(&self, pixel: &Vector2<T>, z: T) -> Vector3<T> {
        let n = self.normalize(pixel);
        Vector3::new(n.x * z, n.y * z, z)
    }

    /// Pixel to normalized image coordinates `((u − cx)/fx, (v − cy)/fy)`.
    pub fn normalize(&self, pixel: &Vector2<T>) -> Vector2<T> {
        Vector2::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy)
    }

    /// Image-space direction of the 3D direction `d` attached at point `p`
    /// (the derivative of the projection along `d`).
    pub fn project_direction(&self, p: &Vector3<T>, d: &Vector3<T>) -> Vector2<T> {
        let z2 = p.z * p.z;
        Vector2::new(
            self.fx * (d.x * p.z - p.x * d.z) / z2,
            self.fy * (d.y * p.z - p.y * d.z) / z2,
        )
    }

    /// `true` when the continuous coordinate lies in `[0, W) × [0, H)`.
    pub fn contains(&self, pixel: &Vector2<T>) -> bool {
        pixel.x >= T::zero()
            && pixel.y >= T::zero()
            && pixel.x < real::<T>(self.width as f64)
            && pixel.y < real::<T>(self.height as f64)
    }

    /// Intrinsics for an image downsampled by `factor` on both axes, keeping
    /// pixel centre `i` of the small image aligned with `factor·i` here.
    pub fn downsampled(&self, factor: u32) -> Self {
        let f = real::<T>(factor as f64);
        Self {
            fx: self.fx / f,
            fy: self.fy / f,
            cx: self.cx / f,
            cy: self.cy / f,
            width: self.width / factor,
            height: self.height / factor,
        }
    }

    pub fn cast<U: Real>(&self) -> CameraModel<U> {
        use crate::scalar::to_f64;
        CameraModel {
            fx: real(to_f64(self.fx)),
            fy: real(to_f64(self.fy)),
            cx: real(to_f64(self.cx)),
            cy: real(to_f64(self.cy)),
            width: self.width,
            height: self.height,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cam() -> CameraModel {
        CameraModel::new(100.0, 100.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn projection_examples() {
        let c = cam();
        assert_eq!(c.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap(), Vector2::new(320.0, 240.0));
        assert_eq!(c.project(&Vector3::new(1.0, 0.0, 2.0)).unwrap(), Vector2::new(370.0, 240.0));
        assert_eq!(
            c.project(&Vector3::new(0.0, 0.0, -1.0)),
            Err(GeometryError::NonPositiveDepth)
        );
        assert_eq!(c.project(&Vector3::new(0.0, 0.0, 0.0)), Err(GeometryError::NonPositiveDepth));
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraModel::new(0.0, 100.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraModel::new(100.0, 100.0, 640.0, 240.0, 640, 480).is_err());
        assert!(CameraModel::new(100.0, 100.0, 320.0, 0.0, 640, 480).is_err());
    }

    proptest! {
        #[test]
        fn project_unproject_consistency(u in 0.0f64..640.0, v in 0.0f64..480.0, z in 0.05f64..10.0) {
            let c = CameraModel::new(612.5, 598.0, 319.3, 243.1, 640, 480).unwrap();
            let px = Vector2::new(u, v);
            let back = c.project(&c.unproject(&px, z)).unwrap();
            prop_assert!((back - px).norm() <= 1e-9);
        }
    }

    #[test]
    fn direction_derivative_matches_finite_difference() {
        let c = cam();
        let p = Vector3::new(0.1, -0.05, 0.8);
        let d = Vector3::new(0.3, 0.5, -0.2);
        let h = 1e-7;
        let fd = (c.project(&(p + d * h)).unwrap() - c.project(&(p - d * h)).unwrap()) / (2.0 * h);
        assert_relative_eq!(c.project_direction(&p, &d), fd, epsilon = 1e-4);
    }
}
