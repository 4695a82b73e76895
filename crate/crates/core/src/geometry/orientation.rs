use serde::{Deserialize, Serialize};

use super::{CameraModel, GeometryError, Pose};
use crate::scalar::{real, tolerance, Real};

/// Equal-width partition of `[−π/2, π/2)` into `M` orientation classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationBinning {
    bins: usize,
}

impl Default for OrientationBinning {
    fn default() -> Self {
        Self { bins: 9 }
    }
}

impl OrientationBinning {
    pub fn new(bins: usize) -> Result<Self, GeometryError> {
        if bins == 0 {
            return Err(GeometryError::InvalidBinning);
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Class of an angle already wrapped into `[−π/2, π/2)`.
    pub fn bin_of<T: Real>(&self, angle: T) -> usize {
        let m = real::<T>(self.bins as f64);
        let idx = ((angle + T::FRAC_PI_2()) * m / T::PI()).floor();
        let idx = crate::scalar::to_f64(idx);
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.bins - 1)
        }
    }

    /// `[lo, hi)` edges of class `m`.
    pub fn bin_range<T: Real>(&self, m: usize) -> (T, T) {
        let width = T::PI() / real::<T>(self.bins as f64);
        let lo = -T::FRAC_PI_2() + width * real::<T>(m as f64);
        (lo, lo + width)
    }

    /// Angular gap between `angle` and class `m`, measured modulo π
    /// (zero when the angle falls inside the class).
    pub fn distance_to_bin<T: Real>(&self, angle: T, m: usize) -> T {
        let (lo, hi) = self.bin_range::<T>(m);
        if angle >= lo && angle < hi {
            return T::zero();
        }
        let pi = T::PI();
        let gap = |a: T, b: T| {
            let d = (a - b).abs() % pi;
            if d > pi - d {
                pi - d
            } else {
                d
            }
        };
        let a = gap(angle, lo);
        let b = gap(angle, hi);
        if a < b {
            a
        } else {
            b
        }
    }
}

/// Wraps an angle by multiples of π into `[−π/2, π/2)`.
pub fn wrap_half_turn<T: Real>(angle: T) -> T {
    let pi = T::PI();
    let half = T::FRAC_PI_2();
    let mut a = angle;
    while a >= half {
        a -= pi;
    }
    while a < -half {
        a += pi;
    }
    a
}

/// Orientation of the projected gripper z axis at the projected grasp
/// centre, and its class.
pub fn image_orientation<T: Real>(
    cam: &CameraModel<T>,
    pose: &Pose<T>,
    binning: &OrientationBinning,
) -> Result<(T, usize), GeometryError> {
    let origin = pose.translation;
    if origin.z <= tolerance::<T>(1e-9) {
        return Err(GeometryError::NonPositiveDepth);
    }
    let dir = cam.project_direction(&origin, &pose.axis(2));
    if dir.norm() < tolerance::<T>(1e-9) {
        return Err(GeometryError::DegenerateProjection);
    }
    let angle = wrap_half_turn(dir.y.atan2(dir.x));
    Ok((angle, binning.bin_of(angle)))
}

/// Rotates the grasp by π about its approach axis when its projected y axis
/// points to the right, so that y always points left (or straight up/down).
pub fn canonical_flip<T: Real>(cam: &CameraModel<T>, pose: &Pose<T>) -> Pose<T> {
    let origin = pose.translation;
    if origin.z <= tolerance::<T>(1e-9) {
        return *pose;
    }
    let y_dir = cam.project_direction(&origin, &pose.axis(1));
    if y_dir.x > T::zero() {
        pose.flipped_about_x()
    } else {
        *pose
    }
}
