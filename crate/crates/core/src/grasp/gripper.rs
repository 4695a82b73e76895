use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::family::GraspAnnotation;
use super::shape::{box_surface, SceneObject};
use crate::geometry::Pose;

/// Penetration depth that counts as a collision.
pub const PENETRATION_TOLERANCE: f64 = 1e-6;

/// Two finger boxes and a palm box in the gripper frame. Fingers run from
/// the fingertips at `x = 0` back to `x = -finger_length`; the palm sits
/// behind them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperModel {
    pub finger_length: f64,
    pub finger_thickness: f64,
    pub finger_height: f64,
    pub palm_depth: f64,
    pub palm_width: f64,
    pub palm_height: f64,
    /// Surface sample spacing; 2 mm is one point per 4 mm².
    pub sample_spacing: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        Self {
            finger_length: 0.04,
            finger_thickness: 0.01,
            finger_height: 0.02,
            palm_depth: 0.02,
            palm_width: 0.10,
            palm_height: 0.04,
            sample_spacing: 0.002,
        }
    }
}

impl GripperModel {
    /// Surface sample points in the gripper frame for open width `width`.
    pub fn sample_points(&self, width: f64) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        let finger = Vector3::new(self.finger_length, self.finger_thickness, self.finger_height) / 2.0;
        for side in [-1.0, 1.0] {
            let center = Vector3::new(-finger.x, side * (width / 2.0 + finger.y), 0.0);
            let start = out.len();
            box_surface(&mut out, &finger, self.sample_spacing);
            out[start..].iter_mut().for_each(|p| *p += center);
        }
        let palm = Vector3::new(self.palm_depth, self.palm_width, self.palm_height) / 2.0;
        let center = Vector3::new(-self.finger_length - palm.x, 0.0, 0.0);
        let start = out.len();
        box_surface(&mut out, &palm, self.sample_spacing);
        out[start..].iter_mut().for_each(|p| *p += center);
        out
    }

    /// The slab swept by the closing fingers, where contact with the
    /// grasped object is expected.
    pub fn in_closure(&self, p: &Vector3<f64>, width: f64) -> bool {
        let tol = PENETRATION_TOLERANCE;
        p.x <= tol
            && p.x >= -self.finger_length - tol
            && p.z.abs() <= self.finger_height / 2.0 + tol
            && p.y.abs() <= width / 2.0 + self.finger_thickness + tol
    }

    /// Radius of a ball about the gripper origin containing every sample.
    pub fn bounding_radius(&self, width: f64) -> f64 {
        let x = self.finger_length + self.palm_depth;
        let y = (width / 2.0 + self.finger_thickness).max(self.palm_width / 2.0);
        let z = self.finger_height.max(self.palm_height) / 2.0;
        (x * x + y * y + z * z).sqrt()
    }
}

/// Keeps the grasps on `objects[target]` whose gripper clears the table
/// half-space `z < table_z` and every object, ignoring contact between the
/// fingers and the target itself.
pub fn collision_filter(
    annotations: &[GraspAnnotation],
    target: usize,
    objects: &[SceneObject],
    gripper: &GripperModel,
    table_z: f64,
) -> Vec<GraspAnnotation> {
    let inverses: Vec<Pose> = objects.iter().map(|o| o.pose.inverse()).collect();
    let mut cache: Vec<(u64, Vec<Vector3<f64>>)> = Vec::new();
    annotations
        .iter()
        .filter(|a| {
            let key = a.width.to_bits();
            let idx = match cache.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    cache.push((key, gripper.sample_points(a.width)));
                    cache.len() - 1
                }
            };
            let points = &cache[idx].1;
            let world = objects[target].pose.compose(&a.pose);
            let reach = gripper.bounding_radius(a.width);
            let near: Vec<usize> = (0..objects.len())
                .filter(|&i| {
                    (objects[i].pose.translation - world.translation).norm()
                        <= reach + objects[i].shape.bounding_radius() + PENETRATION_TOLERANCE
                })
                .collect();
            let clear = world.translation.z - reach >= table_z;
            points.iter().all(|p| {
                let w = world.apply(p);
                if !clear && w.z < table_z - PENETRATION_TOLERANCE {
                    return false;
                }
                near.iter().all(|&i| {
                    if i == target && gripper.in_closure(p, a.width) {
                        return true;
                    }
                    let local = inverses[i].apply(&w);
                    objects[i].shape.signed_distance(&local) >= -PENETRATION_TOLERANCE
                })
            })
        })
        .copied()
        .collect()
}
