use serde::{Deserialize, Serialize};

use super::Split;
use crate::codec::GraspCandidate;
use crate::geometry::{CameraModel, Pose};
use crate::scene::{CameraSample, Scene};

/// Everything needed to re-render a scene and rebuild its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub name: String,
    pub split: Split,
    /// Annotation grid `(n_u, n_v)` used for this scene.
    pub density: [usize; 2],
    pub intrinsics: CameraModel,
    /// World-to-camera extrinsics, one per frame.
    pub cameras: Vec<CameraSample>,
    pub scene: Scene,
}

/// One decoded grasp in the camera frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspRecord {
    pub pose: Pose,
    pub width: f64,
    pub score: f64,
    pub confidence: f64,
    pub reprojection_error: f64,
    pub orientation_class: usize,
}

impl From<&GraspCandidate> for GraspRecord {
    fn from(c: &GraspCandidate) -> Self {
        Self {
            pose: c.pose,
            width: c.width,
            score: c.score,
            confidence: c.confidence,
            reprojection_error: c.reprojection_error,
            orientation_class: c.orientation_class,
        }
    }
}
