//! Poses, pinhole projection, keypoint templates and orientation classes.

mod camera;
mod orientation;
mod pose;
mod template;

pub use camera::CameraModel;
pub use orientation::{canonical_flip, image_orientation, wrap_half_turn, OrientationBinning};
pub use pose::{
    from_axes, pose_apply, project_to_rotation, rot_axis, rot_x, rot_y, rot_z, rotation_distance,
    rotation_distance_acos, translation_distance, Pose,
};
pub use template::{
    fit_plane, plane_fit_residual, KeypointKind, KeypointTemplate, DEFAULT_CANONICAL_DISTANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("point has non-positive depth")]
    NonPositiveDepth,
    #[error("projected direction is degenerate (axis parallel to the viewing ray)")]
    DegenerateProjection,
    #[error("matrix is not a proper rotation")]
    InvalidRotation,
    #[error("invalid camera intrinsics")]
    InvalidCamera,
    #[error("keypoint distance must be positive")]
    NonPositiveDistance,
    #[error("orientation binning needs at least one class")]
    InvalidBinning,
}
