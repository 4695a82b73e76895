//! Primitive shapes, their parametric grasp families, samplers and the
//! gripper collision filter.

mod family;
mod gripper;
mod shape;

pub use family::{
    covering_counts, covering_sample, families_of, sample_grid, FamilyConfig, FamilyId, GraspAnnotation, GraspFamily,
    Domain, Interval, BAND_MAX_FRACTION, BAND_MIN_HEIGHT, RING_MAX_TILT, TOP_GRASP_DEPTH,
};
pub use gripper::{collision_filter, GripperModel, PENETRATION_TOLERANCE};
pub use shape::{SceneObject, Shape, ShapeKind, StablePose, MAX_STICK_RADIUS};
