//! Keypoint-based 6-DoF grasp pipeline: primitive-shape scenes with
//! analytic grasp families, dense label maps, PnP pose recovery and match
//! metrics.
//!
//! Geometry and pose recovery are generic over [`scalar::Real`]; everything
//! downstream works in `f64`.

pub mod codec;
pub mod eval;
pub mod geometry;
pub mod grasp;
pub mod io;
pub mod pipeline;
pub mod pnp;
pub mod poly;
pub mod scalar;
pub mod scene;

pub use scalar::Real;

pub type Pose64 = geometry::Pose<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type Camera64 = geometry::CameraModel<f64>;
pub type Camera32 = geometry::CameraModel<f32>;
pub type Template64 = geometry::KeypointTemplate<f64>;
pub type Template32 = geometry::KeypointTemplate<f32>;
