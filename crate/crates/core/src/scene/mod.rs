//! Tabletop scenes: placement, camera sampling, ray casting and rendering.

mod generate;
mod raycast;
mod render;

pub use generate::{all_grasps, generate_scene, Scene, SceneConfig, SceneError, SceneMode, SizeRanges};
pub use raycast::{ray_intersect, Hit};
pub use render::{render, sample_cameras, CameraConfig, CameraSample, RenderConfig, RenderedFrame, Surface};
