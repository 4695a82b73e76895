//! Dense label maps: encoding annotations, decoding predictions, losses.

mod decode;
mod encode;
mod loss;
mod maps;

pub use decode::{decode, rank, scale_refine, DecodeConfig, DecodeStats, DepthView, GraspCandidate, RefineError, ScaleRefine};
pub use encode::{encode, CodecConfig, EncodeReport, Peak};
pub use loss::{loss, LossBreakdown, LossConfig};
pub use maps::LabelMaps;

pub(crate) use encode::splat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("label map shapes are inconsistent")]
    ShapeMismatch,
    #[error("invalid codec configuration: {0}")]
    InvalidConfig(&'static str),
}
