//! Match metrics, a noisy stand-in detector and the PnP ablation.

mod ablation;
mod metrics;
mod oracle;
mod sweep;

pub use ablation::{ablate, AblationCell, AblationConfig, AblationTable};
pub use metrics::{
    compute_metrics, grasp_similar, FrameEval, LevelReport, MatchCounts, MatchThresholds, MetricsReport, ObjectTruth,
};
pub use oracle::{oracle_detect, NoiseModel};
pub use sweep::{noise_sweep, object_truth, SweepConfig, SweepError, SweepReport, SweepRow};
