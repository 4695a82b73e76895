use serde::{Deserialize, Serialize};

use super::{CodecError, LabelMaps, Peak};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Branch weights for heatmap, center offset, keypoint offsets, width.
    pub weights: [f64; 4],
    /// Predicted heatmap values are clamped to `[eps, 1 − eps]`.
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { alpha: 2.0, beta: 4.0, weights: [1.0, 1.0, 1.0, 10.0], eps: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub heatmap: f64,
    pub offset: f64,
    pub keypoints: f64,
    pub width: f64,
    pub total: f64,
}

/// Penalty-reduced focal loss on the heatmap plus L1 regressions read at
/// the ground-truth centers.
///
/// The focal sum is divided by the number of centers (by 1 when there are
/// none). Each L1 term is a plain mean over the entries it reads: two per
/// center for the offset, eight for the keypoints, one for the width.
pub fn loss(pred: &LabelMaps, truth: &LabelMaps, centers: &[Peak], cfg: &LossConfig) -> Result<LossBreakdown, CodecError> {
    pred.validate()?;
    truth.validate()?;
    if pred.heatmap.dim() != truth.heatmap.dim() {
        return Err(CodecError::ShapeMismatch);
    }
    let (bins, rows, cols) = truth.heatmap.dim();
    if centers.iter().any(|p| p.channel >= bins || p.row >= rows || p.col >= cols) {
        return Err(CodecError::ShapeMismatch);
    }
    let mut focal = 0.0;
    for (&p, &y) in pred.heatmap.iter().zip(truth.heatmap.iter()) {
        let p = (p as f64).clamp(cfg.eps, 1.0 - cfg.eps);
        let y = y as f64;
        focal += if y == 1.0 {
            (1.0 - p).powf(cfg.alpha) * p.ln()
        } else {
            (1.0 - y).powf(cfg.beta) * p.powf(cfg.alpha) * (1.0 - p).ln()
        };
    }
    let heatmap = -focal / centers.len().max(1) as f64;
    let (mut offset, mut keypoints, mut width) = (0.0, 0.0, 0.0);
    let diff = |a: f32, b: f32| (a as f64 - b as f64).abs();
    for &Peak { channel: m, row: r, col: c } in centers {
        for k in 0..2 {
            offset += diff(pred.center_offset[[k, r, c]], truth.center_offset[[k, r, c]]);
        }
        for k in 8 * m..8 * m + 8 {
            keypoints += diff(pred.keypoint_offsets[[k, r, c]], truth.keypoint_offsets[[k, r, c]]);
        }
        width += diff(pred.width[[m, r, c]], truth.width[[m, r, c]]);
    }
    let n = centers.len();
    let mean = |sum: f64, per: usize| if n == 0 { 0.0 } else { sum / (per * n) as f64 };
    let (offset, keypoints, width) = (mean(offset, 2), mean(keypoints, 8), mean(width, 1));
    let w = cfg.weights;
    let total = w[0] * heatmap + w[1] * offset + w[2] * keypoints + w[3] * width;
    Ok(LossBreakdown { heatmap, offset, keypoints, width, total })
}
