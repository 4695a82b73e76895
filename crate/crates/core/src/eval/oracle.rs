use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codec::{encode, splat, CodecConfig, CodecError, EncodeReport, LabelMaps};
use crate::geometry::{CameraModel, KeypointTemplate, Pose};

/// Corruption applied to ground-truth maps in place of a trained detector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Keypoint noise in input pixels, per coordinate.
    pub sigma_px: f64,
    pub drop_probability: f64,
    /// Peak confidences are scaled by `1 − U[0, amplitude]`.
    pub confidence_noise: f64,
}

impl NoiseModel {
    pub fn keypoints(sigma_px: f64) -> Self {
        Self { sigma_px, ..Self::default() }
    }

    pub fn is_valid(&self) -> bool {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        self.sigma_px >= 0.0 && self.sigma_px.is_finite() && unit(self.drop_probability) && unit(self.confidence_noise)
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_px == 0.0 && self.drop_probability == 0.0 && self.confidence_noise == 0.0
    }
}

/// Encodes the ground truth and corrupts it. Dropped or dimmed peaks take
/// their whole Gaussian with them, so the heatmap is rebuilt from the
/// surviving peaks.
pub fn oracle_detect(
    grasps: &[(Pose, f64)],
    cam: &CameraModel,
    template: &KeypointTemplate,
    codec: &CodecConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(LabelMaps, EncodeReport), CodecError> {
    let (mut maps, report) = encode(grasps, cam, template, codec)?;
    if noise.is_zero() {
        return Ok((maps, report));
    }
    if !noise.is_valid() {
        return Err(CodecError::InvalidConfig("noise parameters out of range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.sigma_px / codec.stride as f64).expect("finite sigma");
    maps.heatmap.fill(0.0);
    for p in &report.peaks {
        for k in 8 * p.channel..8 * p.channel + 8 {
            maps.keypoint_offsets[[k, p.row, p.col]] += jitter.sample(&mut rng) as f32;
        }
        let dropped = rng.random::<f64>() < noise.drop_probability;
        let amplitude = 1.0 - noise.confidence_noise * rng.random::<f64>();
        if !dropped {
            splat(&mut maps.heatmap, p.channel, p.row, p.col, codec.sigma, amplitude);
        }
    }
    Ok((maps, report))
}
