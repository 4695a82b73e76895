use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, oracle_detect, FrameEval, MatchThresholds, NoiseModel, ObjectTruth};
use crate::codec::{decode, CodecConfig, CodecError, DecodeConfig};
use crate::geometry::CameraModel;
use crate::scene::{generate_scene, sample_cameras, CameraConfig, CameraSample, Scene, SceneConfig, SceneError, SceneMode};

/// Camera-frame ground truth of a scene, grouped by object.
pub fn object_truth(scene: &Scene, camera: &CameraSample) -> Vec<ObjectTruth> {
    let mut objects: Vec<ObjectTruth> =
        scene.objects.iter().map(|o| ObjectTruth { kind: o.shape.kind(), grasps: Vec::new() }).collect();
    for (i, pose, _) in scene.camera_grasps(camera) {
        objects[i].grasps.push(pose);
    }
    objects
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub scenes: usize,
    pub cameras_per_scene: usize,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    pub scene: SceneConfig,
    pub cameras: CameraConfig,
    pub codec: CodecConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenes: 100,
            cameras_per_scene: 1,
            sigmas: vec![0.0, 0.5, 1.0, 2.0],
            seed: 0,
            scene: SceneConfig::default(),
            cameras: CameraConfig::default(),
            codec: CodecConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    /// `(GSR, GCR, OSR)` per threshold level, strictest first.
    pub rates: Vec<[f64; 3]>,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub frames: usize,
    pub encodable_fraction: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn frame_seed(master: u64, scene: usize, camera: usize) -> u64 {
    let k = (scene as u64) << 16 | camera as u64;
    master.wrapping_add(k.wrapping_mul(0xD1B5_4A32_D192_ED03)).rotate_left(17)
}

/// Single-object frames through the noisy stand-in detector at each noise
/// level. Frames and noise draws are shared across levels.
pub fn noise_sweep(cfg: &SweepConfig, cam: &CameraModel, decode_cfg: &DecodeConfig) -> Result<SweepReport, SweepError> {
    let template = decode_cfg.template;
    let frames: Vec<(Scene, CameraSample, u64)> = (0..cfg.scenes)
        .into_par_iter()
        .map(|i| {
            let seed = frame_seed(cfg.seed, i, 0xFFFF);
            let scene = generate_scene(i as u64, seed, SceneMode::SingleObject, &cfg.scene)?;
            let cams = sample_cameras(seed ^ 0xA5A5, cfg.cameras_per_scene, &cfg.cameras);
            Ok(cams.into_iter().enumerate().map(|(j, c)| (scene.clone(), c, frame_seed(cfg.seed, i, j))).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, SceneError>>()?
        .into_iter()
        .flatten()
        .collect();
    let levels = MatchThresholds::levels();
    let mut rows = Vec::new();
    let mut encodable = (0, 0);
    for (n, &sigma) in cfg.sigmas.iter().enumerate() {
        let noise = NoiseModel::keypoints(sigma);
        let evals: Vec<(FrameEval, usize, usize)> = frames
            .par_iter()
            .map(|(scene, camera, seed)| {
                let grasps: Vec<_> = scene.camera_grasps(camera).into_iter().map(|(_, p, w)| (p, w)).collect();
                let (maps, report) = oracle_detect(&grasps, cam, &template, &cfg.codec, &noise, *seed)?;
                let (cands, _) = decode(&maps, cam, decode_cfg, None)?;
                let eval = FrameEval {
                    id: format!("{}_{}", scene.id, seed),
                    predictions: cands.iter().map(|c| c.pose).collect(),
                    objects: object_truth(scene, camera),
                };
                Ok((eval, report.encoded.len(), report.total()))
            })
            .collect::<Result<_, CodecError>>()?;
        if n == 0 {
            encodable = evals.iter().fold((0, 0), |a, e| (a.0 + e.1, a.1 + e.2));
        }
        let candidates = evals.iter().map(|e| e.0.predictions.len()).sum();
        let frames: Vec<FrameEval> = evals.into_iter().map(|e| e.0).collect();
        let report = compute_metrics(&frames, &levels);
        rows.push(SweepRow { sigma, rates: report.levels.iter().map(|l| [l.gsr, l.gcr, l.osr]).collect(), candidates });
    }
    let encodable_fraction = if encodable.1 == 0 { 0.0 } else { encodable.0 as f64 / encodable.1 as f64 };
    Ok(SweepReport { frames: frames.len(), encodable_fraction, rows })
}

impl SweepReport {
    /// Each of GSR, GCR and OSR at the strictest level never rises as the
    /// noise grows.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| (0..3).all(|k| w[1].rates[0][k] <= w[0].rates[0][k]))
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let levels = MatchThresholds::levels();
        let _ = write!(s, "{:>8}", "sigma");
        for l in &levels {
            let _ = write!(s, " {:>26}", l.label());
        }
        let _ = writeln!(s);
        for r in &self.rows {
            let _ = write!(s, "{:>8.2}", r.sigma);
            for x in &r.rates {
                let _ = write!(s, " {:>26}", format!("{:.1} / {:.1} / {:.1}", x[0], x[1], x[2]));
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{KeypointKind, KeypointTemplate};
    use crate::pnp::PnpMethod;

    #[test]
    fn small_sweep_degrades_with_noise() {
        let cam = CameraModel::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        let cfg = SweepConfig { scenes: 12, sigmas: vec![0.0, 2.0], ..SweepConfig::default() };
        let dc = DecodeConfig::new(KeypointTemplate::new(KeypointKind::Box, 0.06).unwrap(), PnpMethod::Ippe);
        let r = noise_sweep(&cfg, &cam, &dc).unwrap();
        assert_eq!(r.frames, 12);
        assert_eq!(r.rows[0].rates[0][0], 100.0);
        assert!(r.rows[1].rates[0][0] < 100.0);
        assert_eq!(r, noise_sweep(&cfg, &cam, &dc).unwrap());
    }
}
