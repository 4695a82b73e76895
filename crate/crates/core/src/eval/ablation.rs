use std::fmt::Write as _;

use nalgebra::{Quaternion, UnitQuaternion, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{rot_z, rotation_distance, translation_distance, CameraModel, KeypointKind, KeypointTemplate, Pose};
use crate::pnp::{recover_grasp, PnpMethod};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub templates: Vec<KeypointKind>,
    pub methods: Vec<PnpMethod>,
    /// Pixel noise levels; one table per level.
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub depth: [f64; 2],
    pub canonical_distance: f64,
    /// Extra rotation of every sampled pose about the optical axis.
    pub camera_roll: f64,
    /// Taken from the run seed rather than from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            templates: KeypointKind::ALL.to_vec(),
            methods: PnpMethod::ALL.to_vec(),
            sigmas: vec![2.0],
            trials: 2000,
            depth: [0.5, 1.5],
            canonical_distance: crate::geometry::DEFAULT_CANONICAL_DISTANCE,
            camera_roll: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub template: KeypointKind,
    pub method: PnpMethod,
    pub sigma: f64,
    pub trials: usize,
    /// Trials where no pose came back; they count as infinite error in
    /// the medians and are left out of the means.
    pub failures: usize,
    pub mean_translation: f64,
    pub median_translation: f64,
    pub mean_rotation: f64,
    pub median_rotation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

/// One trial's pose and keypoint noise, shared by every cell.
struct Trial {
    pose: Pose,
    noise: [Vector2<f64>; 4],
}

fn trial_seed(master: u64, index: usize) -> u64 {
    master ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Uniform rotation, center uniform over the frustum volume between the
/// depth bounds, resampled until every template's keypoints are visible.
fn sample_trial(seed: u64, cfg: &AblationConfig, cam: &CameraModel, templates: &[KeypointTemplate]) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [z0, z1] = cfg.depth;
    let roll = rot_z(cfg.camera_roll);
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let q = Quaternion::new(q[0], q[1], q[2], q[3]);
        if q.norm() < 1e-9 {
            continue;
        }
        let rotation = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        let u: f64 = rng.random();
        let z = (z0.powi(3) + u * (z1.powi(3) - z0.powi(3))).cbrt();
        let pixel = Vector2::new(rng.random_range(0.0..cam.width as f64), rng.random_range(0.0..cam.height as f64));
        let pose = Pose::new(roll * rotation, roll * cam.unproject(&pixel, z));
        let visible = templates.iter().all(|t| {
            t.points.iter().all(|p| {
                let q = pose.apply(p);
                q.z > 1e-3 && cam.project(&q).map(|px| cam.contains(&px)).unwrap_or(false)
            })
        });
        if visible {
            // Noise turns with the roll so rolled trials stay paired.
            let spin = roll.fixed_view::<2, 2>(0, 0).into_owned();
            let noise = std::array::from_fn(|_| {
                spin * Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            return Trial { pose, noise };
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a.is_infinite() || b.is_infinite() {
            a.max(b)
        } else {
            0.5 * (a + b)
        }
    }
}

/// Pose-recovery error for every compatible (template, method) pair under
/// pixel noise. Every cell sees the same poses and noise draws.
pub fn ablate(cfg: &AblationConfig, cam: &CameraModel) -> AblationTable {
    let templates: Vec<KeypointTemplate> = cfg
        .templates
        .iter()
        .map(|&k| KeypointTemplate::new(k, cfg.canonical_distance).expect("positive canonical distance"))
        .collect();
    let trials: Vec<Trial> =
        (0..cfg.trials).into_par_iter().map(|i| sample_trial(trial_seed(cfg.seed, i), cfg, cam, &templates)).collect();
    let mut cells = Vec::new();
    for &sigma in &cfg.sigmas {
        for t in &templates {
            for &method in cfg.methods.iter().filter(|m| m.supports(t.kind)) {
                let errors: Vec<Option<(f64, f64)>> = trials
                    .par_iter()
                    .map(|trial| {
                        let pixels: [Vector2<f64>; 4] = std::array::from_fn(|k| {
                            cam.project(&trial.pose.apply(&t.points[k])).expect("visible keypoint") + trial.noise[k] * sigma
                        });
                        recover_grasp(&pixels, t, cam, method).ok().map(|s| {
                            (
                                translation_distance(&s.pose.translation, &trial.pose.translation),
                                rotation_distance(&s.pose.rotation, &trial.pose.rotation),
                            )
                        })
                    })
                    .collect();
                let ok: Vec<(f64, f64)> = errors.iter().flatten().copied().collect();
                let failures = errors.len() - ok.len();
                let inf = std::iter::repeat_n(f64::INFINITY, failures);
                let mean = |f: fn(&(f64, f64)) -> f64| {
                    if ok.is_empty() {
                        f64::NAN
                    } else {
                        ok.iter().map(f).sum::<f64>() / ok.len() as f64
                    }
                };
                cells.push(AblationCell {
                    template: t.kind,
                    method,
                    sigma,
                    trials: errors.len(),
                    failures,
                    mean_translation: mean(|e| e.0),
                    median_translation: median(ok.iter().map(|e| e.0).chain(inf.clone()).collect()),
                    mean_rotation: mean(|e| e.1),
                    median_rotation: median(ok.iter().map(|e| e.1).chain(inf).collect()),
                });
            }
        }
    }
    AblationTable { cells }
}

impl AblationTable {
    pub fn cell(&self, template: KeypointKind, method: PnpMethod, sigma: f64) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.template == template && c.method == method && c.sigma == sigma)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:>6} {:>8} {:>12} {:>12} {:>12} {:>12}",
            "template", "pnp", "sigma", "failed", "mean dT[m]", "med dT[m]", "mean dR[°]", "med dR[°]"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<12} {:<6} {:>6.2} {:>8} {:>12.5} {:>12.5} {:>12.3} {:>12.3}",
                c.template.name(),
                c.method.name(),
                c.sigma,
                c.failures,
                c.mean_translation,
                c.median_translation,
                c.mean_rotation.to_degrees(),
                c.median_rotation.to_degrees()
            );
        }
        s
    }
}
