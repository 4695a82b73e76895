use std::cmp::Ordering;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{CodecError, LabelMaps};
use crate::geometry::{image_orientation, CameraModel, KeypointTemplate, OrientationBinning, Pose};
use crate::pnp::{recover_grasp, PnpMethod};
use crate::scene::RenderedFrame;

/// How a translation is pulled onto the observed depth `D_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleRefine {
    /// `T · D_c / T_z`: the projective depth matches the depth image.
    Projective,
    /// `T · D_c / ‖T‖`: treats the depth value as a ray length.
    Norm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeConfig {
    pub threshold: f64,
    pub top_k: usize,
    pub method: PnpMethod,
    pub template: KeypointTemplate,
    pub scale_refine: Option<ScaleRefine>,
    /// Radians a recovered orientation may sit outside its channel's bin.
    pub orientation_slack: f64,
    /// Score penalty per pixel of reprojection error.
    pub rank_lambda: f64,
}

impl DecodeConfig {
    pub fn new(template: KeypointTemplate, method: PnpMethod) -> Self {
        Self {
            threshold: 0.3,
            top_k: 100,
            method,
            template,
            scale_refine: None,
            orientation_slack: 1e-6,
            rank_lambda: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CodecError::InvalidConfig("threshold must lie in (0, 1)"));
        }
        if self.top_k == 0 {
            return Err(CodecError::InvalidConfig("top_k must be at least 1"));
        }
        if !self.method.supports(self.template.kind) {
            return Err(CodecError::InvalidConfig("PnP method cannot handle this template"));
        }
        Ok(())
    }
}

/// Borrowed projective depth image, row-major, 0 where nothing was hit.
#[derive(Clone, Copy, Debug)]
pub struct DepthView<'a> {
    pub width: u32,
    pub height: u32,
    pub data: &'a [f64],
}

impl<'a> DepthView<'a> {
    /// Depth at the pixel nearest to `p`, `None` outside the image.
    pub fn at(&self, p: &Vector2<f64>) -> Option<f64> {
        let (x, y) = (p.x.round(), p.y.round());
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return None;
        }
        self.data.get(y as usize * self.width as usize + x as usize).copied()
    }
}

impl<'a> From<&'a RenderedFrame> for DepthView<'a> {
    fn from(f: &'a RenderedFrame) -> Self {
        Self { width: f.width, height: f.height, data: &f.depth }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspCandidate {
    pub pose: Pose,
    pub width: f64,
    pub confidence: f64,
    pub reprojection_error: f64,
    pub orientation_class: usize,
    pub score: f64,
    pub center: Vector2<f64>,
    pub keypoints: [Vector2<f64>; 4],
    /// True when the translation was snapped to the depth image.
    pub refined: bool,
}

/// Where candidates went during one decode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub peaks: usize,
    pub below_threshold: usize,
    pub pnp_failures: usize,
    pub orientation_rejects: usize,
    pub invalid_width: usize,
    pub no_depth: usize,
    pub accepted: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error("no depth at the grasp center")]
    NoDepth,
}

/// Moves the translation along its viewing ray so it agrees with the depth
/// image at the projected center.
pub fn scale_refine(pose: &Pose, cam: &CameraModel, depth: &DepthView, mode: ScaleRefine) -> Result<Pose, RefineError> {
    let t = pose.translation;
    let pixel = cam.project(&t).map_err(|_| RefineError::NoDepth)?;
    let d = depth.at(&pixel).filter(|d| *d > 0.0 && d.is_finite()).ok_or(RefineError::NoDepth)?;
    let scale = match mode {
        ScaleRefine::Projective => d / t.z,
        ScaleRefine::Norm => d / t.norm(),
    };
    Ok(Pose::new(pose.rotation, t * scale))
}

/// Peaks of every heatmap channel, best first, with ties broken by
/// `(channel, row, col)`.
pub(crate) fn peaks(maps: &LabelMaps) -> Vec<(f32, usize, usize, usize)> {
    let (bins, rows, cols) = maps.heatmap.dim();
    let mut out = Vec::new();
    for m in 0..bins {
        for r in 0..rows {
            for c in 0..cols {
                let v = maps.heatmap[[m, r, c]];
                let is_peak = (r.saturating_sub(1)..=(r + 1).min(rows - 1))
                    .all(|rr| (c.saturating_sub(1)..=(c + 1).min(cols - 1)).all(|cc| maps.heatmap[[m, rr, cc]] <= v));
                if is_peak {
                    out.push((v, m, r, c));
                }
            }
        }
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    out
}

/// Turns predicted maps into camera-frame grasps. Candidates that fail PnP
/// or land in the wrong orientation bin are dropped and counted.
pub fn decode(
    maps: &LabelMaps,
    cam: &CameraModel,
    cfg: &DecodeConfig,
    depth: Option<&DepthView>,
) -> Result<(Vec<GraspCandidate>, DecodeStats), CodecError> {
    maps.validate()?;
    cfg.validate()?;
    let (rows, cols) = maps.size();
    let s = maps.stride as f64;
    if cam.width as usize != cols * maps.stride as usize || cam.height as usize != rows * maps.stride as usize {
        return Err(CodecError::ShapeMismatch);
    }
    let binning = OrientationBinning::new(maps.bins()).map_err(|_| CodecError::ShapeMismatch)?;
    let all = peaks(maps);
    let mut stats = DecodeStats { peaks: all.len(), ..DecodeStats::default() };
    let mut out = Vec::new();
    for &(y, m, r, c) in all.iter().take(cfg.top_k) {
        let confidence = y as f64;
        if confidence < cfg.threshold {
            stats.below_threshold += 1;
            continue;
        }
        let center = Vector2::new(
            (c as f64 + maps.center_offset[[0, r, c]] as f64) * s,
            (r as f64 + maps.center_offset[[1, r, c]] as f64) * s,
        );
        let keypoints: [Vector2<f64>; 4] = std::array::from_fn(|k| {
            center
                + Vector2::new(
                    maps.keypoint_offsets[[8 * m + 2 * k, r, c]] as f64,
                    maps.keypoint_offsets[[8 * m + 2 * k + 1, r, c]] as f64,
                ) * s
        });
        let width = maps.width[[m, r, c]] as f64;
        if !(width > 0.0 && width.is_finite()) {
            stats.invalid_width += 1;
            continue;
        }
        let Ok(solution) = recover_grasp(&keypoints, &cfg.template, cam, cfg.method) else {
            stats.pnp_failures += 1;
            continue;
        };
        let consistent = match image_orientation(cam, &solution.pose, &binning) {
            Ok((angle, bin)) => bin == m || binning.distance_to_bin(angle, m) <= cfg.orientation_slack,
            Err(_) => false,
        };
        if !consistent {
            stats.orientation_rejects += 1;
            continue;
        }
        let mut pose = solution.pose;
        let mut refined = false;
        if let (Some(mode), Some(depth)) = (cfg.scale_refine, depth) {
            match scale_refine(&pose, cam, depth, mode) {
                Ok(p) => {
                    pose = p;
                    refined = true;
                }
                Err(RefineError::NoDepth) => stats.no_depth += 1,
            }
        }
        let re = solution.reprojection_error;
        out.push(GraspCandidate {
            pose,
            width,
            confidence,
            reprojection_error: re,
            orientation_class: m,
            score: confidence - cfg.rank_lambda * re,
            center,
            keypoints,
            refined,
        });
    }
    stats.accepted = out.len();
    Ok((out, stats))
}

/// Rescores with `Y − λ·RE` and sorts best first, keeping input order on
/// ties.
pub fn rank(candidates: &mut [GraspCandidate], lambda: f64) {
    for c in candidates.iter_mut() {
        c.score = c.confidence - lambda * c.reprojection_error;
    }
    candidates.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
}
