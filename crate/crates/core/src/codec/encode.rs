use std::collections::HashSet;

use nalgebra::Vector2;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::{CodecError, LabelMaps};
use crate::geometry::{canonical_flip, image_orientation, CameraModel, KeypointTemplate, OrientationBinning, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    pub bins: usize,
    pub stride: u32,
    /// Gaussian splat width in output-stride pixels.
    pub sigma: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self { bins: 9, stride: 4, sigma: 2.0 }
    }
}

impl CodecConfig {
    pub fn binning(&self) -> Result<OrientationBinning, CodecError> {
        OrientationBinning::new(self.bins).map_err(|_| CodecError::InvalidConfig("bins must be at least 1"))
    }
}

/// A ground-truth peak: orientation channel and map cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Peak {
    pub channel: usize,
    pub row: usize,
    pub col: usize,
}

/// What happened to each input grasp, by input index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EncodeReport {
    pub encoded: Vec<usize>,
    /// Dropped because an earlier grasp claimed the same cell and bin.
    pub duplicates: Vec<usize>,
    pub off_image: Vec<usize>,
    /// Gripper z axis along the viewing ray, so no orientation bin exists.
    pub degenerate: Vec<usize>,
    pub peaks: Vec<Peak>,
}

impl EncodeReport {
    pub fn total(&self) -> usize {
        self.encoded.len() + self.duplicates.len() + self.off_image.len() + self.degenerate.len()
    }

    /// Share of the inputs that made it into the maps.
    pub fn encodable_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.encoded.len() as f64 / n as f64,
        }
    }
}

/// Writes camera-frame grasps `(pose, width)` into label maps. Earlier
/// grasps win ties for a `(cell, bin)` pair.
///
/// Keypoint offsets are measured from the center the decoder will read
/// back, `(cell + offset) · stride`, so reconstruction is exact even when
/// two grasps of different bins share a cell.
pub fn encode(
    grasps: &[(Pose, f64)],
    cam: &CameraModel,
    template: &KeypointTemplate,
    cfg: &CodecConfig,
) -> Result<(LabelMaps, EncodeReport), CodecError> {
    let binning = cfg.binning()?;
    let s = cfg.stride;
    if s == 0 || cam.width % s != 0 || cam.height % s != 0 {
        return Err(CodecError::InvalidConfig("stride must divide the image size"));
    }
    let (rows, cols) = ((cam.height / s) as usize, (cam.width / s) as usize);
    let mut maps = LabelMaps::zeros(binning.bins(), rows, cols, s);
    let mut report = EncodeReport::default();
    let mut taken = HashSet::new();
    let mut cells = HashSet::new();
    let sf = s as f64;
    for (index, (pose, width)) in grasps.iter().enumerate() {
        let Ok(center) = cam.project(&pose.translation) else {
            report.off_image.push(index);
            continue;
        };
        if !cam.contains(&center) {
            report.off_image.push(index);
            continue;
        }
        let pose = canonical_flip(cam, pose);
        let Ok((_, channel)) = image_orientation(cam, &pose, &binning) else {
            report.degenerate.push(index);
            continue;
        };
        let keypoints: Option<Vec<Vector2<f64>>> =
            template.points.iter().map(|p| cam.project(&pose.apply(p)).ok()).collect();
        let Some(keypoints) = keypoints else {
            report.degenerate.push(index);
            continue;
        };
        let scaled = center / sf;
        let (col, row) = (scaled.x.floor() as usize, scaled.y.floor() as usize);
        let (col, row) = (col.min(cols - 1), row.min(rows - 1));
        if !taken.insert((channel, row, col)) {
            report.duplicates.push(index);
            continue;
        }
        splat(&mut maps.heatmap, channel, row, col, cfg.sigma, 1.0);
        // The offset map is shared by all bins, so the first grasp in a cell
        // sets it and later ones measure their keypoints from that center.
        if cells.insert((row, col)) {
            maps.center_offset[[0, row, col]] = (scaled.x - col as f64) as f32;
            maps.center_offset[[1, row, col]] = (scaled.y - row as f64) as f32;
        }
        let stored = Vector2::new(
            (col as f64 + maps.center_offset[[0, row, col]] as f64) * sf,
            (row as f64 + maps.center_offset[[1, row, col]] as f64) * sf,
        );
        for (k, kp) in keypoints.iter().enumerate() {
            let d = (kp - stored) / sf;
            maps.keypoint_offsets[[8 * channel + 2 * k, row, col]] = d.x as f32;
            maps.keypoint_offsets[[8 * channel + 2 * k + 1, row, col]] = d.y as f32;
        }
        maps.width[[channel, row, col]] = *width as f32;
        report.encoded.push(index);
        report.peaks.push(Peak { channel, row, col });
    }
    Ok((maps, report))
}

/// Max-combines a Gaussian of height `amplitude` into one heatmap channel.
pub(crate) fn splat(heatmap: &mut Array3<f32>, channel: usize, row: usize, col: usize, sigma: f64, amplitude: f64) {
    let (_, rows, cols) = heatmap.dim();
    let reach = (3.0 * sigma).ceil() as isize;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (y, x) = (row as isize + dy, col as isize + dx);
            if y < 0 || x < 0 || y >= rows as isize || x >= cols as isize {
                continue;
            }
            let v = (amplitude * (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()) as f32;
            let cell = &mut heatmap[[channel, y as usize, x as usize]];
            if v > *cell {
                *cell = v;
            }
        }
    }
}
