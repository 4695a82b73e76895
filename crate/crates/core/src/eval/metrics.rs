use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{rot_x, rotation_distance, translation_distance, Pose};
use crate::grasp::ShapeKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    /// Meters.
    pub translation: f64,
    /// Radians.
    pub rotation: f64,
}

impl MatchThresholds {
    pub fn new(translation: f64, rotation_deg: f64) -> Self {
        Self { translation, rotation: rotation_deg.to_radians() }
    }

    /// The three standard levels, strictest first.
    pub fn levels() -> [MatchThresholds; 3] {
        [Self::new(0.01, 20.0), Self::new(0.02, 30.0), Self::new(0.03, 45.0)]
    }

    /// Level by 1-based index, as used on the command line.
    pub fn level(index: usize) -> Option<MatchThresholds> {
        index.checked_sub(1).and_then(|i| Self::levels().get(i).copied())
    }

    pub fn is_valid(&self) -> bool {
        self.translation > 0.0 && self.rotation > 0.0
    }

    pub fn label(&self) -> String {
        format!("({:.0}cm, {:.0}°)", self.translation * 100.0, self.rotation.to_degrees())
    }
}

/// Pose match within thresholds, treating a half turn about the approach
/// axis as the same grasp. Width is not compared.
pub fn grasp_similar(pred: &Pose, truth: &Pose, th: &MatchThresholds) -> bool {
    if translation_distance(&pred.translation, &truth.translation) > th.translation {
        return false;
    }
    let flipped = truth.rotation * rot_x(std::f64::consts::PI);
    rotation_distance(&pred.rotation, &truth.rotation).min(rotation_distance(&pred.rotation, &flipped)) <= th.rotation
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectTruth {
    pub kind: ShapeKind,
    pub grasps: Vec<Pose>,
}

/// One frame: predicted poses and the per-object ground truth, all in the
/// same frame of reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameEval {
    pub id: String,
    pub predictions: Vec<Pose>,
    pub objects: Vec<ObjectTruth>,
}

/// Raw counts behind the three rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub predictions: usize,
    pub successful_predictions: usize,
    pub ground_truth: usize,
    pub covered_ground_truth: usize,
    pub objects: usize,
    pub successful_objects: usize,
}

impl MatchCounts {
    fn add(&mut self, o: &MatchCounts) {
        self.predictions += o.predictions;
        self.successful_predictions += o.successful_predictions;
        self.ground_truth += o.ground_truth;
        self.covered_ground_truth += o.covered_ground_truth;
        self.objects += o.objects;
        self.successful_objects += o.successful_objects;
    }

    fn pct(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    }

    pub fn gsr(&self) -> f64 {
        Self::pct(self.successful_predictions, self.predictions)
    }

    pub fn gcr(&self) -> f64 {
        Self::pct(self.covered_ground_truth, self.ground_truth)
    }

    pub fn osr(&self) -> f64 {
        Self::pct(self.successful_objects, self.objects)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub thresholds: MatchThresholds,
    pub gsr: f64,
    pub gcr: f64,
    pub osr: f64,
    pub counts: MatchCounts,
    /// Per shape kind. Predictions are not attributed to kinds, so only
    /// the coverage and object counts are filled in.
    pub per_shape: BTreeMap<ShapeKind, MatchCounts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub levels: Vec<LevelReport>,
    pub frames: usize,
    /// Frames with an object that owns no ground-truth grasp.
    pub skipped_frames: Vec<String>,
}

/// Counts for one frame at one level, plus per-kind coverage.
fn frame_counts(frame: &FrameEval, th: &MatchThresholds) -> (MatchCounts, BTreeMap<ShapeKind, MatchCounts>) {
    let mut counts = MatchCounts { predictions: frame.predictions.len(), ..MatchCounts::default() };
    let mut per_shape: BTreeMap<ShapeKind, MatchCounts> = BTreeMap::new();
    let mut pred_ok = vec![false; frame.predictions.len()];
    for obj in &frame.objects {
        let kind = per_shape.entry(obj.kind).or_default();
        let mut object_hit = false;
        for truth in &obj.grasps {
            let mut covered = false;
            for (i, pred) in frame.predictions.iter().enumerate() {
                if grasp_similar(pred, truth, th) {
                    covered = true;
                    pred_ok[i] = true;
                }
            }
            object_hit |= covered;
            kind.ground_truth += 1;
            kind.covered_ground_truth += covered as usize;
        }
        kind.objects += 1;
        kind.successful_objects += object_hit as usize;
    }
    for k in per_shape.values() {
        counts.ground_truth += k.ground_truth;
        counts.covered_ground_truth += k.covered_ground_truth;
        counts.objects += k.objects;
        counts.successful_objects += k.successful_objects;
    }
    counts.successful_predictions = pred_ok.iter().filter(|&&b| b).count();
    (counts, per_shape)
}

/// Pools raw match counts over frames at each threshold level.
pub fn compute_metrics(frames: &[FrameEval], levels: &[MatchThresholds]) -> MetricsReport {
    let (valid, skipped): (Vec<&FrameEval>, Vec<&FrameEval>) =
        frames.iter().partition(|f| f.objects.iter().all(|o| !o.grasps.is_empty()));
    let levels = levels
        .iter()
        .map(|th| {
            let per_frame: Vec<_> = valid.par_iter().map(|f| frame_counts(f, th)).collect();
            let mut counts = MatchCounts::default();
            let mut per_shape: BTreeMap<ShapeKind, MatchCounts> = BTreeMap::new();
            for (c, shapes) in &per_frame {
                counts.add(c);
                for (k, v) in shapes {
                    per_shape.entry(*k).or_default().add(v);
                }
            }
            LevelReport { thresholds: *th, gsr: counts.gsr(), gcr: counts.gcr(), osr: counts.osr(), counts, per_shape }
        })
        .collect();
    MetricsReport { levels, frames: valid.len(), skipped_frames: skipped.iter().map(|f| f.id.clone()).collect() }
}

impl MetricsReport {
    /// Aligned text table, one row per level, `GSR% / GCR% / OSR%`.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>24}", "threshold", "GSR% / GCR% / OSR%");
        for l in &self.levels {
            let _ = writeln!(s, "{:<14} {:>24}", l.thresholds.label(), format!("{:.1} / {:.1} / {:.1}", l.gsr, l.gcr, l.osr));
        }
        for l in &self.levels {
            let _ = writeln!(s, "\nper shape at {}", l.thresholds.label());
            let _ = writeln!(s, "{:<12} {:>8} {:>8}", "shape", "GCR%", "OSR%");
            for (k, c) in &l.per_shape {
                let _ = writeln!(s, "{:<12} {:>8.1} {:>8.1}", k.name(), c.gcr(), c.osr());
            }
        }
        s
    }
}
