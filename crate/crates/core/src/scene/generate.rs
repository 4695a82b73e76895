use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CameraSample;
use crate::geometry::Pose;
use crate::grasp::{
    collision_filter, families_of, sample_grid, FamilyConfig, GraspAnnotation, GripperModel, SceneObject, Shape,
    ShapeKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneMode {
    SingleObject,
    MultiObject,
}

/// Uniform size ranges in meters, `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizeRanges {
    pub cylinder_radius: [f64; 2],
    pub cylinder_height: [f64; 2],
    pub stick_radius: [f64; 2],
    pub stick_length: [f64; 2],
    pub sphere_radius: [f64; 2],
    pub semi_sphere_radius: [f64; 2],
    pub cuboid_half_extent: [f64; 2],
    pub ring_major: [f64; 2],
    pub ring_minor: [f64; 2],
}

impl Default for SizeRanges {
    fn default() -> Self {
        // Upper bounds keep at least one family within the 8.5 cm span.
        Self {
            cylinder_radius: [0.025, 0.04],
            cylinder_height: [0.08, 0.16],
            stick_radius: [0.004, 0.008],
            stick_length: [0.10, 0.20],
            sphere_radius: [0.02, 0.04],
            semi_sphere_radius: [0.025, 0.04],
            cuboid_half_extent: [0.015, 0.04],
            ring_major: [0.03, 0.05],
            ring_minor: [0.006, 0.012],
        }
    }
}

impl SizeRanges {
    pub fn sample<R: Rng>(&self, kind: ShapeKind, rng: &mut R) -> Shape {
        let mut u = |r: [f64; 2]| if r[1] > r[0] { rng.random_range(r[0]..=r[1]) } else { r[0] };
        match kind {
            ShapeKind::Cylinder => Shape::Cylinder { radius: u(self.cylinder_radius), height: u(self.cylinder_height) },
            ShapeKind::Ring => Shape::Ring { major: u(self.ring_major), minor: u(self.ring_minor) },
            ShapeKind::Stick => Shape::Stick { radius: u(self.stick_radius), length: u(self.stick_length) },
            ShapeKind::Sphere => Shape::Sphere { radius: u(self.sphere_radius) },
            ShapeKind::SemiSphere => Shape::SemiSphere { radius: u(self.semi_sphere_radius) },
            ShapeKind::Cuboid => {
                let e = self.cuboid_half_extent;
                Shape::Cuboid { half_extents: [u(e), u(e), u(e)] }
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("cylinder_radius", self.cylinder_radius),
            ("cylinder_height", self.cylinder_height),
            ("stick_radius", self.stick_radius),
            ("stick_length", self.stick_length),
            ("sphere_radius", self.sphere_radius),
            ("semi_sphere_radius", self.semi_sphere_radius),
            ("cuboid_half_extent", self.cuboid_half_extent),
            ("ring_major", self.ring_major),
            ("ring_minor", self.ring_minor),
        ];
        for (name, [lo, hi]) in all {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(format!("size range {name} must satisfy 0 < lo ≤ hi"));
            }
        }
        if self.ring_minor[1] >= self.ring_major[0] {
            return Err("ring_minor must stay below ring_major".into());
        }
        if self.stick_radius[1] > crate::grasp::MAX_STICK_RADIUS {
            return Err("stick_radius exceeds the thin-stick limit".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub sizes: SizeRanges,
    pub families: FamilyConfig,
    pub gripper: GripperModel,
    /// Radius of the disk object centers are drawn from in multi-object
    /// scenes; single objects sit within `single_jitter` of the center.
    pub workspace_radius: f64,
    pub single_jitter: f64,
    pub placement_attempts: usize,
    /// Grid densities `(n_u, n_v)` for annotations. Set per split by the
    /// dataset settings, so it is not read from config files.
    #[serde(skip)]
    pub density: [usize; 2],
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            sizes: SizeRanges::default(),
            families: FamilyConfig::default(),
            gripper: GripperModel::default(),
            workspace_radius: 0.2,
            single_jitter: 0.05,
            placement_attempts: 200,
            density: [5, 11],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub id: u64,
    pub seed: u64,
    pub mode: SceneMode,
    pub table_z: f64,
    pub objects: Vec<SceneObject>,
    /// Object-frame grasps per object, after collision filtering.
    pub annotations: Vec<Vec<GraspAnnotation>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SceneError {
    #[error("could not place a {kind} after {attempts} attempts")]
    PlacementFailure { kind: ShapeKind, attempts: usize },
}

/// Every grasp of every family of `shape`, in (family, u, v) order.
pub fn all_grasps(shape: &Shape, cfg: &SceneConfig) -> Vec<GraspAnnotation> {
    families_of(shape, &cfg.families)
        .iter()
        .flat_map(|f| sample_grid(f, cfg.density[0], cfg.density[1]))
        .collect()
}

/// A reproducible tabletop scene. Objects are placed one at a time; a
/// placement is rejected if its bounding ball overlaps an earlier object's
/// or if any object would be left with no collision-free grasp.
pub fn generate_scene(id: u64, seed: u64, mode: SceneMode, cfg: &SceneConfig) -> Result<Scene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<ShapeKind> = match mode {
        SceneMode::SingleObject => vec![ShapeKind::ALL[rng.random_range(0..ShapeKind::ALL.len())]],
        SceneMode::MultiObject => ShapeKind::ALL.to_vec(),
    };
    let mut objects: Vec<SceneObject> = Vec::new();
    let mut grids: Vec<Vec<GraspAnnotation>> = Vec::new();
    let mut kept: Vec<Vec<GraspAnnotation>> = Vec::new();
    for kind in kinds {
        let mut placed = false;
        for _ in 0..cfg.placement_attempts {
            let shape = cfg.sizes.sample(kind, &mut rng);
            let color = [0; 3].map(|_| rng.random_range(0.1..=0.9));
            let stable = shape.stable_poses();
            let rest = stable[rng.random_range(0..stable.len())];
            let yaw = rng.random_range(0.0..TAU);
            let reach = match mode {
                SceneMode::SingleObject => cfg.single_jitter,
                SceneMode::MultiObject => cfg.workspace_radius,
            };
            let (x, y) = loop {
                let (x, y) = (rng.random_range(-reach..=reach), rng.random_range(-reach..=reach));
                if x * x + y * y <= reach * reach {
                    break (x, y);
                }
            };
            let candidate = SceneObject { shape, color, pose: rest.placed(yaw, x, y) };
            let overlaps = objects.iter().any(|o| {
                (o.pose.translation - candidate.pose.translation).norm()
                    < o.shape.bounding_radius() + shape.bounding_radius()
            });
            if overlaps {
                continue;
            }
            let mut trial = objects.clone();
            trial.push(candidate);
            let grid = all_grasps(&shape, cfg);
            let own = collision_filter(&grid, trial.len() - 1, &trial, &cfg.gripper, 0.0);
            if own.is_empty() {
                continue;
            }
            // Earlier objects only lose grasps near the newcomer.
            let reach = cfg.gripper.bounding_radius(cfg.families.max_width) + shape.bounding_radius();
            let mut refiltered = Vec::with_capacity(kept.len());
            let mut starved = false;
            for (i, prev) in kept.iter().enumerate() {
                let near = (objects[i].pose.translation - candidate.pose.translation).norm()
                    <= reach + objects[i].shape.bounding_radius();
                let next = if near { collision_filter(prev, i, &trial, &cfg.gripper, 0.0) } else { prev.clone() };
                starved |= next.is_empty();
                refiltered.push(next);
            }
            if starved {
                continue;
            }
            objects = trial;
            grids.push(grid);
            refiltered.push(own);
            kept = refiltered;
            placed = true;
            break;
        }
        if !placed {
            return Err(SceneError::PlacementFailure { kind, attempts: cfg.placement_attempts });
        }
    }
    Ok(Scene { id, seed, mode, table_z: 0.0, objects, annotations: kept })
}

impl Scene {
    pub fn world_grasps(&self) -> impl Iterator<Item = (usize, GraspAnnotation)> + '_ {
        self.annotations.iter().enumerate().flat_map(move |(i, set)| {
            set.iter().map(move |a| (i, GraspAnnotation { pose: self.objects[i].pose.compose(&a.pose), ..*a }))
        })
    }

    /// `(object index, camera-frame pose, width)` for every annotation, in
    /// storage order.
    pub fn camera_grasps(&self, camera: &CameraSample) -> Vec<(usize, Pose, f64)> {
        self.world_grasps().map(|(i, a)| (i, camera.pose.compose(&a.pose), a.width)).collect()
    }

    pub fn num_grasps(&self) -> usize {
        self.annotations.iter().map(Vec::len).sum()
    }

    /// Signed distance to the nearest object, `+∞` for an empty scene.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.objects.iter().map(|o| o.world_signed_distance(p)).fold(f64::INFINITY, f64::min)
    }
}
