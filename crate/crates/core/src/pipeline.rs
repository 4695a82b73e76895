//! The command implementations behind the CLI: each reads and writes files
//! and is a pure function of its config, seed and inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::codec::{decode, encode, rank, CodecError, DepthView};
use crate::eval::{
    ablate, compute_metrics, noise_sweep, object_truth, AblationTable, FrameEval, MatchThresholds, MetricsReport,
    SweepConfig, SweepError, SweepReport,
};
use crate::geometry::CameraModel;
use crate::io::kgnt::{read_maps, write_maps, MAP_FILES};
use crate::io::png::{draw_cross, read_color, read_depth, write_color, write_depth};
use crate::io::{
    read_json, write_atomic, write_json, DatasetManifest, FrameCounts, FrameEntry, GraspRecord, ImageConfig, IoError,
    RunConfig, SceneFile, Split,
};
use crate::scene::{generate_scene, render, sample_cameras, SceneError, SceneMode};

/// Placement failures are retried with a fresh sub-seed this many times.
pub const SCENE_RETRIES: u64 = 10;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("scene {scene}: {source}")]
    Scene { scene: String, source: SceneError },
    #[error("{path}: {source}")]
    Codec { path: PathBuf, source: CodecError },
    #[error("frames without a counterpart: missing {missing:?}, unexpected {unexpected:?}")]
    MissingFrame { missing: Vec<String>, unexpected: Vec<String> },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl PipelineError {
    /// 1 for usage errors, 2 for bad or missing data, 3 for bugs.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io(IoError::Config { .. }) => 1,
            PipelineError::Io(_) | PipelineError::Codec { .. } | PipelineError::MissingFrame { .. } => 2,
            PipelineError::Scene { .. } => 2,
            PipelineError::Invariant(_) => 3,
        }
    }
}

impl From<SweepError> for PipelineError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Scene(source) => PipelineError::Scene { scene: "sweep".into(), source },
            SweepError::Codec(source) => PipelineError::Codec { path: PathBuf::new(), source },
        }
    }
}

/// First eight bytes of `SHA-256(master ‖ label ‖ index)`, little endian.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenePlan {
    pub name: String,
    pub id: u64,
    pub mode: SceneMode,
    pub split: Split,
    pub density: [usize; 2],
}

/// Scene list with its split. The split is per scene, so all cameras of a
/// scene land on the same side.
pub fn plan_dataset(cfg: &RunConfig) -> Vec<ScenePlan> {
    let d = &cfg.dataset;
    let train = (d.single_scenes as f64 * d.train_fraction).round() as usize;
    let mut out = Vec::with_capacity(d.single_scenes + d.multi_scenes);
    for i in 0..d.single_scenes {
        let split = if i < train { Split::Train } else { Split::TestSingle };
        let density = if split == Split::Train { d.train_density } else { d.test_density };
        out.push(ScenePlan { name: format!("single_{i:05}"), id: i as u64, mode: SceneMode::SingleObject, split, density });
    }
    for i in 0..d.multi_scenes {
        out.push(ScenePlan {
            name: format!("multi_{i:05}"),
            id: (d.single_scenes + i) as u64,
            mode: SceneMode::MultiObject,
            split: Split::TestMulti,
            density: d.test_density,
        });
    }
    out
}

pub fn planned_counts(cfg: &RunConfig) -> FrameCounts {
    let mut c = FrameCounts::default();
    for s in plan_dataset(cfg) {
        for _ in 0..cfg.dataset.cameras_per_scene {
            c.bump(s.split);
        }
    }
    c
}

fn frame_id(scene: &str, camera: usize) -> String {
    format!("{scene}_c{camera}")
}

fn config_error(e: String) -> PipelineError {
    PipelineError::Config(e)
}

/// Generates, renders and labels one scene; returns its frame entries.
fn generate_one(cfg: &RunConfig, cam: &CameraModel, plan: &ScenePlan, out: &Path) -> Result<Vec<FrameEntry>, PipelineError> {
    let mut scene_cfg = cfg.scene;
    scene_cfg.density = plan.density;
    let mut last = None;
    let mut scene = None;
    for attempt in 0..SCENE_RETRIES {
        match generate_scene(plan.id, derive_seed(cfg.seed, &plan.name, attempt), plan.mode, &scene_cfg) {
            Ok(s) => {
                scene = Some(s);
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    let Some(scene) = scene else {
        return Err(PipelineError::Scene { scene: plan.name.clone(), source: last.expect("at least one attempt") });
    };
    let cameras = sample_cameras(derive_seed(cfg.seed, &format!("{}/cameras", plan.name), 0), cfg.dataset.cameras_per_scene, &cfg.cameras);
    let template = cfg.decode.template().map_err(config_error)?;
    let mut entries = Vec::with_capacity(cameras.len());
    for (j, camera) in cameras.iter().enumerate() {
        let id = frame_id(&plan.name, j);
        let dir = out.join("frames").join(&id);
        let frame = render(&scene, cam, camera, &cfg.render);
        write_color(&dir.join("color.png"), frame.width, frame.height, &frame.color)?;
        write_depth(&dir.join("depth.png"), frame.width, frame.height, &frame.depth)?;
        let grasps: Vec<_> = scene.camera_grasps(camera).into_iter().map(|(_, p, w)| (p, w)).collect();
        let (maps, report) = encode(&grasps, cam, &template, &cfg.codec)
            .map_err(|source| PipelineError::Codec { path: dir.clone(), source })?;
        write_maps(&dir, &maps)?;
        if report.total() != grasps.len() {
            return Err(PipelineError::Invariant(format!("{id}: encoder lost track of annotations")));
        }
        entries.push(FrameEntry {
            id,
            split: plan.split,
            scene: plan.name.clone(),
            camera: j,
            encoded: report.encoded.len(),
            annotations: grasps.len(),
            duplicates: report.duplicates.len(),
            off_image: report.off_image.len(),
            degenerate: report.degenerate.len(),
        });
    }
    let file = SceneFile { name: plan.name.clone(), split: plan.split, density: plan.density, intrinsics: *cam, cameras, scene };
    write_json(&out.join("scenes").join(&plan.name).join("scene.json"), &file)?;
    Ok(entries)
}

fn list_files(root: &Path) -> Result<Vec<String>, IoError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| IoError::io(&dir, e))? {
            let path = entry.map_err(|e| IoError::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Writes the whole dataset under `out` and returns its manifest. With
/// `dry_run` nothing is written and the manifest describes the plan.
pub fn cmd_generate(cfg: &RunConfig, out: &Path, dry_run: bool) -> Result<DatasetManifest, PipelineError> {
    cfg.validate().map_err(config_error)?;
    let cam = cfg.camera().map_err(config_error)?;
    let plan = plan_dataset(cfg);
    let mut manifest = DatasetManifest {
        format_version: 1,
        master_seed: cfg.seed,
        config_hash: cfg.hash(),
        dataset: cfg.dataset,
        image: cfg.image,
        counts: planned_counts(cfg),
        frames: Vec::new(),
        files: Vec::new(),
    };
    if dry_run {
        manifest.frames = plan
            .iter()
            .flat_map(|p| {
                (0..cfg.dataset.cameras_per_scene).map(move |j| FrameEntry {
                    id: frame_id(&p.name, j),
                    split: p.split,
                    scene: p.name.clone(),
                    camera: j,
                    encoded: 0,
                    annotations: 0,
                    duplicates: 0,
                    off_image: 0,
                    degenerate: 0,
                })
            })
            .collect();
        return Ok(manifest);
    }
    std::fs::create_dir_all(out).map_err(|e| IoError::io(out, e))?;
    write_atomic(&out.join("config.toml"), cfg.to_toml().as_bytes())?;
    let per_scene: Vec<Vec<FrameEntry>> =
        plan.par_iter().map(|p| generate_one(cfg, &cam, p, out)).collect::<Result<_, _>>()?;
    let mut counts = FrameCounts::default();
    for e in per_scene.iter().flatten() {
        counts.bump(e.split);
    }
    if counts != manifest.counts {
        return Err(PipelineError::Invariant(format!("planned {:?} frames, wrote {:?}", manifest.counts, counts)));
    }
    manifest.frames = per_scene.into_iter().flatten().collect();
    manifest.files = list_files(out)?.into_iter().filter(|f| f != DatasetManifest::FILE).collect();
    write_json(&out.join(DatasetManifest::FILE), &manifest)?;
    Ok(manifest)
}

/// Frame directories below `input`: the directory itself when it holds
/// maps, otherwise every child of `input/frames`.
fn frame_dirs(input: &Path) -> Result<Vec<(String, PathBuf)>, IoError> {
    if input.join(MAP_FILES[0]).is_file() {
        let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "frame".into());
        return Ok(vec![(name, input.to_path_buf())]);
    }
    let root = input.join("frames");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&root).map_err(|e| IoError::io(&root, e))? {
        let path = entry.map_err(|e| IoError::io(&root, e))?.path();
        if path.join(MAP_FILES[0]).is_file() {
            out.push((path.file_name().expect("entry name").to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

fn dataset_image(input: &Path, cfg: &RunConfig) -> Result<ImageConfig, IoError> {
    for dir in [input, input.parent().and_then(Path::parent).unwrap_or(input)] {
        let p = dir.join(DatasetManifest::FILE);
        if p.is_file() {
            return Ok(read_json::<DatasetManifest>(&p)?.image);
        }
    }
    Ok(cfg.image)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DecodeSummary {
    pub frames: usize,
    pub candidates: usize,
    pub pnp_failures: usize,
    pub orientation_rejects: usize,
}

/// Decodes every frame's maps into ranked grasps at
/// `out/frames/<id>/grasps.json`, with optional overlays.
pub fn cmd_decode(cfg: &RunConfig, input: &Path, out: &Path, overlay: bool) -> Result<DecodeSummary, PipelineError> {
    let decode_cfg = cfg.decode.decode_config().map_err(config_error)?;
    let image = dataset_image(input, cfg)?;
    let cam = image.camera().map_err(config_error)?;
    let frames = frame_dirs(input)?;
    let results: Vec<_> = frames
        .par_iter()
        .map(|(id, dir)| -> Result<_, PipelineError> {
            let maps = read_maps(dir, (cam.width, cam.height))?;
            let depth_path = dir.join("depth.png");
            let depth = match (decode_cfg.scale_refine, depth_path.is_file()) {
                (Some(_), true) => Some(read_depth(&depth_path)?),
                _ => None,
            };
            let view = depth.as_ref().map(|(w, h, d)| DepthView { width: *w, height: *h, data: d });
            let (mut cands, stats) = decode(&maps, &cam, &decode_cfg, view.as_ref())
                .map_err(|source| PipelineError::Codec { path: dir.clone(), source })?;
            rank(&mut cands, decode_cfg.rank_lambda);
            let target = out.join("frames").join(id);
            let records: Vec<GraspRecord> = cands.iter().map(GraspRecord::from).collect();
            write_json(&target.join("grasps.json"), &records)?;
            if overlay {
                let color = dir.join("color.png");
                let mut img = if color.is_file() {
                    read_color(&color)?
                } else {
                    image::RgbImage::from_pixel(cam.width, cam.height, image::Rgb([128, 128, 128]))
                };
                for c in &cands {
                    for k in &c.keypoints {
                        draw_cross(&mut img, k.x, k.y, 2, [255, 40, 40]);
                    }
                    draw_cross(&mut img, c.center.x, c.center.y, 4, [40, 255, 40]);
                }
                write_color(&target.join("overlay.png"), img.width(), img.height(), img.as_raw())?;
            }
            Ok((cands.len(), stats))
        })
        .collect::<Result<_, _>>()?;
    let mut summary = DecodeSummary { frames: results.len(), ..DecodeSummary::default() };
    for (n, s) in results {
        summary.candidates += n;
        summary.pnp_failures += s.pnp_failures;
        summary.orientation_rejects += s.orientation_rejects;
    }
    Ok(summary)
}

fn selected_levels(cfg: &RunConfig) -> Vec<MatchThresholds> {
    match cfg.threshold_level.and_then(MatchThresholds::level) {
        Some(l) => vec![l],
        None => MatchThresholds::levels().to_vec(),
    }
}

/// Scores `predictions/frames/<id>/grasps.json` against the dataset ground
/// truth and writes `metrics.json` and `metrics.txt` to `out`.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    predictions: &Path,
    dataset: &Path,
    split: Option<Split>,
    out: &Path,
) -> Result<MetricsReport, PipelineError> {
    let manifest: DatasetManifest = read_json(&dataset.join(DatasetManifest::FILE))?;
    let selected: Vec<&FrameEntry> = manifest.frames.iter().filter(|f| split.is_none_or(|s| f.split == s)).collect();
    let known: BTreeSet<&str> = manifest.frames.iter().map(|f| f.id.as_str()).collect();
    let pred_root = predictions.join("frames");
    let mut found = BTreeSet::new();
    if pred_root.is_dir() {
        for entry in std::fs::read_dir(&pred_root).map_err(|e| IoError::io(&pred_root, e))? {
            let path = entry.map_err(|e| IoError::io(&pred_root, e))?.path();
            if path.join("grasps.json").is_file() {
                found.insert(path.file_name().expect("entry name").to_string_lossy().into_owned());
            }
        }
    }
    let missing: Vec<String> = selected.iter().filter(|f| !found.contains(&f.id)).map(|f| f.id.clone()).collect();
    let unexpected: Vec<String> = found.iter().filter(|id| !known.contains(id.as_str())).cloned().collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(PipelineError::MissingFrame { missing, unexpected });
    }
    let scene_names: BTreeSet<&str> = selected.iter().map(|f| f.scene.as_str()).collect();
    let scenes: HashMap<&str, SceneFile> = scene_names
        .par_iter()
        .map(|name| Ok((*name, read_json::<SceneFile>(&dataset.join("scenes").join(name).join("scene.json"))?)))
        .collect::<Result<_, IoError>>()?;
    let frames: Vec<FrameEval> = selected
        .par_iter()
        .map(|f| {
            let file = &scenes[f.scene.as_str()];
            let camera = file
                .cameras
                .get(f.camera)
                .ok_or_else(|| PipelineError::Invariant(format!("{}: camera {} missing", f.id, f.camera)))?;
            let records: Vec<GraspRecord> = read_json(&pred_root.join(&f.id).join("grasps.json"))?;
            Ok(FrameEval {
                id: f.id.clone(),
                predictions: records.iter().map(|r| r.pose).collect(),
                objects: object_truth(&file.scene, camera),
            })
        })
        .collect::<Result<_, PipelineError>>()?;
    let report = compute_metrics(&frames, &selected_levels(cfg));
    write_json(&out.join("metrics.json"), &report)?;
    write_atomic(&out.join("metrics.txt"), report.to_table().as_bytes())?;
    Ok(report)
}

/// Writes every frame's full camera-frame ground truth as predictions, for
/// checking the evaluator against itself.
pub fn cmd_export_truth(dataset: &Path, out: &Path) -> Result<usize, PipelineError> {
    let manifest: DatasetManifest = read_json(&dataset.join(DatasetManifest::FILE))?;
    let mut by_scene: BTreeMap<&str, Vec<&FrameEntry>> = BTreeMap::new();
    for f in &manifest.frames {
        by_scene.entry(f.scene.as_str()).or_default().push(f);
    }
    for (name, frames) in by_scene {
        let file: SceneFile = read_json(&dataset.join("scenes").join(name).join("scene.json"))?;
        for f in frames {
            let records: Vec<GraspRecord> = file
                .scene
                .camera_grasps(&file.cameras[f.camera])
                .into_iter()
                .map(|(_, pose, width)| GraspRecord {
                    pose,
                    width,
                    score: 1.0,
                    confidence: 1.0,
                    reprojection_error: 0.0,
                    orientation_class: 0,
                })
                .collect();
            write_json(&out.join("frames").join(&f.id).join("grasps.json"), &records)?;
        }
    }
    Ok(manifest.frames.len())
}

pub fn cmd_ablate(cfg: &RunConfig, out: &Path) -> Result<AblationTable, PipelineError> {
    cfg.validate().map_err(config_error)?;
    let cam = cfg.camera().map_err(config_error)?;
    let mut acfg = cfg.ablation.clone();
    acfg.seed = derive_seed(cfg.seed, "ablation", 0);
    let table = ablate(&acfg, &cam);
    write_json(&out.join("ablation.json"), &table)?;
    write_atomic(&out.join("ablation.txt"), table.to_table().as_bytes())?;
    Ok(table)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepReport, PipelineError> {
    cfg.validate().map_err(config_error)?;
    let cam = cfg.camera().map_err(config_error)?;
    let mut scene = cfg.scene;
    scene.density = cfg.dataset.test_density;
    let scfg = SweepConfig {
        scenes: cfg.sweep_scenes,
        cameras_per_scene: 1,
        sigmas: cfg.sweep_sigmas.clone(),
        seed: derive_seed(cfg.seed, "sweep", 0),
        scene,
        cameras: cfg.cameras,
        codec: cfg.codec,
    };
    let report = noise_sweep(&scfg, &cam, &cfg.decode.decode_config().map_err(config_error)?)?;
    write_json(&out.join("sweep.json"), &report)?;
    write_atomic(&out.join("sweep.txt"), report.to_table().as_bytes())?;
    Ok(report)
}

/// Re-renders one camera of a stored scene into `color.png` and
/// `depth.png`.
pub fn cmd_render(cfg: &RunConfig, scene_file: &Path, camera: usize, out: &Path) -> Result<(u32, u32), PipelineError> {
    let file: SceneFile = read_json(scene_file)?;
    let cam_pose = file
        .cameras
        .get(camera)
        .ok_or_else(|| PipelineError::Config(format!("camera {camera} out of range (scene has {})", file.cameras.len())))?;
    let frame = render(&file.scene, &file.intrinsics, cam_pose, &cfg.render);
    write_color(&out.join("color.png"), frame.width, frame.height, &frame.color)?;
    write_depth(&out.join("depth.png"), frame.width, frame.height, &frame.depth)?;
    Ok((frame.width, frame.height))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protocol_counts() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn default_plan_matches_dataset_protocol() {
        let c = planned_counts(&protocol_counts());
        assert_eq!((c.train, c.test_single, c.test_multi), (4000, 1000, 1000));
        let plan = plan_dataset(&protocol_counts());
        let names: BTreeSet<_> = plan.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names.len(), plan.len());
    }

    #[test]
    fn small_plan_arithmetic() {
        let mut cfg = RunConfig::default();
        cfg.dataset.single_scenes = 10;
        cfg.dataset.multi_scenes = 0;
        let c = planned_counts(&cfg);
        assert_eq!((c.train, c.test_single, c.test_multi), (40, 10, 0));
    }

    #[test]
    fn seeds_depend_on_every_input() {
        let a = derive_seed(1, "single_00000", 0);
        assert_eq!(a, derive_seed(1, "single_00000", 0));
        assert_ne!(a, derive_seed(2, "single_00000", 0));
        assert_ne!(a, derive_seed(1, "single_00001", 0));
        assert_ne!(a, derive_seed(1, "single_00000", 1));
    }
}
