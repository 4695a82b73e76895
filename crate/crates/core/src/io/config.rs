use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::codec::{CodecConfig, DecodeConfig, ScaleRefine};
use crate::eval::{AblationConfig, NoiseModel};
use crate::geometry::{CameraModel, KeypointKind, KeypointTemplate, DEFAULT_CANONICAL_DISTANCE};
use crate::pnp::PnpMethod;
use crate::scene::{CameraConfig, RenderConfig, SceneConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub single_scenes: usize,
    pub multi_scenes: usize,
    pub cameras_per_scene: usize,
    /// Share of single-object scenes used for training; the rest and all
    /// multi-object scenes are test data.
    pub train_fraction: f64,
    pub train_density: [usize; 2],
    pub test_density: [usize; 2],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            single_scenes: 1000,
            multi_scenes: 200,
            cameras_per_scene: 5,
            train_fraction: 0.8,
            train_density: [5, 11],
            test_density: [10, 30],
        }
    }
}

/// Image size and horizontal field of view; the principal point is the
/// image center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageConfig {
    pub width: u32,
    pub height: u32,
    /// Focal lengths in pixels; the principal point is the image center.
    pub fx: f64,
    pub fy: f64,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self { width: 640, height: 480, fx: 600.0, fy: 600.0 }
    }
}

impl ImageConfig {
    pub fn camera(&self) -> Result<CameraModel, String> {
        CameraModel::new(self.fx, self.fy, self.width as f64 / 2.0, self.height as f64 / 2.0, self.width, self.height)
            .map_err(|e| format!("image: {e}"))
    }

    /// Same field of view at a new resolution.
    pub fn resized(&self, width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            fx: self.fx * width as f64 / self.width as f64,
            fy: self.fy * height as f64 / self.height as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSettings {
    pub template: KeypointKind,
    pub canonical_distance: f64,
    pub method: PnpMethod,
    pub threshold: f64,
    pub top_k: usize,
    pub scale_refine: Option<ScaleRefine>,
    pub orientation_slack: f64,
    pub rank_lambda: f64,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        Self {
            template: KeypointKind::Box,
            canonical_distance: DEFAULT_CANONICAL_DISTANCE,
            method: PnpMethod::Ippe,
            threshold: 0.3,
            top_k: 100,
            scale_refine: None,
            orientation_slack: 1e-6,
            rank_lambda: 0.1,
        }
    }
}

impl DecodeSettings {
    pub fn template(&self) -> Result<KeypointTemplate, String> {
        KeypointTemplate::new(self.template, self.canonical_distance).map_err(|e| format!("decode: {e}"))
    }

    pub fn decode_config(&self) -> Result<DecodeConfig, String> {
        let cfg = DecodeConfig {
            threshold: self.threshold,
            top_k: self.top_k,
            method: self.method,
            template: self.template()?,
            scale_refine: self.scale_refine,
            orientation_slack: self.orientation_slack,
            rank_lambda: self.rank_lambda,
        };
        cfg.validate().map_err(|e| format!("decode: {e}"))?;
        Ok(cfg)
    }
}

/// Every tunable of a run in one document. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub image: ImageConfig,
    pub scene: SceneConfig,
    pub cameras: CameraConfig,
    pub render: RenderConfig,
    pub codec: CodecConfig,
    pub decode: DecodeSettings,
    /// 1-based index into the standard threshold levels; `None` means all.
    pub threshold_level: Option<usize>,
    pub noise: NoiseModel,
    pub ablation: AblationConfig,
    pub sweep_sigmas: Vec<f64>,
    pub sweep_scenes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dataset: DatasetConfig::default(),
            image: ImageConfig::default(),
            scene: SceneConfig::default(),
            cameras: CameraConfig::default(),
            render: RenderConfig::default(),
            codec: CodecConfig::default(),
            decode: DecodeSettings::default(),
            threshold_level: None,
            noise: NoiseModel::default(),
            ablation: AblationConfig::default(),
            sweep_sigmas: vec![0.0, 0.5, 1.0, 2.0],
            sweep_scenes: 100,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|message| IoError::Config { path: path.to_path_buf(), message })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is TOML-representable")
    }

    pub fn camera(&self) -> Result<CameraModel, String> {
        self.image.camera()
    }

    pub fn validate(&self) -> Result<(), String> {
        let d = &self.dataset;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err("dataset.train_fraction must lie in (0, 1)".into());
        }
        if d.train_density.contains(&0) || d.test_density.contains(&0) {
            return Err("dataset densities must be at least 1".into());
        }
        let cam = self.camera()?;
        let s = self.codec.stride;
        if s == 0 || cam.width % s != 0 || cam.height % s != 0 {
            return Err("codec.stride must divide the image size".into());
        }
        if self.codec.bins == 0 || !(self.codec.sigma > 0.0) {
            return Err("codec.bins and codec.sigma must be positive".into());
        }
        self.decode.decode_config()?;
        self.scene.sizes.validate()?;
        if let Some(level) = self.threshold_level {
            if !(1..=3).contains(&level) {
                return Err("threshold_level must be 1, 2 or 3".into());
            }
        }
        if !self.noise.is_valid() {
            return Err("noise parameters out of range".into());
        }
        if self.sweep_sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err("sweep_sigmas must be nonnegative".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
