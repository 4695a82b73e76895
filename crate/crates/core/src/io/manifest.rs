use serde::{Deserialize, Serialize};

use super::{DatasetConfig, ImageConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    TestSingle,
    TestMulti,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestSingle => "test_single",
            Split::TestMulti => "test_multi",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test_single" => Ok(Split::TestSingle),
            "test_multi" => Ok(Split::TestMulti),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub train: usize,
    pub test_single: usize,
    pub test_multi: usize,
}

impl FrameCounts {
    pub fn total(&self) -> usize {
        self.train + self.test_single + self.test_multi
    }

    pub fn bump(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::TestSingle => self.test_single += 1,
            Split::TestMulti => self.test_multi += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub id: String,
    pub split: Split,
    pub scene: String,
    pub camera: usize,
    /// Annotations written into the label maps, and the total offered.
    pub encoded: usize,
    pub annotations: usize,
    pub duplicates: usize,
    pub off_image: usize,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub master_seed: u64,
    pub config_hash: String,
    pub dataset: DatasetConfig,
    pub image: ImageConfig,
    pub counts: FrameCounts,
    pub frames: Vec<FrameEntry>,
    /// Every file under the dataset root except the manifest, sorted.
    pub files: Vec<String>,
}

impl DatasetManifest {
    pub const FILE: &'static str = "manifest.json";
}
