//! Files on disk: tensors, images, JSON records, run config and manifest.

mod config;
pub mod kgnt;
mod manifest;
pub mod png;
mod records;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{DatasetConfig, DecodeSettings, ImageConfig, RunConfig};
pub use manifest::{DatasetManifest, FrameEntry, FrameCounts, Split};
pub use records::{GraspRecord, SceneFile};

/// Where and why a byte stream failed to parse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormatError {
    pub offset: u64,
    pub reason: String,
}

impl FormatError {
    pub fn new(offset: u64, reason: impl Into<String>) -> Self {
        Self { offset, reason: reason.into() }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.offset, self.reason)
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed data {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// Writes through a sibling temp file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| IoError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| IoError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| IoError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| {
        // Line and column are all serde_json reports; turn them into an offset.
        let offset = byte_offset(&bytes, e.line(), e.column());
        IoError::Format { path: path.to_path_buf(), source: FormatError::new(offset, e.to_string()) }
    })
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> u64 {
    let mut current = 1;
    for (i, &b) in bytes.iter().enumerate() {
        if current == line {
            return (i + column.saturating_sub(1)) as u64;
        }
        if b == b'\n' {
            current += 1;
        }
    }
    bytes.len() as u64
}
