//! File formats for every pipeline stage.
//!
//! All binary formats are little-endian. Volumes are stored x-fastest.

mod labels;
mod off;
mod tables;
mod volume;

pub use labels::{read_label_table, LabelTable, LabelTableEntry, Laterality};
pub use off::{format_off, parse_off, read_mesh, write_mesh};
pub use tables::{
    read_stats_csv, read_vertex_map, write_stats_csv, write_vertex_map, CsvTable, StatsRow,
};
pub use volume::{
    encode_fslv, read_volume, read_volume_bytes, write_volume, DType, Volume, VolumeHeader, VoxelData,
    FSLV_MAGIC, FSLV_VERSION,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("bad magic at byte offset {offset}")]
    BadMagic { offset: usize },
    #[error("unsupported dtype code {code} at byte offset {offset}")]
    UnsupportedDtype { code: i64, offset: usize },
    #[error("file truncated at byte offset {offset} (needed {needed} bytes)")]
    TruncatedFile { offset: usize, needed: usize },
    #[error("invalid header field at byte offset {offset}: {reason}")]
    InvalidHeader { offset: usize, reason: String },
    #[error("negative value {value} at byte offset {offset} cannot be stored as U16")]
    NegativeValue { offset: usize, value: i64 },
    #[error("voxel count {actual} does not match dims product {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("malformed OFF at line {line}: {reason}")]
    MalformedOff { line: usize, reason: String },
    #[error("duplicate internal id {0} in label table")]
    DuplicateId(u16),
    #[error("duplicate FreeSurfer code {0} in label table")]
    DuplicateFsCode(u32),
    #[error("bad laterality {value:?} at line {line}")]
    BadLaterality { line: usize, value: String },
    #[error("malformed table at line {line}: {reason}")]
    MalformedTable { line: usize, reason: String },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::IoFailure { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;
