//! Measurements on surfaces: label transfer, thickness, curvature,
//! smoothing and per-region statistics.

mod curvature;
mod regions;
mod sampling;
mod smoothing;
mod thickness;

pub use curvature::mean_curvature;
pub use regions::{area_weighted_mean, roi_stats, surface_dice, RoiStats};
pub use sampling::{sample_labels_to_surface, SamplingOptions};
pub use smoothing::{smooth_scalar, smoothing_iterations, SmoothSpec};
pub use thickness::thickness;

use crate::surfgen::SurfError;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("vertex {vertex} lies more than 5 voxels outside the volume")]
    OutOfBounds { vertex: usize },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("per-vertex data has length {actual}, mesh has {expected} vertices")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("FWHM must be positive, got {0}")]
    InvalidFwhm(f64),
    #[error(transparent)]
    Surf(#[from] SurfError),
}

pub type Result<T> = std::result::Result<T, MeasureError>;

/// Per-vertex internal label ids (0 = unlabeled).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceLabeling {
    pub labels: Vec<u16>,
}

/// Per-vertex cortical thickness in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessMap {
    pub values: Vec<f64>,
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(MeasureError::LengthMismatch { expected, actual });
    }
    Ok(())
}
