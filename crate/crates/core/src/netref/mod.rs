//! Forward-only reference math of the segmentation network.
//!
//! Nothing here trains. Weights are supplied or drawn from a seeded RNG and
//! the functions check shape laws, competition and parameter counts.

mod blocks;
mod feature;
mod loss;
mod params;
mod views;

pub use blocks::{
    competitive_block_forward, dense_block_forward, maxout, BatchNorm, BlockWeights, Conv2d, PreActivation,
    UnitWeights,
};
pub use feature::{stack_slices, FeatureMap, SliceAxis, SliceStack};
pub use loss::{composite_loss, median_frequency_weights, ClassWeights, LossTerms};
pub use params::{count_params, ArchConfig, BlockVariant};
pub use views::{view_aggregate, ProbVolume, ViewWeights};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("probabilities at row {index} sum to {sum}, not 1")]
    ProbNotNormalized { index: usize, sum: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T> = std::result::Result<T, NetError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NetError::ShapeMismatch(msg.into()))
}
