//! Batch pipeline over a subject directory, plus the synthetic phantom used
//! for end-to-end checks.

pub mod config;
pub mod layout;
pub mod phantom;
pub mod pipeline;

pub use config::{Hemi, HemiSide, PipelineConfig, Stage};
pub use pipeline::{run, PipelineError, RunReport};
