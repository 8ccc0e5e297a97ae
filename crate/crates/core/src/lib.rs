//! Non-learned core of a fast cortical reconstruction pipeline.
//!
//! The crate is split along the pipeline:
//!
//! - [`io`]: FSLV / NIfTI-1 volumes, OFF meshes, the DKT label table and CSV tables.
//! - [`voxelgrid`]: conforming, binary morphology, connected components and
//!   hemisphere assignment of label volumes.
//! - [`netref`]: forward-only reference math of the segmentation network
//!   (maxout, dense and competitive dense blocks, view aggregation, loss).
//! - [`surfgen`]: marching cubes, topology and quality diagnostics, cotangent
//!   Laplace-Beltrami operator, spectral spherical embedding.
//! - [`surfmeasure`]: label sampling onto surfaces, thickness, curvature,
//!   smoothing, ROI statistics and surface Dice.
//! - [`evalstats`]: volumetric Dice, average Hausdorff distance, ICC, GLM and
//!   the Wilcoxon signed-rank test.

pub mod evalstats;
pub mod io;
pub mod netref;
pub mod surfgen;
pub mod surfmeasure;
pub mod voxelgrid;

pub use io::{LabelTable, LabelTableEntry, Laterality, VolumeHeader};
pub use surfgen::TriangleMesh;
pub use voxelgrid::{BinaryMask, LabelVolume};
