//! Surface generation and spectral geometry.

pub mod bvh;
mod eigen;
pub mod geom;
mod intersect;
mod laplace;
mod marching;
mod mesh;
mod quality;
pub mod shapes;
mod sparse;
mod spectral;
mod topology;

pub use eigen::{smallest_eigenpairs, smallest_eigenpairs_with, EigenOptions, SpectralEmbedding};
pub use intersect::{self_intersections, self_intersections_brute_force, triangles_intersect};
pub use laplace::cotan_laplacian;
pub use marching::marching_cubes;
pub use mesh::{pairwise_sum, EdgeMap, TriangleMesh};
pub use quality::{mesh_quality, triangle_quality};
pub use sparse::SparseSymmetric;
pub use spectral::{
    compute_embedding, metric_distortion, orient_eigenfunctions, orient_eigenfunctions_along,
    spectral_sphere_map,
    spectral_sphere_map_with, sphere_map_from_embedding,
};
pub use topology::{euler_defects, TopologyReport};

pub(crate) use mesh::UnionFind;

#[derive(Debug, thiserror::Error)]
pub enum SurfError {
    #[error("face {face} references vertex {index}, but the mesh has {vertices} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertices: usize },
    #[error("face {face} repeats a vertex")]
    DegenerateFace { face: usize },
    #[error("edge {edge:?} has {incident_faces} incident faces")]
    NonManifold { edge: (usize, usize), incident_faces: usize },
    #[error("faces sharing edge {edge:?} traverse it in the same direction")]
    InconsistentOrientation { edge: (usize, usize) },
    #[error("mask has no foreground voxels")]
    EmptyMask,
    #[error("mesh has too few vertices ({0}) for the requested eigenpairs")]
    TooSmall(usize),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNoConvergence { iterations: usize, residual: f64 },
    #[error("mesh has {0} connected components; the constant kernel is not one-dimensional")]
    MultiComponent(usize),
    #[error("stiffness matrix is not positive definite after shifting (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("no eigenfunction correlates with any anatomical axis above {threshold}")]
    DegenerateOrientation { threshold: f64 },
    #[error("spectral embedding vector of vertex {vertex} is zero")]
    ZeroEmbeddingVector { vertex: usize },
    #[error("meshes differ in topology: {0}")]
    TopologyMismatch(String),
}

pub type Result<T> = std::result::Result<T, SurfError>;
