use super::eigen::smallest_eigenpairs_with;
use super::geom::{dist, norm, Vec3};
use super::{cotan_laplacian, EigenOptions, Result, SpectralEmbedding, SurfError, TriangleMesh};

/// Minimum |correlation| that at least one function/axis pair must reach.
const ORIENTATION_THRESHOLD: f64 = 0.1;

/// Embedding vectors shorter than this fraction of the longest are treated as zero.
const ZERO_VECTOR_RATIO: f64 = 1e-12;

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Laplacian plus eigen-solve for the first `opts.k` nonconstant modes.
pub fn compute_embedding(mesh: &TriangleMesh, opts: EigenOptions) -> Result<SpectralEmbedding> {
    let (s, m) = cotan_laplacian(mesh)?;
    smallest_eigenpairs_with(&s, &m, opts)
}

/// Reorders and sign-flips the three eigenfunctions so that function `a`
/// correlates positively with coordinate `axes[a]`, maximizing the summed
/// absolute correlation over all assignments.
pub fn orient_eigenfunctions_along(
    emb: &SpectralEmbedding,
    vertices: &[Vec3],
    axes: [usize; 3],
) -> Result<SpectralEmbedding> {
    assert!(emb.eigenfunctions.len() >= 3, "orientation needs three eigenfunctions");
    let coords: Vec<Vec<f64>> = axes.iter().map(|&a| vertices.iter().map(|v| v[a]).collect()).collect();
    let mut c = [[0.0; 3]; 3];
    for (i, row) in c.iter_mut().enumerate() {
        for (a, cell) in row.iter_mut().enumerate() {
            *cell = pearson(&emb.eigenfunctions[i], &coords[a]);
        }
    }
    if c.iter().flatten().all(|r| r.abs() < ORIENTATION_THRESHOLD) {
        return Err(SurfError::DegenerateOrientation { threshold: ORIENTATION_THRESHOLD });
    }
    // perm[a] = function assigned to axis a
    let score = |p: &[usize; 3]| (0..3).map(|a| c[p[a]][a].abs()).sum::<f64>();
    let mut best = PERMUTATIONS[0];
    for p in &PERMUTATIONS[1..] {
        if score(p) > score(&best) {
            best = *p;
        }
    }
    let mut out = emb.clone();
    for a in 0..3 {
        let f = best[a];
        let sign = if c[f][a] < 0.0 { -1.0 } else { 1.0 };
        out.eigenfunctions[a] = emb.eigenfunctions[f].iter().map(|v| sign * v).collect();
        out.eigenvalues[a] = emb.eigenvalues[f];
        out.residuals[a] = emb.residuals[f];
    }
    Ok(out)
}

/// [`orient_eigenfunctions_along`] with the volume axis order (x, y, z).
pub fn orient_eigenfunctions(emb: &SpectralEmbedding, vertices: &[Vec3]) -> Result<SpectralEmbedding> {
    orient_eigenfunctions_along(emb, vertices, [0, 1, 2])
}

/// Scales each vertex's (f₁, f₂, f₃) to unit length.
pub fn sphere_map_from_embedding(mesh: &TriangleMesh, emb: &SpectralEmbedding) -> Result<TriangleMesh> {
    let vecs: Vec<Vec3> = (0..mesh.vertices.len()).map(|v| emb.vector(v)).collect();
    let longest = vecs.iter().map(|&v| norm(v)).fold(0.0, f64::max);
    let mut vertices = Vec::with_capacity(vecs.len());
    for (i, v) in vecs.iter().enumerate() {
        let l = norm(*v);
        if !(l > ZERO_VECTOR_RATIO * longest) || !l.is_finite() {
            return Err(SurfError::ZeroEmbeddingVector { vertex: i });
        }
        vertices.push(v.map(|x| x / l));
    }
    Ok(TriangleMesh { vertices, faces: mesh.faces.clone() })
}

/// Spectral sphere map with explicit solver options and axis order.
pub fn spectral_sphere_map_with(
    mesh: &TriangleMesh,
    opts: EigenOptions,
    axes: [usize; 3],
) -> Result<(TriangleMesh, SpectralEmbedding)> {
    let emb = compute_embedding(mesh, EigenOptions { k: 3, ..opts })?;
    let emb = orient_eigenfunctions_along(&emb, &mesh.vertices, axes)?;
    Ok((sphere_map_from_embedding(mesh, &emb)?, emb))
}

/// Projects a closed genus-0 mesh to the unit sphere through its first three
/// nonconstant Laplace-Beltrami eigenfunctions.
pub fn spectral_sphere_map(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    spectral_sphere_map_with(mesh, EigenOptions::default(), [0, 1, 2]).map(|(m, _)| m)
}

/// Mean |log(edge length ratio)| after removing the global scale (the mean
/// log ratio). Zero exactly when the map scales every edge equally.
pub fn metric_distortion(mesh: &TriangleMesh, mapped: &TriangleMesh) -> Result<f64> {
    if mesh.faces != mapped.faces || mesh.vertices.len() != mapped.vertices.len() {
        return Err(SurfError::TopologyMismatch("face lists or vertex counts differ".into()));
    }
    let edges = mesh.edge_map().sorted_edges();
    if edges.is_empty() {
        return Ok(0.0);
    }
    let logs: Vec<f64> = edges
        .iter()
        .map(|&(a, b)| {
            let l0 = dist(mesh.vertices[a], mesh.vertices[b]).max(f64::MIN_POSITIVE);
            let l1 = dist(mapped.vertices[a], mapped.vertices[b]).max(f64::MIN_POSITIVE);
            (l1 / l0).ln()
        })
        .collect();
    let mean = super::pairwise_sum(logs.clone()) / logs.len() as f64;
    let dev: Vec<f64> = logs.iter().map(|l| (l - mean).abs()).collect();
    Ok(super::pairwise_sum(dev) / logs.len() as f64)
}
