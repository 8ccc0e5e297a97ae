use super::geom::{cross, dot, norm, sub};
use super::{Result, SparseSymmetric, TriangleMesh};

/// Cotangent stiffness matrix and lumped (one third of incident areas) mass.
///
/// The stiffness is positive semidefinite: off-diagonals are
/// −½(cot α + cot β) and each diagonal is minus its row's off-diagonal sum.
/// Negative weights from obtuse angles are kept.
pub fn cotan_laplacian(mesh: &TriangleMesh) -> Result<(SparseSymmetric, Vec<f64>)> {
    mesh.check_manifold_with_boundary()?;
    let n = mesh.vertices.len();
    let mut trip = Vec::with_capacity(mesh.faces.len() * 3 + n);
    let mut diag = vec![0.0; n];
    let mut mass = vec![0.0; n];
    let mut negative = 0usize;
    for (fi, f) in mesh.faces.iter().enumerate() {
        let area = mesh.face_area(fi);
        for &v in f {
            mass[v] += area / 3.0;
        }
        if area == 0.0 {
            log::warn!("face {fi} has zero area; skipped in stiffness");
            continue;
        }
        for k in 0..3 {
            let (i, j, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let (u, w) = (sub(mesh.vertices[i], mesh.vertices[o]), sub(mesh.vertices[j], mesh.vertices[o]));
            let cot = dot(u, w) / norm(cross(u, w));
            if cot < 0.0 {
                negative += 1;
            }
            let wij = 0.5 * cot;
            trip.push((i.min(j), i.max(j), -wij));
            diag[i] += wij;
            diag[j] += wij;
        }
    }
    if negative > 0 {
        log::debug!("{negative} obtuse angles give negative cotangent weights");
    }
    trip.extend(diag.into_iter().enumerate().map(|(i, d)| (i, i, d)));
    Ok((SparseSymmetric::from_triplets(n, &trip), mass))
}
