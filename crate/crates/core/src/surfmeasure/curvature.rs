use super::Result;
use crate::surfgen::geom::{dot, norm};
use crate::surfgen::{cotan_laplacian, TriangleMesh};

/// Mean curvature H = ‖S·X‖ / (2·mass) per vertex, positive where the
/// curvature normal agrees with the outward vertex normal.
pub fn mean_curvature(mesh: &TriangleMesh) -> Result<Vec<f64>> {
    let (s, mass) = cotan_laplacian(mesh)?;
    let coords: Vec<Vec<f64>> = (0..3).map(|a| mesh.vertices.iter().map(|v| v[a]).collect()).collect();
    let sx: Vec<Vec<f64>> = coords.iter().map(|c| s.mul_vec(c)).collect();
    let normals = mesh.vertex_normals();
    Ok((0..mesh.vertices.len())
        .map(|i| {
            let k = [sx[0][i], sx[1][i], sx[2][i]];
            let h = norm(k) / (2.0 * mass[i]);
            if dot(k, normals[i]) < 0.0 {
                -h
            } else {
                h
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfgen::shapes::{icosphere, plane_grid};

    fn mean_abs(h: &[f64]) -> f64 {
        h.iter().map(|x| x.abs()).sum::<f64>() / h.len() as f64
    }

    #[test]
    fn plane_interior_is_flat() {
        let m = plane_grid(6, 6);
        let h = mean_curvature(&m).unwrap();
        for (i, v) in m.vertices.iter().enumerate() {
            if (1.0..=5.0).contains(&v[0]) && (1.0..=5.0).contains(&v[1]) {
                assert!(h[i].abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sphere_curvature_scales_inversely() {
        let h1 = mean_curvature(&icosphere(3)).unwrap();
        assert!((mean_abs(&h1) - 1.0).abs() < 0.05);
        assert!(h1.iter().all(|&h| h > 0.0));
        let h2 = mean_curvature(&icosphere(3).scaled(2.0)).unwrap();
        assert!((mean_abs(&h2) - 0.5).abs() < 0.025);
    }
}
