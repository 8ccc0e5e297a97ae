//! Reference meshes used by tests and diagnostics.

use std::collections::HashMap;

use super::geom::{normalize, Vec3};
use super::TriangleMesh;

/// Regular icosahedron inscribed in the unit sphere, outward oriented.
pub fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh { vertices: raw.iter().map(|&v| normalize(v)).collect(), faces }
}

/// Unit icosphere: `subdivisions` rounds of 1-to-4 midpoint splits of the
/// icosahedron, projected to the sphere. Vertex count is 10·4ⁿ + 2.
pub fn icosphere(subdivisions: usize) -> TriangleMesh {
    let mut mesh = icosahedron();
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut vertices = mesh.vertices.clone();
        let mut midpoint = |a: usize, b: usize, vs: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (vs[a], vs[b]);
                vs.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vs.len() - 1
            })
        };
        let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
        for &[a, b, c] in &mesh.faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        mesh = TriangleMesh { vertices, faces };
    }
    mesh
}

/// Icosphere stretched to semi-axes `radii`.
pub fn ellipsoid(subdivisions: usize, radii: Vec3) -> TriangleMesh {
    let s = icosphere(subdivisions);
    TriangleMesh {
        vertices: s.vertices.iter().map(|v| [v[0] * radii[0], v[1] * radii[1], v[2] * radii[2]]).collect(),
        faces: s.faces,
    }
}

/// Flat `nx`×`ny` grid of unit squares in the z = 0 plane, each split along
/// the diagonal; normals point +z. Has a boundary.
pub fn plane_grid(nx: usize, ny: usize) -> TriangleMesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64, j as f64, 0.0]);
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_orientation() {
        for n in 0..4 {
            let m = icosphere(n);
            assert_eq!(m.vertices.len(), 10 * 4usize.pow(n as u32) + 2);
            assert_eq!(m.faces.len(), 20 * 4usize.pow(n as u32));
            m.check_closed_manifold().unwrap();
            assert!(m.signed_volume() > 0.0);
            for v in &m.vertices {
                assert!((super::super::geom::norm(*v) - 1.0).abs() < 1e-12);
            }
        }
    }
}
