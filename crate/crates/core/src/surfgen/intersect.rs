//! Triangle-triangle intersection and mesh self-intersection counting.

use super::bvh::{Aabb, Bvh};
use super::geom::{add, closest_point_on_triangle, cross, dist_sq, dot, scale, sub, Vec3};
use super::TriangleMesh;

/// Contact tolerance in mm.
pub const INTERSECTION_TOL: f64 = 1e-9;

/// Squared distance between segments `p1q1` and `p2q2`.
fn segment_segment_dist_sq(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let (a, e, f) = (dot(d1, d1), dot(d2, d2), dot(d2, r));
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return dist_sq(p1, p2);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(d1, r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(d1, d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    dist_sq(add(p1, scale(d1, s)), add(p2, scale(d2, t)))
}

/// True when segment `pq` crosses the interior or boundary of triangle `abc`
/// (strictly opposite sides of the plane).
fn segment_pierces(p: Vec3, q: Vec3, [a, b, c]: [Vec3; 3]) -> bool {
    let n = cross(sub(b, a), sub(c, a));
    let (dp, dq) = (dot(n, sub(p, a)), dot(n, sub(q, a)));
    if (dp > 0.0 && dq > 0.0) || (dp < 0.0 && dq < 0.0) || dp == dq {
        return false;
    }
    let x = add(p, scale(sub(q, p), dp / (dp - dq)));
    let inside = |u: Vec3, v: Vec3| dot(cross(sub(v, u), sub(x, u)), n) >= 0.0;
    inside(a, b) && inside(b, c) && inside(c, a)
}

/// Triangles intersect when an edge of one pierces the other or their
/// distance is within `tol`.
pub fn triangles_intersect(t1: [Vec3; 3], t2: [Vec3; 3], tol: f64) -> bool {
    for k in 0..3 {
        let (p, q) = (t1[k], t1[(k + 1) % 3]);
        if segment_pierces(p, q, t2) {
            return true;
        }
        let (p, q) = (t2[k], t2[(k + 1) % 3]);
        if segment_pierces(p, q, t1) {
            return true;
        }
    }
    let tol2 = tol * tol;
    for k in 0..3 {
        if dist_sq(t1[k], closest_point_on_triangle(t1[k], t2[0], t2[1], t2[2])) <= tol2
            || dist_sq(t2[k], closest_point_on_triangle(t2[k], t1[0], t1[1], t1[2])) <= tol2
        {
            return true;
        }
        for l in 0..3 {
            if segment_segment_dist_sq(t1[k], t1[(k + 1) % 3], t2[l], t2[(l + 1) % 3]) <= tol2 {
                return true;
            }
        }
    }
    false
}

fn share_vertex(a: [usize; 3], b: [usize; 3]) -> bool {
    a.iter().any(|v| b.contains(v))
}

/// Intersecting pairs of faces that share no vertex, sorted `(i, j)` with `i < j`.
pub fn self_intersections(mesh: &TriangleMesh) -> (usize, Vec<(usize, usize)>) {
    let bvh = Bvh::from_boxes((0..mesh.faces.len()).map(|f| Aabb::of_points(&mesh.triangle(f))).collect());
    let pairs: Vec<(usize, usize)> = bvh
        .overlapping_pairs(INTERSECTION_TOL)
        .into_iter()
        .filter(|&(i, j)| !share_vertex(mesh.faces[i], mesh.faces[j]))
        .filter(|&(i, j)| triangles_intersect(mesh.triangle(i), mesh.triangle(j), INTERSECTION_TOL))
        .collect();
    (pairs.len(), pairs)
}

/// O(F²) reference for [`self_intersections`].
pub fn self_intersections_brute_force(mesh: &TriangleMesh) -> (usize, Vec<(usize, usize)>) {
    let mut pairs = Vec::new();
    for i in 0..mesh.faces.len() {
        for j in i + 1..mesh.faces.len() {
            if !share_vertex(mesh.faces[i], mesh.faces[j])
                && triangles_intersect(mesh.triangle(i), mesh.triangle(j), INTERSECTION_TOL)
            {
                pairs.push((i, j));
            }
        }
    }
    (pairs.len(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfgen::shapes::{icosahedron, icosphere};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn icosahedron_is_clean() {
        assert_eq!(self_intersections(&icosahedron()).0, 0);
        assert_eq!(self_intersections(&icosphere(3)).0, 0);
    }

    #[test]
    fn crossing_triangles() {
        let m = TriangleMesh {
            vertices: vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [0.0, 2.0, 0.0],
                [0.5, 0.5, -1.0],
                [0.5, 0.5, 1.0],
                [3.0, 3.0, 0.5],
            ],
            faces: vec![[0, 1, 2], [3, 4, 5]],
        };
        assert_eq!(self_intersections(&m), (1, vec![(0, 1)]));
    }

    #[test]
    fn separated_and_touching() {
        let t1 = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let far = t1.map(|v| [v[0], v[1], v[2] + 1e-6]);
        let near = t1.map(|v| [v[0] + 0.2, v[1] + 0.2, v[2] + 1e-10]);
        assert!(!triangles_intersect(t1, far, INTERSECTION_TOL));
        assert!(triangles_intersect(t1, near, INTERSECTION_TOL));
        // coplanar overlap
        let shifted = t1.map(|v| [v[0] + 0.3, v[1] + 0.3, v[2]]);
        assert!(triangles_intersect(t1, shifted, INTERSECTION_TOL));
    }

    #[test]
    fn bvh_path_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let nv = 30;
            let vertices: Vec<Vec3> =
                (0..nv).map(|_| [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)]).collect();
            let faces: Vec<[usize; 3]> = (0..25)
                .map(|_| {
                    let a = rng.random_range(0..nv);
                    let b = (a + rng.random_range(1..nv)) % nv;
                    let mut c = rng.random_range(0..nv);
                    while c == a || c == b {
                        c = rng.random_range(0..nv);
                    }
                    [a, b, c]
                })
                .collect();
            let m = TriangleMesh { vertices, faces };
            assert_eq!(self_intersections(&m), self_intersections_brute_force(&m));
        }
    }
}
