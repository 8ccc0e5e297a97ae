use super::geom::{cross, dist_sq, norm, sub, Vec3};
use super::TriangleMesh;

/// Q = 4√3·A / (e₁² + e₂² + e₃²); 1 for equilateral, 0 for degenerate.
pub fn triangle_quality(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let area = 0.5 * norm(cross(sub(b, a), sub(c, a)));
    let e2 = dist_sq(a, b) + dist_sq(b, c) + dist_sq(c, a);
    if e2 == 0.0 {
        return 0.0;
    }
    (4.0 * 3f64.sqrt() * area / e2).clamp(0.0, 1.0)
}

/// Per-face quality and its mean.
pub fn mesh_quality(mesh: &TriangleMesh) -> (Vec<f64>, f64) {
    let q: Vec<f64> = (0..mesh.faces.len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            triangle_quality(a, b, c)
        })
        .collect();
    let mean = if q.is_empty() { 0.0 } else { super::pairwise_sum(q.clone()) / q.len() as f64 };
    (q, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_triangles() {
        let h = 3f64.sqrt() / 2.0;
        assert!((triangle_quality([0.0; 3], [1.0, 0.0, 0.0], [0.5, h, 0.0]) - 1.0).abs() < 1e-12);
        let q = triangle_quality([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!((q - h).abs() < 1e-12);
        assert_eq!(triangle_quality([0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn needle_family_decreases() {
        let qs: Vec<f64> = (0..10)
            .map(|k| triangle_quality([0.0; 3], [1.0, 0.0, 0.0], [0.5, 0.5f64.powi(k), 0.0]))
            .collect();
        assert!(qs.windows(2).all(|w| w[1] < w[0]));
        assert!(qs[9] < 0.01);
    }

    proptest! {
        #[test]
        fn invariant_under_similarity(
            pts in prop::array::uniform9(-5.0f64..5.0),
            angle in 0.0f64..6.3,
            s in 0.1f64..10.0,
            t in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let p = |i: usize| [pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]];
            let (c, sn) = (angle.cos(), angle.sin());
            let map = |v: Vec3| [s * (c * v[0] - sn * v[1]) + t[0], s * (sn * v[0] + c * v[1]) + t[1], s * v[2] + t[2]];
            let q0 = triangle_quality(p(0), p(1), p(2));
            let q1 = triangle_quality(map(p(0)), map(p(1)), map(p(2)));
            prop_assert!((0.0..=1.0).contains(&q0));
            prop_assert!((q0 - q1).abs() < 1e-9);
        }
    }
}
