use std::collections::BTreeMap;

use super::{check_len, Result, SurfaceLabeling};
use crate::surfgen::{pairwise_sum, TriangleMesh};

/// Area-weighted per-region summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiStats {
    pub roi: u16,
    pub mean_thickness: f64,
    pub mean_abs_curvature: f64,
    pub area_mm2: f64,
}

/// Σ a_i v_i / Σ a_i with vertex areas a_i.
pub fn area_weighted_mean(values: &[f64], mesh: &TriangleMesh) -> Result<f64> {
    check_len(mesh.vertices.len(), values.len())?;
    let a = mesh.vertex_areas();
    let num = pairwise_sum(values.iter().zip(&a).map(|(v, w)| v * w).collect());
    Ok(num / pairwise_sum(a))
}

/// One row per nonzero label present, ascending.
pub fn roi_stats(
    labeling: &SurfaceLabeling,
    thickness: &[f64],
    curvature: &[f64],
    mesh: &TriangleMesh,
) -> Result<Vec<RoiStats>> {
    let n = mesh.vertices.len();
    check_len(n, labeling.labels.len())?;
    check_len(n, thickness.len())?;
    check_len(n, curvature.len())?;
    let area = mesh.vertex_areas();
    // per roi: (areas, area·thickness, area·|H|)
    let mut acc: BTreeMap<u16, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for i in 0..n {
        let l = labeling.labels[i];
        if l == 0 {
            continue;
        }
        let e = acc.entry(l).or_default();
        e.0.push(area[i]);
        e.1.push(area[i] * thickness[i]);
        e.2.push(area[i] * curvature[i].abs());
    }
    Ok(acc
        .into_iter()
        .map(|(roi, (a, t, h))| {
            let total = pairwise_sum(a);
            let div = |x: f64| if total > 0.0 { x / total } else { 0.0 };
            RoiStats {
                roi,
                mean_thickness: div(pairwise_sum(t)),
                mean_abs_curvature: div(pairwise_sum(h)),
                area_mm2: total,
            }
        })
        .collect())
}

/// Area-based Dice per label present in either labeling (0 excluded).
pub fn surface_dice(a: &SurfaceLabeling, b: &SurfaceLabeling, mesh: &TriangleMesh) -> Result<BTreeMap<u16, f64>> {
    let n = mesh.vertices.len();
    check_len(n, a.labels.len())?;
    check_len(n, b.labels.len())?;
    let area = mesh.vertex_areas();
    let mut parts: BTreeMap<u16, (f64, f64, f64)> = BTreeMap::new();
    for i in 0..n {
        let (la, lb) = (a.labels[i], b.labels[i]);
        if la != 0 {
            parts.entry(la).or_default().0 += area[i];
        }
        if lb != 0 {
            parts.entry(lb).or_default().1 += area[i];
        }
        if la != 0 && la == lb {
            parts.entry(la).or_default().2 += area[i];
        }
    }
    Ok(parts
        .into_iter()
        .map(|(l, (x, y, both))| (l, if x + y > 0.0 { 2.0 * both / (x + y) } else { 1.0 }))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfgen::shapes::{icosphere, plane_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_roi_covers_mesh() {
        let m = icosphere(2);
        let n = m.vertices.len();
        let lab = SurfaceLabeling { labels: vec![7; n] };
        let r = roi_stats(&lab, &vec![2.0; n], &vec![-1.0; n], &m).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].area_mm2 - m.total_area()).abs() < 1e-9);
        assert!((r[0].mean_thickness - 2.0).abs() < 1e-12);
        assert!((r[0].mean_abs_curvature - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_equal_halves() {
        // 4x2 grid: columns x <= 1 and x >= 3 carry equal vertex area by symmetry
        let m = plane_grid(4, 2);
        let lab: Vec<u16> = m.vertices.iter().map(|v| if v[0] < 2.0 { 1 } else if v[0] > 2.0 { 2 } else { 0 }).collect();
        let t: Vec<f64> = lab.iter().map(|&l| if l == 1 { 2.0 } else { 4.0 }).collect();
        let lab = SurfaceLabeling { labels: lab };
        let r = roi_stats(&lab, &t, &vec![0.0; t.len()], &m).unwrap();
        assert_eq!((r[0].mean_thickness, r[1].mean_thickness), (2.0, 4.0));
        assert!((r[0].area_mm2 - r[1].area_mm2).abs() < 1e-12);
        let tw: Vec<f64> = lab.labels.iter().zip(&t).map(|(&l, &x)| if l == 0 { 3.0 } else { x }).collect();
        assert!((area_weighted_mean(&tw, &m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_labels_partition_area() {
        let m = icosphere(3).scaled(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = m.vertices.len();
        let lab = SurfaceLabeling { labels: (0..n).map(|_| rng.random_range(1..9)).collect() };
        let r = roi_stats(&lab, &vec![1.0; n], &vec![1.0; n], &m).unwrap();
        let total: f64 = r.iter().map(|s| s.area_mm2).sum();
        assert!((total - m.total_area()).abs() < 1e-6);
    }

    #[test]
    fn dice_cases() {
        let m = plane_grid(4, 2);
        let n = m.vertices.len();
        let a = SurfaceLabeling { labels: m.vertices.iter().map(|v| if v[0] < 2.0 { 1 } else { 2 }).collect() };
        assert!(surface_dice(&a, &a, &m).unwrap().values().all(|&d| d == 1.0));
        let other = SurfaceLabeling { labels: vec![3; n] };
        let d = surface_dice(&a, &other, &m).unwrap();
        assert!(d.values().all(|&x| x == 0.0));
        let ab = surface_dice(&a, &other, &m).unwrap();
        let ba = surface_dice(&other, &a, &m).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn half_overlap_is_one_half() {
        // two patches of equal area: a labels patches P and Q, b labels Q and R
        let p = plane_grid(1, 1);
        let m = p.merged(&p.translated([5.0, 0.0, 0.0])).merged(&p.translated([10.0, 0.0, 0.0]));
        let patch = |v: usize| v / 4;
        let a = SurfaceLabeling { labels: (0..12).map(|v| if patch(v) < 2 { 1 } else { 0 }).collect() };
        let b = SurfaceLabeling { labels: (0..12).map(|v| if patch(v) > 0 { 1 } else { 0 }).collect() };
        assert!((surface_dice(&a, &b, &m).unwrap()[&1] - 0.5).abs() < 1e-12);
    }
}
