use super::{check_len, MeasureError, Result};
use crate::surfgen::TriangleMesh;

/// Target full width at half maximum of the equivalent Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothSpec {
    fwhm_mm: f64,
}

impl SmoothSpec {
    pub fn new(fwhm_mm: f64) -> Result<Self> {
        if !(fwhm_mm > 0.0) || !fwhm_mm.is_finite() {
            return Err(MeasureError::InvalidFwhm(fwhm_mm));
        }
        Ok(Self { fwhm_mm })
    }

    pub fn fwhm_mm(&self) -> f64 {
        self.fwhm_mm
    }
}

impl Default for SmoothSpec {
    fn default() -> Self {
        Self { fwhm_mm: 15.0 }
    }
}

/// n = round(fwhm² / (16·ln2·ā)), ā the mean squared edge length.
pub fn smoothing_iterations(mesh: &TriangleMesh, spec: SmoothSpec) -> usize {
    let a = mesh.mean_edge_length_sq();
    if a == 0.0 {
        return 0;
    }
    (spec.fwhm_mm.powi(2) / (16.0 * std::f64::consts::LN_2 * a)).round() as usize
}

/// Iterated area-weighted neighborhood averaging
/// `u_i += Σ_j (a_ij / m_i)(u_j − u_i)` with symmetric
/// `a_ij = min(m_i/(1+deg_i), m_j/(1+deg_j))`, so Σ m_i u_i is conserved and
/// every step is a convex combination.
pub fn smooth_scalar(map: &[f64], mesh: &TriangleMesh, spec: SmoothSpec) -> Result<Vec<f64>> {
    check_len(mesh.vertices.len(), map.len())?;
    let n_iter = smoothing_iterations(mesh, spec);
    let m = mesh.vertex_areas();
    let nb = mesh.vertex_neighbors();
    let share: Vec<f64> = (0..m.len()).map(|i| m[i] / (1.0 + nb[i].len() as f64)).collect();
    let weights: Vec<Vec<(usize, f64)>> = (0..m.len())
        .map(|i| {
            nb[i]
                .iter()
                .map(|&j| (j, if m[i] > 0.0 { share[i].min(share[j]) / m[i] } else { 0.0 }))
                .collect()
        })
        .collect();
    let mut u = map.to_vec();
    let mut next = u.clone();
    for _ in 0..n_iter {
        for i in 0..u.len() {
            let mut acc = u[i];
            for &(j, w) in &weights[i] {
                acc += w * (u[j] - u[i]);
            }
            next[i] = acc;
        }
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u)
}
