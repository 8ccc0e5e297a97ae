use super::{MeasureError, Result, SurfaceLabeling};
use crate::io::LabelTable;
use crate::surfgen::geom::{dist_sq, Vec3};
use crate::surfgen::TriangleMesh;
use crate::voxelgrid::LabelVolume;

/// How far outside the grid (in voxels) a vertex may lie.
const MAX_OUTSIDE_VOXELS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingOptions {
    pub depth_mm: f64,
    pub step_mm: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self { depth_mm: 2.0, step_mm: 0.25 }
    }
}

fn voxel_at(vol: &LabelVolume, p: Vec3) -> Option<[usize; 3]> {
    let s = vol.header.spacing();
    let d = vol.dims();
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let i = (p[a] / s[a]).round();
        if i < 0.0 || i >= d[a] as f64 {
            return None;
        }
        idx[a] = i as usize;
    }
    Some(idx)
}

/// Assigns each vertex the first cortical label met when stepping from the
/// vertex along the inward normal. Vertices whose ray finds nothing take the
/// nearest cortical voxel within the ray depth, else 0.
pub fn sample_labels_to_surface(
    labels: &LabelVolume,
    mesh: &TriangleMesh,
    table: &LabelTable,
    opts: SamplingOptions,
) -> Result<SurfaceLabeling> {
    let s = labels.header.spacing();
    let d = labels.dims();
    let cortical = |l: u16| l != 0 && table.get(l).is_some_and(|e| e.is_cortical());
    let normals = mesh.vertex_normals();
    let steps = (opts.depth_mm / opts.step_mm).round() as usize;
    let reach: Vec<isize> = (0..3).map(|a| (opts.depth_mm / s[a]).ceil() as isize).collect();

    let mut out = Vec::with_capacity(mesh.vertices.len());
    for (vi, (&v, &n)) in mesh.vertices.iter().zip(&normals).enumerate() {
        for a in 0..3 {
            let g = v[a] / s[a];
            if g < -MAX_OUTSIDE_VOXELS || g > (d[a] - 1) as f64 + MAX_OUTSIDE_VOXELS {
                return Err(MeasureError::OutOfBounds { vertex: vi });
            }
        }
        let along_ray = (0..=steps).find_map(|k| {
            let t = k as f64 * opts.step_mm;
            let p = [v[0] - t * n[0], v[1] - t * n[1], v[2] - t * n[2]];
            let [x, y, z] = voxel_at(labels, p)?;
            let l = labels.get(x, y, z);
            cortical(l).then_some(l)
        });
        let label = along_ray.unwrap_or_else(|| {
            // nearest cortical voxel center within the ray depth; ties keep scan order
            let c: Vec<isize> = (0..3).map(|a| (v[a] / s[a]).round() as isize).collect();
            let mut best: Option<(f64, u16)> = None;
            let limit = opts.depth_mm * opts.depth_mm;
            for z in c[2] - reach[2]..=c[2] + reach[2] {
                for y in c[1] - reach[1]..=c[1] + reach[1] {
                    for x in c[0] - reach[0]..=c[0] + reach[0] {
                        if x < 0 || y < 0 || z < 0 || x as usize >= d[0] || y as usize >= d[1] || z as usize >= d[2] {
                            continue;
                        }
                        let (x, y, z) = (x as usize, y as usize, z as usize);
                        let l = labels.get(x, y, z);
                        if !cortical(l) {
                            continue;
                        }
                        let dd = dist_sq(v, labels.header.center_mm(x, y, z));
                        if dd <= limit && best.is_none_or(|(bd, _)| dd < bd) {
                            best = Some((dd, l));
                        }
                    }
                }
            }
            best.map(|b| b.1).unwrap_or(0)
        });
        out.push(label);
    }
    Ok(SurfaceLabeling { labels: out })
}
