//! Resampling onto a target grid.
//!
//! Source and target fields of view share their lower corner. Target voxel
//! `j` samples the source at `(j + 0.5)·t / s` source voxels from that corner.

use super::{GridError, LabelVolume, Result};
use crate::io::{DType, VolumeHeader};

/// Real-valued intensity volume.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    pub header: VolumeHeader,
    pub values: Vec<f32>,
}

impl ScalarVolume {
    pub fn from_volume(v: &crate::io::Volume) -> Self {
        let values = v.data.to_f64().into_iter().map(|x| x as f32).collect();
        Self { header: v.header.with_dtype(DType::F32), values }
    }

    pub fn to_volume(&self) -> crate::io::Volume {
        crate::io::Volume {
            header: self.header.with_dtype(DType::F32),
            data: crate::io::VoxelData::F32(self.values.clone()),
        }
    }
}

fn check_target(src: &VolumeHeader, target: &VolumeHeader) -> Result<()> {
    target.validate()?;
    src.validate()?;
    let t = target.voxel_size_mm;
    if t[0] != t[1] || t[1] != t[2] {
        return Err(GridError::NonIsotropicTarget(t));
    }
    Ok(())
}

/// Source coordinate (in source voxels from the FOV corner) of each target
/// voxel center along one axis.
fn axis_positions(n_target: usize, t: f64, s: f64) -> Vec<f64> {
    (0..n_target).map(|j| (j as f64 + 0.5) * t / s).collect()
}

/// Nearest-neighbor resampling; voxels outside the source FOV become 0.
pub fn conform_labels(volume: &LabelVolume, target: &VolumeHeader) -> Result<LabelVolume> {
    let src = &volume.header;
    check_target(src, target)?;
    if src.same_grid(target) {
        return Ok(LabelVolume { header: target.with_dtype(DType::U16), labels: volume.labels.clone() });
    }
    let (ss, ts) = (src.spacing(), target.spacing());
    let idx: Vec<Vec<Option<usize>>> = (0..3)
        .map(|a| {
            axis_positions(target.dims[a], ts[a], ss[a])
                .into_iter()
                .map(|u| {
                    let i = u.floor();
                    (i >= 0.0 && (i as usize) < src.dims[a]).then_some(i as usize)
                })
                .collect()
        })
        .collect();
    if idx.iter().any(|ax| ax.iter().all(Option::is_none)) {
        return Err(GridError::EmptyVolume);
    }
    let mut out = LabelVolume::zeros(target.dims, target.voxel_size_mm);
    for z in 0..target.dims[2] {
        let Some(sz) = idx[2][z] else { continue };
        for y in 0..target.dims[1] {
            let Some(sy) = idx[1][y] else { continue };
            for x in 0..target.dims[0] {
                let Some(sx) = idx[0][x] else { continue };
                out.set(x, y, z, volume.get(sx, sy, sz));
            }
        }
    }
    Ok(out)
}

/// Trilinear resampling with edge clamping inside the source FOV and 0 outside.
pub fn conform_intensity(volume: &ScalarVolume, target: &VolumeHeader) -> Result<ScalarVolume> {
    let src = &volume.header;
    check_target(src, target)?;
    if src.same_grid(target) {
        return Ok(ScalarVolume { header: target.with_dtype(DType::F32), values: volume.values.clone() });
    }
    let (ss, ts) = (src.spacing(), target.spacing());
    // (lower index, upper index, weight of upper) per axis, or None outside the FOV
    let taps: Vec<Vec<Option<(usize, usize, f64)>>> = (0..3)
        .map(|a| {
            let n = src.dims[a];
            axis_positions(target.dims[a], ts[a], ss[a])
                .into_iter()
                .map(|u| {
                    if !(0.0..n as f64).contains(&u) {
                        return None;
                    }
                    let c = (u - 0.5).clamp(0.0, (n - 1) as f64);
                    let lo = c.floor() as usize;
                    let hi = (lo + 1).min(n - 1);
                    Some((lo, hi, c - lo as f64))
                })
                .collect()
        })
        .collect();
    if taps.iter().any(|ax| ax.iter().all(Option::is_none)) {
        return Err(GridError::EmptyVolume);
    }
    let at = |x: usize, y: usize, z: usize| f64::from(volume.values[src.index(x, y, z)]);
    let mut values = vec![0f32; target.voxel_count()];
    for z in 0..target.dims[2] {
        let Some((z0, z1, wz)) = taps[2][z] else { continue };
        for y in 0..target.dims[1] {
            let Some((y0, y1, wy)) = taps[1][y] else { continue };
            for x in 0..target.dims[0] {
                let Some((x0, x1, wx)) = taps[0][x] else { continue };
                let c00 = at(x0, y0, z0) * (1.0 - wx) + at(x1, y0, z0) * wx;
                let c10 = at(x0, y1, z0) * (1.0 - wx) + at(x1, y1, z0) * wx;
                let c01 = at(x0, y0, z1) * (1.0 - wx) + at(x1, y0, z1) * wx;
                let c11 = at(x0, y1, z1) * (1.0 - wx) + at(x1, y1, z1) * wx;
                let c0 = c00 * (1.0 - wy) + c10 * wy;
                let c1 = c01 * (1.0 - wy) + c11 * wy;
                values[target.index(x, y, z)] = (c0 * (1.0 - wz) + c1 * wz) as f32;
            }
        }
    }
    Ok(ScalarVolume { header: target.with_dtype(DType::F32), values })
}
