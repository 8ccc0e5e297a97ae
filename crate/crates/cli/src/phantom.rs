//! Seeded two-hemisphere phantom with known geometry.
//!
//! Each hemisphere is a white-matter ball of radius [`WHITE_RADIUS_MM`]
//! wrapped in a cortical shell out to [`PIAL_RADIUS_MM`], cut into five
//! cortical sectors. A thalamus ball sits inside the white matter and a small
//! third-ventricle blob lies below the midline.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use cortexkit::io::{CsvTable, DType, VolumeHeader};
use cortexkit::voxelgrid::ScalarVolume;
use cortexkit::LabelVolume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::layout::Layout;
use crate::pipeline::PipelineError;

pub const DIMS: [usize; 3] = [64, 64, 64];
pub const WHITE_RADIUS_MM: f64 = 8.0;
pub const PIAL_RADIUS_MM: f64 = 11.0;
const THALAMUS_RADIUS_MM: f64 = 3.0;
/// Probability that a voxel on a boundary between two cortical sectors takes
/// its neighbour's label in the "predicted" segmentation.
const BOUNDARY_FLIP: f64 = 0.25;

/// Internal ids: (white matter, thalamus, five cortical sectors).
const LEFT: (u16, u16, [u16; 5]) = (1, 6, [34, 36, 59, 35, 50]);
const RIGHT: (u16, u16, [u16; 5]) = (19, 24, [65, 66, 78, 35, 50]);
const THIRD_VENTRICLE: u16 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomManifest {
    pub seed: u64,
    pub dims: [usize; 3],
    pub voxel_size_mm: [f32; 3],
    /// Hemisphere centers in mm, left then right.
    pub centers_mm: [[f64; 3]; 2],
    pub white_radius_mm: f64,
    pub pial_radius_mm: f64,
    pub expected_thickness_mm: f64,
    /// Ground-truth volume per internal label id.
    pub label_volumes_mm3: BTreeMap<u16, f64>,
    pub flipped_voxels: usize,
    pub group_subjects: usize,
    pub repeat_subjects: usize,
}

/// Ground truth and a perturbed copy standing in for a network prediction.
pub struct PhantomVolumes {
    pub truth: LabelVolume,
    pub predicted: LabelVolume,
    pub t1: ScalarVolume,
    pub centers_mm: [[f64; 3]; 2],
    pub flipped_voxels: usize,
}

fn sector(d: [f64; 3]) -> usize {
    let theta = d[2].atan2(d[1]) + PI;
    ((theta / (2.0 * PI) * 5.0) as usize).min(4)
}

pub fn phantom_volumes(seed: u64) -> PhantomVolumes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid = DIMS[1] as f64 / 2.0;
    let mut jitter = || rng.random_range(-0.5..0.5);
    let centers_mm = [[20.0 + jitter(), mid + jitter(), mid + jitter()], [44.0 + jitter(), mid + jitter(), mid + jitter()]];
    let mut truth = LabelVolume::zeros(DIMS, [1.0; 3]);
    for z in 0..DIMS[2] {
        for y in 0..DIMS[1] {
            for x in 0..DIMS[0] {
                let p = [x as f64, y as f64, z as f64];
                for (c, ids) in centers_mm.iter().zip([LEFT, RIGHT]) {
                    let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    let l = if r <= THALAMUS_RADIUS_MM {
                        ids.1
                    } else if r <= WHITE_RADIUS_MM {
                        ids.0
                    } else if r <= PIAL_RADIUS_MM {
                        ids.2[sector(d)]
                    } else {
                        continue;
                    };
                    truth.set(x, y, z, l);
                }
                let v = [p[0] - mid, p[1] - mid, p[2] - (mid - 14.0)];
                if truth.get(x, y, z) == 0 && v.iter().map(|a| a * a).sum::<f64>() <= 2.0 {
                    truth.set(x, y, z, THIRD_VENTRICLE);
                }
            }
        }
    }

    let cortical = |l: u16| LEFT.2.contains(&l) || RIGHT.2.contains(&l);
    let mut predicted = truth.clone();
    let mut flipped_voxels = 0;
    for z in 1..DIMS[2] - 1 {
        for y in 1..DIMS[1] - 1 {
            for x in 1..DIMS[0] - 1 {
                let l = truth.get(x, y, z);
                if !cortical(l) {
                    continue;
                }
                let other = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
                    .into_iter()
                    .map(|(dx, dy, dz): (isize, isize, isize)| {
                        truth.get((x as isize + dx) as usize, (y as isize + dy) as usize, (z as isize + dz) as usize)
                    })
                    .find(|&n| cortical(n) && n != l);
                if let Some(n) = other {
                    if rng.random_bool(BOUNDARY_FLIP) {
                        predicted.set(x, y, z, n);
                        flipped_voxels += 1;
                    }
                }
            }
        }
    }

    let noise = Normal::new(0.0, 3.0).expect("valid sigma");
    let header = VolumeHeader::new(DIMS, [1.0; 3], DType::F32);
    let values = truth
        .labels
        .iter()
        .map(|&l| {
            let base = match l {
                0 => 0.0,
                _ if l == LEFT.0 || l == RIGHT.0 => 110.0,
                _ if cortical(l) => 70.0,
                _ => 85.0,
            };
            (base + noise.sample(&mut rng)) as f32
        })
        .collect();
    PhantomVolumes { truth, predicted, t1: ScalarVolume { header, values }, centers_mm, flipped_voxels }
}

pub const GROUP_ROIS: [&str; 3] = ["superiorfrontal_thickness", "cuneus_thickness", "hippocampus_volume"];
/// Planted group effects (AD minus CN) per ROI.
pub const GROUP_EFFECTS: [f64; 3] = [-0.25, 0.0, -400.0];
const GROUP_SUBJECTS: usize = 60;
const REPEAT_SUBJECTS: usize = 30;

fn group_tables(rng: &mut ChaCha8Rng) -> (CsvTable, CsvTable) {
    let unit = Normal::new(0.0, 1.0).expect("valid sigma");
    let mut measures = CsvTable::new(
        ["subject", "diagnosis", "age", "sex", "head_size"].into_iter().map(String::from).chain(GROUP_ROIS.map(String::from)),
    );
    for i in 0..GROUP_SUBJECTS {
        let ad = i % 2 == 1;
        let age: f64 = rng.random_range(60.0..85.0);
        let sex = if (i / 2) % 2 == 0 { "F" } else { "M" };
        let head = 1500.0 + 100.0 * unit.sample(rng);
        let dx = if ad { 1.0 } else { 0.0 };
        let sf = 2.6 - 0.004 * (age - 70.0) + GROUP_EFFECTS[0] * dx + 0.1 * unit.sample(rng);
        let cu = 2.0 - 0.003 * (age - 70.0) + 0.1 * unit.sample(rng);
        let hip = 4000.0 + 1.5 * (head - 1500.0) + GROUP_EFFECTS[2] * dx + 200.0 * unit.sample(rng);
        measures.push([
            format!("sub{i:03}"),
            if ad { "AD" } else { "CN" }.to_string(),
            format!("{age:.1}"),
            sex.to_string(),
            format!("{head:.1}"),
            format!("{sf:.4}"),
            format!("{cu:.4}"),
            format!("{hip:.1}"),
        ]);
    }
    let mut repeats = CsvTable::new(["subject", "roi", "r1", "r2"]);
    for i in 0..REPEAT_SUBJECTS {
        let truth = [2.5 + 0.2 * unit.sample(rng), 2.0 + 0.2 * unit.sample(rng), 4000.0 + 400.0 * unit.sample(rng)];
        let noise = [0.05, 0.05, 80.0];
        for k in 0..3 {
            let r1 = truth[k] + noise[k] * unit.sample(rng);
            let r2 = truth[k] + noise[k] * unit.sample(rng);
            repeats.push([format!("sub{i:03}"), GROUP_ROIS[k].to_string(), format!("{r1:.4}"), format!("{r2:.4}")]);
        }
    }
    (measures, repeats)
}

fn label_volumes(v: &LabelVolume) -> BTreeMap<u16, f64> {
    let voxel: f64 = v.header.spacing().iter().product();
    let mut out = BTreeMap::new();
    for &l in v.labels.iter().filter(|&&l| l != 0) {
        *out.entry(l).or_insert(0.0) += voxel;
    }
    out
}

/// Writes a complete subject directory under `out`.
pub fn write_phantom(out: &Path, seed: u64) -> Result<PhantomManifest, PipelineError> {
    let layout = Layout::new(out);
    let fail = |p: &Path, e: &dyn std::fmt::Display| PipelineError::Input { path: p.to_path_buf(), reason: e.to_string() };
    for dir in [out.join("input"), out.join("group")] {
        std::fs::create_dir_all(&dir).map_err(|e| fail(&dir, &e))?;
    }
    let v = phantom_volumes(seed);
    for (vol, path) in [
        (v.predicted.to_volume(), out.join("input/labels.fslv")),
        (v.truth.to_volume(), out.join("input/truth.fslv")),
        (v.t1.to_volume(), out.join("input/t1.fslv")),
    ] {
        cortexkit::io::write_volume(&vol.header, &vol.data, &path).map_err(|e| fail(&path, &e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908);
    let (measures, repeats) = group_tables(&mut rng);
    for (t, path) in [(measures, layout.group_measures()), (repeats, layout.group_repeats())] {
        t.write(&path).map_err(|e| fail(&path, &e))?;
    }
    let manifest = PhantomManifest {
        seed,
        dims: DIMS,
        voxel_size_mm: [1.0; 3],
        centers_mm: v.centers_mm,
        white_radius_mm: WHITE_RADIUS_MM,
        pial_radius_mm: PIAL_RADIUS_MM,
        expected_thickness_mm: PIAL_RADIUS_MM - WHITE_RADIUS_MM,
        label_volumes_mm3: label_volumes(&v.truth),
        flipped_voxels: v.flipped_voxels,
        group_subjects: GROUP_SUBJECTS,
        repeat_subjects: REPEAT_SUBJECTS,
    };
    let path = layout.manifest();
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| fail(&path, &e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_phantom() {
        let a = phantom_volumes(3);
        let b = phantom_volumes(3);
        assert_eq!(a.predicted, b.predicted);
        assert_eq!(a.t1, b.t1);
        assert_ne!(phantom_volumes(4).predicted, a.predicted);
    }

    #[test]
    fn truth_holds_expected_labels() {
        let v = phantom_volumes(1);
        let set = v.truth.label_set();
        for l in [1, 6, 10, 19, 24, 34, 35, 36, 50, 59, 65, 66, 78] {
            assert!(set.contains(&l), "label {l} missing");
        }
        assert!(v.flipped_voxels > 0);
        let diff = v.truth.labels.iter().zip(&v.predicted.labels).filter(|(a, b)| a != b).count();
        assert_eq!(diff, v.flipped_voxels);
    }

    #[test]
    fn white_matter_surfaces_are_spheres() {
        use cortexkit::surfgen::{euler_defects, marching_cubes};
        let v = phantom_volumes(2);
        for (wm, thal) in [(LEFT.0, LEFT.1), (RIGHT.0, RIGHT.1)] {
            let mesh = marching_cubes(&v.truth.mask_of(|l| l == wm || l == thal)).unwrap();
            let t = euler_defects(&mesh).unwrap();
            assert_eq!((t.euler, t.genus, t.components), (2, 0, 1));
        }
    }

    #[test]
    fn manifest_matches_volumes() {
        let d = tempfile::tempdir().unwrap();
        let m = write_phantom(d.path(), 9).unwrap();
        let text = std::fs::read_to_string(d.path().join("manifest.json")).unwrap();
        let back: PhantomManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.expected_thickness_mm, 3.0);
        let total: f64 = m.label_volumes_mm3.values().sum();
        let v = phantom_volumes(9);
        assert_eq!(total, v.truth.labels.iter().filter(|&&l| l != 0).count() as f64);
    }

    #[test]
    fn hemispheres_do_not_touch() {
        let v = phantom_volumes(7);
        let gap = v.centers_mm[1][0] - v.centers_mm[0][0];
        assert!(gap > 2.0 * PIAL_RADIUS_MM);
    }
}
