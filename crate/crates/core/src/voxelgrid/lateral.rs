//! Hemisphere assignment of merged labels and the sagittal class merge.

use super::{connected_components, Connectivity, GridError, LabelVolume, Result};
use crate::io::{LabelTable, Laterality};

/// Mean voxel-center position (mm) of `label`, or `None` when absent.
pub fn label_centroid_mm(volume: &LabelVolume, label: u16) -> Option<[f64; 3]> {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for (i, &l) in volume.labels.iter().enumerate() {
        if l == label {
            let [x, y, z] = volume.header.coords(i);
            let c = volume.header.center_mm(x, y, z);
            for a in 0..3 {
                sum[a] += c[a];
            }
            n += 1;
        }
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

fn dist_sq(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Splits `label` into Vertex26 clusters and assigns each to the side whose
/// centroid is nearer to the cluster centroid. Exact ties go Left.
/// Returns (voxel indices, side) per cluster in scan order.
pub fn assign_clusters_by_centroid(
    volume: &LabelVolume,
    label: u16,
    left_centroid: [f64; 3],
    right_centroid: [f64; 3],
) -> Vec<(Vec<usize>, Laterality)> {
    let cc = connected_components(&volume.mask_of(|l| l == label), Connectivity::Vertex26);
    cc.members()
        .into_iter()
        .map(|voxels| {
            let mut c = [0.0; 3];
            for &i in &voxels {
                let [x, y, z] = volume.header.coords(i);
                let p = volume.header.center_mm(x, y, z);
                for a in 0..3 {
                    c[a] += p[a];
                }
            }
            let c = c.map(|s| s / voxels.len() as f64);
            let (dl, dr) = (dist_sq(c, left_centroid), dist_sq(c, right_centroid));
            if dl == dr {
                log::debug!("label {label}: cluster equidistant from both hemispheres, assigned left");
            }
            let side = if dl <= dr { Laterality::Left } else { Laterality::Right };
            (voxels, side)
        })
        .collect()
}

fn white_matter_centroids(volume: &LabelVolume, table: &LabelTable) -> Result<([f64; 3], [f64; 3])> {
    let (lw, rw) = table.white_matter_ids().ok_or(GridError::NoWhiteMatterLabels)?;
    let l = label_centroid_mm(volume, lw).ok_or(GridError::MissingWhiteMatter { side: "left" })?;
    let r = label_centroid_mm(volume, rw).ok_or(GridError::MissingWhiteMatter { side: "right" })?;
    Ok((l, r))
}

/// Maps an internal-id volume to FreeSurfer codes. Unmerged labels take
/// their code directly; each cluster of a merged pair takes the code of the
/// hemisphere whose white matter centroid is nearer.
pub fn lateralize(labels: &LabelVolume, table: &LabelTable) -> Result<LabelVolume> {
    labels.validate(table, super::LabelSpace::Internal)?;
    let present = labels.label_set();
    let has_merged = present
        .iter()
        .any(|&l| table.get(l).is_some_and(|e| e.laterality == Laterality::MergedPair));
    let centroids = if has_merged { Some(white_matter_centroids(labels, table)?) } else { None };

    let mut out = labels.map_labels(|l| {
        if l == 0 {
            0
        } else {
            table.get(l).map(|e| e.fs_code as u16).unwrap_or(0)
        }
    });
    if let Some((lc, rc)) = centroids {
        for &l in &present {
            let e = table.get(l).expect("validated");
            let Some(right_code) = e.paired_fs_code else { continue };
            for (voxels, side) in assign_clusters_by_centroid(labels, l, lc, rc) {
                let code = if side == Laterality::Left { e.fs_code } else { right_code } as u16;
                for i in voxels {
                    out.labels[i] = code;
                }
            }
        }
    }
    Ok(out)
}

/// Maps each internal id to its sagittal class id (lateral pairs share the
/// left partner's id).
pub fn merge_sagittal(labels: &LabelVolume, table: &LabelTable) -> LabelVolume {
    labels.map_labels(|l| if l == 0 { 0 } else { table.sagittal_id(l) })
}

/// Inverse of [`merge_sagittal`] given hemisphere centroids: clusters of each
/// shared id are split between the left id and its right partner.
pub fn unmerge_sagittal(
    merged: &LabelVolume,
    table: &LabelTable,
    left_centroid: [f64; 3],
    right_centroid: [f64; 3],
) -> LabelVolume {
    let mut out = merged.clone();
    for l in merged.label_set() {
        let right = table
            .entries()
            .iter()
            .find(|e| e.sagittal_merge_id == Some(l) && e.internal_id != l)
            .map(|e| e.internal_id);
        let Some(right) = right else { continue };
        for (voxels, side) in assign_clusters_by_centroid(merged, l, left_centroid, right_centroid) {
            if side == Laterality::Right {
                for i in voxels {
                    out.labels[i] = right;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fill_box(v: &mut LabelVolume, lo: [usize; 3], hi: [usize; 3], l: u16) {
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                for x in lo[0]..hi[0] {
                    v.set(x, y, z, l);
                }
            }
        }
    }

    /// 16³ phantom: left WM block at low x, right WM block at high x.
    fn two_hemispheres() -> LabelVolume {
        let mut v = LabelVolume::zeros([16; 3], [1.0; 3]);
        fill_box(&mut v, [1, 4, 4], [5, 12, 12], 1);
        fill_box(&mut v, [11, 4, 4], [15, 12, 12], 19);
        v
    }

    #[test]
    fn clusters_on_opposite_sides() {
        let t = LabelTable::dkt();
        let mut v = two_hemispheres();
        // label 35 = caudalmiddlefrontal (1003, 2003)
        fill_box(&mut v, [0, 0, 0], [2, 2, 2], 35);
        fill_box(&mut v, [14, 14, 14], [16, 16, 16], 35);
        let out = lateralize(&v, &t).unwrap();
        // WM centroids (2.5, 7.5, 7.5) and (12.5, 7.5, 7.5); cluster centroids
        // (0.5, 0.5, 0.5) and (14.5, 14.5, 14.5) are nearer left and right resp.
        assert_eq!(out.get(0, 0, 0), 1003);
        assert_eq!(out.get(1, 1, 1), 1003);
        assert_eq!(out.get(15, 15, 15), 2003);
        assert_eq!(out.get(2, 5, 5), 2);
        assert_eq!(out.get(12, 5, 5), 41);
        // voxel counts per cluster preserved
        assert_eq!(out.labels.iter().filter(|&&l| l == 1003).count(), 8);
        assert_eq!(out.labels.iter().filter(|&&l| l == 2003).count(), 8);
    }

    #[test]
    fn strict_dominance_and_identity() {
        let t = LabelTable::dkt();
        let mut v = LabelVolume::zeros([64, 4, 4], [1.0; 3]);
        fill_box(&mut v, [20, 0, 0], [21, 4, 4], 1);
        fill_box(&mut v, [60, 0, 0], [61, 4, 4], 19);
        fill_box(&mut v, [10, 0, 0], [11, 4, 4], 35);
        let out = lateralize(&v, &t).unwrap();
        assert_eq!(out.get(10, 0, 0), 1003);

        let plain = two_hemispheres();
        let out = lateralize(&plain, &t).unwrap();
        assert_eq!(out, plain.map_labels(|l| t.get(l).map(|e| e.fs_code as u16).unwrap_or(0)));
    }

    #[test]
    fn tie_goes_left() {
        let t = LabelTable::dkt();
        let mut v = LabelVolume::zeros([5, 1, 1], [1.0; 3]);
        v.set(0, 0, 0, 1);
        v.set(4, 0, 0, 19);
        v.set(2, 0, 0, 35);
        assert_eq!(lateralize(&v, &t).unwrap().get(2, 0, 0), 1003);
    }

    #[test]
    fn missing_side_is_an_error() {
        let t = LabelTable::dkt();
        let mut v = LabelVolume::zeros([4; 3], [1.0; 3]);
        v.set(0, 0, 0, 1);
        v.set(3, 3, 3, 35);
        assert!(matches!(
            lateralize(&v, &t),
            Err(GridError::MissingWhiteMatter { side: "right" })
        ));
    }

    #[test]
    fn sagittal_merge_counts() {
        let t = LabelTable::dkt();
        let ids: Vec<u16> = t.entries().iter().map(|e| e.internal_id).collect();
        let mut labels = ids.clone();
        labels.resize(80, 0);
        let v = LabelVolume::new([80, 1, 1], [1.0; 3], labels).unwrap();
        assert_eq!(merge_sagittal(&v, &t).label_set().len(), 50);

        let mut mid = LabelVolume::zeros([3, 1, 1], [1.0; 3]);
        let midline: Vec<u16> = t
            .entries()
            .iter()
            .filter(|e| e.laterality == Laterality::Midline)
            .map(|e| e.internal_id)
            .take(3)
            .collect();
        mid.labels.copy_from_slice(&midline);
        assert_eq!(merge_sagittal(&mid, &t), mid);
    }

    #[test]
    fn merge_then_unmerge_roundtrip() {
        let t = LabelTable::dkt();
        let mut v = two_hemispheres();
        // left-side subcortical and cortical structures with their right partners mirrored
        let pairs = [(6u16, 24u16), (13, 28), (34, 65)];
        for (k, &(l, r)) in pairs.iter().enumerate() {
            let y = 1 + 4 * k;
            fill_box(&mut v, [0, y, 0], [2, y + 2, 2], l);
            fill_box(&mut v, [14, y, 0], [16, y + 2, 2], r);
        }
        let lc = label_centroid_mm(&v, 1).unwrap();
        let rc = label_centroid_mm(&v, 19).unwrap();
        let merged = merge_sagittal(&v, &t);
        assert!(merged.label_set().iter().all(|&l| l != 19 && l != 24));
        assert_eq!(unmerge_sagittal(&merged, &t, lc, rc), v);
    }
}
