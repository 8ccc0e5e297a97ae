//! Volume to surface to measurement chain on a voxel shell.

use cortexkit::evalstats::dice_per_label;
use cortexkit::io::{read_mesh, read_volume, write_mesh, write_volume, LabelTable};
use cortexkit::surfgen::{euler_defects, marching_cubes, spectral_sphere_map};
use cortexkit::surfmeasure::{roi_stats, sample_labels_to_surface, thickness, SamplingOptions};
use cortexkit::voxelgrid::{lateralize, LabelSpace};
use cortexkit::LabelVolume;

/// Left hemisphere ball: white matter (1) inside, superior frontal (59)
/// above z = c and cuneus (36) below.
fn shell() -> LabelVolume {
    let mut v = LabelVolume::zeros([32, 32, 32], [1.0; 3]);
    for z in 0..32 {
        for y in 0..32 {
            for x in 0..32 {
                let d = [x as f64 - 15.5, y as f64 - 15.5, z as f64 - 15.5];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let l = if r <= 7.0 {
                    1
                } else if r <= 10.0 {
                    if d[2] > 0.0 { 59 } else { 36 }
                } else {
                    0
                };
                v.set(x, y, z, l);
            }
        }
    }
    v
}

#[test]
fn shell_to_regions() {
    let table = LabelTable::dkt();
    let labels = shell();
    let fs = lateralize(&labels, &table).unwrap();
    let white = marching_cubes(&labels.mask_of(|l| l == 1)).unwrap();
    let pial = marching_cubes(&labels.mask_of(|l| l != 0)).unwrap();
    for m in [&white, &pial] {
        let t = euler_defects(m).unwrap();
        assert_eq!((t.euler, t.defect_count), (2, 0));
    }
    let sphere = spectral_sphere_map(&white).unwrap();
    assert!(sphere.signed_volume() > 0.0);

    let lab = sample_labels_to_surface(&labels, &white, &table, SamplingOptions::default()).unwrap();
    assert!(lab.labels.iter().all(|&l| l == 59 || l == 36));
    let th = thickness(&white, &pial).unwrap();
    let curv = vec![0.0; white.vertices.len()];
    let stats = roi_stats(&lab, &th.values, &curv, &white).unwrap();
    assert_eq!(stats.iter().map(|s| s.roi).collect::<Vec<_>>(), vec![36, 59]);
    for s in &stats {
        assert!((s.mean_thickness - 3.0).abs() < 0.5, "{s:?}");
    }
    let ratio = stats[0].area_mm2 / stats[1].area_mm2;
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");

    let scores = dice_per_label(&fs, &fs, &table, LabelSpace::FreeSurfer).unwrap();
    assert_eq!(scores.cortical_mean_dice, Some(1.0));
}

#[test]
fn files_round_trip_through_the_chain() {
    let d = tempfile::tempdir().unwrap();
    let labels = shell();
    let vp = d.path().join("labels.fslv");
    let v = labels.to_volume();
    write_volume(&v.header, &v.data, &vp).unwrap();
    let back = LabelVolume::from_volume(&read_volume(&vp).unwrap()).unwrap();
    assert_eq!(back, labels);
    let mesh = marching_cubes(&back.mask_of(|l| l == 1)).unwrap();
    let mp = d.path().join("white.off");
    write_mesh(&mesh, &mp).unwrap();
    assert_eq!(read_mesh(&mp).unwrap(), mesh);
}
