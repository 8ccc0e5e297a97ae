use super::{shape_err, NetError, Result};
use crate::io::{DType, LabelTable, Volume, VolumeHeader, VoxelData};
use crate::voxelgrid::LabelVolume;

const NORM_TOL: f64 = 1e-5;

/// Per-voxel class probabilities; voxel-major, `class_ids[k]` names column k.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVolume {
    pub dims: [usize; 3],
    pub voxel_size_mm: [f32; 3],
    pub class_ids: Vec<u16>,
    pub values: Vec<f64>,
}

impl ProbVolume {
    pub fn new(dims: [usize; 3], voxel_size_mm: [f32; 3], class_ids: Vec<u16>, values: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if class_ids.is_empty() || values.len() != n * class_ids.len() {
            return shape_err(format!(
                "{} values for {n} voxels and {} classes",
                values.len(),
                class_ids.len()
            ));
        }
        Ok(Self { dims, voxel_size_mm, class_ids, values })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn row(&self, voxel: usize) -> &[f64] {
        let l = self.classes();
        &self.values[voxel * l..(voxel + 1) * l]
    }

    /// One-hot probabilities of a label volume over `class_ids`; labels
    /// outside the list fall on class 0.
    pub fn one_hot(labels: &LabelVolume, class_ids: Vec<u16>) -> Self {
        let l = class_ids.len();
        let mut values = vec![0.0; labels.labels.len() * l];
        for (v, &lab) in labels.labels.iter().enumerate() {
            let k = class_ids.iter().position(|&c| c == lab).unwrap_or(0);
            values[v * l + k] = 1.0;
        }
        Self { dims: labels.dims(), voxel_size_mm: labels.header.voxel_size_mm, class_ids, values }
    }

    /// F32 volume of shape `X×Y×(Z·C)`: class planes stacked along z in
    /// `class_ids` order.
    pub fn to_stacked_volume(&self) -> Volume {
        let [x, y, z] = self.dims;
        let l = self.classes();
        let n = self.voxel_count();
        let mut data = vec![0f32; n * l];
        for k in 0..l {
            for v in 0..n {
                data[k * n + v] = self.values[v * l + k] as f32;
            }
        }
        let header = VolumeHeader::new([x, y, z * l], self.voxel_size_mm, DType::F32);
        Volume { header, data: VoxelData::F32(data) }
    }

    pub fn from_stacked_volume(vol: &Volume, class_ids: Vec<u16>) -> Result<Self> {
        let l = class_ids.len();
        let [x, y, zl] = vol.header.dims;
        if l == 0 || zl % l != 0 {
            return shape_err(format!("z extent {zl} is not a multiple of {l} classes"));
        }
        let dims = [x, y, zl / l];
        let n = x * y * (zl / l);
        let raw = vol.data.to_f64();
        let mut values = vec![0.0; n * l];
        for k in 0..l {
            for v in 0..n {
                values[v * l + k] = raw[k * n + v];
            }
        }
        Self::new(dims, vol.header.voxel_size_mm, class_ids, values)
    }

    fn check_normalized(&self) -> Result<()> {
        for v in 0..self.voxel_count() {
            let s: f64 = self.row(v).iter().sum();
            if (s - 1.0).abs() > NORM_TOL || !s.is_finite() {
                return Err(NetError::ProbNotNormalized { index: v, sum: s });
            }
        }
        Ok(())
    }
}

/// Mixing weights of the coronal, axial and sagittal views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewWeights {
    pub coronal: f64,
    pub axial: f64,
    pub sagittal: f64,
}

impl Default for ViewWeights {
    fn default() -> Self {
        Self { coronal: 1.0, axial: 1.0, sagittal: 0.5 }
    }
}

impl ViewWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.coronal, self.axial, self.sagittal];
        if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) || w.iter().all(|&x| x == 0.0) {
            return Err(NetError::InvalidWeights(format!("view weights {w:?}")));
        }
        Ok(())
    }
}

/// Weighted average of the three views followed by argmax.
///
/// Coronal and axial volumes cover the table's internal ids in ascending
/// order, optionally led by background 0. The sagittal volume covers the
/// sagittal classes with the same background convention. Each full class
/// takes the sagittal mass of its merged class, so a merged pair's mass
/// lands on both sides; the expanded row is renormalized to sum to 1
/// before mixing. Argmax ties go to the lower class id.
pub fn view_aggregate(
    p_cor: &ProbVolume,
    p_ax: &ProbVolume,
    p_sag: &ProbVolume,
    table: &LabelTable,
    weights: ViewWeights,
) -> Result<(LabelVolume, ProbVolume)> {
    weights.validate()?;
    let ids: Vec<u16> = table.entries().iter().map(|e| e.internal_id).collect();
    let mut full: Vec<u16> = ids.clone();
    full.sort_unstable();
    let background = p_cor.class_ids.first() == Some(&0);
    if background {
        full.insert(0, 0);
    }
    let mut sag_classes = table.sagittal_classes();
    if background {
        sag_classes.insert(0, 0);
    }
    for (name, p, want) in [("coronal", p_cor, &full), ("axial", p_ax, &full), ("sagittal", p_sag, &sag_classes)] {
        if &p.class_ids != want {
            return shape_err(format!("{name} classes do not match the label table ({} vs {})", p.classes(), want.len()));
        }
    }
    if p_ax.dims != p_cor.dims || p_sag.dims != p_cor.dims {
        return shape_err("view volumes differ in grid dimensions");
    }
    p_cor.check_normalized()?;
    p_ax.check_normalized()?;
    p_sag.check_normalized()?;

    let sag_col: Vec<usize> = full
        .iter()
        .map(|&c| {
            let s = if c == 0 { 0 } else { table.sagittal_id(c) };
            sag_classes.binary_search(&s).expect("sagittal id listed")
        })
        .collect();
    let wsum = weights.coronal + weights.axial + weights.sagittal;
    let (wc, wa, ws) = (weights.coronal / wsum, weights.axial / wsum, weights.sagittal / wsum);
    let l = full.len();
    let n = p_cor.voxel_count();
    let mut values = vec![0.0; n * l];
    let mut labels = vec![0u16; n];
    let mut expanded = vec![0.0; l];
    for v in 0..n {
        let srow = p_sag.row(v);
        for (e, &k) in expanded.iter_mut().zip(&sag_col) {
            *e = srow[k];
        }
        let es: f64 = expanded.iter().sum();
        let (cr, ar) = (p_cor.row(v), p_ax.row(v));
        let out = &mut values[v * l..(v + 1) * l];
        for k in 0..l {
            let sag = if es > 0.0 { expanded[k] / es } else { 0.0 };
            out[k] = wc * cr[k] + wa * ar[k] + ws * sag;
        }
        if es <= 0.0 {
            // sagittal view gives no mass to any listed class; mix the other two
            let s: f64 = out.iter().sum();
            out.iter_mut().for_each(|x| *x /= s);
        }
        let mut best = 0;
        for k in 1..l {
            if out[k] > out[best] {
                best = k;
            }
        }
        labels[v] = full[best];
    }
    let label_vol = LabelVolume::new(p_cor.dims, p_cor.voxel_size_mm, labels).expect("dims match");
    Ok((label_vol, ProbVolume { dims: p_cor.dims, voxel_size_mm: p_cor.voxel_size_mm, class_ids: full, values }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_ids(t: &LabelTable) -> Vec<u16> {
        let mut v: Vec<u16> = t.entries().iter().map(|e| e.internal_id).collect();
        v.sort_unstable();
        v
    }

    fn point(ids: &[u16], hot: u16) -> Vec<f64> {
        ids.iter().map(|&c| if c == hot { 1.0 } else { 0.0 }).collect()
    }

    fn random_probs(rng: &mut ChaCha8Rng, n: usize, ids: Vec<u16>) -> ProbVolume {
        let l = ids.len();
        let mut values = Vec::with_capacity(n * l);
        for _ in 0..n {
            let row: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..1.0f64).powi(4)).collect();
            let s: f64 = row.iter().sum();
            values.extend(row.iter().map(|x| x / s));
        }
        ProbVolume::new([n, 1, 1], [1.0; 3], ids, values).unwrap()
    }

    #[test]
    fn sagittal_copy_to_both_sides() {
        let t = LabelTable::dkt();
        assert_eq!(full_ids(&t).len(), 78);
        assert_eq!(t.sagittal_classes().len(), 50);
        let full = full_ids(&t);
        let sag = t.sagittal_classes();
        // cor and ax vote 6 (left thalamus), sagittal votes merged thalamus
        let pc = ProbVolume::new([1, 1, 1], [1.0; 3], full.clone(), point(&full, 6)).unwrap();
        let ps = ProbVolume::new([1, 1, 1], [1.0; 3], sag.clone(), point(&sag, 6)).unwrap();
        let (lab, p) = view_aggregate(&pc, &pc, &ps, &t, ViewWeights::default()).unwrap();
        assert_eq!(lab.labels, vec![6]);
        let k6 = full.binary_search(&6).unwrap();
        let k24 = full.binary_search(&24).unwrap();
        assert!((p.values[k6] - (2.0 + 0.25) / 2.5).abs() < 1e-12);
        assert!((p.values[k24] - 0.25 / 2.5).abs() < 1e-12);
        assert!((p.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn majority_of_two_views_wins() {
        let t = LabelTable::dkt();
        let (full, sag) = (full_ids(&t), t.sagittal_classes());
        // A = 35 (merged, unlateralized), B = 59 on sagittal
        let pa = ProbVolume::new([1, 1, 1], [1.0; 3], full.clone(), point(&full, 35)).unwrap();
        let ps = ProbVolume::new([1, 1, 1], [1.0; 3], sag.clone(), point(&sag, 12)).unwrap();
        let (lab, p) = view_aggregate(&pa, &pa, &ps, &t, ViewWeights::default()).unwrap();
        assert_eq!(lab.labels, vec![35]);
        assert!((p.values[full.binary_search(&35).unwrap()] - 2.0 / 2.5).abs() < 1e-12);
        assert!((p.values[full.binary_search(&12).unwrap()] - 0.5 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn identical_full_views_pass_through() {
        let t = LabelTable::dkt();
        let full = full_ids(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_probs(&mut rng, 20, full.clone());
        // a sagittal view consistent with p: merged mass summed
        let sag = t.sagittal_classes();
        let mut sv = vec![0.0; 20 * sag.len()];
        for v in 0..20 {
            for (k, &c) in full.iter().enumerate() {
                let s = sag.binary_search(&t.sagittal_id(c)).unwrap();
                sv[v * sag.len() + s] += p.row(v)[k];
            }
        }
        let ps = ProbVolume::new([20, 1, 1], [1.0; 3], sag, sv).unwrap();
        let w = ViewWeights { coronal: 1.0, axial: 1.0, sagittal: 0.0 };
        let (_, out) = view_aggregate(&p, &p, &ps, &t, w).unwrap();
        for (a, b) in out.values.iter().zip(&p.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = LabelTable::dkt();
        let (full, sag) = (full_ids(&t), t.sagittal_classes());
        let pc = ProbVolume::new([1, 1, 1], [1.0; 3], full.clone(), point(&full, 6)).unwrap();
        let ps = ProbVolume::new([1, 1, 1], [1.0; 3], sag.clone(), point(&sag, 6)).unwrap();
        let mut bad = pc.clone();
        bad.values[0] = 0.01;
        assert!(matches!(
            view_aggregate(&bad, &pc, &ps, &t, ViewWeights::default()),
            Err(NetError::ProbNotNormalized { index: 0, .. })
        ));
        assert!(matches!(view_aggregate(&pc, &pc, &pc, &t, ViewWeights::default()), Err(NetError::ShapeMismatch(_))));
        let zero = ViewWeights { coronal: 0.0, axial: 0.0, sagittal: 0.0 };
        assert!(view_aggregate(&pc, &pc, &ps, &t, zero).is_err());
    }

    #[test]
    fn background_column_supported() {
        let t = LabelTable::dkt();
        let mut full = full_ids(&t);
        full.insert(0, 0);
        let mut sag = t.sagittal_classes();
        sag.insert(0, 0);
        let pc = ProbVolume::new([1, 1, 1], [1.0; 3], full.clone(), point(&full, 0)).unwrap();
        let ps = ProbVolume::new([1, 1, 1], [1.0; 3], sag.clone(), point(&sag, 0)).unwrap();
        let (lab, _) = view_aggregate(&pc, &pc, &ps, &t, ViewWeights::default()).unwrap();
        assert_eq!(lab.labels, vec![0]);
    }

    #[test]
    fn stacked_volume_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = random_probs(&mut rng, 24, vec![1, 2, 3]);
        p.dims = [2, 3, 4];
        p.values.iter_mut().for_each(|x| *x = f64::from(*x as f32));
        let vol = p.to_stacked_volume();
        assert_eq!(vol.header.dims, [2, 3, 12]);
        assert_eq!(ProbVolume::from_stacked_volume(&vol, vec![1, 2, 3]).unwrap(), p);
    }

    proptest! {
        #[test]
        fn normalized_and_scale_free(seed in any::<u64>(), wc in 0.0f64..2.0, wa in 0.0f64..2.0, ws in 0.01f64..2.0, k in 0.1f64..10.0) {
            let t = LabelTable::dkt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pc = random_probs(&mut rng, 6, full_ids(&t));
            let pa = random_probs(&mut rng, 6, full_ids(&t));
            let ps = random_probs(&mut rng, 6, t.sagittal_classes());
            let w = ViewWeights { coronal: wc, axial: wa, sagittal: ws };
            let (l1, p1) = view_aggregate(&pc, &pa, &ps, &t, w).unwrap();
            for v in 0..6 {
                prop_assert!((p1.row(v).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            let w2 = ViewWeights { coronal: wc * k, axial: wa * k, sagittal: ws * k };
            let (l2, p2) = view_aggregate(&pc, &pa, &ps, &t, w2).unwrap();
            prop_assert_eq!(l1.labels, l2.labels);
            for (a, b) in p1.values.iter().zip(&p2.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
