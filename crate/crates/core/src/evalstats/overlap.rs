use super::{EvalError, Result};
use crate::io::LabelTable;
use crate::voxelgrid::{BinaryMask, LabelSpace, LabelVolume};

fn check_grid(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if !a.header.same_grid(&b.header) {
        return Err(EvalError::GridMismatch(format!("{:?} vs {:?}", a.header.dims, b.header.dims)));
    }
    Ok(())
}

/// `2|G∩P| / (|G|+|P|)`; two empty masks agree perfectly (1).
pub fn dice(g: &BinaryMask, p: &BinaryMask) -> Result<f64> {
    check_grid(g, p)?;
    let (mut inter, mut ng, mut np) = (0usize, 0usize, 0usize);
    for (&a, &b) in g.bits.iter().zip(&p.bits) {
        ng += a as usize;
        np += b as usize;
        inter += (a && b) as usize;
    }
    if ng + np == 0 {
        log::debug!("dice of two empty masks taken as 1");
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (ng + np) as f64)
}

/// Whether the two directed means are summed or averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HausdorffForm {
    #[default]
    Sum,
    Halved,
}

/// 1-D lower envelope of parabolas (Felzenszwalb-Huttenlocher) over
/// samples spaced `s` apart. `f` holds squared distances, `INF` for none.
fn edt_1d(f: &mut [f64], s: f64, v: &mut Vec<usize>, z: &mut Vec<f64>, out: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    out.clear();
    let pos = |q: usize| q as f64 * s;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            let Some(&r) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let (xq, xr) = (pos(q), pos(r));
            let cut = ((f[q] + xq * xq) - (f[r] + xr * xr)) / (2.0 * (xq - xr));
            if cut <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(cut);
                break;
            }
        }
    }
    if v.is_empty() {
        return;
    }
    let mut k = 0;
    for q in 0..n {
        let x = pos(q);
        while k + 1 < v.len() && z[k + 1] < x {
            k += 1;
        }
        let d = x - pos(v[k]);
        out.push(d * d + f[v[k]]);
    }
    f.copy_from_slice(out);
}

/// Exact squared Euclidean distance (mm²) from every voxel center to the
/// nearest set voxel, `INF` everywhere when the mask is empty.
pub fn squared_edt(mask: &BinaryMask) -> Vec<f64> {
    let d = mask.header.dims;
    let s = mask.header.spacing();
    let mut dist: Vec<f64> = mask.bits.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let (mut v, mut z, mut out) = (Vec::new(), Vec::new(), Vec::new());
    let mut line = Vec::new();
    for axis in 0..3 {
        let (a1, a2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..d[a2] {
            for i in 0..d[a1] {
                line.clear();
                let idx = |t: usize| {
                    let mut p = [0; 3];
                    p[axis] = t;
                    p[a1] = i;
                    p[a2] = j;
                    mask.header.index(p[0], p[1], p[2])
                };
                line.extend((0..d[axis]).map(|t| dist[idx(t)]));
                edt_1d(&mut line, s[axis], &mut v, &mut z, &mut out);
                for (t, &x) in line.iter().enumerate() {
                    dist[idx(t)] = x;
                }
            }
        }
    }
    dist
}

/// Smallest box holding every set voxel of either mask.
fn joint_bbox(a: &BinaryMask, b: &BinaryMask) -> Option<([usize; 3], [usize; 3])> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0; 3];
    let mut any = false;
    for (i, (&x, &y)) in a.bits.iter().zip(&b.bits).enumerate() {
        if x || y {
            any = true;
            let c = a.header.coords(i);
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
    }
    any.then_some((lo, hi))
}

fn crop(m: &BinaryMask, lo: [usize; 3], hi: [usize; 3]) -> BinaryMask {
    let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    BinaryMask::from_fn(dims, m.header.voxel_size_mm, |x, y, z| m.get(x + lo[0], y + lo[1], z + lo[2]))
}

fn directed_mean(from: &BinaryMask, to_edt: &[f64]) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (&b, &d2) in from.bits.iter().zip(to_edt) {
        if b {
            s += d2.sqrt();
            n += 1;
        }
    }
    s / n as f64
}

/// Average Hausdorff distance in mm with the two directed means summed.
pub fn avg_hausdorff(g: &BinaryMask, p: &BinaryMask) -> Result<f64> {
    avg_hausdorff_with(g, p, HausdorffForm::Sum)
}

pub fn avg_hausdorff_with(g: &BinaryMask, p: &BinaryMask, form: HausdorffForm) -> Result<f64> {
    check_grid(g, p)?;
    if g.is_empty() {
        return Err(EvalError::EmptySet { side: "ground truth" });
    }
    if p.is_empty() {
        return Err(EvalError::EmptySet { side: "prediction" });
    }
    // nearest points always lie inside the joint bounding box
    let (lo, hi) = joint_bbox(g, p).expect("nonempty");
    let (g, p) = (crop(g, lo, hi), crop(p, lo, hi));
    let sum = directed_mean(&g, &squared_edt(&p)) + directed_mean(&p, &squared_edt(&g));
    Ok(match form {
        HausdorffForm::Sum => sum,
        HausdorffForm::Halved => 0.5 * sum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScore {
    pub label: u16,
    pub cortical: bool,
    /// `None` when the label is absent from both volumes.
    pub dice: Option<f64>,
    /// `None` unless the label is present in both volumes.
    pub avg_hd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    pub labels: Vec<LabelScore>,
    pub cortical_mean_dice: Option<f64>,
    pub subcortical_mean_dice: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Per-label Dice and average Hausdorff distance over every label of the
/// table in `space`, plus cortical and subcortical mean Dice.
pub fn dice_per_label(
    gt: &LabelVolume,
    pred: &LabelVolume,
    table: &LabelTable,
    space: LabelSpace,
) -> Result<LabelScores> {
    if !gt.header.same_grid(&pred.header) {
        return Err(EvalError::GridMismatch(format!("{:?} vs {:?}", gt.dims(), pred.dims())));
    }
    let mut ids: Vec<(u16, bool)> = match space {
        LabelSpace::Internal => table.entries().iter().map(|e| (e.internal_id, e.is_cortical())).collect(),
        LabelSpace::FreeSurfer => table
            .entries()
            .iter()
            .flat_map(|e| e.fs_codes().into_iter().map(move |c| (c as u16, e.is_cortical())))
            .collect(),
    };
    ids.sort_unstable();
    let mut labels = Vec::with_capacity(ids.len());
    for (label, cortical) in ids {
        let g = gt.mask_of(|l| l == label);
        let p = pred.mask_of(|l| l == label);
        let (eg, ep) = (g.is_empty(), p.is_empty());
        let score = if eg && ep {
            LabelScore { label, cortical, dice: None, avg_hd: None }
        } else {
            let hd = if eg || ep { None } else { Some(avg_hausdorff(&g, &p)?) };
            LabelScore { label, cortical, dice: Some(dice(&g, &p)?), avg_hd: hd }
        };
        labels.push(score);
    }
    let group = |c: bool| mean(labels.iter().filter(|s| s.cortical == c).filter_map(|s| s.dice));
    Ok(LabelScores { cortical_mean_dice: group(true), subcortical_mean_dice: group(false), labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(rng: &mut ChaCha8Rng, d: [usize; 3], vs: [f32; 3], fill: f64) -> BinaryMask {
        BinaryMask::from_fn(d, vs, |_, _, _| rng.random_bool(fill))
    }

    fn brute_directed(a: &BinaryMask, b: &BinaryMask) -> f64 {
        let (pa, pb) = (a.points_mm(), b.points_mm());
        let total: f64 = pa
            .iter()
            .map(|x| {
                pb.iter()
                    .map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        total / pa.len() as f64
    }

    #[test]
    fn dice_examples() {
        let d = [4, 4, 1];
        let g = BinaryMask::from_fn(d, [1.0; 3], |x, _, _| x < 1);
        let p = BinaryMask::from_fn(d, [1.0; 3], |x, y, _| (x < 1 && y < 2) || (x == 3 && y < 2));
        assert_eq!(dice(&g, &p).unwrap(), 0.5);
        assert_eq!(dice(&g, &g).unwrap(), 1.0);
        let q = BinaryMask::from_fn(d, [1.0; 3], |x, _, _| x == 2);
        assert_eq!(dice(&g, &q).unwrap(), 0.0);
        let e = BinaryMask::empty(d, [1.0; 3]);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert!(matches!(dice(&g, &BinaryMask::empty([4, 4, 2], [1.0; 3])), Err(EvalError::GridMismatch(_))));
    }

    #[test]
    fn hausdorff_examples() {
        let d = [6, 1, 1];
        let g = BinaryMask::from_fn(d, [1.0; 3], |x, _, _| x == 1);
        let p = BinaryMask::from_fn(d, [1.0; 3], |x, _, _| x == 4);
        assert_eq!(avg_hausdorff(&g, &p).unwrap(), 6.0);
        assert_eq!(avg_hausdorff_with(&g, &p, HausdorffForm::Halved).unwrap(), 3.0);
        assert_eq!(avg_hausdorff(&g, &g).unwrap(), 0.0);
        let e = BinaryMask::empty(d, [1.0; 3]);
        assert!(matches!(avg_hausdorff(&e, &p), Err(EvalError::EmptySet { side: "ground truth" })));
        assert!(matches!(avg_hausdorff(&g, &e), Err(EvalError::EmptySet { side: "prediction" })));
    }

    #[test]
    fn edt_matches_brute_force_anisotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_mask(&mut rng, [7, 5, 6], [1.0, 0.7, 2.5], 0.05);
        let pts = m.points_mm();
        let e = squared_edt(&m);
        for (i, &d2) in e.iter().enumerate() {
            let [x, y, z] = m.header.coords(i);
            let c = m.header.center_mm(x, y, z);
            let want = pts
                .iter()
                .map(|p| (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2) + (c[2] - p[2]).powi(2))
                .fold(f64::INFINITY, f64::min);
            assert!((d2 - want).abs() < 1e-9);
        }
    }

    #[test]
    fn scales_with_voxel_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_mask(&mut rng, [6, 6, 6], [1.0; 3], 0.2);
        let p = random_mask(&mut rng, [6, 6, 6], [1.0; 3], 0.2);
        let h1 = avg_hausdorff(&g, &p).unwrap();
        let scale = |m: &BinaryMask| BinaryMask { header: crate::io::VolumeHeader { voxel_size_mm: [2.0; 3], ..m.header }, bits: m.bits.clone() };
        let h2 = avg_hausdorff(&scale(&g), &scale(&p)).unwrap();
        assert!((h2 - 2.0 * h1).abs() < 1e-12);
    }

    #[test]
    fn per_label_hand_counts() {
        let t = LabelTable::dkt();
        // 8^3: label 6 in x < 4 of gt, x < 3 of pred; label 35 only in pred
        let gt = LabelVolume::new([8; 3], [1.0; 3], (0..512).map(|i| if i % 8 < 4 { 6 } else { 0 }).collect()).unwrap();
        let pred = LabelVolume::new(
            [8; 3],
            [1.0; 3],
            (0..512).map(|i| if i % 8 < 3 { 6 } else if i % 8 == 7 { 35 } else { 0 }).collect(),
        )
        .unwrap();
        let s = dice_per_label(&gt, &pred, &t, LabelSpace::Internal).unwrap();
        assert_eq!(s.labels.len(), 78);
        let get = |l: u16| s.labels.iter().find(|x| x.label == l).unwrap();
        // |G| = 256, |P| = 192, overlap 192
        assert!((get(6).dice.unwrap() - 384.0 / 448.0).abs() < 1e-15);
        // directed: gt plane x=3 is 1 mm from pred, pred is inside gt
        assert!((get(6).avg_hd.unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(get(35).dice, Some(0.0));
        assert_eq!(get(35).avg_hd, None);
        assert_eq!(get(13).dice, None);
        assert!((s.subcortical_mean_dice.unwrap() - 384.0 / 448.0).abs() < 1e-15);
        assert_eq!(s.cortical_mean_dice, Some(0.0));

        let same = dice_per_label(&gt, &gt, &t, LabelSpace::Internal).unwrap();
        assert!(same.labels.iter().all(|x| x.dice.is_none() || x.dice == Some(1.0)));
        let fs = dice_per_label(&gt, &gt, &t, LabelSpace::FreeSurfer).unwrap();
        assert_eq!(fs.labels.iter().filter(|x| x.cortical).count(), 62);
        assert_eq!(fs.labels.iter().filter(|x| !x.cortical).count(), 33);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn fast_paths_match_brute_force(seed in any::<u64>(), nx in 1usize..9, ny in 1usize..9, nz in 1usize..9, fill in 0.02f64..0.6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vs = [rng.random_range(0.5f32..2.0), rng.random_range(0.5f32..2.0), rng.random_range(0.5f32..2.0)];
            let g = random_mask(&mut rng, [nx, ny, nz], vs, fill);
            let p = random_mask(&mut rng, [nx, ny, nz], vs, fill);
            let d = dice(&g, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, dice(&p, &g).unwrap());
            if !g.is_empty() && !p.is_empty() {
                let h = avg_hausdorff(&g, &p).unwrap();
                prop_assert!((h - (brute_directed(&g, &p) + brute_directed(&p, &g))).abs() < 1e-9);
                prop_assert!((h - avg_hausdorff(&p, &g).unwrap()).abs() < 1e-12);
            }
        }
    }
}
