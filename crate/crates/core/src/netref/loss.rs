use super::{NetError, Result};

const LOG_EPS: f64 = 1e-12;
const DICE_EPS: f64 = 1e-7;
const NORM_TOL: f64 = 1e-5;

/// Per-class loss weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(l: usize) -> Self {
        Self(vec![1.0; l])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || !self.0.iter().any(|&w| w > 0.0) {
            return Err(NetError::InvalidWeights(format!("class weights {:?}", self.0)));
        }
        Ok(())
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// `median(f) / f_c` over present classes. Absent classes take the largest
/// weight among present ones.
pub fn median_frequency_weights(histogram: &[u64]) -> ClassWeights {
    let mut present: Vec<f64> = histogram.iter().filter(|&&f| f > 0).map(|&f| f as f64).collect();
    if present.is_empty() {
        log::warn!("empty label histogram; using uniform class weights");
        return ClassWeights::uniform(histogram.len());
    }
    present.sort_by(f64::total_cmp);
    let med = median(&present);
    let max_w = med / present[0];
    let absent = histogram.iter().filter(|&&f| f == 0).count();
    if absent > 0 {
        log::info!("{absent} classes absent from the histogram get weight {max_w}");
    }
    ClassWeights(histogram.iter().map(|&f| if f > 0 { med / f as f64 } else { max_w }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub cross_entropy: f64,
    pub dice: f64,
    pub total: f64,
}

/// Weighted cross-entropy plus `1 − soft Dice`.
///
/// `pred` is pixel-major with `L = weights.len()` columns, `target` holds
/// each pixel's class. Cross-entropy is normalized by the summed target
/// weights, so it is scale free in the weights. Dice averages over classes
/// present in the prediction or the target.
pub fn composite_loss(pred: &[f64], target: &[usize], weights: &ClassWeights) -> Result<LossTerms> {
    weights.validate()?;
    let l = weights.0.len();
    let n = target.len();
    if pred.len() != n * l {
        return super::shape_err(format!("{} predictions for {n} pixels of {l} classes", pred.len()));
    }
    if let Some(&t) = target.iter().find(|&&t| t >= l) {
        return super::shape_err(format!("target class {t} outside {l} classes"));
    }
    let mut ce_num = 0.0;
    let mut ce_den = 0.0;
    let mut inter = vec![0.0; l];
    let mut psum = vec![0.0; l];
    let mut gsum = vec![0.0; l];
    for (i, &t) in target.iter().enumerate() {
        let row = &pred[i * l..(i + 1) * l];
        let s: f64 = row.iter().sum();
        if !((s - 1.0).abs() <= NORM_TOL) {
            return Err(NetError::ProbNotNormalized { index: i, sum: s });
        }
        let w = weights.0[t];
        ce_num -= w * row[t].max(LOG_EPS).ln();
        ce_den += w;
        for (k, &p) in row.iter().enumerate() {
            psum[k] += p;
        }
        inter[t] += row[t];
        gsum[t] += 1.0;
    }
    let cross_entropy = if ce_den > 0.0 { ce_num / ce_den } else { 0.0 };
    let mut dsum = 0.0;
    let mut count = 0usize;
    for k in 0..l {
        if psum[k] + gsum[k] > 0.0 {
            dsum += 2.0 * inter[k] / (psum[k] + gsum[k] + DICE_EPS);
            count += 1;
        }
    }
    let dice = if count > 0 { 1.0 - dsum / count as f64 } else { 0.0 };
    Ok(LossTerms { cross_entropy, dice, total: cross_entropy + dice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_hot(target: &[usize], l: usize) -> Vec<f64> {
        target.iter().flat_map(|&t| (0..l).map(move |k| if k == t { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn median_weights() {
        assert_eq!(median_frequency_weights(&[1, 2, 4]).0, vec![2.0, 1.0, 0.5]);
        assert_eq!(median_frequency_weights(&[7, 7, 7, 7]).0, vec![1.0; 4]);
        // present (1, 3): median 2, largest weight 2
        assert_eq!(median_frequency_weights(&[1, 0, 3]).0, vec![2.0, 2.0, 2.0 / 3.0]);
        let w = median_frequency_weights(&[1, 10, 100]);
        assert!(w.0[0] > 1.0 && w.0[2] < 1.0);
    }

    #[test]
    fn perfect_prediction() {
        let target = [0, 2, 1, 1, 3];
        let r = composite_loss(&one_hot(&target, 4), &target, &ClassWeights(vec![1.0, 2.0, 0.5, 3.0])).unwrap();
        assert!(r.cross_entropy.abs() < 1e-12);
        assert!(r.dice.abs() <= 1e-6 && r.total <= 1e-6);
    }

    #[test]
    fn uniform_prediction_cross_entropy() {
        let l = 5;
        let w = ClassWeights(vec![0.5, 1.0, 2.0, 1.5, 1.0]);
        for target in [vec![0, 0, 0], vec![1, 4, 2, 3]] {
            let pred = vec![1.0 / l as f64; target.len() * l];
            let r = composite_loss(&pred, &target, &w).unwrap();
            // weights normalized to mean 1: sum w_c / L * ln L
            let wn: Vec<f64> = w.0.iter().map(|x| x * l as f64 / w.0.iter().sum::<f64>()).collect();
            let closed = wn.iter().sum::<f64>() / l as f64 * (l as f64).ln();
            assert!((r.cross_entropy - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_mass_toward_target_lowers_loss() {
        let w = ClassWeights::uniform(2);
        let mut last = f64::INFINITY;
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = composite_loss(&[1.0 - p, p], &[1], &w).unwrap();
            assert!(r.total < last);
            last = r.total;
        }
    }

    #[test]
    fn unnormalized_rejected() {
        let e = composite_loss(&[0.5, 0.6], &[0], &ClassWeights::uniform(2));
        assert!(matches!(e, Err(NetError::ProbNotNormalized { index: 0, .. })));
    }

    proptest! {
        #[test]
        fn loss_nonnegative(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0usize..3), 1..20)) {
            let mut pred = Vec::new();
            let mut target = Vec::new();
            for (a, b, c, t) in raw {
                let s = a + b + c + 1e-9;
                pred.extend([a / s, b / s, (c + 1e-9) / s]);
                target.push(t);
            }
            let r = composite_loss(&pred, &target, &median_frequency_weights(&[3, 1, 2])).unwrap();
            prop_assert!(r.cross_entropy >= 0.0 && r.dice >= 0.0 && r.total >= 0.0);
        }
    }
}
