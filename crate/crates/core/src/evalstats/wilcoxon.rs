use super::special::normal_sf;
use super::{EvalError, Result};

/// Smallest number of nonzero differences accepted by the normal approximation.
pub const MIN_PAIRS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub n_effective: usize,
    pub z: f64,
    /// Two-sided.
    pub p: f64,
}

/// Paired signed-rank test on `x - y`. Zero differences are dropped, tied
/// magnitudes share their average rank, and the normal approximation uses
/// the tie-corrected variance with a continuity correction of 1/2.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(EvalError::InvalidInput(format!("{} vs {} samples", x.len(), y.len())));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|&v| v != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::InvalidInput("non-finite difference".into()));
    }
    let n = d.len();
    if n < MIN_PAIRS {
        return Err(EvalError::TooFewPairs { n, min: MIN_PAIRS });
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let (mut w_plus, mut w_minus, mut tie_term) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + (j + 1)) as f64;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for v in &d[i..=j] {
            if *v > 0.0 {
                w_plus += rank;
            } else {
                w_minus += rank;
            }
        }
        i = j + 1;
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = (2.0 * normal_sf(z)).min(1.0);
    Ok(WilcoxonResult { w: f64::min(w_plus, w_minus), w_plus, w_minus, n_effective: n, z, p })
}

/// Bonferroni-adjusted p-values, capped at 1.
pub fn bonferroni(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    p.iter().map(|&x| (x * m).min(1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-sided exact p over all sign assignments of the observed ranks.
    fn exact_p(x: &[f64], y: &[f64]) -> f64 {
        let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|&v| v != 0.0).collect();
        d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let n = d.len();
        let ranks: Vec<f64> = (0..n)
            .map(|i| {
                let same: Vec<usize> = (0..n).filter(|&j| d[j].abs() == d[i].abs()).collect();
                same.iter().map(|&j| (j + 1) as f64).sum::<f64>() / same.len() as f64
            })
            .collect();
        let mean = ranks.iter().sum::<f64>() / 2.0;
        let obs: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
        let dev = (obs - mean).abs();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if (w - mean).abs() >= dev - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn identical_samples_have_no_pairs() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert!(matches!(wilcoxon_signed_rank(&x, &x), Err(EvalError::TooFewPairs { n: 0, .. })));
    }

    #[test]
    fn constant_shift() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(r.w, 0.0);
        assert_eq!(r.w_minus, 210.0);
        assert!(r.p < 1e-4);
        assert!(exact_p(&x, &y) < 1e-4);
    }

    #[test]
    fn normal_approximation_close_to_exact_at_ten() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.0)).collect();
            let shift = rng.random_range(-0.4..0.4);
            let y: Vec<f64> = x.iter().map(|v| v + shift + rng.random_range(-0.5..0.5)).collect();
            let r = wilcoxon_signed_rank(&x, &y).unwrap();
            assert!((r.p - exact_p(&x, &y)).abs() < 0.02);
        }
    }

    #[test]
    fn scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = wilcoxon_signed_rank(&x, &y).unwrap();
        let b = wilcoxon_signed_rank(&x.iter().map(|v| v * 4.0).collect::<Vec<_>>(), &y.iter().map(|v| v * 4.0).collect::<Vec<_>>()).unwrap();
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn bonferroni_caps() {
        assert_eq!(bonferroni(&[0.01, 0.2, 0.5]), vec![0.03, 0.6000000000000001, 1.0]);
    }
}
