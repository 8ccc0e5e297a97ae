use super::special::f_quantile;
use super::{EvalError, Result};

const ALPHA: f64 = 0.05;

/// Single-measure absolute-agreement ICC with its 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IccResult {
    pub icc: f64,
    pub lower: f64,
    pub upper: f64,
    pub msr: f64,
    pub msc: f64,
    pub mse: f64,
}

/// Two-way random-effects ICC(A,1) of `rows` (subjects) × repeats.
///
/// Repeat and error mean squares come from deviations against each row's
/// first value, which leaves them unchanged and makes identical repeats give
/// exactly zero. Bounds follow the McGraw-Wong F approximation.
pub fn icc_absolute(rows: &[Vec<f64>]) -> Result<IccResult> {
    let n = rows.len();
    if n < 2 {
        return Err(EvalError::InvalidInput(format!("{n} subjects; at least 2 needed")));
    }
    let k = rows[0].len();
    if k < 2 || rows.iter().any(|r| r.len() != k) {
        return Err(EvalError::InvalidInput("need at least 2 repeats, equal for every subject".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(EvalError::InvalidInput("non-finite measurement".into()));
    }
    let (nf, kf) = (n as f64, k as f64);

    let row_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let ssr = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();

    let dev: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x - r[0]).collect()).collect();
    let dev_rows: Vec<f64> = dev.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let dev_cols: Vec<f64> = (0..k).map(|j| dev.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let dev_grand = dev_cols.iter().sum::<f64>() / kf;
    let ssc = nf * dev_cols.iter().map(|m| (m - dev_grand).powi(2)).sum::<f64>();
    let mut sse = 0.0;
    for (i, r) in dev.iter().enumerate() {
        for (j, &x) in r.iter().enumerate() {
            sse += (x - dev_rows[i] - dev_cols[j] + dev_grand).powi(2);
        }
    }

    let msr = ssr / (nf - 1.0);
    let msc = ssc / (kf - 1.0);
    let mse = sse / ((nf - 1.0) * (kf - 1.0));
    let denom = msr + (kf - 1.0) * mse + kf / nf * (msc - mse);
    if !(denom > 0.0) || (msr == 0.0 && mse == 0.0) {
        return Err(EvalError::DegenerateVariance(
            "measurements do not vary across subjects".into(),
        ));
    }
    let icc = (msr - mse) / denom;
    if mse == 0.0 && msc == 0.0 {
        return Ok(IccResult { icc, lower: 1.0, upper: 1.0, msr, msc, mse });
    }

    let a = kf * icc / (nf * (1.0 - icc));
    let b = 1.0 + kf * icc * (nf - 1.0) / (nf * (1.0 - icc));
    let v = (a * msc + b * mse).powi(2)
        / ((a * msc).powi(2) / (kf - 1.0) + (b * mse).powi(2) / ((nf - 1.0) * (kf - 1.0)));
    let q = 1.0 - ALPHA / 2.0;
    let f_lo = f_quantile(q, nf - 1.0, v);
    let f_hi = f_quantile(q, v, nf - 1.0);
    let c = kf * msc + (kf * nf - kf - nf) * mse;
    let lower = nf * (msr - f_lo * mse) / (f_lo * c + nf * msr);
    let upper = nf * (f_hi * msr - mse) / (c + nf * f_hi * msr);
    Ok(IccResult { icc, lower, upper, msr, msc, mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn shrout_fleiss() -> Vec<Vec<f64>> {
        vec![
            vec![9.0, 2.0, 5.0, 8.0],
            vec![6.0, 1.0, 3.0, 2.0],
            vec![8.0, 4.0, 6.0, 8.0],
            vec![7.0, 1.0, 2.0, 6.0],
            vec![10.0, 5.0, 6.0, 9.0],
            vec![6.0, 2.0, 4.0, 7.0],
        ]
    }

    #[test]
    fn classic_six_by_four_table() {
        let r = icc_absolute(&shrout_fleiss()).unwrap();
        assert!((r.icc - 0.2898).abs() < 5e-4, "{r:?}");
        assert!((r.lower - 0.019).abs() < 2e-3 && (r.upper - 0.761).abs() < 2e-3, "{r:?}");
    }

    #[test]
    fn hand_anova_two_repeats() {
        // 4 subjects, 2 repeats; mean squares worked out by hand:
        // row means 2.5 4.5 6 9, grand 5.5 -> SSR = 2(9+1+0.25+12.25) = 45
        // column means 5 6 -> SSC = 4(0.25+0.25) = 2
        // SST = 48 -> SSE = 1
        let rows = vec![vec![2.0, 3.0], vec![4.0, 5.0], vec![5.0, 7.0], vec![9.0, 9.0]];
        let r = icc_absolute(&rows).unwrap();
        let (msr, msc, mse) = (15.0, 2.0, 1.0 / 3.0);
        assert!((r.msr - msr).abs() < 1e-12 && (r.msc - msc).abs() < 1e-12 && (r.mse - mse).abs() < 1e-12);
        let want = (msr - mse) / (msr + mse + 2.0 / 4.0 * (msc - mse));
        assert!((r.icc - want).abs() < 1e-12);
        assert!(r.lower <= r.icc && r.icc <= r.upper);
    }

    #[test]
    fn perfect_repeats_are_exactly_one() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![0.1 * i as f64 + 0.37; 3]).collect();
        let r = icc_absolute(&rows).unwrap();
        assert_eq!(r.icc, 1.0);
        assert_eq!((r.lower, r.upper), (1.0, 1.0));
    }

    #[test]
    fn constant_table_is_degenerate() {
        let rows = vec![vec![2.0, 2.0]; 5];
        assert!(matches!(icc_absolute(&rows), Err(EvalError::DegenerateVariance(_))));
        assert!(icc_absolute(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn affine_invariance() {
        let base = shrout_fleiss();
        let r0 = icc_absolute(&base).unwrap();
        let t: Vec<Vec<f64>> = base.iter().map(|r| r.iter().map(|x| 3.5 * x - 12.0).collect()).collect();
        let r1 = icc_absolute(&t).unwrap();
        assert!((r0.icc - r1.icc).abs() < 1e-12);
        assert!((r0.lower - r1.lower).abs() < 1e-9 && (r0.upper - r1.upper).abs() < 1e-9);
    }

    #[test]
    fn equal_noise_and_subject_variance_gives_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nrm = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                // subject effect plus independent noise on each repeat
                let s: f64 = nrm.sample(&mut rng);
                vec![s + nrm.sample(&mut rng), s + nrm.sample(&mut rng)]
            })
            .collect();
        let r = icc_absolute(&rows).unwrap();
        assert!((r.icc - 0.5).abs() < 0.1, "{r:?}");
        assert!(r.lower <= r.icc && r.icc <= r.upper);
    }
}
