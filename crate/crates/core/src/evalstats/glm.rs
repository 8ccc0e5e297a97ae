use nalgebra::{DMatrix, DVector};

use super::special::t_two_sided_p;
use super::{EvalError, Result};
use crate::io::CsvTable;

/// Diagnosis coded 0 in the group contrast; every other diagnosis is 1.
pub const REFERENCE_DIAGNOSIS: &str = "CN";

const META_COLUMNS: [&str; 5] = ["subject", "diagnosis", "age", "sex", "head_size"];

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMeta {
    pub id: String,
    pub diagnosis: String,
    pub age: f64,
    /// 1 for male, 0 for female.
    pub sex: f64,
    pub head_size: Option<f64>,
}

/// Subjects × ROIs measurements with per-subject metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTable {
    pub subjects: Vec<SubjectMeta>,
    pub rois: Vec<String>,
    /// `values[s][r]`
    pub values: Vec<Vec<f64>>,
}

fn parse_sex(s: &str) -> Option<f64> {
    match s.trim() {
        "M" | "m" | "male" | "1" => Some(1.0),
        "F" | "f" | "female" | "0" => Some(0.0),
        _ => None,
    }
}

impl MeasureTable {
    /// Columns `subject,diagnosis,age,sex,head_size` then one per ROI.
    /// `head_size` may be blank.
    pub fn from_csv(t: &CsvTable) -> Result<Self> {
        if t.header.len() < META_COLUMNS.len() || t.header[..META_COLUMNS.len()] != META_COLUMNS {
            return Err(EvalError::InvalidInput(format!(
                "measure table must start with columns {}",
                META_COLUMNS.join(",")
            )));
        }
        let rois = t.header[META_COLUMNS.len()..].to_vec();
        let bad = |row: usize, what: &str| EvalError::InvalidInput(format!("row {}: bad {what}", row + 2));
        let mut subjects = Vec::new();
        let mut values = Vec::new();
        for (i, r) in t.rows.iter().enumerate() {
            let num = |s: &str, what: &str| -> Result<f64> {
                s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(i, what))
            };
            let head_size = if r[4].trim().is_empty() { None } else { Some(num(&r[4], "head_size")?) };
            subjects.push(SubjectMeta {
                id: r[0].clone(),
                diagnosis: r[1].trim().to_string(),
                age: num(&r[2], "age")?,
                sex: parse_sex(&r[3]).ok_or_else(|| bad(i, "sex"))?,
                head_size,
            });
            values.push(r[5..].iter().map(|s| num(s, "measurement")).collect::<Result<Vec<f64>>>()?);
        }
        Ok(Self { subjects, rois, values })
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(META_COLUMNS.iter().map(|s| s.to_string()).chain(self.rois.iter().cloned()));
        for (s, v) in self.subjects.iter().zip(&self.values) {
            let meta = [
                s.id.clone(),
                s.diagnosis.clone(),
                s.age.to_string(),
                if s.sex == 1.0 { "M".into() } else { "F".into() },
                s.head_size.map(|h| h.to_string()).unwrap_or_default(),
            ];
            t.push(meta.into_iter().chain(v.iter().map(|x| x.to_string())));
        }
        t
    }

    pub fn roi_index(&self, roi: &str) -> Option<usize> {
        self.rois.iter().position(|r| r == roi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Covariate {
    Age,
    Sex,
    HeadSize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmResult {
    pub beta: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    /// `p` carrying the sign of `beta`; negative values mean lower
    /// measurements in the contrasted group.
    pub signed_p: f64,
    pub df: usize,
}

/// Ordinary least squares of `y` on the columns of `design`, reporting
/// coefficient `coef`. Rank is judged from the QR factor against each
/// column's norm.
pub fn glm_fit(design: &DMatrix<f64>, y: &[f64], coef: usize) -> Result<GlmResult> {
    let (n, p) = design.shape();
    if y.len() != n || coef >= p {
        return Err(EvalError::InvalidInput(format!("{n}x{p} design, {} responses, coefficient {coef}", y.len())));
    }
    if n <= p {
        return Err(EvalError::RankDeficient { column: n.min(p.saturating_sub(1)) });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let cn = design.column(j).norm();
        if cn == 0.0 || r[(j, j)].abs() <= 1e-10 * cn {
            return Err(EvalError::RankDeficient { column: j });
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or(EvalError::RankDeficient { column: p - 1 })?;
    let resid = &yv - design * &beta;
    let df = n - p;
    let sigma2 = resid.norm_squared() / df as f64;
    // var(beta_c) = sigma² · ||row c of R⁻¹||²
    let eye = DMatrix::<f64>::identity(p, p);
    let rinv = r.solve_upper_triangular(&eye).ok_or(EvalError::RankDeficient { column: p - 1 })?;
    let se = (sigma2 * rinv.row(coef).norm_squared()).sqrt();
    let b = beta[coef];
    let t = b / se;
    let pval = if se == 0.0 { if b == 0.0 { 1.0 } else { 0.0 } } else { t_two_sided_p(t, df as f64) };
    let signed_p = if b < 0.0 { -pval } else { pval };
    Ok(GlmResult { beta: b, se, t, p: pval, signed_p, df })
}

/// Group effect on one ROI: intercept, diagnosis indicator (non-reference
/// subjects are 1), then the covariates in the given order.
pub fn glm_group(table: &MeasureTable, roi: &str, covariates: &[Covariate]) -> Result<GlmResult> {
    let r = table.roi_index(roi).ok_or_else(|| EvalError::InvalidInput(format!("unknown ROI {roi:?}")))?;
    let n = table.subjects.len();
    let p = 2 + covariates.len();
    let mut x = DMatrix::zeros(n, p);
    for (i, s) in table.subjects.iter().enumerate() {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = if s.diagnosis == REFERENCE_DIAGNOSIS { 0.0 } else { 1.0 };
        for (j, c) in covariates.iter().enumerate() {
            x[(i, 2 + j)] = match c {
                Covariate::Age => s.age,
                Covariate::Sex => s.sex,
                Covariate::HeadSize => s.head_size.ok_or_else(|| {
                    EvalError::InvalidInput(format!("subject {} lacks head_size", s.id))
                })?,
            };
        }
    }
    let y: Vec<f64> = table.values.iter().map(|v| v[r]).collect();
    glm_fit(&x, &y, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(seed: u64, n: usize, effect: f64) -> MeasureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut subjects = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let dx = i % 2 == 1;
            let age = rng.random_range(60.0..90.0);
            let sex = f64::from(rng.random_bool(0.5));
            subjects.push(SubjectMeta {
                id: format!("s{i:03}"),
                diagnosis: if dx { "AD".into() } else { "CN".into() },
                age,
                sex,
                head_size: Some(rng.random_range(1300.0..1700.0)),
            });
            let y = 2.5 + effect * f64::from(u8::from(dx)) - 0.01 * (age - 75.0) + 0.05 * sex + noise.sample(&mut rng);
            values.push(vec![y]);
        }
        MeasureTable { subjects, rois: vec!["roi".into()], values }
    }

    #[test]
    fn planted_effect_recovered() {
        let t = synthetic(1, 200, -0.5);
        let r = glm_group(&t, "roi", &[Covariate::Age, Covariate::Sex]).unwrap();
        assert!((-0.6..=-0.4).contains(&r.beta), "{r:?}");
        assert!(r.signed_p < 0.0 && r.p < 1e-5);
        assert_eq!(r.df, 196);
    }

    #[test]
    fn matches_normal_equations() {
        let t = synthetic(2, 40, -0.2);
        let r = glm_group(&t, "roi", &[Covariate::Age, Covariate::HeadSize]).unwrap();
        let x = DMatrix::from_fn(40, 4, |i, j| {
            let s = &t.subjects[i];
            [1.0, if s.diagnosis == "CN" { 0.0 } else { 1.0 }, s.age, s.head_size.unwrap()][j]
        });
        let y = DVector::from_iterator(40, t.values.iter().map(|v| v[0]));
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let b = &xtx_inv * x.transpose() * &y;
        let res = &y - &x * &b;
        let s2 = res.norm_squared() / 36.0;
        assert!((r.beta - b[1]).abs() < 1e-8);
        assert!((r.se - (s2 * xtx_inv[(1, 1)]).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn rank_deficiency_detected() {
        let mut t = synthetic(3, 30, 0.0);
        for s in &mut t.subjects {
            s.diagnosis = "CN".into();
        }
        assert!(matches!(glm_group(&t, "roi", &[Covariate::Age]), Err(EvalError::RankDeficient { column: 1 })));
        let x = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(glm_fit(&x, &[1.0, 2.0, 3.0], 0), Err(EvalError::RankDeficient { .. })));
    }

    #[test]
    fn covariate_rescaling_invariance() {
        let t = synthetic(4, 60, -0.1);
        let r0 = glm_group(&t, "roi", &[Covariate::Age, Covariate::Sex]).unwrap();
        let mut t2 = t.clone();
        for s in &mut t2.subjects {
            s.age = 12.0 * s.age - 300.0;
        }
        let r1 = glm_group(&t2, "roi", &[Covariate::Age, Covariate::Sex]).unwrap();
        assert!((r0.t - r1.t).abs() < 1e-9 && (r0.p - r1.p).abs() < 1e-12);
        assert_eq!(r0.beta.signum(), r1.beta.signum());
    }

    #[test]
    fn csv_round_trip() {
        let t = synthetic(5, 6, 0.3);
        let back = MeasureTable::from_csv(&CsvTable::parse(&t.to_csv().to_csv_string()).unwrap()).unwrap();
        assert_eq!(back, t);
        let mut bad = t.to_csv();
        bad.header[0] = "id".into();
        assert!(MeasureTable::from_csv(&bad).is_err());
    }
}
