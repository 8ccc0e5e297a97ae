use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{shape_err, FeatureMap, NetError, Result};

const BN_EPS: f64 = 1e-5;

/// Elementwise maximum over maps of identical shape.
pub fn maxout(inputs: &[&FeatureMap]) -> Result<FeatureMap> {
    let Some((first, rest)) = inputs.split_first() else {
        return shape_err("maxout of an empty list");
    };
    let mut out = (*first).clone();
    for x in rest {
        if !x.same_shape(first) {
            return shape_err(format!(
                "maxout inputs {}x{}x{} and {}x{}x{}",
                first.h, first.w, first.c, x.h, x.w, x.c
            ));
        }
        for (o, &v) in out.values.iter_mut().zip(&x.values) {
            *o = o.max(v);
        }
    }
    Ok(out)
}

/// Batch normalization in inference form.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BatchNorm {
    pub fn identity(c: usize) -> Self {
        // var chosen so that sqrt(var + eps) == 1
        Self { scale: vec![1.0; c], shift: vec![0.0; c], mean: vec![0.0; c], var: vec![1.0 - BN_EPS; c] }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    fn validate(&self) -> Result<()> {
        let c = self.channels();
        if self.shift.len() != c || self.mean.len() != c || self.var.len() != c {
            return Err(NetError::InvalidWeights("batch norm vectors differ in length".into()));
        }
        if self.var.iter().any(|&v| !(v > 0.0)) {
            return Err(NetError::InvalidWeights("batch norm running variance must be positive".into()));
        }
        Ok(())
    }

    pub fn apply(&self, x: &FeatureMap) -> Result<FeatureMap> {
        self.validate()?;
        if x.c != self.channels() {
            return shape_err(format!("batch norm over {} channels applied to {}", self.channels(), x.c));
        }
        let gain: Vec<f64> = (0..x.c).map(|k| self.scale[k] / (self.var[k] + BN_EPS).sqrt()).collect();
        let mut out = x.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            let k = i % x.c;
            *v = gain[k] * (*v - self.mean[k]) + self.shift[k];
        }
        Ok(out)
    }
}

/// Square kernel, stride 1, zero same-padding.
/// Weight layout: `((dy·k + dx)·c_in + ci)·c_out + co`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub k: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl Conv2d {
    pub fn zeros(k: usize, c_in: usize, c_out: usize) -> Self {
        Self { k, c_in, c_out, weights: vec![0.0; k * k * c_in * c_out], bias: None }
    }

    #[inline]
    pub fn weight(&self, dy: usize, dx: usize, ci: usize, co: usize) -> f64 {
        self.weights[((dy * self.k + dx) * self.c_in + ci) * self.c_out + co]
    }

    fn validate(&self) -> Result<()> {
        if self.k % 2 == 0 {
            return Err(NetError::InvalidWeights(format!("kernel size {} is not odd", self.k)));
        }
        if self.weights.len() != self.k * self.k * self.c_in * self.c_out {
            return Err(NetError::InvalidWeights("kernel length does not match its shape".into()));
        }
        if self.bias.as_ref().is_some_and(|b| b.len() != self.c_out) {
            return Err(NetError::InvalidWeights("bias length differs from output channels".into()));
        }
        Ok(())
    }

    pub fn apply(&self, x: &FeatureMap) -> Result<FeatureMap> {
        self.validate()?;
        if x.c != self.c_in {
            return shape_err(format!("convolution expects {} channels, got {}", self.c_in, x.c));
        }
        let r = (self.k / 2) as isize;
        let mut out = FeatureMap::zeros(x.h, x.w, self.c_out);
        for i in 0..x.h {
            for j in 0..x.w {
                let o = &mut out.values[(i * x.w + j) * self.c_out..][..self.c_out];
                if let Some(b) = &self.bias {
                    o.copy_from_slice(b);
                }
                for dy in 0..self.k {
                    let y = i as isize + dy as isize - r;
                    if y < 0 || y >= x.h as isize {
                        continue;
                    }
                    for dx in 0..self.k {
                        let xx = j as isize + dx as isize - r;
                        if xx < 0 || xx >= x.w as isize {
                            continue;
                        }
                        let src = &x.values[(y as usize * x.w + xx as usize) * x.c..][..x.c];
                        let wbase = (dy * self.k + dx) * self.c_in * self.c_out;
                        for (ci, &v) in src.iter().enumerate() {
                            let w = &self.weights[wbase + ci * self.c_out..][..self.c_out];
                            for (acc, &wv) in o.iter_mut().zip(w) {
                                *acc += v * wv;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreActivation {
    /// Per-channel slope for negative inputs.
    PRelu(Vec<f64>),
    BatchNorm(BatchNorm),
}

impl PreActivation {
    fn apply(&self, x: &FeatureMap) -> Result<FeatureMap> {
        match self {
            PreActivation::BatchNorm(bn) => bn.apply(x),
            PreActivation::PRelu(a) => {
                if a.len() != x.c {
                    return shape_err(format!("PReLU over {} channels applied to {}", a.len(), x.c));
                }
                let mut out = x.clone();
                for (i, v) in out.values.iter_mut().enumerate() {
                    if *v < 0.0 {
                        *v *= a[i % x.c];
                    }
                }
                Ok(out)
            }
        }
    }
}

/// One composite unit: pre-activation, convolution, batch norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitWeights {
    pub pre: PreActivation,
    pub conv: Conv2d,
    pub bn: BatchNorm,
}

impl UnitWeights {
    /// Zero kernel and identity BN: the unit emits zero maps.
    pub fn zeros(k: usize, c_in: usize, c_out: usize) -> Self {
        Self {
            pre: PreActivation::PRelu(vec![0.25; c_in]),
            conv: Conv2d::zeros(k, c_in, c_out),
            bn: BatchNorm::identity(c_out),
        }
    }

    /// He-style normal kernel, slopes near 0.25, mild BN statistics.
    pub fn random(rng: &mut impl Rng, k: usize, c_in: usize, c_out: usize, bn_pre: bool) -> Self {
        let std = (2.0 / (k * k * c_in) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        let weights = (0..k * k * c_in * c_out).map(|_| normal.sample(rng)).collect();
        let bn = |c: usize, rng: &mut dyn rand::RngCore| BatchNorm {
            scale: (0..c).map(|_| rng.random_range(0.5..1.5)).collect(),
            shift: (0..c).map(|_| rng.random_range(-0.2..0.2)).collect(),
            mean: (0..c).map(|_| rng.random_range(-0.2..0.2)).collect(),
            var: (0..c).map(|_| rng.random_range(0.5..2.0)).collect(),
        };
        let pre = if bn_pre {
            PreActivation::BatchNorm(bn(c_in, rng))
        } else {
            PreActivation::PRelu((0..c_in).map(|_| rng.random_range(0.0..0.5)).collect())
        };
        Self { pre, conv: Conv2d { k, c_in, c_out, weights, bias: None }, bn: bn(c_out, rng) }
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let a = self.pre.apply(x)?;
        let z = self.conv.apply(&a)?;
        self.bn.apply(&z)
    }
}

/// Weights of the three composite units of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub units: [UnitWeights; 3],
}

impl BlockWeights {
    /// Dense block on `c_in` inputs where each unit emits `growth` channels:
    /// unit inputs are `c_in`, `c_in + growth`, `c_in + 2·growth`.
    pub fn dense_random(rng: &mut impl Rng, c_in: usize, growth: usize, k: usize, k_last: usize) -> Self {
        Self {
            units: [
                UnitWeights::random(rng, k, c_in, growth, false),
                UnitWeights::random(rng, k, c_in + growth, growth, false),
                UnitWeights::random(rng, k_last, c_in + 2 * growth, growth, false),
            ],
        }
    }

    /// Competitive block of constant width `c`. The first block of the
    /// network normalizes its raw input with BN instead of PReLU and may take
    /// a different input width `c_in`.
    pub fn competitive_random(rng: &mut impl Rng, c_in: usize, c: usize, k: usize, k_last: usize, first: bool) -> Self {
        Self {
            units: [
                UnitWeights::random(rng, k, c_in, c, first),
                UnitWeights::random(rng, k, c, c, false),
                UnitWeights::random(rng, k_last, c, c, false),
            ],
        }
    }
}

/// `y1 = [H1(x), x]`, `y2 = [H2(y1), y1]`, `out = H3(y2)`.
///
/// `y1` already carries `x`, so `x` enters `y2` once and `y2` has
/// `c_in + 2·growth` channels.
pub fn dense_block_forward(x: &FeatureMap, w: &BlockWeights) -> Result<FeatureMap> {
    let y1 = w.units[0].forward(x)?.concat(x)?;
    let y2 = w.units[1].forward(&y1)?.concat(&y1)?;
    w.units[2].forward(&y2)
}

/// `y1 = max(H1(x), x)`, `y2 = max(H2(y1), y1)`, `out = H3(y2)`.
///
/// In the first block the input width generally differs from the block
/// width, so `y1 = H1(x)` there, with H1 led by BN rather than PReLU.
pub fn competitive_block_forward(x: &FeatureMap, w: &BlockWeights, first_block: bool) -> Result<FeatureMap> {
    let is_bn = matches!(w.units[0].pre, PreActivation::BatchNorm(_));
    if first_block != is_bn {
        return Err(NetError::InvalidWeights(format!(
            "first_block = {first_block} but the first unit {} BN pre-activation",
            if is_bn { "has" } else { "lacks" }
        )));
    }
    let h1 = w.units[0].forward(x)?;
    let y1 = if first_block && x.c != h1.c { h1 } else { maxout(&[&h1, x])? };
    let h2 = w.units[1].forward(&y1)?;
    let y2 = maxout(&[&h2, &y1])?;
    let out = w.units[2].forward(&y2)?;
    if out.c != y1.c {
        return shape_err(format!("competitive block must keep {} channels, emits {}", y1.c, out.c));
    }
    Ok(out)
}
