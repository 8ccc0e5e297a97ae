use super::{shape_err, Result};
use crate::voxelgrid::ScalarVolume;

/// H×W×C activations, channel fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(h: usize, w: usize, c: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || c == 0 {
            return shape_err(format!("feature map dims must be positive, got {h}x{w}x{c}"));
        }
        if values.len() != h * w * c {
            return shape_err(format!("{} values for a {h}x{w}x{c} map", values.len()));
        }
        Ok(Self { h, w, c, values })
    }

    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self { h, w, c, values: vec![0.0; h * w * c] }
    }

    pub fn from_fn(h: usize, w: usize, c: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(h * w * c);
        for i in 0..h {
            for j in 0..w {
                for k in 0..c {
                    values.push(f(i, j, k));
                }
            }
        }
        Self { h, w, c, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.w + j) * self.c + k]
    }

    pub fn same_shape(&self, o: &FeatureMap) -> bool {
        (self.h, self.w, self.c) == (o.h, o.w, o.c)
    }

    /// Channel concatenation `[self, other]`.
    pub fn concat(&self, other: &FeatureMap) -> Result<FeatureMap> {
        if (self.h, self.w) != (other.h, other.w) {
            return shape_err(format!(
                "cannot concatenate {}x{} with {}x{}",
                self.h, self.w, other.h, other.w
            ));
        }
        let c = self.c + other.c;
        Ok(FeatureMap::from_fn(self.h, self.w, c, |i, j, k| {
            if k < self.c {
                self.at(i, j, k)
            } else {
                other.at(i, j, k - self.c)
            }
        }))
    }

    pub fn channel(&self, k: usize) -> Vec<f64> {
        (0..self.h * self.w).map(|p| self.values[p * self.c + k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    X,
    Y,
    Z,
}

impl SliceAxis {
    fn index(self) -> usize {
        self as usize
    }
}

/// Seven neighboring slices as a 7-channel image; channel 3 is the center.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStack {
    pub image: FeatureMap,
    pub center: usize,
}

pub const STACK_CHANNELS: usize = 7;

/// Slices `index-3 ..= index+3` along `axis`, clamped at the volume border.
/// The image rows and columns follow the two remaining axes in x, y, z order.
pub fn stack_slices(volume: &ScalarVolume, axis: SliceAxis, index: usize) -> Result<SliceStack> {
    let d = volume.header.dims;
    let a = axis.index();
    if index >= d[a] {
        return shape_err(format!("slice {index} out of range for axis of length {}", d[a]));
    }
    let rest: Vec<usize> = (0..3).filter(|&k| k != a).collect();
    let (h, w) = (d[rest[0]], d[rest[1]]);
    let image = FeatureMap::from_fn(h, w, STACK_CHANNELS, |i, j, ch| {
        let s = (index as isize + ch as isize - 3).clamp(0, d[a] as isize - 1) as usize;
        let mut p = [0; 3];
        p[a] = s;
        p[rest[0]] = i;
        p[rest[1]] = j;
        f64::from(volume.values[volume.header.index(p[0], p[1], p[2])])
    });
    Ok(SliceStack { image, center: index })
}
