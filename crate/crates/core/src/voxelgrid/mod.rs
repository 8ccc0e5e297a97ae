//! Volume-domain preprocessing.

mod components;
mod conform;
mod lateral;
mod morphology;

pub use components::{connected_components, fill_holes, largest_component, Components};
pub use conform::{conform_intensity, conform_labels, ScalarVolume};
pub use lateral::{
    assign_clusters_by_centroid, label_centroid_mm, lateralize, merge_sagittal, unmerge_sagittal,
};
pub use morphology::{closure, dilate, erode, make_brainmask, StructuringElement};

use crate::io::{DType, IoError, LabelTable, Volume, VolumeHeader, VoxelData};

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("volume is empty or does not overlap the target grid")]
    EmptyVolume,
    #[error("target voxel size {0:?} is not isotropic")]
    NonIsotropicTarget([f32; 3]),
    #[error("no white matter voxels in the {side} hemisphere")]
    MissingWhiteMatter { side: &'static str },
    #[error("label table lacks white matter entries (FreeSurfer codes 2 and 41)")]
    NoWhiteMatterLabels,
    #[error("label {label} is not in the label table")]
    UnknownLabel { label: u32 },
    #[error("volume grids differ: {0:?} vs {1:?}")]
    GridMismatch([usize; 3], [usize; 3]),
    #[error("expected a {expected:?} volume, found {found:?}")]
    WrongDtype { expected: DType, found: DType },
    #[error(transparent)]
    Io(#[from] IoError),
}

pub type Result<T> = std::result::Result<T, GridError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Face6,
    Edge18,
    Vertex26,
}

impl Connectivity {
    /// Neighbor offsets, in lexicographic (z, y, x) order.
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::new();
        for dz in -1..=1isize {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let nz = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                    let keep = match self {
                        Connectivity::Face6 => nz == 1,
                        Connectivity::Edge18 => nz == 1 || nz == 2,
                        Connectivity::Vertex26 => nz >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Which code space the values of a [`LabelVolume`] live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSpace {
    /// Training ids of the label table (1..=78 for DKT).
    Internal,
    /// FreeSurfer codes after lateral expansion.
    FreeSurfer,
}

/// 3D label grid, background 0, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    pub header: VolumeHeader,
    pub labels: Vec<u16>,
}

impl LabelVolume {
    pub fn new(dims: [usize; 3], voxel_size_mm: [f32; 3], labels: Vec<u16>) -> Result<Self> {
        let header = VolumeHeader::new(dims, voxel_size_mm, DType::U16);
        header.validate()?;
        if labels.len() != header.voxel_count() {
            return Err(IoError::LengthMismatch { expected: header.voxel_count(), actual: labels.len() }
                .into());
        }
        Ok(Self { header, labels })
    }

    pub fn zeros(dims: [usize; 3], voxel_size_mm: [f32; 3]) -> Self {
        let header = VolumeHeader::new(dims, voxel_size_mm, DType::U16);
        Self { labels: vec![0; header.voxel_count()], header }
    }

    pub fn from_volume(v: &Volume) -> Result<Self> {
        let labels = match &v.data {
            VoxelData::U8(d) => d.iter().map(|&x| u16::from(x)).collect(),
            VoxelData::U16(d) => d.clone(),
            VoxelData::F32(_) => {
                return Err(GridError::WrongDtype { expected: DType::U16, found: DType::F32 })
            }
        };
        Ok(Self { header: v.header.with_dtype(DType::U16), labels })
    }

    pub fn to_volume(&self) -> Volume {
        Volume { header: self.header.with_dtype(DType::U16), data: VoxelData::U16(self.labels.clone()) }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.header.dims
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.labels[self.header.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: u16) {
        let i = self.header.index(x, y, z);
        self.labels[i] = v;
    }

    /// Distinct nonzero labels, ascending.
    pub fn label_set(&self) -> Vec<u16> {
        let mut seen = vec![false; u16::MAX as usize + 1];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=u16::MAX).filter(|&l| seen[l as usize]).collect()
    }

    pub fn mask_of(&self, pred: impl Fn(u16) -> bool) -> BinaryMask {
        BinaryMask {
            header: self.header.with_dtype(DType::U8),
            bits: self.labels.iter().map(|&l| pred(l)).collect(),
        }
    }

    /// Checks that every nonzero value appears in `table` under `space`.
    pub fn validate(&self, table: &LabelTable, space: LabelSpace) -> Result<()> {
        for l in self.label_set() {
            let known = match space {
                LabelSpace::Internal => table.get(l).is_some(),
                LabelSpace::FreeSurfer => table.by_fs_code(u32::from(l)).is_some(),
            };
            if !known {
                return Err(GridError::UnknownLabel { label: u32::from(l) });
            }
        }
        Ok(())
    }

    pub fn map_labels(&self, f: impl Fn(u16) -> u16) -> LabelVolume {
        LabelVolume { header: self.header, labels: self.labels.iter().map(|&l| f(l)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub header: VolumeHeader,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(dims: [usize; 3], voxel_size_mm: [f32; 3]) -> Self {
        let header = VolumeHeader::new(dims, voxel_size_mm, DType::U8);
        Self { bits: vec![false; header.voxel_count()], header }
    }

    pub fn from_fn(
        dims: [usize; 3],
        voxel_size_mm: [f32; 3],
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Self {
        let mut m = Self::empty(dims, voxel_size_mm);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let i = m.header.index(x, y, z);
                    m.bits[i] = f(x, y, z);
                }
            }
        }
        m
    }

    pub fn from_volume(v: &Volume) -> Self {
        let bits = match &v.data {
            VoxelData::U8(d) => d.iter().map(|&x| x != 0).collect(),
            VoxelData::U16(d) => d.iter().map(|&x| x != 0).collect(),
            VoxelData::F32(d) => d.iter().map(|&x| x != 0.0).collect(),
        };
        Self { header: v.header.with_dtype(DType::U8), bits }
    }

    pub fn to_volume(&self) -> Volume {
        Volume {
            header: self.header.with_dtype(DType::U8),
            data: VoxelData::U8(self.bits.iter().map(|&b| u8::from(b)).collect()),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.header.dims
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.header.index(x, y, z)]
    }

    /// Out-of-grid coordinates read as background.
    pub fn get_signed(&self, x: isize, y: isize, z: isize) -> bool {
        let d = self.header.dims;
        if x < 0 || y < 0 || z < 0 || x as usize >= d[0] || y as usize >= d[1] || z as usize >= d[2] {
            return false;
        }
        self.get(x as usize, y as usize, z as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.header.index(x, y, z);
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask { header: self.header, bits: self.bits.iter().map(|&b| !b).collect() }
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        BinaryMask {
            header: self.header,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        BinaryMask {
            header: self.header,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        }
    }

    /// True when every set voxel of `other` is set here.
    pub fn contains(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    /// Copy surrounded by `margin` background voxels on every side.
    pub fn padded(&self, margin: usize) -> BinaryMask {
        let d = self.header.dims;
        let nd = [d[0] + 2 * margin, d[1] + 2 * margin, d[2] + 2 * margin];
        let mut out = BinaryMask::empty(nd, self.header.voxel_size_mm);
        for z in 0..d[2] {
            for y in 0..d[1] {
                for x in 0..d[0] {
                    if self.get(x, y, z) {
                        out.set(x + margin, y + margin, z + margin, true);
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`BinaryMask::padded`].
    pub fn cropped(&self, margin: usize) -> BinaryMask {
        let d = self.header.dims;
        let nd = [d[0] - 2 * margin, d[1] - 2 * margin, d[2] - 2 * margin];
        BinaryMask::from_fn(nd, self.header.voxel_size_mm, |x, y, z| {
            self.get(x + margin, y + margin, z + margin)
        })
    }

    /// Voxel-center coordinates (mm) of set voxels, in scan order.
    pub fn points_mm(&self) -> Vec<[f64; 3]> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| {
                let [x, y, z] = self.header.coords(i);
                self.header.center_mm(x, y, z)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connectivity_sizes() {
        assert_eq!(Connectivity::Face6.offsets().len(), 6);
        assert_eq!(Connectivity::Edge18.offsets().len(), 18);
        assert_eq!(Connectivity::Vertex26.offsets().len(), 26);
    }

    #[test]
    fn validate_against_table() {
        let t = LabelTable::dkt();
        let mut v = LabelVolume::zeros([2, 2, 2], [1.0; 3]);
        v.labels[0] = 78;
        assert!(v.validate(&t, LabelSpace::Internal).is_ok());
        assert!(v.validate(&t, LabelSpace::FreeSurfer).is_err());
        v.labels[1] = 79;
        assert!(matches!(
            v.validate(&t, LabelSpace::Internal),
            Err(GridError::UnknownLabel { label: 79 })
        ));
    }
}
