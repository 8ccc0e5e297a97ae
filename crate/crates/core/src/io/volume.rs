use std::path::Path;

use log::warn;

use super::{IoError, Result};

pub const FSLV_MAGIC: &[u8; 4] = b"FSLV";
pub const FSLV_VERSION: u16 = 1;
const FSLV_HEADER_LEN: usize = 32;

const NIFTI_HEADER_LEN: usize = 348;
const NIFTI_DIM_OFFSET: usize = 40;
const NIFTI_DATATYPE_OFFSET: usize = 70;
const NIFTI_PIXDIM_OFFSET: usize = 76;
const NIFTI_VOX_OFFSET: usize = 108;
const NIFTI_MAGIC_OFFSET: usize = 344;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    U8,
    U16,
    F32,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::U8 => 0,
            DType::U16 => 1,
            DType::F32 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::U8),
            1 => Some(DType::U16),
            2 => Some(DType::F32),
            _ => None,
        }
    }

    pub fn byte_width(self) -> usize {
        match self {
            DType::U8 => 1,
            DType::U16 => 2,
            DType::F32 => 4,
        }
    }
}

/// Grid geometry of a volume. Voxel `(i, j, k)` has its center at
/// `(i·sx, j·sy, k·sz)` millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub voxel_size_mm: [f32; 3],
    pub dtype: DType,
}

impl VolumeHeader {
    pub fn new(dims: [usize; 3], voxel_size_mm: [f32; 3], dtype: DType) -> Self {
        Self { dims, voxel_size_mm, dtype }
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, &d) in self.dims.iter().enumerate() {
            if d == 0 {
                return Err(IoError::InvalidHeader {
                    offset: 8 + 4 * axis,
                    reason: format!("dims[{axis}] is zero"),
                });
            }
            if d > u32::MAX as usize {
                return Err(IoError::InvalidHeader {
                    offset: 8 + 4 * axis,
                    reason: format!("dims[{axis}] = {d} exceeds u32"),
                });
            }
        }
        for (axis, &v) in self.voxel_size_mm.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(IoError::InvalidHeader {
                    offset: 20 + 4 * axis,
                    reason: format!("voxel_size_mm[{axis}] = {v} is not positive"),
                });
            }
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.voxel_size_mm.map(f64::from)
    }

    pub fn with_dtype(mut self, dtype: DType) -> Self {
        self.dtype = dtype;
        self
    }

    /// Same grid, ignoring the stored data type.
    pub fn same_grid(&self, other: &VolumeHeader) -> bool {
        self.dims == other.dims && self.voxel_size_mm == other.voxel_size_mm
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let yz = idx / self.dims[0];
        [x, yz % self.dims[1], yz / self.dims[1]]
    }

    pub fn center_mm(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        let s = self.spacing();
        [x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VoxelData {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl VoxelData {
    pub fn len(&self) -> usize {
        match self {
            VoxelData::U8(v) => v.len(),
            VoxelData::U16(v) => v.len(),
            VoxelData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            VoxelData::U8(_) => DType::U8,
            VoxelData::U16(_) => DType::U16,
            VoxelData::F32(_) => DType::F32,
        }
    }

    /// Values widened to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            VoxelData::U8(v) => v.iter().map(|&x| f64::from(x)).collect(),
            VoxelData::U16(v) => v.iter().map(|&x| f64::from(x)).collect(),
            VoxelData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub header: VolumeHeader,
    pub data: VoxelData,
}

impl Volume {
    pub fn new(header: VolumeHeader, data: VoxelData) -> Result<Self> {
        header.validate()?;
        if data.len() != header.voxel_count() {
            return Err(IoError::LengthMismatch {
                expected: header.voxel_count(),
                actual: data.len(),
            });
        }
        let header = header.with_dtype(data.dtype());
        Ok(Self { header, data })
    }
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    read_volume_bytes(&bytes)
}

/// Parses an FSLV or NIfTI-1 (single file, `n+1`) image from memory.
pub fn read_volume_bytes(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() >= 4 && &bytes[..4] == FSLV_MAGIC {
        return read_fslv(bytes);
    }
    if bytes.len() >= 4 && le_i32(bytes, 0) == NIFTI_HEADER_LEN as i32 {
        return read_nifti(bytes);
    }
    Err(IoError::BadMagic { offset: 0 })
}

fn need(bytes: &[u8], offset: usize, len: usize) -> Result<()> {
    if bytes.len() < offset + len {
        Err(IoError::TruncatedFile { offset: bytes.len(), needed: offset + len })
    } else {
        Ok(())
    }
}

fn le_u16(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn le_i16(b: &[u8], o: usize) -> i16 {
    i16::from_le_bytes([b[o], b[o + 1]])
}

fn le_u32(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

fn le_i32(b: &[u8], o: usize) -> i32 {
    i32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

fn le_f32(b: &[u8], o: usize) -> f32 {
    f32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

fn read_fslv(bytes: &[u8]) -> Result<Volume> {
    need(bytes, 0, FSLV_HEADER_LEN)?;
    let version = le_u16(bytes, 4);
    if version != FSLV_VERSION {
        return Err(IoError::InvalidHeader {
            offset: 4,
            reason: format!("unsupported FSLV version {version}"),
        });
    }
    let dtype = DType::from_code(bytes[6])
        .ok_or(IoError::UnsupportedDtype { code: i64::from(bytes[6]), offset: 6 })?;
    let dims = [0, 1, 2].map(|a| le_u32(bytes, 8 + 4 * a) as usize);
    let voxel_size_mm = [0, 1, 2].map(|a| le_f32(bytes, 20 + 4 * a));
    let header = VolumeHeader { dims, voxel_size_mm, dtype };
    header.validate()?;
    let data = decode_payload(bytes, FSLV_HEADER_LEN, header.voxel_count(), dtype)?;
    Ok(Volume { header, data })
}

fn decode_payload(bytes: &[u8], offset: usize, count: usize, dtype: DType) -> Result<VoxelData> {
    let width = dtype.byte_width();
    need(bytes, offset, count * width)?;
    let payload = &bytes[offset..offset + count * width];
    Ok(match dtype {
        DType::U8 => VoxelData::U8(payload.to_vec()),
        DType::U16 => VoxelData::U16(
            payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
        ),
        DType::F32 => VoxelData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
    })
}

fn read_nifti(bytes: &[u8]) -> Result<Volume> {
    need(bytes, 0, NIFTI_HEADER_LEN)?;
    if &bytes[NIFTI_MAGIC_OFFSET..NIFTI_MAGIC_OFFSET + 4] != b"n+1\0" {
        return Err(IoError::BadMagic { offset: NIFTI_MAGIC_OFFSET });
    }
    let ndim = le_i16(bytes, NIFTI_DIM_OFFSET);
    if !(1..=7).contains(&ndim) {
        return Err(IoError::InvalidHeader {
            offset: NIFTI_DIM_OFFSET,
            reason: format!("dim[0] = {ndim}"),
        });
    }
    let mut dims = [1usize; 3];
    for (axis, d) in dims.iter_mut().enumerate().take(ndim.min(3) as usize) {
        let off = NIFTI_DIM_OFFSET + 2 * (axis + 1);
        let v = le_i16(bytes, off);
        if v < 1 {
            return Err(IoError::InvalidHeader { offset: off, reason: format!("dim = {v}") });
        }
        *d = v as usize;
    }
    for axis in 3..ndim as usize {
        let off = NIFTI_DIM_OFFSET + 2 * (axis + 1);
        if le_i16(bytes, off) > 1 {
            return Err(IoError::InvalidHeader {
                offset: off,
                reason: "only 3D volumes are supported".into(),
            });
        }
    }
    let mut voxel_size_mm = [1.0f32; 3];
    for (axis, v) in voxel_size_mm.iter_mut().enumerate() {
        let p = le_f32(bytes, NIFTI_PIXDIM_OFFSET + 4 * (axis + 1)).abs();
        if axis < ndim as usize {
            *v = p;
        }
    }
    let datatype = le_i16(bytes, NIFTI_DATATYPE_OFFSET);
    let vox_offset = le_f32(bytes, NIFTI_VOX_OFFSET);
    if !(vox_offset >= NIFTI_HEADER_LEN as f32) || vox_offset.fract() != 0.0 {
        return Err(IoError::InvalidHeader {
            offset: NIFTI_VOX_OFFSET,
            reason: format!("vox_offset = {vox_offset}"),
        });
    }
    let vox_offset = vox_offset as usize;
    let dtype = match datatype {
        2 => DType::U8,
        4 => DType::U16,
        16 => DType::F32,
        other => {
            return Err(IoError::UnsupportedDtype {
                code: i64::from(other),
                offset: NIFTI_DATATYPE_OFFSET,
            })
        }
    };
    let header = VolumeHeader { dims, voxel_size_mm, dtype };
    header.validate().map_err(|e| match e {
        IoError::InvalidHeader { reason, .. } => {
            IoError::InvalidHeader { offset: NIFTI_PIXDIM_OFFSET, reason }
        }
        other => other,
    })?;
    let sform = le_i16(bytes, 254);
    let qform = le_i16(bytes, 252);
    if sform != 0 || qform != 0 {
        warn!("NIfTI orientation (qform {qform}, sform {sform}) ignored; stored axis order used as-is");
    }
    let count = header.voxel_count();
    let data = if datatype == 4 {
        need(bytes, vox_offset, 2 * count)?;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let off = vox_offset + 2 * i;
            let v = le_i16(bytes, off);
            if v < 0 {
                return Err(IoError::NegativeValue { offset: off, value: i64::from(v) });
            }
            out.push(v as u16);
        }
        VoxelData::U16(out)
    } else {
        decode_payload(bytes, vox_offset, count, dtype)?
    };
    Ok(Volume { header, data })
}

/// Serializes a volume in FSLV layout.
pub fn encode_fslv(header: &VolumeHeader, data: &VoxelData) -> Result<Vec<u8>> {
    header.validate()?;
    if data.len() != header.voxel_count() {
        return Err(IoError::LengthMismatch { expected: header.voxel_count(), actual: data.len() });
    }
    let dtype = data.dtype();
    let mut out = Vec::with_capacity(FSLV_HEADER_LEN + data.len() * dtype.byte_width());
    out.extend_from_slice(FSLV_MAGIC);
    out.extend_from_slice(&FSLV_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(0);
    for d in header.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in header.voxel_size_mm {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match data {
        VoxelData::U8(v) => out.extend_from_slice(v),
        VoxelData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        VoxelData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

/// Writes an FSLV file. The header dtype is taken from `data`.
pub fn write_volume(header: &VolumeHeader, data: &VoxelData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_fslv(header, data)?;
    std::fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_u8_roundtrip() {
        let h = VolumeHeader::new([2, 2, 2], [1.0; 3], DType::U8);
        let bytes = encode_fslv(&h, &VoxelData::U8(vec![0; 8])).unwrap();
        assert_eq!(bytes.len(), 32 + 8);
        let v = read_volume_bytes(&bytes).unwrap();
        assert_eq!(v.header.dims, [2, 2, 2]);
        assert_eq!(v.data, VoxelData::U8(vec![0; 8]));
    }

    #[test]
    fn f32_payload_bytes() {
        let h = VolumeHeader::new([1, 1, 1], [1.0; 3], DType::F32);
        let bytes = encode_fslv(&h, &VoxelData::F32(vec![3.5])).unwrap();
        // 3.5 = 1.75 * 2^1 -> sign 0, exponent 128, mantissa 0x600000
        assert_eq!(&bytes[32..], &[0x00, 0x00, 0x60, 0x40]);
        assert_eq!(&bytes[..4], b"FSLV");
        assert_eq!(&bytes[4..8], &[1, 0, 2, 0]);
    }

    #[test]
    fn zero_dims_rejected() {
        let h = VolumeHeader::new([0, 1, 1], [1.0; 3], DType::U8);
        assert!(matches!(
            encode_fslv(&h, &VoxelData::U8(vec![])),
            Err(IoError::InvalidHeader { offset: 8, .. })
        ));
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let h = VolumeHeader::new([2, 2, 2], [1.0; 3], DType::U16);
        let mut bytes = encode_fslv(&h, &VoxelData::U16(vec![7; 8])).unwrap();
        bytes.truncate(40);
        match read_volume_bytes(&bytes) {
            Err(IoError::TruncatedFile { offset, needed }) => {
                assert_eq!(offset, 40);
                assert_eq!(needed, 48);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_magic() {
        assert!(matches!(read_volume_bytes(b"XXXX0000"), Err(IoError::BadMagic { offset: 0 })));
    }

    #[test]
    fn bad_fslv_dtype() {
        let h = VolumeHeader::new([1, 1, 1], [1.0; 3], DType::U8);
        let mut bytes = encode_fslv(&h, &VoxelData::U8(vec![1])).unwrap();
        bytes[6] = 9;
        assert!(matches!(
            read_volume_bytes(&bytes),
            Err(IoError::UnsupportedDtype { code: 9, offset: 6 })
        ));
    }
}
