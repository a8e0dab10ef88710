use std::fs;
use std::path::Path;

use crate::diffnum::Tensor;
use crate::error::{Error, Result};
use crate::image::{Image, LabelMap};

pub const MAGIC: [u8; 4] = *b"OGT1";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    U8,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
            Dtype::U8 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            2 => Some(Dtype::U8),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::F32 => "float32",
            Dtype::F64 => "float64",
            Dtype::U8 => "uint8",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> Dtype {
        match self {
            TensorData::F32(_) => Dtype::F32,
            TensorData::F64(_) => Dtype::F64,
            TensorData::U8(_) => Dtype::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A typed, shaped array as it lives on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTensor {
    dims: Vec<usize>,
    data: TensorData,
}

impl StoredTensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(Error::Shape(format!("tensor rank must be in 1..=255, got {}", dims.len())));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::Shape(format!("dimension {d} out of range")));
        }
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} hold {count} values, payload has {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn from_image(image: &Image) -> Self {
        Self {
            dims: vec![image.height(), image.width()],
            data: TensorData::F64(image.as_slice().to_vec()),
        }
    }

    pub fn from_label_map(mask: &LabelMap) -> Self {
        Self {
            dims: vec![mask.height(), mask.width()],
            data: TensorData::U8(mask.as_slice().to_vec()),
        }
    }

    pub fn from_tensor(t: &Tensor) -> Self {
        Self {
            dims: t.shape().to_vec(),
            data: TensorData::F64(t.data().to_vec()),
        }
    }

    fn mismatch(&self, expected: Dtype) -> Error {
        Error::DtypeMismatch {
            expected: expected.name(),
            found: self.dtype().name(),
        }
    }

    /// `[H, W]` or `[S, H, W]` float data as a list of slices. `float32`
    /// payloads are widened.
    pub fn to_image_slices(&self) -> Result<Vec<Image>> {
        let values: Vec<f64> = match &self.data {
            TensorData::F64(v) => v.clone(),
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::U8(_) => return Err(self.mismatch(Dtype::F64)),
        };
        split_slices(&self.dims, values)
    }

    pub fn to_label_slices(&self) -> Result<Vec<LabelMap>> {
        match &self.data {
            TensorData::U8(v) => split_slices(&self.dims, v.clone()),
            _ => Err(self.mismatch(Dtype::U8)),
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        match &self.data {
            TensorData::F64(v) => Tensor::new(self.dims.clone(), v.clone()),
            _ => Err(self.mismatch(Dtype::F64)),
        }
    }
}

fn split_slices<T: Copy>(dims: &[usize], values: Vec<T>) -> Result<Vec<crate::image::Grid<T>>> {
    let (s, h, w) = match *dims {
        [h, w] => (1, h, w),
        [s, h, w] => (s, h, w),
        _ => return Err(Error::Shape(format!("expected [H, W] or [S, H, W], got {dims:?}"))),
    };
    (0..s)
        .map(|i| crate::image::Grid::from_vec(h, w, values[i * h * w..(i + 1) * h * w].to_vec()))
        .collect()
}

pub fn encode_tensor(t: &StoredTensor) -> Vec<u8> {
    let dtype = t.dtype();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t.dims.len() + dtype.size() * t.data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(t.dims.len() as u8);
    for &d in &t.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match &t.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::U8(v) => out.extend_from_slice(v),
    }
    out
}

/// Parses a container; `path` is used for error context only.
pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<StoredTensor> {
    let short = |expected: usize| Error::ShortPayload {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(short(HEADER_LEN));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let dtype = Dtype::from_code(bytes[6]).ok_or(Error::UnknownDtype {
        path: path.to_path_buf(),
        code: bytes[6],
    })?;
    let rank = bytes[7] as usize;
    let dims_end = HEADER_LEN + 4 * rank;
    if bytes.len() < dims_end {
        return Err(short(dims_end));
    }
    let dims: Vec<usize> = bytes[HEADER_LEN..dims_end]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("{}: dims {dims:?} overflow", path.display())))?;
    let expected = dims_end + count * dtype.size();
    if bytes.len() < expected {
        return Err(short(expected));
    }
    if bytes.len() > expected {
        return Err(Error::Shape(format!(
            "{}: {} trailing bytes after payload",
            path.display(),
            bytes.len() - expected
        )));
    }
    let payload = &bytes[dims_end..];
    let data = match dtype {
        Dtype::F32 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect(),
        ),
        Dtype::F64 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        ),
        Dtype::U8 => TensorData::U8(payload.to_vec()),
    };
    StoredTensor::new(dims, data).map_err(|e| Error::Shape(format!("{}: {e}", path.display())))
}

pub fn write_tensor(path: &Path, t: &StoredTensor) -> Result<()> {
    super::write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<StoredTensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.ogt")
    }

    #[test]
    fn header_layout() {
        let t = StoredTensor::new(vec![2, 2], TensorData::F64(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let bytes = encode_tensor(&t);
        assert_eq!(bytes.len(), 4 + 2 + 1 + 1 + 8 + 32);
        assert_eq!(&bytes[..8], &[b'O', b'G', b'T', b'1', 1, 0, 1, 2]);
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.0);
        assert_eq!(decode_tensor(&bytes, p()).unwrap(), t);
    }

    #[test]
    fn empty_dims_rejected() {
        assert!(StoredTensor::new(vec![], TensorData::U8(vec![])).is_err());
        assert!(StoredTensor::new(vec![0, 3], TensorData::U8(vec![])).is_err());
        assert!(StoredTensor::new(vec![2], TensorData::U8(vec![1])).is_err());
    }

    #[test]
    fn distinct_error_kinds() {
        let t = StoredTensor::new(vec![3], TensorData::F32(vec![1.0, -2.5, 3.25])).unwrap();
        let good = encode_tensor(&t);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tensor(&bad, p()), Err(Error::BadMagic { .. })));

        let cut = &good[..good.len() - 1];
        assert!(matches!(decode_tensor(cut, p()), Err(Error::ShortPayload { .. })));

        let mut v = good.clone();
        v[4] = 9;
        assert!(matches!(
            decode_tensor(&v, p()),
            Err(Error::UnsupportedVersion { version: 9, .. })
        ));

        let mut d = good.clone();
        d[6] = 7;
        assert!(matches!(decode_tensor(&d, p()), Err(Error::UnknownDtype { code: 7, .. })));

        let t = decode_tensor(&good, p()).unwrap();
        assert!(matches!(t.to_label_slices(), Err(Error::DtypeMismatch { .. })));
    }

    #[test]
    fn image_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ogt");
        let img = Image::from_vec(2, 3, vec![0.0, 0.1, 0.2, f64::MIN_POSITIVE, 1.0, -0.0]).unwrap();
        write_tensor(&path, &StoredTensor::from_image(&img)).unwrap();
        let back = read_tensor(&path).unwrap().to_image_slices().unwrap();
        assert_eq!(back.len(), 1);
        let bits = |g: &Image| g.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back[0]), bits(&img));
        assert!(!dir.path().join(".img.ogt.tmp").exists());
    }

    #[test]
    fn unwritable_path_names_file() {
        let err = write_tensor(
            Path::new("/nonexistent-dir/x.ogt"),
            &StoredTensor::new(vec![1], TensorData::U8(vec![1])).unwrap(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("nonexistent-dir"));
    }
}
