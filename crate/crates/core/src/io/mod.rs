//! Persistence: the `OGT1` tensor container, dataset manifests and reports.

mod json;
mod manifest;
mod tensor_file;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use json::{to_canonical_json, write_canonical_json};
pub use manifest::{load_manifest, mask_path_for, write_manifest, Manifest, ManifestEntry, Split};
pub use tensor_file::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, Dtype, StoredTensor, TensorData, FORMAT_VERSION,
    MAGIC,
};

/// Writes `bytes` to a sibling temporary file, then renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn create_dir_all(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
