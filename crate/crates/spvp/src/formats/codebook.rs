//! `PVCB` codebook files: k u32, d u32, then k*d centroid components.

use std::path::Path;

use spvp_core::Codebook;

use super::{read_file, write_atomic, ByteReader, ByteWriter, FormatError};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PVCB";

pub fn encode_codebook(codebook: &Codebook) -> Vec<u8> {
    let mut w = ByteWriter::new(MAGIC, 8 + 4 * codebook.centroids().len());
    w.u32(codebook.k() as u32);
    w.u32(codebook.dim() as u32);
    w.f32s(codebook.centroids());
    w.finish()
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook, FormatError> {
    let mut r = ByteReader::open(bytes, MAGIC)?;
    let k = r.u32()? as usize;
    let d = r.u32()? as usize;
    let n = k.checked_mul(d).ok_or_else(|| FormatError::Malformed("size overflow".into()))?;
    r.expect_remaining(n.saturating_mul(4))?;
    let centroids = r.f32s(n)?;
    r.finish()?;
    Codebook::new(k, d, centroids).map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn save_codebook(path: &Path, codebook: &Codebook) -> Result<()> {
    write_atomic(path, &encode_codebook(codebook))
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    decode_codebook(&read_file(path)?).map_err(|e| Error::format(path, e))
}
