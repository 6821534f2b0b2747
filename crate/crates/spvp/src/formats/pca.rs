//! `PVPC` PCA model files: in_dim u32, out_dim u32, whiten u8, then mean,
//! row-major components and eigenvalues.

use std::path::Path;

use spvp_core::PcaModel;

use super::{read_file, write_atomic, ByteReader, ByteWriter, FormatError};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PVPC";

pub fn encode_pca(model: &PcaModel) -> Vec<u8> {
    let floats = model.in_dim() * (model.out_dim() + 1) + model.out_dim();
    let mut w = ByteWriter::new(MAGIC, 9 + 4 * floats);
    w.u32(model.in_dim() as u32);
    w.u32(model.out_dim() as u32);
    w.u8(model.whiten() as u8);
    w.f32s(model.mean());
    w.f32s(model.components());
    w.f32s(model.eigenvalues());
    w.finish()
}

pub fn decode_pca(bytes: &[u8]) -> Result<PcaModel, FormatError> {
    let mut r = ByteReader::open(bytes, MAGIC)?;
    let in_dim = r.u32()? as usize;
    let out_dim = r.u32()? as usize;
    let whiten = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(FormatError::Malformed(format!("whiten flag {other}"))),
    };
    let floats = in_dim
        .checked_mul(out_dim)
        .and_then(|c| c.checked_add(in_dim + out_dim))
        .ok_or_else(|| FormatError::Malformed("size overflow".into()))?;
    r.expect_remaining(floats.saturating_mul(4))?;
    let mean = r.f32s(in_dim)?;
    let components = r.f32s(in_dim * out_dim)?;
    let eigenvalues = r.f32s(out_dim)?;
    r.finish()?;
    PcaModel::new(mean, components, eigenvalues, whiten).map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn save_pca(path: &Path, model: &PcaModel) -> Result<()> {
    write_atomic(path, &encode_pca(model))
}

pub fn load_pca(path: &Path) -> Result<PcaModel> {
    decode_pca(&read_file(path)?).map_err(|e| Error::format(path, e))
}
