//! `PVIX` descriptor collections, used both for per-split descriptor files
//! and for built indexes.
//!
//! Header: method tag u8, dim u32, count u64. Each entry is an id length
//! u16, the UTF-8 id, then `dim` values.

use std::path::Path;

use spvp_core::index::build_index;
use spvp_core::{Descriptor, DescriptorIndex, Method};

use super::{read_file, write_atomic, ByteReader, ByteWriter, FormatError};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PVIX";

/// Serializes descriptors that share `method` and `dim`.
pub fn encode_descriptors<'a, I>(method: Method, dim: usize, descriptors: I) -> Result<Vec<u8>, FormatError>
where
    I: IntoIterator<Item = (&'a str, &'a [f32])>,
    I::IntoIter: ExactSizeIterator,
{
    let iter = descriptors.into_iter();
    let dim32 = u32::try_from(dim).map_err(|_| FormatError::Malformed("dim exceeds u32".into()))?;
    let mut w = ByteWriter::new(MAGIC, 13 + iter.len() * (2 + 16 + 4 * dim));
    w.u8(method.tag());
    w.u32(dim32);
    w.u64(iter.len() as u64);
    for (id, values) in iter {
        if values.len() != dim {
            return Err(FormatError::DimensionMismatch { expected: dim, actual: values.len() });
        }
        let len = u16::try_from(id.len()).map_err(|_| FormatError::Malformed(format!("id `{id}` too long")))?;
        w.u16(len);
        w.bytes(id.as_bytes());
        w.f32s(values);
    }
    Ok(w.finish())
}

pub fn encode_index(index: &DescriptorIndex) -> Vec<u8> {
    let entries: Vec<(&str, &[f32])> = index.iter().collect();
    encode_descriptors(index.method(), index.dim(), entries).expect("index entries are homogeneous")
}

pub fn encode_descriptor_set(method: Method, dim: usize, descriptors: &[Descriptor]) -> Result<Vec<u8>, FormatError> {
    encode_descriptors(method, dim, descriptors.iter().map(|d| (d.image_id.as_str(), d.values.as_slice())))
}

/// Parsed collection header plus entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub method: Method,
    pub dim: usize,
    pub descriptors: Vec<Descriptor>,
}

pub fn decode_descriptor_set(bytes: &[u8]) -> Result<DescriptorSet, FormatError> {
    let mut r = ByteReader::open(bytes, MAGIC)?;
    let tag = r.u8()?;
    let method = Method::from_tag(tag).ok_or_else(|| FormatError::Malformed(format!("method tag {tag}")))?;
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    if dim == 0 {
        return Err(FormatError::Malformed("zero descriptor dimension".into()));
    }
    // every entry needs at least its length prefix and values
    let min_entry = 2 + 4 * dim as u64;
    if count.saturating_mul(min_entry) > r.remaining() as u64 {
        return Err(FormatError::Truncated {
            needed: count.saturating_mul(min_entry) as usize,
            available: r.remaining(),
        });
    }
    let mut descriptors = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.u16()? as usize;
        let id =
            std::str::from_utf8(r.bytes(len)?).map_err(|_| FormatError::Malformed("image id is not UTF-8".into()))?;
        let values = r.f32s(dim)?;
        descriptors.push(Descriptor::new(id, method, values).map_err(|e| FormatError::Malformed(e.to_string()))?);
    }
    r.finish()?;
    Ok(DescriptorSet { method, dim, descriptors })
}

pub fn decode_index(bytes: &[u8]) -> Result<DescriptorIndex, FormatError> {
    let set = decode_descriptor_set(bytes)?;
    build_index(set.descriptors).map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn save_index(path: &Path, index: &DescriptorIndex) -> Result<()> {
    write_atomic(path, &encode_index(index))
}

pub fn load_index(path: &Path) -> Result<DescriptorIndex> {
    decode_index(&read_file(path)?).map_err(|e| Error::format(path, e))
}

pub fn save_descriptor_set(path: &Path, method: Method, dim: usize, descriptors: &[Descriptor]) -> Result<()> {
    let bytes = encode_descriptor_set(method, dim, descriptors).map_err(|e| Error::format(path, e))?;
    write_atomic(path, &bytes)
}

pub fn load_descriptor_set(path: &Path) -> Result<DescriptorSet> {
    decode_descriptor_set(&read_file(path)?).map_err(|e| Error::format(path, e))
}
