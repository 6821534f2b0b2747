//! `PVFM` local feature files.
//!
//! Header: magic, version u16, normalized flag u8, feature count u32,
//! dim u16, source width u16, source height u16. Each feature is
//! `x f32, y f32, dim x f32`.

use std::path::Path;

use spvp_core::{LocalFeature, LocalFeatureMap};

use super::{read_file, write_atomic, ByteReader, ByteWriter, FormatError};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PVFM";

/// Serializes `map`; `normalized` is recorded in the header and tells readers
/// whether descriptors are already unit length.
pub fn encode_feature_map(map: &LocalFeatureMap, normalized: bool) -> Result<Vec<u8>, FormatError> {
    let dim = u16::try_from(map.dim).map_err(|_| FormatError::Malformed(format!("dim {} exceeds u16", map.dim)))?;
    let count = u32::try_from(map.len()).map_err(|_| FormatError::Malformed("too many features".into()))?;
    let mut w = ByteWriter::new(MAGIC, 13 + map.len() * (8 + 4 * map.dim));
    w.u8(normalized as u8);
    w.u32(count);
    w.u16(dim);
    w.u16(map.source_width);
    w.u16(map.source_height);
    for f in &map.features {
        w.f32s(&[f.x, f.y]);
        w.f32s(&f.descriptor);
    }
    Ok(w.finish())
}

/// Parsed feature file. `map` descriptors are unit length when `normalized`
/// was set or re-normalization was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub map: LocalFeatureMap,
    pub normalized_flag: bool,
}

/// Parses a feature file without touching descriptor values.
pub fn decode_feature_file(bytes: &[u8], image_id: &str) -> Result<FeatureFile, FormatError> {
    let mut r = ByteReader::open(bytes, MAGIC)?;
    let flag = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(FormatError::Malformed(format!("normalized flag {other}"))),
    };
    let count = r.u32()? as usize;
    let dim = r.u16()? as usize;
    let width = r.u16()?;
    let height = r.u16()?;
    if dim == 0 {
        return Err(FormatError::Malformed("zero descriptor dimension".into()));
    }
    let record = 4 * (2 + dim);
    let body = count.checked_mul(record).ok_or_else(|| FormatError::Malformed("feature count overflow".into()))?;
    r.expect_remaining(body)?;
    let mut features = Vec::with_capacity(count);
    for i in 0..count {
        let xy = r.f32s(2)?;
        let descriptor = r.f32s(dim)?;
        let f = LocalFeature::new(xy[0], xy[1], descriptor)
            .map_err(|e| FormatError::Malformed(format!("feature {i}: {e}")))?;
        features.push(f);
    }
    r.finish()?;
    let map = LocalFeatureMap::new(image_id, dim, features)
        .map_err(|e| FormatError::Malformed(e.to_string()))?
        .with_source_size(width, height);
    Ok(FeatureFile { map, normalized_flag: flag })
}

/// Parses a feature file, re-normalizing descriptors when the header flag
/// is unset, and checks the descriptor dimension against `expected_dim`.
pub fn decode_feature_map(
    bytes: &[u8],
    image_id: &str,
    expected_dim: Option<usize>,
) -> Result<LocalFeatureMap, FormatError> {
    let FeatureFile { mut map, normalized_flag } = decode_feature_file(bytes, image_id)?;
    if let Some(expected) = expected_dim {
        if expected != map.dim {
            return Err(FormatError::DimensionMismatch { expected, actual: map.dim });
        }
    }
    if !normalized_flag {
        map.normalize_descriptors();
    }
    Ok(map)
}

pub fn save_feature_map(path: &Path, map: &LocalFeatureMap, normalized: bool) -> Result<()> {
    let bytes = encode_feature_map(map, normalized).map_err(|e| Error::format(path, e))?;
    write_atomic(path, &bytes)
}

pub fn load_feature_map(path: &Path, image_id: &str, expected_dim: Option<usize>) -> Result<LocalFeatureMap> {
    let bytes = read_file(path)?;
    decode_feature_map(&bytes, image_id, expected_dim).map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> LocalFeatureMap {
        let feats = vec![
            LocalFeature::new(0.0, 1.0, vec![3.0, 4.0]).unwrap(),
            LocalFeature::new(0.25, 0.5, vec![0.0, -2.0]).unwrap(),
        ];
        LocalFeatureMap::new("img", 2, feats).unwrap().with_source_size(640, 480)
    }

    #[test]
    fn layout_is_bit_exact() {
        let bytes = encode_feature_map(&sample_map(), false).unwrap();
        assert_eq!(bytes.len(), 17 + 2 * 16 + 8);
        assert_eq!(&bytes[..4], b"PVFM");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(&bytes[7..11], &2u32.to_le_bytes());
        assert_eq!(&bytes[11..13], &2u16.to_le_bytes());
        assert_eq!(&bytes[13..15], &640u16.to_le_bytes());
        assert_eq!(&bytes[15..17], &480u16.to_le_bytes());
        assert_eq!(&bytes[17..21], &0.0f32.to_le_bytes());
        assert_eq!(&bytes[25..29], &3.0f32.to_le_bytes());
    }

    #[test]
    fn unset_flag_renormalizes() {
        let bytes = encode_feature_map(&sample_map(), false).unwrap();
        let map = decode_feature_map(&bytes, "img", Some(2)).unwrap();
        assert_eq!(map.features[0].descriptor, vec![0.6, 0.8]);
        assert_eq!(map.features[1].descriptor, vec![0.0, -1.0]);
        let raw = decode_feature_file(&bytes, "img").unwrap();
        assert_eq!(raw.map, sample_map());
        assert!(!raw.normalized_flag);
    }

    #[test]
    fn set_flag_round_trips_exactly() {
        let bytes = encode_feature_map(&sample_map(), true).unwrap();
        let map = decode_feature_map(&bytes, "img", None).unwrap();
        assert_eq!(map, sample_map());
        assert_eq!(encode_feature_map(&map, true).unwrap(), bytes);
    }

    #[test]
    fn errors() {
        let bytes = encode_feature_map(&sample_map(), true).unwrap();
        assert!(matches!(
            decode_feature_map(&bytes, "img", Some(40)),
            Err(FormatError::DimensionMismatch { expected: 40, actual: 2 })
        ));
        assert!(matches!(
            decode_feature_map(&bytes[..bytes.len() - 3], "img", None),
            Err(FormatError::ChecksumMismatch { .. })
        ));
        let empty = LocalFeatureMap::new("e", 40, vec![]).unwrap();
        let bytes = encode_feature_map(&empty, true).unwrap();
        assert!(decode_feature_map(&bytes, "e", Some(40)).unwrap().is_empty());
    }
}
