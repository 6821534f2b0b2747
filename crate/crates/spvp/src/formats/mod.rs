//! Little-endian binary containers shared by the feature, codebook, PCA and
//! index files.
//!
//! Every file is `magic (4) | version u16 | body | checksum u64`, where the
//! checksum is FNV-1a 64 over all bytes before it.

use std::hash::Hasher;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub mod codebook;
pub mod features;
pub mod index;
pub mod pca;

pub const FORMAT_VERSION: u16 = 1;

const CHECKSUM_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("file truncated: needed {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),

    #[error("dimension {actual} disagrees with declared {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed payload: {0}")]
    Malformed(String),
}

pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Growable little-endian byte sink.
pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new(magic: &[u8; 4], capacity: usize) -> Self {
        let mut buf = Vec::with_capacity(capacity + 4 + 2 + CHECKSUM_LEN);
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32s(&mut self, values: &[f32]) {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    /// Appends the checksum and returns the finished file image.
    pub fn finish(mut self) -> Vec<u8> {
        let sum = checksum(&self.buf);
        self.buf.extend_from_slice(&sum.to_le_bytes());
        self.buf
    }
}

/// Cursor over a verified payload.
pub(crate) struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    /// Checks magic, version and checksum; the reader starts after the version.
    pub fn open(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self, FormatError> {
        let min = 4 + 2 + CHECKSUM_LEN;
        if bytes.len() < min {
            return Err(FormatError::Truncated { needed: min, available: bytes.len() });
        }
        let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if &found != magic {
            return Err(FormatError::BadMagic { expected: *magic, found });
        }
        let (payload, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        let stored = u64::from_le_bytes(tail.try_into().expect("length checked"));
        let computed = checksum(payload);
        if stored != computed {
            return Err(FormatError::ChecksumMismatch { stored, computed });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        Ok(Self { data: payload, pos: 6 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or(FormatError::Truncated {
            needed: self.pos.saturating_add(n) + CHECKSUM_LEN,
            available: self.data.len() + CHECKSUM_LEN,
        })?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        self.take(n)
    }

    /// Reads `n` floats, rejecting non-finite values.
    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>, FormatError> {
        let len = n.checked_mul(4).ok_or_else(|| FormatError::Malformed("length overflow".into()))?;
        let raw = self.take(len)?;
        let out: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        if out.iter().any(|x| !x.is_finite()) {
            return Err(FormatError::Malformed("non-finite value".into()));
        }
        Ok(out)
    }

    /// Fails unless the byte count still to be read is exactly `n`.
    pub fn expect_remaining(&self, n: usize) -> Result<(), FormatError> {
        let left = self.remaining();
        match left.cmp(&n) {
            std::cmp::Ordering::Equal => Ok(()),
            std::cmp::Ordering::Less => Err(FormatError::Truncated {
                needed: self.pos + n + CHECKSUM_LEN,
                available: self.data.len() + CHECKSUM_LEN,
            }),
            std::cmp::Ordering::Greater => Err(FormatError::TrailingBytes(left - n)),
        }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn finish(self) -> Result<(), FormatError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(FormatError::TrailingBytes(n)),
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to a temporary sibling and renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
