//! Domain types: local features, image descriptors and geotags.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::vector;

/// Descriptor dimension produced by the usual attentive local-feature extractor.
pub const DEFAULT_FEATURE_DIM: usize = 40;

/// Tolerance on the unit norm of descriptors flagged as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;

/// A keypoint at normalized image coordinates with its local descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeature {
    pub x: f32,
    pub y: f32,
    pub descriptor: Vec<f32>,
}

impl LocalFeature {
    pub fn new(x: f32, y: f32, descriptor: Vec<f32>) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidData(format!("feature coordinates ({x}, {y}) outside the unit square")));
        }
        if !vector::is_finite(&descriptor) {
            return Err(Error::InvalidData("non-finite descriptor component".into()));
        }
        Ok(Self { x, y, descriptor })
    }

    pub fn dim(&self) -> usize {
        self.descriptor.len()
    }
}

/// All local features detected in one image.
///
/// Every descriptor has length `dim`. The map may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeatureMap {
    pub image_id: String,
    pub dim: usize,
    pub source_width: u16,
    pub source_height: u16,
    pub features: Vec<LocalFeature>,
}

impl LocalFeatureMap {
    pub fn new(image_id: impl Into<String>, dim: usize, features: Vec<LocalFeature>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("feature dimension must be positive".into()));
        }
        for f in &features {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: f.dim() });
            }
        }
        Ok(Self { image_id: image_id.into(), dim, source_width: 0, source_height: 0, features })
    }

    pub fn with_source_size(mut self, width: u16, height: u16) -> Self {
        self.source_width = width;
        self.source_height = height;
        self
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn normalize_descriptors(&mut self) {
        for f in &mut self.features {
            vector::l2_normalize_in_place(&mut f.descriptor);
        }
    }

    /// True when every descriptor is unit length within [`UNIT_NORM_TOLERANCE`].
    pub fn is_normalized(&self) -> bool {
        self.features.iter().all(|f| (vector::norm(&f.descriptor) - 1.0).abs() <= UNIT_NORM_TOLERANCE)
    }
}

/// Image-level encoding method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Spvp,
    Vlad,
    Bovw,
    Mac,
    Spoc,
    Gem,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Spvp, Method::Vlad, Method::Bovw, Method::Mac, Method::Spoc, Method::Gem];

    /// Stable on-disk tag.
    pub fn tag(self) -> u8 {
        match self {
            Method::Spvp => 0,
            Method::Vlad => 1,
            Method::Bovw => 2,
            Method::Mac => 3,
            Method::Spoc => 4,
            Method::Gem => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Spvp => "spvp",
            Method::Vlad => "vlad",
            Method::Bovw => "bovw",
            Method::Mac => "mac",
            Method::Spoc => "spoc",
            Method::Gem => "gem",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// One image represented by a single flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub image_id: String,
    pub method: Method,
    pub values: Vec<f32>,
}

impl Descriptor {
    pub fn new(image_id: impl Into<String>, method: Method, values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("descriptor must have positive dimension".into()));
        }
        if !vector::is_finite(&values) {
            return Err(Error::InvalidData("non-finite descriptor component".into()));
        }
        Ok(Self { image_id: image_id.into(), method, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_normalized(&self) -> bool {
        (vector::norm(&self.values) - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }
}

/// Geotag of a database or query image.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoRecord {
    pub image_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub yaw: Option<f32>,
}

impl GeoRecord {
    pub fn new(image_id: impl Into<String>, latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidData(format!("coordinates ({latitude}, {longitude}) out of range")));
        }
        Ok(Self { image_id: image_id.into(), latitude, longitude, yaw: None })
    }

    pub fn with_yaw(mut self, yaw: f32) -> Result<Self> {
        if !(0.0..360.0).contains(&yaw) {
            return Err(Error::InvalidData(format!("yaw {yaw} outside [0, 360)")));
        }
        self.yaw = Some(yaw);
        Ok(self)
    }
}
