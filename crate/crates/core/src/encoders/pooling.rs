//! Global pooling baselines over raw local descriptors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::types::{LocalFeature, Method};
use crate::vector;

pub const DEFAULT_GEM_P: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pooling {
    /// Element-wise maximum.
    Mac,
    /// Element-wise mean.
    Spoc,
    /// Generalized mean with exponent `p >= 1`.
    Gem { p: f64 },
}

impl Pooling {
    pub fn method(self) -> Method {
        match self {
            Pooling::Mac => Method::Mac,
            Pooling::Spoc => Method::Spoc,
            Pooling::Gem { .. } => Method::Gem,
        }
    }
}

/// Pools `features` into one L2-normalized `dim`-vector.
///
/// GeM expects non-negative components. When an image has negative
/// components, all of its components are shifted by the image-wide minimum
/// before pooling.
pub fn pool_baseline(features: &[LocalFeature], dim: usize, pooling: Pooling) -> Result<Vec<f32>> {
    for f in features {
        check_dim(dim, f.dim())?;
    }
    let pooled = match pooling {
        Pooling::Spoc => {
            let mut acc = vec![0.0f64; dim];
            for f in features {
                acc.iter_mut().zip(&f.descriptor).for_each(|(a, &x)| *a += x as f64);
            }
            if !features.is_empty() {
                let n = features.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
            }
            acc
        }
        Pooling::Mac => {
            require_features(features, "MAC")?;
            let mut acc = vec![f64::NEG_INFINITY; dim];
            for f in features {
                acc.iter_mut().zip(&f.descriptor).for_each(|(a, &x)| *a = a.max(x as f64));
            }
            acc
        }
        Pooling::Gem { p } => {
            require_features(features, "GeM")?;
            if p.is_nan() || p < 1.0 || p.is_infinite() {
                return Err(Error::InvalidParameter(format!("GeM exponent {p} must be finite and >= 1")));
            }
            gem(features, dim, p)
        }
    };
    Ok(vector::normalized_f32(&pooled))
}

fn require_features(features: &[LocalFeature], name: &str) -> Result<()> {
    if features.is_empty() {
        return Err(Error::InsufficientData(format!("{name} pooling of an empty feature set")));
    }
    Ok(())
}

fn gem(features: &[LocalFeature], dim: usize, p: f64) -> Vec<f64> {
    let min = features.iter().flat_map(|f| f.descriptor.iter()).fold(f64::INFINITY, |m, &x| m.min(x as f64));
    let shift = if min < 0.0 { -min } else { 0.0 };
    let n = features.len() as f64;
    (0..dim)
        .map(|j| {
            // scale by the column maximum so x^p cannot underflow for large p
            let col = || features.iter().map(move |f| f.descriptor[j] as f64 + shift);
            let peak = col().fold(0.0f64, f64::max);
            if peak == 0.0 {
                return 0.0;
            }
            let mean = col().map(|x| libm::pow(x / peak, p)).sum::<f64>() / n;
            peak * libm::pow(mean, 1.0 / p)
        })
        .collect()
}
