//! Dense vector primitives shared by the encoders, the index and PCA.
//!
//! Storage is `f32`; every reduction accumulates in `f64`.

use alloc::vec::Vec;

use crate::error::{check_dim, Result};

/// Norms at or below this value are treated as zero.
pub const NORM_EPSILON: f64 = 1e-12;

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

pub fn norm(v: &[f32]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Squared Euclidean distance without a length check.
#[inline]
pub fn squared_distance_unchecked(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

pub fn squared_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(squared_distance_unchecked(a, b))
}

pub fn euclidean_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    squared_distance(a, b).map(libm::sqrt)
}

/// Scales `v` to unit length in place. Vectors with norm `<= NORM_EPSILON`
/// are left untouched. Returns the norm before scaling.
pub fn l2_normalize_in_place(v: &mut [f32]) -> f64 {
    let n = norm(v);
    if n > NORM_EPSILON {
        let inv = 1.0 / n;
        for x in v.iter_mut() {
            *x = (*x as f64 * inv) as f32;
        }
    }
    n
}

pub fn l2_normalize(v: &[f32]) -> Vec<f32> {
    let mut out = v.to_vec();
    l2_normalize_in_place(&mut out);
    out
}

/// `f64` working buffer to `f32` storage, L2-normalized on the way out.
pub(crate) fn normalized_f32(acc: &[f64]) -> Vec<f32> {
    let n = libm::sqrt(acc.iter().map(|x| x * x).sum::<f64>());
    if n > NORM_EPSILON {
        acc.iter().map(|&x| (x / n) as f32).collect()
    } else {
        acc.iter().map(|&x| x as f32).collect()
    }
}

pub fn is_finite(v: &[f32]) -> bool {
    v.iter().all(|x| x.is_finite())
}
