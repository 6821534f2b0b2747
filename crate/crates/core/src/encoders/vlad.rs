use alloc::vec;
use alloc::vec::Vec;

use crate::codebook::Codebook;
use crate::error::{check_dim, Result};
use crate::types::LocalFeature;
use crate::vector;

/// VLAD post-processing switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VladParams {
    /// L2-normalize every per-centroid block before power normalization.
    pub intra_normalize: bool,
}

/// Adds `descriptor - centroid(word)` into block `word` of `acc`.
#[inline]
pub(crate) fn add_residual(acc: &mut [f64], descriptor: &[f32], word: usize, codebook: &Codebook) {
    let d = codebook.dim();
    let block = &mut acc[word * d..(word + 1) * d];
    for ((a, &x), &c) in block.iter_mut().zip(descriptor).zip(codebook.centroid(word)) {
        *a += x as f64 - c as f64;
    }
}

/// Optional intra-normalization, signed square root, then global L2.
/// An all-zero accumulator stays zero.
pub(crate) fn finish(mut acc: Vec<f64>, block_dim: usize, params: VladParams) -> Vec<f32> {
    if params.intra_normalize {
        for block in acc.chunks_exact_mut(block_dim) {
            let n = libm::sqrt(block.iter().map(|x| x * x).sum::<f64>());
            if n > vector::NORM_EPSILON {
                block.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
    for x in acc.iter_mut() {
        *x = libm::copysign(libm::sqrt(x.abs()), *x);
    }
    vector::normalized_f32(&acc)
}

/// VLAD vector of length `k * d`: residuals to the nearest centroid summed
/// per centroid, power-normalized and L2-normalized.
pub fn vlad_encode(features: &[LocalFeature], codebook: &Codebook) -> Result<Vec<f32>> {
    vlad_encode_with(features, codebook, VladParams::default())
}

pub fn vlad_encode_with(features: &[LocalFeature], codebook: &Codebook, params: VladParams) -> Result<Vec<f32>> {
    let d = codebook.dim();
    let mut acc = vec![0.0f64; codebook.k() * d];
    for f in features {
        check_dim(d, f.dim())?;
        let (word, _) = codebook.nearest(&f.descriptor);
        add_residual(&mut acc, &f.descriptor, word, codebook);
    }
    Ok(finish(acc, d, params))
}
