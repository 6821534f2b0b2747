//! Spatial pyramid VLAD pooling: one VLAD per grid cell at every pyramid
//! level, concatenated in a fixed order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::vlad::{self, VladParams};
use crate::codebook::Codebook;
use crate::error::{check_dim, Error, Result};
use crate::pca::PcaModel;
use crate::types::{Descriptor, LocalFeatureMap, Method};
use crate::vector;

/// Per-patch PCA sizes used in the reference experiments.
pub const STANDARD_PATCH_DIMS: [usize; 4] = [256, 512, 1024, 2048];

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidConfig {
    /// Grid sizes, strictly increasing; `[1, 2, 4]` gives 1 + 4 + 16 cells.
    pub levels: Vec<u32>,
    /// Per-cell output size after patch PCA, `None` without patch PCA.
    pub per_patch_dim: Option<usize>,
    pub vlad: VladParams,
    /// L2-normalize each cell vector after patch PCA.
    pub normalize_after_pca: bool,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self { levels: vec![1, 2, 4], per_patch_dim: None, vlad: VladParams::default(), normalize_after_pca: true }
    }
}

impl PyramidConfig {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        let cfg = Self { levels, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_per_patch_dim(mut self, dim: Option<usize>) -> Self {
        self.per_patch_dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
        }
        if self.levels[0] < 1 || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "pyramid levels {:?} must be >= 1 and strictly increasing",
                self.levels
            )));
        }
        if self.per_patch_dim == Some(0) {
            return Err(Error::InvalidParameter("per-patch dimension must be positive".into()));
        }
        Ok(())
    }

    /// Total number of cells over all levels.
    pub fn cell_count(&self) -> usize {
        self.levels.iter().map(|&g| (g as usize) * (g as usize)).sum()
    }

    pub fn output_dim(&self, codebook: &Codebook) -> usize {
        self.cell_count() * self.per_patch_dim.unwrap_or(codebook.k() * codebook.dim())
    }
}

/// Row-major cell of `(x, y)` in a `g x g` grid over the unit square; the
/// closed upper edges fall into the last row and column.
pub fn cell_of(x: f32, y: f32, g: u32) -> usize {
    let clamp = |t: f32| (((t * g as f32) as u32).min(g - 1)) as usize;
    clamp(y) * g as usize + clamp(x)
}

fn check_pca(config: &PyramidConfig, codebook: &Codebook, pca: Option<&PcaModel>) -> Result<()> {
    match (config.per_patch_dim, pca) {
        (None, None) => Ok(()),
        (Some(p), Some(m)) => {
            if m.in_dim() != codebook.k() * codebook.dim() {
                return Err(Error::InvalidParameter(format!(
                    "patch PCA expects {}-D input, cell VLAD is {}-D",
                    m.in_dim(),
                    codebook.k() * codebook.dim()
                )));
            }
            if m.out_dim() != p {
                return Err(Error::InvalidParameter(format!(
                    "patch PCA emits {}-D, pyramid expects {p}-D",
                    m.out_dim()
                )));
            }
            Ok(())
        }
        (Some(p), None) => Err(Error::InvalidParameter(format!("per-patch dimension {p} requires a patch PCA model"))),
        (None, Some(_)) => {
            Err(Error::InvalidParameter("patch PCA model given but no per-patch dimension configured".into()))
        }
    }
}

/// Unreduced VLAD vector of every cell, levels in config order, cells
/// row-major within a level.
pub fn cell_vlads(map: &LocalFeatureMap, codebook: &Codebook, config: &PyramidConfig) -> Result<Vec<Vec<f32>>> {
    config.validate()?;
    let d = codebook.dim();
    check_dim(d, map.dim)?;
    let block = codebook.k() * d;
    let words: Vec<usize> = map
        .features
        .iter()
        .map(|f| {
            check_dim(d, f.dim())?;
            Ok(codebook.nearest(&f.descriptor).0)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(config.cell_count());
    for &g in &config.levels {
        let n = (g as usize) * (g as usize);
        let mut acc = vec![vec![0.0f64; block]; n];
        for (f, &w) in map.features.iter().zip(&words) {
            vlad::add_residual(&mut acc[cell_of(f.x, f.y, g)], &f.descriptor, w, codebook);
        }
        cells.extend(acc.into_iter().map(|a| vlad::finish(a, d, config.vlad)));
    }
    Ok(cells)
}

/// Encodes a feature map as the ordered concatenation of its cell VLADs.
///
/// Empty cells contribute zero blocks, also when patch PCA is applied, so
/// the output length is fixed by the configuration.
pub fn spvp_encode(
    map: &LocalFeatureMap,
    codebook: &Codebook,
    config: &PyramidConfig,
    patch_pca: Option<&PcaModel>,
) -> Result<Descriptor> {
    check_pca(config, codebook, patch_pca)?;
    let cells = cell_vlads(map, codebook, config)?;
    let mut out = Vec::with_capacity(config.output_dim(codebook));
    for cell in cells {
        match patch_pca {
            Some(model) if cell.iter().any(|&x| x != 0.0) => {
                out.extend(model.apply(&cell, config.normalize_after_pca)?);
            }
            Some(model) => out.extend(core::iter::repeat_n(0.0, model.out_dim())),
            None => out.extend(cell),
        }
    }
    vector::l2_normalize_in_place(&mut out);
    Descriptor::new(map.image_id.clone(), Method::Spvp, out)
}
