//! Image-level descriptor constructions.

mod bovw;
mod pooling;
mod pyramid;
mod vlad;

pub use bovw::{bovw_encode, tfidf_weights, update_tfidf_stats, word_presence, TfIdfStats};
pub use pooling::{pool_baseline, Pooling, DEFAULT_GEM_P};
pub use pyramid::{cell_of, cell_vlads, spvp_encode, PyramidConfig, STANDARD_PATCH_DIMS};
pub use vlad::{vlad_encode, vlad_encode_with, VladParams};

use crate::codebook::Codebook;
use crate::error::Result;
use crate::pca::PcaModel;
use crate::types::{Descriptor, LocalFeatureMap, Method};

/// A fully parameterized encoder, ready to turn feature maps into
/// descriptors.
#[derive(Debug, Clone, Copy)]
pub enum Encoder<'a> {
    Spvp {
        codebook: &'a Codebook,
        config: &'a PyramidConfig,
        patch_pca: Option<&'a PcaModel>,
        /// Reduction of the final concatenation.
        global_pca: Option<&'a PcaModel>,
    },
    Vlad {
        codebook: &'a Codebook,
        params: VladParams,
        global_pca: Option<&'a PcaModel>,
    },
    Bovw {
        codebook: &'a Codebook,
        stats: &'a TfIdfStats,
    },
    Pool {
        dim: usize,
        pooling: Pooling,
    },
}

impl Encoder<'_> {
    pub fn method(&self) -> Method {
        match self {
            Encoder::Spvp { .. } => Method::Spvp,
            Encoder::Vlad { .. } => Method::Vlad,
            Encoder::Bovw { .. } => Method::Bovw,
            Encoder::Pool { pooling, .. } => pooling.method(),
        }
    }

    pub fn encode(&self, map: &LocalFeatureMap) -> Result<Descriptor> {
        let method = self.method();
        let values = match *self {
            Encoder::Spvp { codebook, config, patch_pca, global_pca } => {
                let d = spvp_encode(map, codebook, config, patch_pca)?;
                reduce(d.values, global_pca)?
            }
            Encoder::Vlad { codebook, params, global_pca } => {
                crate::error::check_dim(codebook.dim(), map.dim)?;
                reduce(vlad_encode_with(&map.features, codebook, params)?, global_pca)?
            }
            Encoder::Bovw { codebook, stats } => bovw_encode(&map.features, codebook, stats)?,
            Encoder::Pool { dim, pooling } => pool_baseline(&map.features, dim, pooling)?,
        };
        Descriptor::new(map.image_id.clone(), method, values)
    }
}

fn reduce(values: alloc::vec::Vec<f32>, pca: Option<&PcaModel>) -> Result<alloc::vec::Vec<f32>> {
    match pca {
        Some(model) if values.iter().any(|&x| x != 0.0) => model.apply(&values, true),
        Some(model) => Ok(alloc::vec![0.0; model.out_dim()]),
        None => Ok(values),
    }
}
