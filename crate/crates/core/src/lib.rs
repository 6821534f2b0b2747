//! Place-recognition retrieval primitives: k-means vocabularies, VLAD and
//! spatial pyramid VLAD pooling, bag-of-words and global pooling baselines,
//! PCA, exact nearest-neighbor search, and geo-referenced retrieval metrics.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. The `parallel` feature spreads k-means assignment and index
//! scans over a rayon pool with chunk-ordered, reproducible reductions.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod codebook;
pub mod encoders;
pub mod error;
pub mod evaluation;
pub mod index;
mod par;
pub mod pca;
pub mod types;
pub mod vector;

pub use codebook::{assign, sample_features, train_codebook, Codebook, KMeansConfig, TrainedCodebook};
pub use encoders::{Encoder, Pooling, PyramidConfig, TfIdfStats, VladParams};
pub use error::{Error, Result};
pub use evaluation::{EvalOptions, EvalReport, GroundTruth};
pub use index::{DescriptorIndex, Hit, RankedResult};
pub use pca::{pca_apply, pca_fit, PcaModel};
pub use types::{Descriptor, GeoRecord, LocalFeature, LocalFeatureMap, Method};
