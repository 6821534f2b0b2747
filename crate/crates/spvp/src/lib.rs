//! File formats, dataset manifests, the synthetic benchmark generator and
//! the end-to-end retrieval pipeline built on `spvp-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod progress;
pub mod report;
pub mod synth;

pub use error::{Error, ExitKind, Result};
