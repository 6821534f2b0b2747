//! Pipeline stages over manifests and persisted artifacts, and the
//! resumable end-to-end run.

use std::cell::OnceCell;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spvp_core::codebook::Reservoir;
use spvp_core::encoders::{cell_vlads, update_tfidf_stats, word_presence, DEFAULT_GEM_P};
use spvp_core::evaluation::{build_ground_truth, evaluate, threshold_sweep, DEFAULT_SWEEP_M, DEFAULT_THRESHOLD_M};
use spvp_core::index::{build_index, DEFAULT_TOP_N};
use spvp_core::{
    pca_fit, train_codebook, Codebook, Descriptor, DescriptorIndex, Encoder, EvalOptions, EvalReport, KMeansConfig,
    LocalFeature, LocalFeatureMap, Method, PcaModel, Pooling, PyramidConfig, RankedResult, TfIdfStats, VladParams,
};

use crate::error::{Error, Result};
use crate::formats::codebook::{load_codebook, save_codebook};
use crate::formats::features::{load_feature_map, save_feature_map};
use crate::formats::index::{load_descriptor_set, load_index, save_descriptor_set, save_index};
use crate::formats::pca::{load_pca, save_pca};
use crate::formats::write_atomic;
use crate::manifest::{Manifest, Split};
use crate::progress::{note, Progress};
use crate::report::{load_results, save_reports, save_results};

pub const DEFAULT_K: usize = 256;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_SAMPLE_SIZE: usize = 100_000;
pub const FULL_SAMPLE_SIZE: usize = 10_000_000;
pub const DEFAULT_PCA_SAMPLES: usize = 10_000;
pub const DEFAULT_N_VALUES: [usize; 4] = [1, 5, 10, 20];

const LOAD_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaPlacement {
    #[default]
    None,
    /// Reduce every pyramid cell before concatenation.
    Patch,
    /// Reduce the final image vector.
    Global,
}

impl FromStr for PcaPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "patch" => Ok(Self::Patch),
            "global" => Ok(Self::Global),
            _ => Err(Error::Usage(format!("unknown PCA placement `{s}` (none, patch, global)"))),
        }
    }
}

impl fmt::Display for PcaPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Patch => "patch",
            Self::Global => "global",
        })
    }
}

pub fn needs_codebook(method: Method) -> bool {
    matches!(method, Method::Spvp | Method::Vlad | Method::Bovw)
}

/// Everything that determines how a feature map becomes a descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeParams {
    pub method: Method,
    pub levels: Vec<u32>,
    pub pca: PcaPlacement,
    pub pca_dim: Option<usize>,
    pub pca_samples: usize,
    pub whiten: bool,
    pub normalize_after_pca: bool,
    pub intra_normalize: bool,
    pub gem_p: f64,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            method: Method::Spvp,
            levels: vec![1, 2, 4],
            pca: PcaPlacement::None,
            pca_dim: None,
            pca_samples: DEFAULT_PCA_SAMPLES,
            whiten: false,
            normalize_after_pca: true,
            intra_normalize: false,
            gem_p: DEFAULT_GEM_P,
        }
    }
}

impl EncodeParams {
    pub fn validate(&self) -> Result<()> {
        match (self.pca, self.pca_dim) {
            (PcaPlacement::None, Some(_)) => {
                return Err(Error::Usage("a PCA dimension needs a PCA placement (patch or global)".into()))
            }
            (PcaPlacement::None, None) => {}
            (_, None | Some(0)) => return Err(Error::Usage("PCA needs a positive output dimension".into())),
            (PcaPlacement::Patch, _) if self.method != Method::Spvp => {
                return Err(Error::Usage(format!("patch PCA applies to spvp, not {}", self.method)))
            }
            (PcaPlacement::Global, _) if !matches!(self.method, Method::Spvp | Method::Vlad) => {
                return Err(Error::Usage(format!("global PCA applies to spvp and vlad, not {}", self.method)))
            }
            _ => {}
        }
        if self.pca_samples == 0 {
            return Err(Error::Usage("PCA sample count must be positive".into()));
        }
        if !(self.gem_p.is_finite() && self.gem_p >= 1.0) {
            return Err(Error::Usage(format!("GeM exponent {} must be finite and at least 1", self.gem_p)));
        }
        self.pyramid().validate().map_err(|e| Error::Usage(e.to_string()))
    }

    pub fn pyramid(&self) -> PyramidConfig {
        PyramidConfig {
            levels: self.levels.clone(),
            per_patch_dim: if self.pca == PcaPlacement::Patch { self.pca_dim } else { None },
            vlad: self.vlad(),
            normalize_after_pca: self.normalize_after_pca,
        }
    }

    fn vlad(&self) -> VladParams {
        VladParams { intra_normalize: self.intra_normalize }
    }

    fn pooling(&self) -> Option<Pooling> {
        match self.method {
            Method::Mac => Some(Pooling::Mac),
            Method::Spoc => Some(Pooling::Spoc),
            Method::Gem => Some(Pooling::Gem { p: self.gem_p }),
            _ => None,
        }
    }
}

/// Trained inputs an encoder may depend on.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub codebook: Option<Codebook>,
    pub pca: Option<PcaModel>,
    pub stats: Option<TfIdfStats>,
}

/// An encoder over borrowed artifacts, with the pyramid configuration it
/// needs kept alongside.
pub struct EncoderSetup<'a> {
    params: &'a EncodeParams,
    pyramid: PyramidConfig,
    artifacts: &'a Artifacts,
    dim: usize,
}

impl<'a> EncoderSetup<'a> {
    pub fn new(params: &'a EncodeParams, artifacts: &'a Artifacts, dim: usize) -> Result<Self> {
        params.validate()?;
        let pyramid = match (&artifacts.pca, params.pca) {
            (Some(model), PcaPlacement::Patch) => params.pyramid().with_per_patch_dim(Some(model.out_dim())),
            _ => params.pyramid(),
        };
        Ok(Self { params, pyramid, artifacts, dim })
    }

    pub fn encoder(&self) -> Result<Encoder<'_>> {
        let codebook = || {
            self.artifacts
                .codebook
                .as_ref()
                .ok_or_else(|| Error::Usage(format!("{} needs a codebook", self.params.method)))
        };
        let model = match (self.params.pca, &self.artifacts.pca) {
            (PcaPlacement::None, _) => None,
            (_, Some(m)) => Some(m),
            (placement, None) => return Err(Error::Usage(format!("{placement} PCA needs a fitted PCA model"))),
        };
        let patch_pca = model.filter(|_| self.params.pca == PcaPlacement::Patch);
        let global_pca = model.filter(|_| self.params.pca == PcaPlacement::Global);
        Ok(match self.params.method {
            Method::Spvp => Encoder::Spvp { codebook: codebook()?, config: &self.pyramid, patch_pca, global_pca },
            Method::Vlad => Encoder::Vlad { codebook: codebook()?, params: self.params.vlad(), global_pca },
            Method::Bovw => Encoder::Bovw {
                codebook: codebook()?,
                stats: self
                    .artifacts
                    .stats
                    .as_ref()
                    .ok_or_else(|| Error::Usage("bovw needs TF-IDF statistics".into()))?,
            },
            _ => Encoder::Pool { dim: self.dim, pooling: self.params.pooling().expect("pooling method") },
        })
    }
}

/// Loads every feature file of a split in manifest order. All maps must
/// share one descriptor dimension, `dim` when given.
pub fn load_maps(manifest: &Manifest, split: Split, dim: Option<usize>) -> Result<Vec<LocalFeatureMap>> {
    let records: Vec<_> = manifest.split(split).collect();
    let progress = Progress::new("load", records.len());
    let maps = records
        .par_iter()
        .map(|r| {
            let map = load_feature_map(&manifest.resolve(r), &r.image_id, dim);
            progress.inc();
            map
        })
        .collect::<Result<Vec<_>>>()?;
    progress.finish();
    if let Some(first) = maps.first() {
        if let Some(m) = maps.iter().find(|m| m.dim != first.dim) {
            return Err(Error::manifest(
                manifest.root(),
                format!("{} has dimension {}, {} has {}", m.image_id, m.dim, first.image_id, first.dim),
            ));
        }
    }
    Ok(maps)
}

fn to_sample_map(dim: usize, samples: Vec<Vec<f32>>) -> Result<LocalFeatureMap> {
    let features =
        samples.into_iter().map(|d| LocalFeature::new(0.0, 0.0, d)).collect::<spvp_core::Result<Vec<_>>>()?;
    Ok(LocalFeatureMap::new("samples", dim, features)?)
}

/// Reservoir sample of database descriptors, streamed over the manifest in
/// order. The result is a feature map with zero coordinates.
pub fn sample_descriptors(manifest: &Manifest, target: usize, seed: u64) -> Result<LocalFeatureMap> {
    if target == 0 {
        return Err(Error::Usage("sample size must be positive".into()));
    }
    let records: Vec<_> = manifest.split(Split::Database).collect();
    let progress = Progress::new("sample", records.len());
    let mut reservoir = Reservoir::new(target, seed);
    let mut dim = None;
    for chunk in records.chunks(LOAD_CHUNK) {
        let maps = chunk
            .par_iter()
            .map(|r| load_feature_map(&manifest.resolve(r), &r.image_id, dim))
            .collect::<Result<Vec<_>>>()?;
        for map in maps {
            let d = *dim.get_or_insert(map.dim);
            if map.dim != d {
                return Err(Error::manifest(manifest.root(), format!("{} has dimension {}", map.image_id, map.dim)));
            }
            map.features.iter().for_each(|f| reservoir.offer(&f.descriptor));
            progress.inc();
        }
    }
    progress.finish();
    let dim = dim.ok_or_else(|| Error::manifest(manifest.root(), "no database records"))?;
    to_sample_map(dim, reservoir.finish()?)
}

/// The same sample as [`sample_descriptors`], over maps already in memory.
pub fn sample_loaded(maps: &[LocalFeatureMap], target: usize, seed: u64) -> Result<LocalFeatureMap> {
    if target == 0 {
        return Err(Error::Usage("sample size must be positive".into()));
    }
    let dim = maps.first().map(|m| m.dim).ok_or_else(|| Error::Usage("no database images".into()))?;
    to_sample_map(dim, spvp_core::sample_features(maps, target, seed)?)
}

pub fn train(samples: &LocalFeatureMap, k: usize, max_iters: usize, seed: u64) -> Result<Codebook> {
    let data: Vec<&[f32]> = samples.features.iter().map(|f| f.descriptor.as_slice()).collect();
    note("train-codebook", &format!("k = {k} over {} samples", data.len()));
    let trained = train_codebook(&data, &KMeansConfig::new(k, seed).with_max_iters(max_iters))?;
    if let Some(meta) = trained.codebook.training_meta() {
        note(
            "train-codebook",
            &format!("{} iterations, inertia {:.6}, converged {}", meta.iterations, meta.final_inertia, meta.converged),
        );
    }
    Ok(trained.codebook)
}

pub fn tfidf_stats(database: &[LocalFeatureMap], codebook: &Codebook) -> Result<TfIdfStats> {
    let sets =
        database.par_iter().map(|m| word_presence(&m.features, codebook)).collect::<spvp_core::Result<Vec<_>>>()?;
    Ok(update_tfidf_stats(&sets, codebook.k())?)
}

/// Fits the PCA model for `params.pca` on database images: non-empty cell
/// VLADs for patch placement, unreduced image vectors for global placement.
/// At most `params.pca_samples` vectors are used, reservoir-sampled.
pub fn fit_pca(
    database: &[LocalFeatureMap],
    codebook: &Codebook,
    params: &EncodeParams,
    seed: u64,
) -> Result<PcaModel> {
    params.validate()?;
    let out_dim = params.pca_dim.ok_or_else(|| Error::Usage("PCA needs an output dimension".into()))?;
    let dim = codebook.dim();
    let unreduced = EncodeParams { pca: PcaPlacement::None, pca_dim: None, ..params.clone() };
    let artifacts = Artifacts { codebook: Some(codebook.clone()), ..Artifacts::default() };
    let setup = EncoderSetup::new(&unreduced, &artifacts, dim)?;
    let encoder = setup.encoder()?;
    let pyramid = unreduced.pyramid();

    let progress = Progress::new("fit-pca", database.len());
    let mut reservoir = Reservoir::new(params.pca_samples, seed);
    for chunk in database.chunks(LOAD_CHUNK) {
        let vectors = chunk
            .par_iter()
            .map(|m| {
                let v = match params.pca {
                    PcaPlacement::Patch => cell_vlads(m, codebook, &pyramid)?,
                    _ => vec![encoder.encode(m)?.values],
                };
                progress.inc();
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        for v in vectors.iter().flatten().filter(|v| v.iter().any(|&x| x != 0.0)) {
            reservoir.offer(v);
        }
    }
    progress.finish();
    let samples = reservoir.finish()?;
    note("fit-pca", &format!("{} placement, {} vectors, {} -> {out_dim}", params.pca, samples.len(), samples[0].len()));
    Ok(pca_fit(&samples, out_dim, params.whiten)?)
}

pub fn encode(maps: &[LocalFeatureMap], setup: &EncoderSetup<'_>) -> Result<Vec<Descriptor>> {
    let encoder = setup.encoder()?;
    let progress = Progress::new("encode", maps.len());
    let out = maps
        .par_iter()
        .map(|m| {
            let d = encoder.encode(m);
            progress.inc();
            d
        })
        .collect::<spvp_core::Result<Vec<_>>>()?;
    progress.finish();
    Ok(out)
}

pub fn search(index: &DescriptorIndex, queries: &[Descriptor], top_n: usize) -> Result<Vec<RankedResult>> {
    if top_n == 0 {
        return Err(Error::Usage("top-n must be positive".into()));
    }
    note("search", &format!("{} queries against {} images", queries.len(), index.len()));
    Ok(index.search_batch(queries, top_n.min(index.len()))?)
}

/// Configuration of an end-to-end run. Loadable from TOML; unset keys take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub work_dir: PathBuf,
    #[serde(with = "method_name")]
    pub method: Method,
    pub k: usize,
    pub max_iters: usize,
    pub sample_size: usize,
    pub levels: Vec<u32>,
    pub pca: PcaPlacement,
    pub pca_dim: Option<usize>,
    pub pca_samples: usize,
    pub whiten: bool,
    pub normalize_after_pca: bool,
    pub intra_normalize: bool,
    pub gem_p: f64,
    pub top_n: usize,
    pub threshold_m: f64,
    pub thresholds: Vec<f64>,
    pub n_values: Vec<usize>,
    pub exclude_uncoverable: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let encode = EncodeParams::default();
        Self {
            manifest: PathBuf::from("manifest.csv"),
            work_dir: PathBuf::from("work"),
            method: encode.method,
            k: DEFAULT_K,
            max_iters: DEFAULT_MAX_ITERS,
            sample_size: DEFAULT_SAMPLE_SIZE,
            levels: encode.levels,
            pca: encode.pca,
            pca_dim: encode.pca_dim,
            pca_samples: encode.pca_samples,
            whiten: encode.whiten,
            normalize_after_pca: encode.normalize_after_pca,
            intra_normalize: encode.intra_normalize,
            gem_p: encode.gem_p,
            top_n: DEFAULT_TOP_N,
            threshold_m: DEFAULT_THRESHOLD_M,
            thresholds: DEFAULT_SWEEP_M.to_vec(),
            n_values: DEFAULT_N_VALUES.to_vec(),
            exclude_uncoverable: false,
            seed: 0,
        }
    }
}

mod method_name {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};
    use spvp_core::Method;

    pub fn serialize<S: Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(m.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Method, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {}", e.message())))
    }

    pub fn encode_params(&self) -> EncodeParams {
        EncodeParams {
            method: self.method,
            levels: self.levels.clone(),
            pca: self.pca,
            pca_dim: self.pca_dim,
            pca_samples: self.pca_samples,
            whiten: self.whiten,
            normalize_after_pca: self.normalize_after_pca,
            intra_normalize: self.intra_normalize,
            gem_p: self.gem_p,
        }
    }

    /// N values actually evaluated: the configured ones up to `top_n`.
    pub fn effective_n_values(&self) -> Vec<usize> {
        self.n_values.iter().copied().filter(|&n| n <= self.top_n).collect()
    }

    /// Checks parameters, then that the manifest exists. Touches nothing.
    pub fn validate(&self) -> Result<()> {
        self.encode_params().validate()?;
        if needs_codebook(self.method) && (self.k == 0 || self.max_iters == 0 || self.sample_size < self.k) {
            return Err(Error::Usage(format!(
                "need k >= 1, max-iters >= 1 and sample-size >= k (k = {}, max-iters = {}, sample-size = {})",
                self.k, self.max_iters, self.sample_size
            )));
        }
        if self.top_n == 0 {
            return Err(Error::Usage("top-n must be positive".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Usage("N values must be positive and non-empty".into()));
        }
        if self.effective_n_values().is_empty() {
            return Err(Error::Usage(format!("every N value exceeds top-n {}", self.top_n)));
        }
        let thresholds = std::iter::once(&self.threshold_m).chain(&self.thresholds);
        if self.thresholds.is_empty() || thresholds.clone().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Usage("distance thresholds must be positive and non-empty".into()));
        }
        if !self.manifest.is_file() {
            return Err(Error::io(&self.manifest, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
        }
        Ok(())
    }
}

/// Output locations of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub samples: PathBuf,
    pub codebook: PathBuf,
    pub method_dir: PathBuf,
    pub pca: PathBuf,
    pub database: PathBuf,
    pub queries: PathBuf,
    pub index: PathBuf,
    pub results: PathBuf,
    pub report: PathBuf,
    pub ranks: PathBuf,
    pub sweep: PathBuf,
    pub sweep_ranks: PathBuf,
    /// Settings the shared sample and codebook were built with.
    pub codebook_params: PathBuf,
    /// Settings the method outputs were built with.
    pub method_params: PathBuf,
}

impl RunPaths {
    pub fn new(work_dir: &Path, method: Method) -> Self {
        let m = work_dir.join(method.name());
        Self {
            samples: work_dir.join("samples.pvfm"),
            codebook: work_dir.join("codebook.pvcb"),
            pca: m.join("pca.pvpc"),
            database: m.join("database.pvix"),
            queries: m.join("queries.pvix"),
            index: m.join("index.pvix"),
            results: m.join("results.tsv"),
            report: m.join("report.jsonl"),
            ranks: m.join("ranks.tsv"),
            sweep: m.join("sweep.jsonl"),
            sweep_ranks: m.join("sweep_ranks.tsv"),
            codebook_params: work_dir.join("codebook.json"),
            method_params: m.join("params.json"),
            method_dir: m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub paths: RunPaths,
    /// Evaluation at the configured threshold.
    pub report: EvalReport,
    pub sweep: Vec<EvalReport>,
}

/// Reuses `path` unless `force`; otherwise builds the artifact and saves it.
fn cached<T>(
    stage: &'static str,
    path: &Path,
    force: bool,
    load: impl FnOnce(&Path) -> Result<T>,
    make: impl FnOnce() -> Result<T>,
    save: impl FnOnce(&Path, &T) -> Result<()>,
) -> Result<T> {
    let run = || {
        if !force && path.exists() {
            note(stage, &format!("reusing {}", path.display()));
            return load(path);
        }
        let value = make()?;
        save(path, &value)?;
        note(stage, &format!("wrote {}", path.display()));
        Ok(value)
    };
    run().map_err(|e: Error| e.in_stage(stage))
}

struct Splits<'m> {
    manifest: &'m Manifest,
    database: OnceCell<Vec<LocalFeatureMap>>,
    queries: OnceCell<Vec<LocalFeatureMap>>,
}

impl Splits<'_> {
    fn database(&self) -> Result<&[LocalFeatureMap]> {
        if self.database.get().is_none() {
            let maps = load_maps(self.manifest, Split::Database, None).map_err(|e| e.in_stage("load"))?;
            if maps.is_empty() {
                return Err(Error::manifest(self.manifest.root(), "no database records").in_stage("load"));
            }
            let _ = self.database.set(maps);
        }
        Ok(self.database.get().expect("set above"))
    }

    fn queries(&self) -> Result<&[LocalFeatureMap]> {
        if self.queries.get().is_none() {
            let dim = self.database()?[0].dim;
            let maps = load_maps(self.manifest, Split::Query, Some(dim)).map_err(|e| e.in_stage("load"))?;
            let _ = self.queries.set(maps);
        }
        Ok(self.queries.get().expect("set above"))
    }

    fn dim(&self) -> Result<usize> {
        Ok(self.database()?[0].dim)
    }
}

fn descriptors_cached(
    stage: &'static str,
    path: &Path,
    force: bool,
    method: Method,
    make: impl FnOnce() -> Result<Vec<Descriptor>>,
) -> Result<Vec<Descriptor>> {
    cached(
        stage,
        path,
        force,
        |p| {
            let set = load_descriptor_set(p)?;
            if set.method != method {
                return Err(Error::Usage(format!(
                    "{} holds {} descriptors; rerun with --force",
                    p.display(),
                    set.method
                )));
            }
            Ok(set.descriptors)
        },
        make,
        |p, d: &Vec<Descriptor>| {
            let dim = d.first().map_or(0, |x| x.values.len());
            save_descriptor_set(p, method, dim, d)
        },
    )
}

#[derive(Serialize)]
struct CodebookKey<'a> {
    manifest: &'a Path,
    sample_size: usize,
    k: usize,
    max_iters: usize,
    seed: u64,
}

#[derive(Serialize)]
struct MethodKey<'a> {
    manifest: &'a Path,
    codebook: Option<CodebookKey<'a>>,
    method: &'static str,
    levels: &'a [u32],
    pca: PcaPlacement,
    pca_dim: Option<usize>,
    pca_samples: usize,
    whiten: bool,
    normalize_after_pca: bool,
    intra_normalize: bool,
    gem_p: f64,
    top_n: usize,
    seed: u64,
}

impl PipelineConfig {
    fn codebook_key(&self) -> CodebookKey<'_> {
        CodebookKey {
            manifest: &self.manifest,
            sample_size: self.sample_size,
            k: self.k,
            max_iters: self.max_iters,
            seed: self.seed,
        }
    }

    fn method_key(&self) -> MethodKey<'_> {
        MethodKey {
            manifest: &self.manifest,
            codebook: needs_codebook(self.method).then(|| self.codebook_key()),
            method: self.method.name(),
            levels: &self.levels,
            pca: self.pca,
            pca_dim: self.pca_dim,
            pca_samples: self.pca_samples,
            whiten: self.whiten,
            normalize_after_pca: self.normalize_after_pca,
            intra_normalize: self.intra_normalize,
            gem_p: self.gem_p,
            top_n: self.top_n,
            seed: self.seed,
        }
    }
}

/// Refuses to mix outputs of different settings in one work directory.
fn check_params(path: &Path, key: &impl Serialize, force: bool) -> Result<String> {
    let text = serde_json::to_string_pretty(key).expect("parameters serialize") + "\n";
    if !force && path.exists() {
        let existing = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if existing != text {
            return Err(Error::Usage(format!(
                "{} was written with different settings; pass --force or use another work directory",
                path.display()
            )));
        }
    }
    Ok(text)
}

/// Runs every stage for `config.method`, reusing persisted intermediates in
/// `config.work_dir` unless `force`. Reports are always rewritten.
pub fn run_pipeline(config: &PipelineConfig, force: bool) -> Result<RunOutcome> {
    config.validate()?;
    let params = config.encode_params();
    let paths = RunPaths::new(&config.work_dir, config.method);
    let manifest = Manifest::load(&config.manifest).map_err(|e| e.in_stage("manifest"))?;
    let codebook_params = needs_codebook(config.method)
        .then(|| check_params(&paths.codebook_params, &config.codebook_key(), force))
        .transpose()?;
    let method_params = check_params(&paths.method_params, &config.method_key(), force)?;
    std::fs::create_dir_all(&paths.method_dir).map_err(|e| Error::io(&paths.method_dir, e))?;
    if let Some(text) = codebook_params {
        write_atomic(&paths.codebook_params, text.as_bytes())?;
    }
    write_atomic(&paths.method_params, method_params.as_bytes())?;
    let splits = Splits { manifest: &manifest, database: OnceCell::new(), queries: OnceCell::new() };

    let mut artifacts = Artifacts::default();
    let must_encode = force || ![&paths.database, &paths.queries].iter().all(|p| p.exists());
    if needs_codebook(config.method) && must_encode {
        let samples = cached(
            "sample",
            &paths.samples,
            force,
            |p| load_feature_map(p, "samples", None),
            || sample_loaded(splits.database()?, config.sample_size, config.seed),
            |p, m| save_feature_map(p, m, true),
        )?;
        let codebook = cached(
            "train-codebook",
            &paths.codebook,
            force,
            |p| {
                let cb = load_codebook(p)?;
                if cb.k() != config.k || cb.dim() != samples.dim {
                    return Err(Error::Usage(format!(
                        "{} has k = {}, dim = {}; rerun with --force",
                        p.display(),
                        cb.k(),
                        cb.dim()
                    )));
                }
                Ok(cb)
            },
            || train(&samples, config.k, config.max_iters, config.seed),
            save_codebook,
        )?;
        if config.method == Method::Bovw {
            artifacts.stats = Some(tfidf_stats(splits.database()?, &codebook).map_err(|e| e.in_stage("tfidf"))?);
        }
        artifacts.codebook = Some(codebook);
    }
    if config.pca != PcaPlacement::None && must_encode {
        let codebook = artifacts.codebook.as_ref().expect("pca methods use a codebook");
        artifacts.pca = Some(cached(
            "fit-pca",
            &paths.pca,
            force,
            load_pca,
            || fit_pca(splits.database()?, codebook, &params, config.seed),
            save_pca,
        )?);
    }

    let encode_split = |maps: &[LocalFeatureMap]| -> Result<Vec<Descriptor>> {
        let setup = EncoderSetup::new(&params, &artifacts, splits.dim()?)?;
        encode(maps, &setup)
    };
    let database =
        descriptors_cached("encode", &paths.database, force, config.method, || encode_split(splits.database()?))?;
    let queries =
        descriptors_cached("encode", &paths.queries, force, config.method, || encode_split(splits.queries()?))?;

    let index = cached("index", &paths.index, force, load_index, || Ok(build_index(database)?), save_index)?;
    let results = cached(
        "search",
        &paths.results,
        force,
        load_results,
        || search(&index, &queries, config.top_n),
        |p, r: &Vec<RankedResult>| save_results(p, r),
    )?;

    let evaluate_stage = || -> Result<(EvalReport, Vec<EvalReport>)> {
        let opts = EvalOptions { exclude_uncoverable: config.exclude_uncoverable };
        let n_values = config.effective_n_values();
        let query_geo = manifest.geo(Split::Query);
        let db_geo = manifest.geo(Split::Database);
        let gt = build_ground_truth(&query_geo, &db_geo, config.threshold_m)?;
        let report = evaluate(&results, &gt, &n_values, opts)?;
        save_reports(&paths.report, Some(&paths.ranks), std::slice::from_ref(&report))?;
        let sweep = threshold_sweep(&results, &query_geo, &db_geo, &config.thresholds, &n_values, opts)?;
        save_reports(&paths.sweep, Some(&paths.sweep_ranks), &sweep)?;
        Ok((report, sweep))
    };
    let (report, sweep) = evaluate_stage().map_err(|e| e.in_stage("evaluate"))?;
    for (n, r) in &report.recall_at {
        note("evaluate", &format!("{} recall@{n} = {r:.4} at {} m", config.method, report.threshold_m));
    }
    Ok(RunOutcome { paths, report, sweep })
}
