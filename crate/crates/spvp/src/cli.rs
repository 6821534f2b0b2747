//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use spvp_core::evaluation::{build_ground_truth, evaluate, threshold_sweep, DEFAULT_SWEEP_M, DEFAULT_THRESHOLD_M};
use spvp_core::index::{build_index, DEFAULT_TOP_N};
use spvp_core::types::UNIT_NORM_TOLERANCE;
use spvp_core::{EvalOptions, EvalReport, Method};

use crate::error::{Error, ExitKind, Result};
use crate::formats::codebook::{load_codebook, save_codebook};
use crate::formats::features::{decode_feature_file, load_feature_map, save_feature_map};
use crate::formats::index::{load_descriptor_set, load_index, save_descriptor_set, save_index};
use crate::formats::pca::{load_pca, save_pca};
use crate::formats::read_file;
use crate::manifest::{Manifest, Split};
use crate::pipeline::{
    self, needs_codebook, Artifacts, EncodeParams, EncoderSetup, PcaPlacement, PipelineConfig, DEFAULT_K,
    DEFAULT_MAX_ITERS, DEFAULT_N_VALUES, DEFAULT_SAMPLE_SIZE, FULL_SAMPLE_SIZE,
};
use crate::progress::{self, note};
use crate::report::{load_results, save_reports, save_results};
use crate::synth::{generate_synthetic, SynthConfig};

/// Unit-norm tolerance `inspect-features` accepts for files flagged as
/// normalized.
pub const INSPECT_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "spvp", version, about = "Spatial pyramid VLAD place recognition over geotagged local features")]
pub struct Cli {
    /// Worker threads for parallel stages (default: one per core)
    #[arg(long, global = true, env = "SPVP_WORKERS")]
    pub workers: Option<usize>,

    /// Suppress progress lines on stderr
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic geotagged corpus with a manifest
    Synth(SynthArgs),
    /// Reservoir-sample database descriptors for codebook training
    Sample(SampleArgs),
    /// Train a k-means codebook on sampled descriptors
    TrainCodebook(TrainArgs),
    /// Fit a PCA model on database VLAD vectors
    FitPca(FitPcaArgs),
    /// Encode one manifest split into descriptors
    Encode(EncodeArgs),
    /// Build and persist a search index from database descriptors
    Index(IndexArgs),
    /// Rank database images for every query descriptor
    Search(SearchArgs),
    /// Score search results at one distance threshold
    Evaluate(EvaluateArgs),
    /// Score search results over a list of distance thresholds
    Sweep(SweepArgs),
    /// Check a manifest and every feature file it references
    ValidateManifest(ValidateArgs),
    /// Print and check feature file headers and contents
    InspectFeatures(InspectArgs),
    /// Run every stage from a manifest to reports, reusing existing outputs
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with generator settings; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid_rows: Option<usize>,
    #[arg(long)]
    pub grid_cols: Option<usize>,
    #[arg(long)]
    pub grid_step_m: Option<f64>,
    #[arg(long)]
    pub yaw_count: Option<usize>,
    #[arg(long)]
    pub features_per_image: Option<usize>,
    #[arg(long)]
    pub descriptor_dim: Option<usize>,
    #[arg(long)]
    pub cluster_count: Option<usize>,
    #[arg(long)]
    pub repetitive_fraction: Option<f64>,
    #[arg(long)]
    pub viewpoint_shift: Option<f64>,
    #[arg(long)]
    pub descriptor_jitter: Option<f64>,
    #[arg(long)]
    pub query_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output feature file (descriptors only, zero coordinates)
    #[arg(long)]
    pub out: PathBuf,
    /// Number of descriptors to keep
    #[arg(long)]
    pub size: Option<usize>,
    /// Default the sample size to 10 million
    #[arg(long)]
    pub full_sample: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sample file written by `sample`
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Encoder settings shared by `fit-pca`, `encode` and `run`.
#[derive(Debug, Clone, Default, Args)]
pub struct EncodeOpts {
    /// spvp, vlad, bovw, mac, spoc or gem
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Pyramid grid sizes
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
    /// PCA placement: none, patch or global
    #[arg(long, value_parser = parse_placement)]
    pub pca: Option<PcaPlacement>,
    /// PCA output dimension (per cell for patch placement)
    #[arg(long)]
    pub pca_dim: Option<usize>,
    /// Maximum number of vectors PCA is fitted on
    #[arg(long)]
    pub pca_samples: Option<usize>,
    /// Whiten PCA outputs
    #[arg(long)]
    pub whiten: bool,
    /// Skip L2 normalization of cell vectors after patch PCA
    #[arg(long)]
    pub no_normalize_after_pca: bool,
    /// L2-normalize each VLAD block before power normalization
    #[arg(long)]
    pub intra_normalize: bool,
    /// GeM exponent
    #[arg(long)]
    pub gem_p: Option<f64>,
}

impl EncodeOpts {
    fn params(&self) -> EncodeParams {
        let mut cfg = PipelineConfig::default();
        self.apply(&mut cfg);
        cfg.encode_params()
    }

    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.method, self.method);
        set(&mut cfg.levels, self.levels.clone());
        set(&mut cfg.pca, self.pca);
        if self.pca_dim.is_some() {
            cfg.pca_dim = self.pca_dim;
        }
        set(&mut cfg.pca_samples, self.pca_samples);
        cfg.whiten |= self.whiten;
        cfg.normalize_after_pca &= !self.no_normalize_after_pca;
        cfg.intra_normalize |= self.intra_normalize;
        set(&mut cfg.gem_p, self.gem_p);
    }
}

#[derive(Debug, Args)]
pub struct FitPcaArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub encode: EncodeOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// database or query
    #[arg(long)]
    pub split: Split,
    /// Output descriptor file
    #[arg(long)]
    pub out: PathBuf,
    /// Codebook for spvp, vlad and bovw
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    /// PCA model written by `fit-pca`
    #[arg(long)]
    pub pca_model: Option<PathBuf>,
    #[command(flatten)]
    pub encode: EncodeOpts,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Database descriptor file written by `encode`
    #[arg(long)]
    pub descriptors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query descriptor file written by `encode`
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top_n: usize,
    /// Results table
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreOpts {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Results table written by `search`
    #[arg(long)]
    pub results: PathBuf,
    /// Cutoffs N to report
    #[arg(long = "n", value_delimiter = ',', default_values_t = DEFAULT_N_VALUES)]
    pub n_values: Vec<usize>,
    /// Leave queries without any database image in range out of the denominators
    #[arg(long)]
    pub exclude_uncoverable: bool,
    /// Metrics output, one JSON record per (threshold, N)
    #[arg(long)]
    pub out: PathBuf,
    /// Per-query first-hit rank table
    #[arg(long)]
    pub ranks: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub score: ScoreOpts,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_M)]
    pub threshold_m: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub score: ScoreOpts,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_M)]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub manifest: PathBuf,
    /// Required descriptor dimension
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Required descriptor dimension
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest CSV listing database and query images
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory for intermediate artifacts and reports
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    #[command(flatten)]
    pub encode: EncodeOpts,
    /// Codebook size
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Descriptors sampled for codebook training
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Default the sample size to 10 million
    #[arg(long)]
    pub full_sample: bool,
    /// Results kept per query
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Distance threshold in meters for the main report
    #[arg(long)]
    pub threshold_m: Option<f64>,
    /// Comma-separated thresholds for the sweep report
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Comma-separated N values for recall@N
    #[arg(long = "n", value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub exclude_uncoverable: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recompute every stage even when its output exists
    #[arg(long)]
    pub force: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: spvp_core::Error| e.to_string())
}

fn parse_placement(s: &str) -> Result<PcaPlacement, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_file(path)?).map_err(|_| Error::manifest(path, "not UTF-8"))
}

fn check_score_opts(opts: &ScoreOpts) -> Result<()> {
    if opts.n_values.is_empty() || opts.n_values.contains(&0) {
        return Err(usage("N values must be positive"));
    }
    Ok(())
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() || thresholds.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(usage("distance thresholds must be positive"));
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            toml::from_str(&read_text(path)?).map_err(|e| usage(format!("{}: {}", path.display(), e.message())))?
        }
        None => SynthConfig::default(),
    };
    set(&mut cfg.grid_rows, args.grid_rows);
    set(&mut cfg.grid_cols, args.grid_cols);
    set(&mut cfg.grid_step_m, args.grid_step_m);
    set(&mut cfg.yaw_count, args.yaw_count);
    set(&mut cfg.features_per_image, args.features_per_image);
    set(&mut cfg.descriptor_dim, args.descriptor_dim);
    set(&mut cfg.cluster_count, args.cluster_count);
    set(&mut cfg.repetitive_fraction, args.repetitive_fraction);
    set(&mut cfg.viewpoint_shift, args.viewpoint_shift);
    set(&mut cfg.descriptor_jitter, args.descriptor_jitter);
    set(&mut cfg.query_count, args.query_count);
    set(&mut cfg.seed, args.seed);
    cfg.validate()?;
    let manifest = generate_synthetic(&cfg, &args.out)?;
    note("synth", &format!("{} records under {}", manifest.records().len(), args.out.display()));
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<()> {
    let size = args.size.unwrap_or(if args.full_sample { FULL_SAMPLE_SIZE } else { DEFAULT_SAMPLE_SIZE });
    if size == 0 {
        return Err(usage("sample size must be positive"));
    }
    let manifest = Manifest::load(&args.manifest)?;
    let samples = pipeline::sample_descriptors(&manifest, size, args.seed)?;
    save_feature_map(&args.out, &samples, true)
}

fn train_codebook(args: &TrainArgs) -> Result<()> {
    if args.k == 0 || args.max_iters == 0 {
        return Err(usage("k and max-iters must be positive"));
    }
    let samples = load_feature_map(&args.samples, "samples", None)?;
    let codebook = pipeline::train(&samples, args.k, args.max_iters, args.seed)?;
    save_codebook(&args.out, &codebook)
}

fn fit_pca(args: &FitPcaArgs) -> Result<()> {
    let params = args.encode.params();
    params.validate()?;
    if params.pca == PcaPlacement::None {
        return Err(usage("fit-pca needs --pca patch or --pca global"));
    }
    let manifest = Manifest::load(&args.manifest)?;
    let codebook = load_codebook(&args.codebook)?;
    let database = pipeline::load_maps(&manifest, Split::Database, Some(codebook.dim()))?;
    let model = pipeline::fit_pca(&database, &codebook, &params, args.seed)?;
    save_pca(&args.out, &model)
}

fn encode(args: &EncodeArgs) -> Result<()> {
    let params = args.encode.params();
    params.validate()?;
    if needs_codebook(params.method) && args.codebook.is_none() {
        return Err(usage(format!("{} needs --codebook", params.method)));
    }
    if params.pca != PcaPlacement::None && args.pca_model.is_none() {
        return Err(usage("--pca needs --pca-model"));
    }
    let manifest = Manifest::load(&args.manifest)?;
    let mut artifacts = Artifacts {
        codebook: args.codebook.as_deref().map(load_codebook).transpose()?,
        pca: args.pca_model.as_deref().map(load_pca).transpose()?,
        stats: None,
    };
    let dim = artifacts.codebook.as_ref().map(|c| c.dim());
    let maps = pipeline::load_maps(&manifest, args.split, dim)?;
    if params.method == Method::Bovw {
        let codebook = artifacts.codebook.as_ref().expect("checked above");
        let database = match args.split {
            Split::Database => None,
            Split::Query => Some(pipeline::load_maps(&manifest, Split::Database, dim)?),
        };
        let stats = pipeline::tfidf_stats(database.as_deref().unwrap_or(&maps), codebook)?;
        artifacts.stats = Some(stats);
    }
    let dim = match (dim, maps.first()) {
        (Some(d), _) => d,
        (None, Some(m)) => m.dim,
        (None, None) => return Err(Error::manifest(&args.manifest, format!("no {} records", args.split))),
    };
    let setup = EncoderSetup::new(&params, &artifacts, dim)?;
    let descriptors = pipeline::encode(&maps, &setup)?;
    let out_dim = descriptors.first().map_or(0, |d| d.values.len());
    save_descriptor_set(&args.out, params.method, out_dim, &descriptors)
}

fn index(args: &IndexArgs) -> Result<()> {
    let set = load_descriptor_set(&args.descriptors)?;
    let index = build_index(set.descriptors)?;
    note("index", &format!("{} {} descriptors of dimension {}", index.len(), index.method(), index.dim()));
    save_index(&args.out, &index)
}

fn search(args: &SearchArgs) -> Result<()> {
    if args.top_n == 0 {
        return Err(usage("top-n must be positive"));
    }
    let index = load_index(&args.index)?;
    let queries = load_descriptor_set(&args.queries)?;
    let results = pipeline::search(&index, &queries.descriptors, args.top_n)?;
    save_results(&args.out, &results)
}

fn score(
    opts: &ScoreOpts,
    run: impl FnOnce(
        &[spvp_core::GeoRecord],
        &[spvp_core::GeoRecord],
        &[spvp_core::RankedResult],
    ) -> spvp_core::Result<Vec<EvalReport>>,
) -> Result<()> {
    let manifest = Manifest::load(&opts.manifest)?;
    let results = load_results(&opts.results)?;
    let reports = run(&manifest.geo(Split::Query), &manifest.geo(Split::Database), &results)?;
    for r in &reports {
        for (n, recall) in &r.recall_at {
            note("evaluate", &format!("recall@{n} = {recall:.4} at {} m", r.threshold_m));
        }
    }
    save_reports(&opts.out, opts.ranks.as_deref(), &reports)
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    check_score_opts(&args.score)?;
    check_thresholds(&[args.threshold_m])?;
    let opts = EvalOptions { exclude_uncoverable: args.score.exclude_uncoverable };
    score(&args.score, |q, db, results| {
        let gt = build_ground_truth(q, db, args.threshold_m)?;
        Ok(vec![evaluate(results, &gt, &args.score.n_values, opts)?])
    })
}

fn sweep(args: &SweepArgs) -> Result<()> {
    check_score_opts(&args.score)?;
    check_thresholds(&args.thresholds)?;
    let opts = EvalOptions { exclude_uncoverable: args.score.exclude_uncoverable };
    score(&args.score, |q, db, results| threshold_sweep(results, q, db, &args.thresholds, &args.score.n_values, opts))
}

fn validate_manifest(args: &ValidateArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let database = pipeline::load_maps(&manifest, Split::Database, args.dim)?;
    let dim = args.dim.or(database.first().map(|m| m.dim));
    let queries = pipeline::load_maps(&manifest, Split::Query, dim)?;
    let features: usize = database.iter().chain(&queries).map(|m| m.len()).sum();
    println!(
        "{}: {} database, {} query, {} features, dim {}",
        args.manifest.display(),
        database.len(),
        queries.len(),
        features,
        dim.map_or_else(|| "-".to_string(), |d| d.to_string()),
    );
    Ok(())
}

fn inspect_features(args: &InspectArgs) -> Result<()> {
    let mut failures = Vec::new();
    for path in &args.files {
        let checked = read_file(path).and_then(|bytes| {
            let file = decode_feature_file(&bytes, &path.display().to_string()).map_err(|e| Error::format(path, e))?;
            let map = &file.map;
            if let Some(d) = args.dim.filter(|&d| d != map.dim) {
                return Err(Error::format(
                    path,
                    crate::formats::FormatError::DimensionMismatch { expected: d, actual: map.dim },
                ));
            }
            let worst =
                map.features.iter().map(|f| (spvp_core::vector::norm(&f.descriptor) - 1.0).abs()).fold(0.0, f64::max);
            if file.normalized_flag && worst > INSPECT_NORM_TOLERANCE {
                return Err(Error::manifest(path, format!("flagged normalized but a norm is off by {worst:.2e}")));
            }
            println!(
                "{}\tfeatures={}\tdim={}\tnormalized={}\tsource={}x{}\tmax_norm_error={worst:.2e}\tunit={}",
                path.display(),
                map.len(),
                map.dim,
                file.normalized_flag as u8,
                map.source_width,
                map.source_height,
                worst <= UNIT_NORM_TOLERANCE,
            );
            Ok(())
        });
        if let Err(e) = checked {
            eprintln!("{e}");
            failures.push(e);
        }
    }
    match failures.len() {
        0 => Ok(()),
        1 => Err(failures.remove(0)),
        n => Err(Error::Format {
            path: PathBuf::from(format!("{n} files")),
            source: crate::formats::FormatError::Malformed("failed inspection".into()),
        }),
    }
}

/// Resolves the run configuration: defaults, then the config file, then flags.
pub fn run_config(args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_toml(&read_text(path)?)?,
        None => PipelineConfig::default(),
    };
    if args.full_sample {
        cfg.sample_size = FULL_SAMPLE_SIZE;
    }
    set(&mut cfg.manifest, args.manifest.clone());
    set(&mut cfg.work_dir, args.work_dir.clone());
    args.encode.apply(&mut cfg);
    set(&mut cfg.k, args.k);
    set(&mut cfg.max_iters, args.max_iters);
    set(&mut cfg.sample_size, args.sample_size);
    set(&mut cfg.top_n, args.top_n);
    set(&mut cfg.threshold_m, args.threshold_m);
    set(&mut cfg.thresholds, args.thresholds.clone());
    set(&mut cfg.n_values, args.n_values.clone());
    cfg.exclude_uncoverable |= args.exclude_uncoverable;
    set(&mut cfg.seed, args.seed);
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = run_config(args)?;
    let outcome = pipeline::run_pipeline(&cfg, args.force)?;
    println!("{}", outcome.paths.report.display());
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    progress::set_quiet(cli.quiet);
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(usage("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::io("worker pool", std::io::Error::other(e)))?;
    }
    let (stage, result) = match &cli.command {
        Command::Synth(a) => ("synth", synth(a)),
        Command::Sample(a) => ("sample", sample(a)),
        Command::TrainCodebook(a) => ("train-codebook", train_codebook(a)),
        Command::FitPca(a) => ("fit-pca", fit_pca(a)),
        Command::Encode(a) => ("encode", encode(a)),
        Command::Index(a) => ("index", index(a)),
        Command::Search(a) => ("search", search(a)),
        Command::Evaluate(a) => ("evaluate", evaluate_cmd(a)),
        Command::Sweep(a) => ("sweep", sweep(a)),
        Command::ValidateManifest(a) => ("validate-manifest", validate_manifest(a)),
        Command::InspectFeatures(a) => ("inspect-features", inspect_features(a)),
        Command::Run(a) => ("run", run(a)),
    };
    result.map_err(|e| e.in_stage(stage))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Usage as i32 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_kind() as i32
        }
    }
}
