//! Synthetic street-view corpus.
//!
//! Locations sit on a regular grid around a fixed origin with `yaw_count`
//! views each. A view is a handful of "structures", each a descriptor
//! prototype placed at a spot in the frame and emitting a cloud of noisy
//! local features around it. Prototypes come from a small shared pool, so
//! many views contain the same kinds of structure and differ mainly in
//! where those structures sit. A `repetitive_fraction` share of every
//! view's features comes from a second shared pool of repetitive patterns
//! (windows, fences) scattered uniformly over the frame.
//!
//! Queries are perturbed copies of database views: structure features are
//! shifted horizontally by up to `viewpoint_shift` (features leaving the
//! frame are dropped), repetitive features are re-drawn from a freshly
//! chosen set of patterns, and descriptors are jittered. With all
//! perturbations at zero a query equals its source.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spvp_core::{GeoRecord, LocalFeature, LocalFeatureMap};

use crate::error::{Error, Result};
use crate::formats::features::save_feature_map;
use crate::formats::write_atomic;
use crate::manifest::{Manifest, ManifestRecord, Split};

/// Grid origin (latitude, longitude) in degrees.
pub const ORIGIN: (f64, f64) = (36.35, 127.38);

const SOURCE_SIZE: u16 = 640;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_step_m: f64,
    pub yaw_count: usize,
    pub features_per_image: usize,
    pub descriptor_dim: usize,
    /// Size of the shared structure prototype pool.
    pub cluster_count: usize,
    pub structures_per_image: usize,
    /// Size of the shared repetitive pattern pool.
    pub repetitive_patterns: usize,
    /// Patterns present in any single view.
    pub patterns_per_image: usize,
    pub repetitive_fraction: f64,
    pub viewpoint_shift: f64,
    /// Scatter of database features around their prototype (noise norm).
    pub descriptor_noise: f64,
    /// Extra descriptor noise added to query features (noise norm).
    pub descriptor_jitter: f64,
    /// Standard deviation of feature positions around a structure.
    pub structure_spread: f64,
    pub query_count: usize,
    /// Query geotag displacement from its source location, meters.
    pub query_offset_m: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            grid_rows: 10,
            grid_cols: 10,
            grid_step_m: 10.0,
            yaw_count: 8,
            features_per_image: 200,
            descriptor_dim: 40,
            cluster_count: 16,
            structures_per_image: 3,
            repetitive_patterns: 4,
            patterns_per_image: 2,
            repetitive_fraction: 0.0,
            viewpoint_shift: 0.0,
            descriptor_noise: 0.5,
            descriptor_jitter: 0.3,
            structure_spread: 0.06,
            query_count: 100,
            query_offset_m: 2.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn database_size(&self) -> usize {
        self.grid_rows * self.grid_cols * self.yaw_count
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("grid_rows", self.grid_rows),
            ("grid_cols", self.grid_cols),
            ("yaw_count", self.yaw_count),
            ("features_per_image", self.features_per_image),
            ("descriptor_dim", self.descriptor_dim),
            ("cluster_count", self.cluster_count),
            ("structures_per_image", self.structures_per_image),
            ("repetitive_patterns", self.repetitive_patterns),
            ("patterns_per_image", self.patterns_per_image),
            ("query_count", self.query_count),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Usage(format!("{name} must be at least 1")));
        }
        let fractions = [("repetitive_fraction", self.repetitive_fraction), ("viewpoint_shift", self.viewpoint_shift)];
        if let Some((name, v)) = fractions.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(Error::Usage(format!("{name} = {v} must lie in [0, 1]")));
        }
        let non_negative = [
            ("grid_step_m", self.grid_step_m),
            ("descriptor_noise", self.descriptor_noise),
            ("descriptor_jitter", self.descriptor_jitter),
            ("structure_spread", self.structure_spread),
            ("query_offset_m", self.query_offset_m),
        ];
        if let Some((name, v)) = non_negative.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Usage(format!("{name} = {v} must be finite and non-negative")));
        }
        if self.grid_step_m == 0.0 {
            return Err(Error::Usage("grid_step_m must be positive".into()));
        }
        if self.patterns_per_image > self.repetitive_patterns {
            return Err(Error::Usage("patterns_per_image exceeds repetitive_patterns".into()));
        }
        if self.descriptor_dim > u16::MAX as usize {
            return Err(Error::Usage("descriptor_dim exceeds the feature file limit".into()));
        }
        if self.query_count > self.database_size() {
            return Err(Error::Usage(format!(
                "query_count {} exceeds the {} database views",
                self.query_count,
                self.database_size()
            )));
        }
        Ok(())
    }
}

/// Offsets `(north_m, east_m)` from `origin` on a sphere of the evaluation radius.
pub fn offset_latlon(origin: (f64, f64), north_m: f64, east_m: f64) -> (f64, f64) {
    let r = spvp_core::evaluation::EARTH_RADIUS_M;
    let lat = origin.0 + (north_m / r).to_degrees();
    let lon = origin.1 + (east_m / (r * origin.0.to_radians().cos())).to_degrees();
    (lat, lon)
}

/// An image with its geotag.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub map: LocalFeatureMap,
    pub geo: GeoRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthQuery {
    pub image: SynthImage,
    /// Index of the database view the query was derived from.
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub database: Vec<SynthImage>,
    pub queries: Vec<SynthQuery>,
}

struct Pools {
    structures: Vec<Vec<f64>>,
    patterns: Vec<Vec<f64>>,
}

/// Repetitive patterns present in a view.
struct Scene {
    patterns: Vec<usize>,
    pattern_weight: f64,
}

struct Drawn {
    feature: LocalFeature,
    repetitive: bool,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `normalize(center + noise * g / sqrt(dim))` with `g` standard normal.
fn noisy_descriptor(rng: &mut ChaCha8Rng, center: &[f64], noise: f64) -> Vec<f32> {
    let scale = noise / (center.len() as f64).sqrt();
    let v: Vec<f64> = center
        .iter()
        .map(|&c| {
            let g: f64 = StandardNormal.sample(rng);
            c + scale * g
        })
        .collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

fn jitter(rng: &mut ChaCha8Rng, descriptor: &[f32], amount: f64) -> Vec<f32> {
    let center: Vec<f64> = descriptor.iter().map(|&x| x as f64).collect();
    noisy_descriptor(rng, &center, amount)
}

struct Generator<'a> {
    config: &'a SynthConfig,
    pools: Pools,
}

impl<'a> Generator<'a> {
    fn new(config: &'a SynthConfig) -> Self {
        let mut rng = stream(config.seed, 0);
        let d = config.descriptor_dim;
        let structures = (0..config.cluster_count).map(|_| unit_gaussian(&mut rng, d)).collect();
        let patterns = (0..config.repetitive_patterns).map(|_| unit_gaussian(&mut rng, d)).collect();
        Self { config, pools: Pools { structures, patterns } }
    }

    fn repetitive_feature(&self, rng: &mut ChaCha8Rng, scene: &Scene) -> LocalFeature {
        // two-pattern mixtures lean towards the first pattern by `pattern_weight`
        let pick = if scene.patterns.len() == 1 || rng.random::<f64>() < scene.pattern_weight {
            scene.patterns[0]
        } else {
            scene.patterns[1 + rng.random_range(0..scene.patterns.len() - 1)]
        };
        let (x, y) = (rng.random::<f32>(), rng.random::<f32>());
        let desc = noisy_descriptor(rng, &self.pools.patterns[pick], self.config.descriptor_noise);
        LocalFeature::new(x, y, desc).expect("generated feature is valid")
    }

    fn scene(&self, rng: &mut ChaCha8Rng) -> Scene {
        let c = self.config;
        let patterns = sample(rng, c.repetitive_patterns, c.patterns_per_image).into_vec();
        Scene { patterns, pattern_weight: rng.random_range(0.5..1.0) }
    }

    fn database_view(&self, index: usize) -> (Scene, Vec<Drawn>) {
        let c = self.config;
        let mut rng = stream(c.seed, 1 + index as u64);
        let structures: Vec<(usize, f64, f64)> = (0..c.structures_per_image)
            .map(|_| (rng.random_range(0..c.cluster_count), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)))
            .collect();
        let scene = self.scene(&mut rng);

        let features = (0..c.features_per_image)
            .map(|_| {
                if rng.random::<f64>() < c.repetitive_fraction {
                    Drawn { feature: self.repetitive_feature(&mut rng, &scene), repetitive: true }
                } else {
                    let (proto, cx, cy) = structures[rng.random_range(0..structures.len())];
                    let gx: f64 = StandardNormal.sample(&mut rng);
                    let gy: f64 = StandardNormal.sample(&mut rng);
                    let x = (cx + c.structure_spread * gx).clamp(0.0, 1.0) as f32;
                    let y = (cy + c.structure_spread * gy).clamp(0.0, 1.0) as f32;
                    let desc = noisy_descriptor(&mut rng, &self.pools.structures[proto], c.descriptor_noise);
                    Drawn {
                        feature: LocalFeature::new(x, y, desc).expect("generated feature is valid"),
                        repetitive: false,
                    }
                }
            })
            .collect();
        (scene, features)
    }

    fn grid_position(&self, index: usize) -> (usize, usize, usize) {
        let c = self.config;
        let yaw = index % c.yaw_count;
        let loc = index / c.yaw_count;
        (loc / c.grid_cols, loc % c.grid_cols, yaw)
    }

    fn database_id(&self, index: usize) -> String {
        let (r, col, yaw) = self.grid_position(index);
        format!("db_r{r:03}_c{col:03}_y{yaw}")
    }

    fn database_geo(&self, index: usize) -> GeoRecord {
        let c = self.config;
        let (r, col, yaw) = self.grid_position(index);
        let (lat, lon) = offset_latlon(ORIGIN, r as f64 * c.grid_step_m, col as f64 * c.grid_step_m);
        GeoRecord::new(self.database_id(index), lat, lon)
            .and_then(|g| g.with_yaw((yaw as f64 * 360.0 / c.yaw_count as f64) as f32))
            .expect("grid stays within valid coordinates")
    }

    fn database_image(&self, index: usize) -> SynthImage {
        let (_, drawn) = self.database_view(index);
        let features = drawn.into_iter().map(|d| d.feature).collect();
        SynthImage { map: self.wrap(self.database_id(index), features), geo: self.database_geo(index) }
    }

    fn wrap(&self, id: String, features: Vec<LocalFeature>) -> LocalFeatureMap {
        LocalFeatureMap::new(id, self.config.descriptor_dim, features)
            .expect("generated features share one dimension")
            .with_source_size(SOURCE_SIZE, SOURCE_SIZE)
    }

    fn query(&self, j: usize, source: usize) -> SynthQuery {
        let c = self.config;
        let mut rng = stream(c.seed, (1 << 40) + j as u64);
        let (_, drawn) = self.database_view(source);
        // repetitive patterns carry no place identity: the query sees its own mix
        let scene = self.scene(&mut rng);
        let shift = c.viewpoint_shift * rng.random_range(-1.0..=1.0);
        let mut features = Vec::with_capacity(drawn.len());
        for Drawn { feature, repetitive } in drawn {
            let mut f = if repetitive {
                self.repetitive_feature(&mut rng, &scene)
            } else {
                let x = feature.x as f64 + shift;
                if !(0.0..=1.0).contains(&x) {
                    continue;
                }
                LocalFeature { x: x as f32, ..feature }
            };
            if c.descriptor_jitter > 0.0 {
                f.descriptor = jitter(&mut rng, &f.descriptor, c.descriptor_jitter);
            }
            features.push(f);
        }

        let src = self.database_geo(source);
        let bearing = rng.random_range(0.0..std::f64::consts::TAU);
        let (lat, lon) = offset_latlon(
            (src.latitude, src.longitude),
            c.query_offset_m * bearing.cos(),
            c.query_offset_m * bearing.sin(),
        );
        let id = format!("q{j:04}");
        let mut geo = GeoRecord::new(id.as_str(), lat, lon).expect("query stays within valid coordinates");
        geo.yaw = src.yaw;
        SynthQuery { image: SynthImage { map: self.wrap(id, features), geo }, source }
    }

    fn query_sources(&self) -> Vec<usize> {
        let mut rng = stream(self.config.seed, 1 << 41);
        sample(&mut rng, self.config.database_size(), self.config.query_count).into_vec()
    }
}

/// Generates the corpus in memory.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let generator = Generator::new(config);
    let database = (0..config.database_size()).into_par_iter().map(|i| generator.database_image(i)).collect();
    let queries = generator.query_sources().into_par_iter().enumerate().map(|(j, s)| generator.query(j, s)).collect();
    Ok(SynthCorpus { database, queries })
}

/// Writes the corpus under `out_dir`: `manifest.csv`, `synth.toml` and one
/// feature file per image in `features/`.
pub fn generate_synthetic(config: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    let corpus = generate_corpus(config)?;
    let features_dir = out_dir.join("features");
    std::fs::create_dir_all(&features_dir).map_err(|e| Error::io(&features_dir, e))?;

    let entries: Vec<(&SynthImage, Split)> = corpus
        .database
        .iter()
        .map(|i| (i, Split::Database))
        .chain(corpus.queries.iter().map(|q| (&q.image, Split::Query)))
        .collect();
    let records = entries
        .par_iter()
        .map(|(image, split)| {
            let rel = PathBuf::from("features").join(format!("{}.pvfm", image.map.image_id));
            save_feature_map(&out_dir.join(&rel), &image.map, true)?;
            Ok(ManifestRecord {
                image_id: image.map.image_id.clone(),
                path: rel,
                geo: image.geo.clone(),
                split: *split,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest::new(out_dir, records)?;
    manifest.save(&out_dir.join("manifest.csv"))?;
    let cfg = toml::to_string(config).map_err(|e| Error::Usage(e.to_string()))?;
    write_atomic(&out_dir.join("synth.toml"), cfg.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spvp_core::evaluation::haversine_m;

    fn small() -> SynthConfig {
        SynthConfig {
            grid_rows: 3,
            grid_cols: 4,
            yaw_count: 2,
            features_per_image: 30,
            descriptor_dim: 8,
            query_count: 5,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn unperturbed_queries_copy_their_source() {
        let cfg = SynthConfig { query_offset_m: 0.0, descriptor_jitter: 0.0, ..small() };
        let corpus = generate_corpus(&cfg).unwrap();
        for q in &corpus.queries {
            let src = &corpus.database[q.source];
            assert_eq!(q.image.map.features, src.map.features);
            assert!(haversine_m(&q.image.geo, &src.geo) < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig { repetitive_fraction: 0.5, viewpoint_shift: 0.3, descriptor_jitter: 0.1, ..small() };
        assert_eq!(generate_corpus(&cfg).unwrap(), generate_corpus(&cfg).unwrap());
        let other = SynthConfig { seed: 1, ..cfg.clone() };
        assert_ne!(generate_corpus(&cfg).unwrap(), generate_corpus(&other).unwrap());
    }

    #[test]
    fn shifted_queries_stay_in_frame() {
        let cfg = SynthConfig { viewpoint_shift: 1.0, repetitive_fraction: 0.3, ..small() };
        for q in generate_corpus(&cfg).unwrap().queries {
            assert!(q.image.map.features.iter().all(|f| (0.0..=1.0).contains(&f.x)));
            assert!(q.image.map.is_normalized());
        }
    }

    #[test]
    fn validation() {
        assert!(SynthConfig { grid_rows: 0, ..small() }.validate().is_err());
        assert!(SynthConfig { repetitive_fraction: 1.5, ..small() }.validate().is_err());
        assert!(SynthConfig { query_count: 1000, ..small() }.validate().is_err());
        assert!(SynthConfig { patterns_per_image: 9, ..small() }.validate().is_err());
        assert!(small().validate().is_ok());
    }
}
