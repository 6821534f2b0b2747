//! Visual vocabulary: k-means training (k-means++ seeding, Lloyd iterations)
//! and nearest-centroid assignment.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::par;
use crate::vector::{self, squared_distance_unchecked};

pub const DEFAULT_CODEBOOK_SIZE: usize = 256;
pub const DEFAULT_MAX_ITERS: usize = 100;

const ASSIGN_CHUNK: usize = 2048;

/// Bookkeeping from a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    /// Number of assignment passes executed during Lloyd iterations.
    pub iterations: usize,
    /// Inertia measured at each assignment pass.
    pub inertia_trace: Vec<f64>,
    /// Inertia of the training set against the stored (`f32`) centroids.
    pub final_inertia: f64,
    /// Whether training stopped because no assignment changed.
    pub converged: bool,
}

/// `k` centroids of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    dim: usize,
    centroids: Vec<f32>,
    meta: Option<TrainingMeta>,
}

impl Codebook {
    pub fn new(k: usize, dim: usize, centroids: Vec<f32>) -> Result<Self> {
        if k == 0 || dim == 0 {
            return Err(Error::InvalidParameter("codebook needs k >= 1 and dim >= 1".into()));
        }
        check_dim(k * dim, centroids.len())?;
        if !vector::is_finite(&centroids) {
            return Err(Error::InvalidData("non-finite centroid component".into()));
        }
        for i in 0..k {
            let a = &centroids[i * dim..(i + 1) * dim];
            for j in (i + 1)..k {
                let b = &centroids[j * dim..(j + 1) * dim];
                if a == b {
                    return Err(Error::InvalidData(format!("centroids {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { k, dim, centroids, meta: None })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f32> {
        self.centroids.chunks_exact(self.dim)
    }

    pub fn training_meta(&self) -> Option<&TrainingMeta> {
        self.meta.as_ref()
    }

    /// Index of the nearest centroid; ties go to the lowest index.
    pub fn assign(&self, feature: &[f32]) -> Result<usize> {
        check_dim(self.dim, feature.len())?;
        Ok(self.nearest(feature).0)
    }

    /// Nearest centroid and its squared distance, without a length check.
    pub(crate) fn nearest(&self, feature: &[f32]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.iter().enumerate() {
            let d = squared_distance_unchecked(feature, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

/// Free-function form of [`Codebook::assign`].
pub fn assign(feature: &[f32], codebook: &Codebook) -> Result<usize> {
    codebook.assign(feature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, max_iters: DEFAULT_MAX_ITERS, seed }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self::new(DEFAULT_CODEBOOK_SIZE, 0)
    }
}

/// A trained codebook together with the final assignment of every training
/// feature.
#[derive(Debug, Clone)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    pub assignments: Vec<usize>,
}

/// Trains a k-means codebook.
///
/// Centroids are accumulated in `f64` during training and rounded to `f32`
/// once at the end. The result is a pure function of the features, their
/// order and `config`.
pub fn train_codebook<V>(features: &[V], config: &KMeansConfig) -> Result<TrainedCodebook>
where
    V: AsRef<[f32]> + Sync,
{
    let k = config.k;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if features.len() < k {
        return Err(Error::InsufficientData(format!("{} features for {k} centroids", features.len())));
    }
    let dim = features[0].as_ref().len();
    if dim == 0 {
        return Err(Error::InvalidData("zero-dimensional features".into()));
    }
    for f in features {
        let f = f.as_ref();
        check_dim(dim, f.len())?;
        if !vector::is_finite(f) {
            return Err(Error::InvalidData("non-finite training feature".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = kmeans_plus_plus(features, k, dim, &mut rng)?;

    let mut meta = TrainingMeta::default();
    let mut assignments: Vec<usize> = Vec::new();
    for _ in 0..config.max_iters {
        let pass = assignment_pass(features, &centroids, k, dim);
        meta.iterations += 1;
        meta.inertia_trace.push(pass.inertia);
        if pass.assignments == assignments {
            meta.converged = true;
            break;
        }
        assignments = pass.assignments;
        for c in 0..k {
            let count = pass.counts[c];
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&pass.sums[c * dim..(c + 1) * dim]) {
                    *dst = s * inv;
                }
            }
        }
        for c in (0..k).filter(|&c| pass.counts[c] == 0) {
            reseed_empty(features, &mut centroids, c, dim)?;
        }
    }

    let rounded: Vec<f32> = centroids.iter().map(|&c| c as f32).collect();
    let widened: Vec<f64> = rounded.iter().map(|&c| c as f64).collect();
    let final_pass = assignment_pass(features, &widened, k, dim);
    meta.final_inertia = final_pass.inertia;

    let mut codebook = Codebook::new(k, dim, rounded)?;
    codebook.meta = Some(meta);
    Ok(TrainedCodebook { codebook, assignments: final_pass.assignments })
}

fn nearest_f64(f: &[f32], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d: f64 = f
            .iter()
            .zip(c)
            .map(|(&x, &y)| {
                let t = x as f64 - y;
                t * t
            })
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans_plus_plus<V>(features: &[V], k: usize, dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>
where
    V: AsRef<[f32]> + Sync,
{
    let n = features.len();
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend(features[first].as_ref().iter().map(|&x| x as f64));
    let mut dist2: Vec<f64> = features.iter().map(|f| nearest_f64(f.as_ref(), &centroids, dim).1).collect();

    for _ in 1..k {
        let total: f64 = dist2.iter().sum();
        if total <= 0.0 {
            return Err(Error::InsufficientData(format!("fewer than {k} distinct features")));
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &d) in dist2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            chosen = Some(i);
            if acc > target {
                break;
            }
        }
        let chosen = chosen.expect("positive total implies a candidate");
        let start = centroids.len();
        centroids.extend(features[chosen].as_ref().iter().map(|&x| x as f64));
        let newest = centroids[start..].to_vec();
        let updated = par::map_chunks(features, ASSIGN_CHUNK, |offset, chunk| {
            chunk
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let d = nearest_f64(f.as_ref(), &newest, dim).1;
                    d.min(dist2[offset + j])
                })
                .collect::<Vec<_>>()
        });
        dist2 = updated.into_iter().flatten().collect();
    }
    Ok(centroids)
}

struct AssignmentPass {
    assignments: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<usize>,
    inertia: f64,
}

fn assignment_pass<V>(features: &[V], centroids: &[f64], k: usize, dim: usize) -> AssignmentPass
where
    V: AsRef<[f32]> + Sync,
{
    let partials = par::map_chunks(features, ASSIGN_CHUNK, |_, chunk| {
        let mut part = AssignmentPass {
            assignments: Vec::with_capacity(chunk.len()),
            sums: vec![0.0; k * dim],
            counts: vec![0; k],
            inertia: 0.0,
        };
        for f in chunk {
            let f = f.as_ref();
            let (c, d) = nearest_f64(f, centroids, dim);
            part.assignments.push(c);
            part.counts[c] += 1;
            part.inertia += d;
            for (s, &x) in part.sums[c * dim..(c + 1) * dim].iter_mut().zip(f) {
                *s += x as f64;
            }
        }
        part
    });

    let mut total = AssignmentPass {
        assignments: Vec::with_capacity(features.len()),
        sums: vec![0.0; k * dim],
        counts: vec![0; k],
        inertia: 0.0,
    };
    for part in partials {
        total.assignments.extend(part.assignments);
        for (a, b) in total.sums.iter_mut().zip(&part.sums) {
            *a += b;
        }
        for (a, b) in total.counts.iter_mut().zip(&part.counts) {
            *a += b;
        }
        total.inertia += part.inertia;
    }
    total
}

/// Moves centroid `empty` onto the feature farthest from every current centroid.
fn reseed_empty<V>(features: &[V], centroids: &mut [f64], empty: usize, dim: usize) -> Result<()>
where
    V: AsRef<[f32]>,
{
    let mut best = (0usize, -1.0f64);
    for (i, f) in features.iter().enumerate() {
        let d = nearest_f64(f.as_ref(), centroids, dim).1;
        if d > best.1 {
            best = (i, d);
        }
    }
    if best.1 <= 0.0 {
        return Err(Error::InsufficientData("not enough distinct features to fill every cluster".into()));
    }
    for (dst, &x) in centroids[empty * dim..(empty + 1) * dim].iter_mut().zip(features[best.0].as_ref()) {
        *dst = x as f64;
    }
    Ok(())
}

/// Uniform reservoir sample over a stream of descriptors.
#[derive(Debug, Clone)]
pub struct Reservoir {
    target: usize,
    seen: u64,
    items: Vec<Vec<f32>>,
    rng: ChaCha8Rng,
}

impl Reservoir {
    pub fn new(target: usize, seed: u64) -> Self {
        Self { target, seen: 0, items: Vec::with_capacity(target.min(1 << 20)), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn offer(&mut self, descriptor: &[f32]) {
        if self.items.len() < self.target {
            self.items.push(descriptor.to_vec());
        } else {
            let j = self.rng.random_range(0..=self.seen);
            if (j as usize) < self.target {
                self.items[j as usize] = descriptor.to_vec();
            }
        }
        self.seen += 1;
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn finish(self) -> Result<Vec<Vec<f32>>> {
        if self.seen == 0 {
            return Err(Error::InsufficientData("no features to sample from".into()));
        }
        Ok(self.items)
    }
}

/// Reservoir-samples `min(target, total)` descriptors from a stream of
/// feature maps.
pub fn sample_features<I, M>(maps: I, target: usize, seed: u64) -> Result<Vec<Vec<f32>>>
where
    I: IntoIterator<Item = M>,
    M: core::borrow::Borrow<crate::types::LocalFeatureMap>,
{
    let mut reservoir = Reservoir::new(target, seed);
    let mut any = false;
    for map in maps {
        any = true;
        for f in &map.borrow().features {
            reservoir.offer(&f.descriptor);
        }
    }
    if !any {
        return Err(Error::InsufficientData("empty feature map stream".into()));
    }
    reservoir.finish()
}
