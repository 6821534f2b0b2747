//! Geographic ground truth and retrieval metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::index::RankedResult;
use crate::types::GeoRecord;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Default distance threshold in meters.
pub const DEFAULT_THRESHOLD_M: f64 = 25.0;

/// Default threshold sweep, 10 m to 50 m in 10 m steps.
pub const DEFAULT_SWEEP_M: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: &GeoRecord, b: &GeoRecord) -> f64 {
    haversine_deg(a.latitude, a.longitude, b.latitude, b.longitude)
}

pub fn haversine_deg(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let s1 = libm::sin(dp / 2.0);
    let s2 = libm::sin(dl / 2.0);
    let h = (s1 * s1 + libm::cos(p1) * libm::cos(p2) * s2 * s2).clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h))
}

/// Database images lying strictly within `threshold_m` of each query.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    threshold_m: f64,
    correct: BTreeMap<String, BTreeSet<String>>,
}

impl GroundTruth {
    pub fn threshold_m(&self) -> f64 {
        self.threshold_m
    }

    pub fn correct(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.correct.get(query_id)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.correct.iter().map(|(q, s)| (q.as_str(), s))
    }

    pub fn len(&self) -> usize {
        self.correct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correct.is_empty()
    }

    /// Queries with no database image inside the threshold.
    pub fn uncoverable(&self) -> usize {
        self.correct.values().filter(|s| s.is_empty()).count()
    }
}

/// Builds the correct-answer sets `{db : haversine(query, db) < D}`.
///
/// The database is scanned within a latitude band around each query; the
/// band is exact because great-circle distance is never shorter than the
/// meridian arc between the two latitudes.
pub fn build_ground_truth(queries: &[GeoRecord], database: &[GeoRecord], threshold_m: f64) -> Result<GroundTruth> {
    if threshold_m.is_nan() || threshold_m <= 0.0 || threshold_m.is_infinite() {
        return Err(Error::InvalidParameter(format!("distance threshold {threshold_m} must be positive")));
    }
    let mut by_lat: Vec<&GeoRecord> = database.iter().collect();
    by_lat.sort_by(|a, b| a.latitude.total_cmp(&b.latitude));
    // one extra meter of slack keeps the band conservative under rounding
    let band_deg = ((threshold_m + 1.0) / EARTH_RADIUS_M).to_degrees();

    let mut correct = BTreeMap::new();
    for q in queries {
        let lo = by_lat.partition_point(|r| r.latitude < q.latitude - band_deg);
        let set: BTreeSet<String> = by_lat[lo..]
            .iter()
            .take_while(|r| r.latitude <= q.latitude + band_deg)
            .filter(|r| haversine_m(q, r) < threshold_m)
            .map(|r| r.image_id.clone())
            .collect();
        if correct.insert(q.image_id.clone(), set).is_some() {
            return Err(Error::DuplicateId(q.image_id.clone()));
        }
    }
    Ok(GroundTruth { threshold_m, correct })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Drop queries with an empty correct set from every denominator.
    pub exclude_uncoverable: bool,
}

/// Per-query hit flags, restricted to the queries that count.
fn relevance<'r>(
    results: &'r [RankedResult],
    gt: &GroundTruth,
    n: usize,
    opts: EvalOptions,
) -> Result<Vec<(&'r RankedResult, Vec<bool>)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let depth = results.iter().map(|r| r.hits.len()).min().unwrap_or(0);
    if n > depth {
        return Err(Error::InvalidParameter(format!("N = {n} exceeds retrieved depth {depth}")));
    }
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        let set = gt
            .correct(&r.query_id)
            .ok_or_else(|| Error::InvalidData(format!("query `{}` has no ground truth", r.query_id)))?;
        if opts.exclude_uncoverable && set.is_empty() {
            continue;
        }
        out.push((r, r.hits.iter().map(|h| set.contains(&h.image_id)).collect()));
    }
    Ok(out)
}

/// Fraction of queries with at least one correct image in the top `n`.
pub fn recall_at_n(results: &[RankedResult], gt: &GroundTruth, n: usize, opts: EvalOptions) -> Result<f64> {
    let rel = relevance(results, gt, n, opts)?;
    Ok(mean(rel.iter().map(|(_, r)| if r[..n].iter().any(|&c| c) { 1.0 } else { 0.0 }), rel.len()))
}

/// Mean fraction of correct images among the top `n`.
pub fn precision_at_n(results: &[RankedResult], gt: &GroundTruth, n: usize, opts: EvalOptions) -> Result<f64> {
    Ok(mean_correct_at_n(results, gt, n, opts)? / n as f64)
}

/// Mean number of correct images among the top `n` (not divided by `n`).
pub fn mean_correct_at_n(results: &[RankedResult], gt: &GroundTruth, n: usize, opts: EvalOptions) -> Result<f64> {
    let rel = relevance(results, gt, n, opts)?;
    Ok(mean(rel.iter().map(|(_, r)| r[..n].iter().filter(|&&c| c).count() as f64), rel.len()))
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        values.sum::<f64>() / count as f64
    }
}

/// 1-based rank of the first correct hit, if any.
pub fn first_hit_rank(result: &RankedResult, gt: &GroundTruth) -> Option<usize> {
    let set = gt.correct(&result.query_id)?;
    result.hits.iter().position(|h| set.contains(&h.image_id)).map(|p| p + 1)
}

/// Metrics at one distance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub threshold_m: f64,
    pub recall_at: BTreeMap<usize, f64>,
    pub precision_at: BTreeMap<usize, f64>,
    pub mean_correct_at: BTreeMap<usize, f64>,
    /// In the order of the evaluated results; `None` is a miss within the
    /// retrieved depth.
    pub first_hit_rank: Vec<(String, Option<usize>)>,
    /// Queries that count towards the denominators.
    pub evaluated_queries: usize,
    pub uncoverable_queries: usize,
}

pub fn evaluate(
    results: &[RankedResult],
    gt: &GroundTruth,
    n_values: &[usize],
    opts: EvalOptions,
) -> Result<EvalReport> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("no N values to evaluate".into()));
    }
    let mut report = EvalReport {
        threshold_m: gt.threshold_m(),
        recall_at: BTreeMap::new(),
        precision_at: BTreeMap::new(),
        mean_correct_at: BTreeMap::new(),
        first_hit_rank: Vec::with_capacity(results.len()),
        evaluated_queries: 0,
        uncoverable_queries: 0,
    };
    for &n in n_values {
        report.recall_at.insert(n, recall_at_n(results, gt, n, opts)?);
        report.mean_correct_at.insert(n, mean_correct_at_n(results, gt, n, opts)?);
        report.precision_at.insert(n, report.mean_correct_at[&n] / n as f64);
    }
    for r in results {
        let empty = gt.correct(&r.query_id).is_none_or(BTreeSet::is_empty);
        if empty {
            report.uncoverable_queries += 1;
        }
        if !(opts.exclude_uncoverable && empty) {
            report.evaluated_queries += 1;
        }
        report.first_hit_rank.push((r.query_id.clone(), first_hit_rank(r, gt)));
    }
    Ok(report)
}

/// One report per threshold; the rankings are reused and only the ground
/// truth is rebuilt.
pub fn threshold_sweep(
    results: &[RankedResult],
    queries: &[GeoRecord],
    database: &[GeoRecord],
    thresholds_m: &[f64],
    n_values: &[usize],
    opts: EvalOptions,
) -> Result<Vec<EvalReport>> {
    if thresholds_m.is_empty() {
        return Err(Error::InvalidParameter("no distance thresholds".into()));
    }
    thresholds_m
        .iter()
        .map(|&d| {
            let gt = build_ground_truth(queries, database, d)?;
            evaluate(results, &gt, n_values, opts)
        })
        .collect()
}
