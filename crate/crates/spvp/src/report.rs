//! Text outputs: ranked search results, metric records and first-hit
//! rank tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spvp_core::{EvalReport, Hit, RankedResult};

use crate::error::{Error, Result};
use crate::formats::{read_file, write_atomic};

pub const RESULTS_HEADER: &str = "query_id\trank\timage_id\tdistance";
pub const RANKS_HEADER: &str = "query_id\tthreshold_m\tfirst_hit_rank";

/// One line of a metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub threshold_m: f64,
    pub n: usize,
    pub recall: f64,
    /// Mean fraction of correct images among the top `n`.
    pub precision: f64,
    /// Mean count of correct images among the top `n`.
    pub mean_correct_at_n: f64,
    pub evaluated_queries: usize,
    pub uncoverable_queries: usize,
}

pub fn metric_records(report: &EvalReport) -> Vec<MetricRecord> {
    report
        .recall_at
        .iter()
        .map(|(&n, &recall)| MetricRecord {
            threshold_m: report.threshold_m,
            n,
            recall,
            precision: report.precision_at[&n],
            mean_correct_at_n: report.mean_correct_at[&n],
            evaluated_queries: report.evaluated_queries,
            uncoverable_queries: report.uncoverable_queries,
        })
        .collect()
}

pub fn metrics_jsonl(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for record in reports.iter().flat_map(metric_records) {
        out.push_str(&serde_json::to_string(&record).expect("metric records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_metrics_jsonl(text: &str) -> Result<Vec<MetricRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub fn ranks_tsv(reports: &[EvalReport]) -> String {
    let mut out = format!("{RANKS_HEADER}\n");
    for report in reports {
        for (query, rank) in &report.first_hit_rank {
            let rank = rank.map_or_else(|| "miss".to_string(), |r| r.to_string());
            writeln!(out, "{query}\t{}\t{rank}", report.threshold_m).unwrap();
        }
    }
    out
}

pub fn save_reports(metrics: &Path, ranks: Option<&Path>, reports: &[EvalReport]) -> Result<()> {
    write_atomic(metrics, metrics_jsonl(reports).as_bytes())?;
    if let Some(path) = ranks {
        write_atomic(path, ranks_tsv(reports).as_bytes())?;
    }
    Ok(())
}

pub fn results_tsv(results: &[RankedResult]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in results {
        for (rank, hit) in r.hits.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", r.query_id, rank + 1, hit.image_id, hit.distance).unwrap();
        }
    }
    out
}

/// Parses a results table. Queries keep their first-appearance order and
/// ranks must run 1, 2, ... within each query.
pub fn parse_results_tsv(text: &str, path: &Path) -> Result<Vec<RankedResult>> {
    let bad = |line: usize, msg: String| Error::manifest(path, format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RESULTS_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{RESULTS_HEADER}`"))),
    }
    let mut order: Vec<RankedResult> = Vec::new();
    let mut position: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, rank, image, distance] = fields[..] else {
            return Err(bad(line_no, format!("expected 4 fields, found {}", fields.len())));
        };
        let rank: usize = rank.parse().map_err(|_| bad(line_no, format!("bad rank `{rank}`")))?;
        let distance: f64 = distance
            .parse()
            .ok()
            .filter(|d: &f64| d.is_finite() && *d >= 0.0)
            .ok_or_else(|| bad(line_no, format!("bad distance `{distance}`")))?;
        let slot = *position.entry(query.to_string()).or_insert_with(|| {
            order.push(RankedResult { query_id: query.to_string(), hits: Vec::new() });
            order.len() - 1
        });
        let hits = &mut order[slot].hits;
        if rank != hits.len() + 1 {
            return Err(bad(line_no, format!("rank {rank} for `{query}` out of sequence")));
        }
        hits.push(Hit { image_id: image.to_string(), distance });
    }
    Ok(order)
}

pub fn save_results(path: &Path, results: &[RankedResult]) -> Result<()> {
    write_atomic(path, results_tsv(results).as_bytes())
}

pub fn load_results(path: &Path) -> Result<Vec<RankedResult>> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::manifest(path, "not UTF-8"))?;
    parse_results_tsv(&text, path)
}
