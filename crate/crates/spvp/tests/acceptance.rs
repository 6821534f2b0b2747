//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spvp::formats::codebook::{decode_codebook, encode_codebook, load_codebook, save_codebook};
use spvp::formats::features::{decode_feature_map, encode_feature_map, load_feature_map, save_feature_map};
use spvp::formats::index::{decode_index, encode_index, load_index, save_index};
use spvp::formats::pca::{decode_pca, encode_pca, load_pca, save_pca};
use spvp::pipeline::{self, Artifacts, EncodeParams, EncoderSetup};
use spvp::synth::{generate_corpus, SynthConfig};
use spvp_core::encoders::{tfidf_weights, update_tfidf_stats, vlad_encode, word_presence};
use spvp_core::evaluation::{build_ground_truth, threshold_sweep, DEFAULT_SWEEP_M};
use spvp_core::index::build_index;
use spvp_core::vector::euclidean_distance;
use spvp_core::{
    assign, pca_fit, train_codebook, Codebook, Descriptor, Encoder, EvalOptions, EvalReport, GeoRecord, KMeansConfig,
    LocalFeature, LocalFeatureMap, Method, Pooling, PyramidConfig, TfIdfStats,
};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(r: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    let v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

fn features(r: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<LocalFeature> {
    (0..n).map(|_| LocalFeature::new(r.random(), r.random(), unit(r, dim)).unwrap()).collect()
}

fn sq_dist(a: &[f32], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y).powi(2)).sum()
}

fn nearest(rows: &[Vec<f64>], v: &[f32]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, c) in rows.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

fn rows(cb: &Codebook) -> Vec<Vec<f64>> {
    (0..cb.k()).map(|j| cb.centroid(j).iter().map(|&x| x as f64).collect()).collect()
}

fn vlad_oracle(feats: &[LocalFeature], cb: &Codebook) -> Vec<f64> {
    let c = rows(cb);
    let d = cb.dim();
    let mut v = vec![0.0f64; cb.k() * d];
    for f in feats {
        let j = nearest(&c, &f.descriptor);
        for t in 0..d {
            v[j * d + t] += f.descriptor[t] as f64 - c[j][t];
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * x.abs().sqrt();
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

fn haversine(a: &GeoRecord, b: &GeoRecord) -> f64 {
    let (p1, p2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let h = ((p2 - p1) / 2.0).sin().powi(2)
        + p1.cos() * p2.cos() * ((b.longitude - a.longitude).to_radians() / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * h.sqrt().asin()
}

fn geo_cloud(r: &mut ChaCha8Rng, prefix: &str, n: usize, side_m: f64) -> Vec<GeoRecord> {
    let dlat = side_m / 111_195.0;
    let dlon = dlat / 36.35_f64.to_radians().cos();
    (0..n)
        .map(|i| {
            let (lat, lon) = (36.35 + r.random_range(0.0..dlat), 127.38 + r.random_range(0.0..dlon));
            GeoRecord::new(format!("{prefix}{i:05}"), lat, lon).unwrap()
        })
        .collect()
}

fn oracle_equivalence() -> Check {
    let mut r = rng(100);
    let feats = features(&mut r, 1000, 40);
    let descs: Vec<&[f32]> = feats.iter().map(|f| f.descriptor.as_slice()).collect();
    let cb = train_codebook(&descs, &KMeansConfig::new(16, 1)).map_err(|e| e.to_string())?.codebook;
    let c = rows(&cb);

    for (i, f) in feats.iter().enumerate() {
        ensure!(assign(&f.descriptor, &cb).unwrap() == nearest(&c, &f.descriptor), "assign differs on feature {i}");
    }

    let mut vlad_err: f64 = 0.0;
    for chunk in std::iter::once(&feats[..]).chain(feats.chunks(50)) {
        let got = vlad_encode(chunk, &cb).unwrap();
        let want = vlad_oracle(chunk, &cb);
        ensure!(got.len() == want.len(), "VLAD length {} vs {}", got.len(), want.len());
        vlad_err = got.iter().zip(&want).fold(vlad_err, |m, (&g, w)| m.max((g as f64 - w).abs()));
    }
    ensure!(vlad_err <= 1e-6, "VLAD deviates by {vlad_err:e}");

    let db: Vec<Descriptor> = feats
        .iter()
        .enumerate()
        .map(|(i, f)| Descriptor::new(format!("db{i:05}"), Method::Vlad, f.descriptor.clone()).unwrap())
        .collect();
    let index = build_index(db.clone()).unwrap();
    let mut knn_err: f64 = 0.0;
    for q in features(&mut r, 100, 40) {
        let qd = Descriptor::new("q", Method::Vlad, q.descriptor.clone()).unwrap();
        let qf: Vec<f64> = q.descriptor.iter().map(|&x| x as f64).collect();
        let mut all: Vec<(f64, &str)> = db.iter().map(|d| (sq_dist(&d.values, &qf), d.image_id.as_str())).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        let got = index.search_knn(&qd, 20).unwrap();
        let ids: Vec<&str> = got.hits.iter().map(|h| h.image_id.as_str()).collect();
        let want: Vec<&str> = all[..20].iter().map(|p| p.1).collect();
        ensure!(ids == want, "kNN ids differ: {ids:?} vs {want:?}");
        knn_err = got.hits.iter().zip(&all).fold(knn_err, |m, (h, (d2, _))| m.max((h.distance - d2.sqrt()).abs()));
    }
    ensure!(knn_err <= 1e-6, "kNN distances deviate by {knn_err:e}");

    let queries = geo_cloud(&mut r, "q", 100, 400.0);
    let places = geo_cloud(&mut r, "db", 1000, 400.0);
    let gt = build_ground_truth(&queries, &places, 25.0).unwrap();
    let mut pairs = 0;
    for q in &queries {
        let want: BTreeSet<String> =
            places.iter().filter(|d| haversine(q, d) < 25.0).map(|d| d.image_id.clone()).collect();
        pairs += want.len();
        ensure!(gt.correct(&q.image_id) == Some(&want), "ground truth differs for {}", q.image_id);
    }
    Ok(format!("1000 assignments, 21 VLADs (max err {vlad_err:.1e}), 100 kNN lists (max err {knn_err:.1e}), {pairs} ground-truth pairs"))
}

fn kmeans_contract() -> Check {
    let mut r = rng(200);
    let mut worst_rise: f64 = 0.0;
    for inst in 0..20 {
        let n = r.random_range(200..=5000);
        let k = r.random_range(2..=32);
        let dim = r.random_range(2..=40);
        let centers: Vec<Vec<f32>> = (0..k).map(|_| unit(&mut r, dim)).collect();
        let points: Vec<Vec<f32>> = (0..n)
            .map(|_| {
                let c = &centers[r.random_range(0..k)];
                c.iter().map(|&x| x + r.random_range(-0.3..0.3)).collect()
            })
            .collect();
        let trained = train_codebook(&points, &KMeansConfig::new(k, inst)).map_err(|e| e.to_string())?;
        let trace = &trained.codebook.training_meta().unwrap().inertia_trace;
        ensure!(!trace.is_empty(), "instance {inst}: empty trace");
        for w in trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
            ensure!(w[1] <= w[0], "instance {inst} (n={n}, k={k}): inertia rose {} -> {}", w[0], w[1]);
        }
        let c = rows(&trained.codebook);
        for (i, (p, &a)) in points.iter().zip(&trained.assignments).enumerate() {
            ensure!(a == nearest(&c, p), "instance {inst}: point {i} not assigned to its nearest centroid");
        }
    }
    Ok("20 instances, traces non-increasing, assignments nearest".into())
}

/// Moves every feature of level-2 cell `c` into cell `perm[c]`, keeping its
/// offset within the cell, and shuffles the feature order.
fn permute_cells(feats: &[LocalFeature], perm: [usize; 4], r: &mut ChaCha8Rng) -> Vec<LocalFeature> {
    let mut out: Vec<LocalFeature> = feats
        .iter()
        .map(|f| {
            let (cx, cy) = ((f.x * 2.0) as usize, (f.y * 2.0) as usize);
            let to = perm[cy * 2 + cx];
            let (tx, ty) = ((to % 2) as f32 * 0.5, (to / 2) as f32 * 0.5);
            LocalFeature::new(f.x - cx as f32 * 0.5 + tx, f.y - cy as f32 * 0.5 + ty, f.descriptor.clone()).unwrap()
        })
        .collect();
    out.shuffle(r);
    out
}

fn ordered_pooling_separation() -> Check {
    let mut r = rng(300);
    let dim = 40;
    let cb = Codebook::new(16, dim, (0..16).flat_map(|_| unit(&mut r, dim)).collect()).unwrap();
    let config = PyramidConfig::new(vec![1, 2, 4]).unwrap();
    let background: Vec<Vec<usize>> =
        (0..20).map(|_| word_presence(&features(&mut r, 60, dim), &cb).unwrap()).collect();
    let stats = update_tfidf_stats(&background, 16).unwrap();
    let encoders = [
        Encoder::Spvp { codebook: &cb, config: &config, patch_pca: None, global_pca: None },
        Encoder::Bovw { codebook: &cb, stats: &stats },
        Encoder::Pool { dim, pooling: Pooling::Spoc },
        Encoder::Pool { dim, pooling: Pooling::Mac },
        Encoder::Pool { dim, pooling: Pooling::Gem { p: 3.0 } },
    ];
    let mut spvp_min = f64::INFINITY;
    let mut orderless_max: f64 = 0.0;
    for pair in 0..100 {
        // Points stay clear of cell edges so the move is exact in f32.
        let feats: Vec<LocalFeature> = (0..r.random_range(40..120))
            .map(|_| {
                let mut at = || r.random_range(0.02f32..0.48) + 0.5 * r.random_range(0..2) as f32;
                let (x, y) = (at(), at());
                LocalFeature::new(x, y, unit(&mut r, dim)).unwrap()
            })
            .collect();
        let mut perm = [0, 1, 2, 3];
        while perm.iter().enumerate().any(|(i, &p)| i == p) {
            perm.shuffle(&mut r);
        }
        let moved = permute_cells(&feats, perm, &mut r);
        let a = LocalFeatureMap::new("a", dim, feats).unwrap();
        let b = LocalFeatureMap::new("b", dim, moved).unwrap();
        for enc in &encoders {
            let d = euclidean_distance(&enc.encode(&a).unwrap().values, &enc.encode(&b).unwrap().values).unwrap();
            if enc.method() == Method::Spvp {
                spvp_min = spvp_min.min(d);
                ensure!(d > 1e-3, "pair {pair}: SPVP distance {d:e}");
            } else {
                orderless_max = orderless_max.max(d);
                ensure!(d < 1e-6, "pair {pair}: {} distance {d:e}", enc.method());
            }
        }
    }
    Ok(format!("100 pairs, min SPVP distance {spvp_min:.3}, max orderless distance {orderless_max:.1e}"))
}

struct Benchmark {
    reports: Vec<(Method, Vec<EvalReport>)>,
}

fn run_benchmark() -> Benchmark {
    let cfg = SynthConfig { repetitive_fraction: 0.6, viewpoint_shift: 0.2, seed: 7, ..SynthConfig::default() };
    let corpus = generate_corpus(&cfg).unwrap();
    let db: Vec<LocalFeatureMap> = corpus.database.iter().map(|i| i.map.clone()).collect();
    let queries: Vec<LocalFeatureMap> = corpus.queries.iter().map(|q| q.image.map.clone()).collect();
    let db_geo: Vec<GeoRecord> = corpus.database.iter().map(|i| i.geo.clone()).collect();
    let q_geo: Vec<GeoRecord> = corpus.queries.iter().map(|q| q.image.geo.clone()).collect();

    let samples = pipeline::sample_loaded(&db, pipeline::DEFAULT_SAMPLE_SIZE, 7).unwrap();
    let codebook = pipeline::train(&samples, 64, pipeline::DEFAULT_MAX_ITERS, 7).unwrap();
    let stats = pipeline::tfidf_stats(&db, &codebook).unwrap();
    let artifacts = Artifacts { codebook: Some(codebook), pca: None, stats: Some(stats) };
    let mut reports = Vec::new();
    for method in Method::ALL {
        let params = EncodeParams { method, ..EncodeParams::default() };
        let setup = EncoderSetup::new(&params, &artifacts, cfg.descriptor_dim).unwrap();
        let index = build_index(pipeline::encode(&db, &setup).unwrap()).unwrap();
        let results = pipeline::search(&index, &pipeline::encode(&queries, &setup).unwrap(), 20).unwrap();
        let mut thresholds = DEFAULT_SWEEP_M.to_vec();
        thresholds.push(25.0);
        let sweep = threshold_sweep(
            &results,
            &q_geo,
            &db_geo,
            &thresholds,
            &pipeline::DEFAULT_N_VALUES,
            EvalOptions::default(),
        )
        .unwrap();
        reports.push((method, sweep));
    }
    Benchmark { reports }
}

fn recall_at(bench: &Benchmark, method: Method, threshold: f64, n: usize) -> f64 {
    let (_, sweep) = bench.reports.iter().find(|(m, _)| *m == method).unwrap();
    sweep.iter().find(|r| r.threshold_m == threshold).unwrap().recall_at[&n]
}

fn synthetic_ranking(bench: &Benchmark) -> Check {
    let at = |m| recall_at(bench, m, 25.0, 1);
    let (spvp, bovw, spoc) = (at(Method::Spvp), at(Method::Bovw), at(Method::Spoc));
    let line = Method::ALL.iter().map(|&m| format!("{m} {:.2}", at(m))).collect::<Vec<_>>().join(", ");
    ensure!(spvp > bovw && spvp > spoc, "recall@1 at 25 m: {line}");
    Ok(format!("recall@1 at 25 m: {line}"))
}

fn metric_contracts(bench: &Benchmark) -> Check {
    let mut count = 0;
    for (method, sweep) in &bench.reports {
        let mut sweep: Vec<&EvalReport> = sweep.iter().collect();
        sweep.sort_by(|a, b| a.threshold_m.total_cmp(&b.threshold_m));
        for report in &sweep {
            let recalls: Vec<f64> = report.recall_at.values().copied().collect();
            ensure!(
                recalls.windows(2).all(|w| w[0] <= w[1]),
                "{method} at {} m: recall falls with N",
                report.threshold_m
            );
            ensure!(
                report.recall_at[&1] == report.precision_at[&1],
                "{method} at {} m: recall@1 {} != precision@1 {}",
                report.threshold_m,
                report.recall_at[&1],
                report.precision_at[&1]
            );
            count += 1;
        }
        for w in sweep.windows(2) {
            for (n, &lo) in &w[0].recall_at {
                ensure!(
                    lo <= w[1].recall_at[n],
                    "{method}: recall@{n} falls from {} m to {} m",
                    w[0].threshold_m,
                    w[1].threshold_m
                );
            }
        }
    }
    Ok(format!("{count} reports over D = 10..50 m and 25 m"))
}

fn tfidf_fidelity() -> Check {
    // Words 0..3 sit at 0, 1, 2, 3 on a line; each image lists its words.
    let cb = Codebook::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let images: [&[usize]; 5] = [&[0, 0, 1], &[1, 2], &[0, 2, 2, 2], &[3], &[0, 1, 1, 2, 3]];
    let maps: Vec<Vec<LocalFeature>> = images
        .iter()
        .map(|ws| ws.iter().map(|&w| LocalFeature::new(0.5, 0.5, vec![w as f32]).unwrap()).collect())
        .collect();
    let presence: Vec<Vec<usize>> = maps.iter().map(|m| word_presence(m, &cb).unwrap()).collect();
    let stats = update_tfidf_stats(&presence, 4).unwrap();
    ensure!(stats == TfIdfStats::new(5, vec![3, 3, 3, 2]).unwrap(), "document frequencies {:?}", stats.doc_freq());

    let (l3, l2) = ((5.0f64 / 3.0).ln(), (5.0f64 / 2.0).ln());
    let expected: [[f64; 4]; 5] = [
        [2.0 / 3.0 * l3, 1.0 / 3.0 * l3, 0.0, 0.0],
        [0.0, 1.0 / 2.0 * l3, 1.0 / 2.0 * l3, 0.0],
        [1.0 / 4.0 * l3, 0.0, 3.0 / 4.0 * l3, 0.0],
        [0.0, 0.0, 0.0, l2],
        [1.0 / 5.0 * l3, 2.0 / 5.0 * l3, 1.0 / 5.0 * l3, 1.0 / 5.0 * l2],
    ];
    for (i, (m, want)) in maps.iter().zip(&expected).enumerate() {
        let got = tfidf_weights(m, &cb, &stats).unwrap();
        ensure!(got == want, "image {i}: {got:?} vs {want:?}");
    }
    Ok("5 images x 4 words match bit for bit".into())
}

fn pca_contract() -> Check {
    let mut r = rng(700);
    let mut worst_ortho: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for inst in 0..10 {
        let in_dim = r.random_range(4..=48);
        let n = if inst % 3 == 2 { r.random_range(8..in_dim.max(9)) } else { r.random_range(200..1500) };
        let out_dim = r.random_range(1..in_dim.min(n - 1).max(2));
        let whiten = inst % 2 == 1;
        let latent = r.random_range(1..=in_dim);
        let mixing: Vec<Vec<f64>> =
            (0..latent).map(|_| (0..in_dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let offset: Vec<f64> = (0..in_dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let samples: Vec<Vec<f32>> = (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..latent).map(|j| r.random_range(-1.0..1.0) / (1.0 + j as f64)).collect();
                (0..in_dim)
                    .map(|t| {
                        let v: f64 = z.iter().zip(&mixing).map(|(zj, row)| zj * row[t]).sum();
                        (v + offset[t] + r.random_range(-0.05..0.05)) as f32
                    })
                    .collect()
            })
            .collect();
        let model = pca_fit(&samples, out_dim, whiten).map_err(|e| e.to_string())?;
        let ortho = model.orthonormality_error();
        worst_ortho = worst_ortho.max(ortho);
        ensure!(ortho <= 1e-5, "instance {inst}: orthonormality error {ortho:e}");

        let mut mean = vec![0.0f64; in_dim];
        for s in &samples {
            for (m, &x) in mean.iter_mut().zip(s) {
                *m += x as f64 / n as f64;
            }
        }
        let total: f64 = samples.iter().map(|s| sq_dist(s, &mean)).sum::<f64>() / n as f64;
        let full = pca_fit(&samples, in_dim.min(n - 1), false).map_err(|e| e.to_string())?;
        let spectrum: f64 = full.eigenvalues().iter().map(|&l| l as f64).sum();
        ensure!((spectrum - total).abs() <= 1e-5 * total, "instance {inst}: spectrum {spectrum} vs variance {total}");
        let discarded: f64 = full.eigenvalues()[out_dim..].iter().map(|&l| l as f64).sum();
        let residual: f64 = samples
            .iter()
            .map(|s| {
                let back = model.reconstruct(&model.apply(s, false).unwrap()).unwrap();
                let s: Vec<f64> = s.iter().map(|&x| x as f64).collect();
                sq_dist(&back, &s)
            })
            .sum::<f64>()
            / n as f64;
        let rel = (residual - discarded).abs() / discarded.abs().max(1e-12 * total);
        worst_rel = worst_rel.max(rel);
        ensure!(
            rel <= 1e-4,
            "instance {inst} (n={n}, {in_dim}->{out_dim}): residual {residual:e} vs discarded mass {discarded:e}"
        );
    }
    Ok(format!("10 instances, orthonormality {worst_ortho:.1e}, residual rel. error {worst_rel:.1e}"))
}

fn fuzz(bytes: &[u8], seed: u64, decodes: impl Fn(&[u8]) -> bool) -> Result<(), String> {
    let mut r = rng(seed);
    let mut mutants = 0;
    while mutants < 100 {
        let mut m = bytes.to_vec();
        let at = r.random_range(0..m.len());
        m[at] ^= r.random_range(1..=255u8);
        mutants += 1;
        ensure!(!decodes(&m), "mutant at byte {at} parsed");
    }
    Ok(())
}

fn format_round_trips() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(800);
    let cb = Codebook::new(16, 40, (0..16).flat_map(|_| unit(&mut r, 40)).collect()).unwrap();
    let map = LocalFeatureMap::new("img", 40, features(&mut r, 300, 40)).unwrap().with_source_size(640, 480);
    let pca = pca_fit(&(0..60).map(|_| unit(&mut r, 12)).collect::<Vec<_>>(), 6, true).unwrap();
    let index = build_index((0..40).map(|i| Descriptor::new(format!("d{i}"), Method::Spvp, unit(&mut r, 24)).unwrap()))
        .unwrap();

    let p = dir.path().join("f.pvfm");
    save_feature_map(&p, &map, true).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    ensure!(
        encode_feature_map(&load_feature_map(&p, "img", Some(40)).unwrap(), true).unwrap() == bytes,
        "PVFM differs"
    );
    fuzz(&bytes, 1, |b| decode_feature_map(b, "img", None).is_ok())?;

    let p = dir.path().join("c.pvcb");
    save_codebook(&p, &cb).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    ensure!(encode_codebook(&load_codebook(&p).unwrap()) == bytes, "PVCB differs");
    fuzz(&bytes, 2, |b| decode_codebook(b).is_ok())?;

    let p = dir.path().join("p.pvpc");
    save_pca(&p, &pca).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    ensure!(encode_pca(&load_pca(&p).unwrap()) == bytes, "PVPC differs");
    fuzz(&bytes, 3, |b| decode_pca(b).is_ok())?;

    let p = dir.path().join("i.pvix");
    save_index(&p, &index).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    ensure!(encode_index(&load_index(&p).unwrap()) == bytes, "PVIX differs");
    fuzz(&bytes, 4, |b| decode_index(b).is_ok())?;
    Ok("4 formats byte-identical, 400 mutants rejected".into())
}

fn report(name: &str, limit: Option<Duration>, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let took = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {took:.1?}, limit {l:?}")),
        (o, _) => o,
    };
    let pass = outcome.is_ok();
    let detail = outcome.unwrap_or_else(|e| e);
    println!("{} {name} ({took:.1?}): {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    spvp::progress::set_quiet(true);
    let mut ok = true;
    ok &= report("oracle equivalence", Some(Duration::from_secs(30)), oracle_equivalence);
    ok &= report("k-means contract", None, kmeans_contract);
    ok &= report("ordered pooling separation", None, ordered_pooling_separation);

    let start = Instant::now();
    let bench = catch_unwind(run_benchmark).ok();
    let bench_time = start.elapsed();
    match &bench {
        Some(b) => {
            let limit = Duration::from_secs(300).saturating_sub(bench_time);
            ok &= report("synthetic ranking", Some(limit), || {
                synthetic_ranking(b).map(|s| format!("{s}, benchmark {bench_time:.1?}"))
            });
            ok &= report("metric contracts", None, || metric_contracts(b));
        }
        None => {
            ok &= report("synthetic ranking", None, || Err("benchmark failed".into()));
            ok &= report("metric contracts", None, || Err("benchmark failed".into()));
        }
    }
    ok &= report("tf-idf fidelity", None, tfidf_fidelity);
    ok &= report("pca contract", None, pca_contract);
    ok &= report("format round-trips", None, format_round_trips);
    if !ok {
        std::process::exit(1);
    }
}
