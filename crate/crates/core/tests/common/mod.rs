#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spvp_core::{Codebook, Descriptor, GeoRecord, LocalFeature, LocalFeatureMap, Method};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

pub fn features(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<LocalFeature> {
    (0..n)
        .map(|_| {
            let (x, y) = (rng.random::<f32>(), rng.random::<f32>());
            LocalFeature::new(x, y, unit_vector(rng, dim)).unwrap()
        })
        .collect()
}

pub fn feature_map(rng: &mut ChaCha8Rng, id: &str, n: usize, dim: usize) -> LocalFeatureMap {
    LocalFeatureMap::new(id, dim, features(rng, n, dim)).unwrap()
}

pub fn codebook(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Codebook {
    Codebook::new(k, dim, (0..k).flat_map(|_| unit_vector(rng, dim)).collect()).unwrap()
}

pub fn descriptors(rng: &mut ChaCha8Rng, prefix: &str, n: usize, dim: usize) -> Vec<Descriptor> {
    (0..n).map(|i| Descriptor::new(format!("{prefix}{i:05}"), Method::Vlad, unit_vector(rng, dim)).unwrap()).collect()
}

/// Points scattered uniformly in a square of `side_m` meters around a
/// city-scale origin.
pub fn geo_cloud(rng: &mut ChaCha8Rng, prefix: &str, n: usize, side_m: f64) -> Vec<GeoRecord> {
    let (lat0, lon0) = (36.35_f64, 127.38_f64);
    let dlat = side_m / 111_195.0;
    let dlon = dlat / lat0.to_radians().cos();
    (0..n)
        .map(|i| {
            let lat = lat0 + rng.random_range(0.0..dlat);
            let lon = lon0 + rng.random_range(0.0..dlon);
            GeoRecord::new(format!("{prefix}{i:05}"), lat, lon).unwrap()
        })
        .collect()
}

pub fn brute_nearest(centroids: &[Vec<f64>], v: &[f32]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, c) in centroids.iter().enumerate() {
        let d: f64 = c.iter().zip(v).map(|(a, &b)| (a - b as f64).powi(2)).sum();
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

pub fn centroid_rows(cb: &Codebook) -> Vec<Vec<f64>> {
    (0..cb.k()).map(|j| cb.centroid(j).iter().map(|&x| x as f64).collect()).collect()
}

/// VLAD by explicit loops: assign, accumulate residuals, signed square root,
/// global L2.
pub fn vlad_oracle(features: &[LocalFeature], cb: &Codebook) -> Vec<f64> {
    let rows = centroid_rows(cb);
    let d = cb.dim();
    let mut v = vec![0.0f64; cb.k() * d];
    for f in features {
        let j = brute_nearest(&rows, &f.descriptor);
        for t in 0..d {
            v[j * d + t] += f.descriptor[t] as f64 - rows[j][t];
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

pub fn haversine_oracle(a: &GeoRecord, b: &GeoRecord) -> f64 {
    let r = 6_371_000.0_f64;
    let (p1, p2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dp = p2 - p1;
    let dl = (b.longitude - a.longitude).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}
