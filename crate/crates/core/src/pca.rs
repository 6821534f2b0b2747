//! Principal component analysis for descriptor reduction, with optional
//! whitening.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::vector;

/// Whitening treats eigenvalues below this floor as equal to it.
pub const WHITEN_FLOOR: f64 = 1e-10;

/// Eigenvalues at or below this fraction of the largest one are considered
/// numerically zero when lifting Gram-matrix eigenvectors.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    in_dim: usize,
    out_dim: usize,
    whiten: bool,
    mean: Vec<f32>,
    /// `out_dim x in_dim`, row-major, rows orthonormal.
    components: Vec<f32>,
    /// Non-increasing, non-negative.
    eigenvalues: Vec<f32>,
}

impl PcaModel {
    pub fn new(mean: Vec<f32>, components: Vec<f32>, eigenvalues: Vec<f32>, whiten: bool) -> Result<Self> {
        let in_dim = mean.len();
        let out_dim = eigenvalues.len();
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidParameter("PCA dimensions must be positive".into()));
        }
        if out_dim > in_dim {
            return Err(Error::InvalidParameter(format!(
                "output dimension {out_dim} exceeds input dimension {in_dim}"
            )));
        }
        check_dim(in_dim * out_dim, components.len())?;
        if !vector::is_finite(&mean) || !vector::is_finite(&components) || !vector::is_finite(&eigenvalues) {
            return Err(Error::InvalidData("non-finite PCA parameter".into()));
        }
        if eigenvalues.iter().any(|&l| (l as f64) < -1e-9) {
            return Err(Error::InvalidData("negative PCA eigenvalue".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidData("PCA eigenvalues must be non-increasing".into()));
        }
        let eigenvalues = eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
        Ok(Self { in_dim, out_dim, whiten, mean, components, eigenvalues })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn whiten(&self) -> bool {
        self.whiten
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }

    pub fn components(&self) -> &[f32] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f32] {
        &self.components[i * self.in_dim..(i + 1) * self.in_dim]
    }

    pub fn eigenvalues(&self) -> &[f32] {
        &self.eigenvalues
    }

    /// Largest deviation of `components * components^T` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.out_dim {
            for j in i..self.out_dim {
                let d = vector::dot(self.component(i), self.component(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// Projects `v`; whitens when the model was fit with whitening and
    /// L2-normalizes the result when `normalize` is set.
    pub fn apply(&self, v: &[f32], normalize: bool) -> Result<Vec<f32>> {
        check_dim(self.in_dim, v.len())?;
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(&x, &m)| x as f64 - m as f64).collect();
        let mut out: Vec<f64> = self
            .components
            .chunks_exact(self.in_dim)
            .map(|row| row.iter().zip(&centered).map(|(&c, &x)| c as f64 * x).sum())
            .collect();
        if self.whiten {
            for (o, &l) in out.iter_mut().zip(&self.eigenvalues) {
                *o /= libm::sqrt((l as f64).max(WHITEN_FLOOR));
            }
        }
        Ok(if normalize { vector::normalized_f32(&out) } else { out.into_iter().map(|x| x as f32).collect() })
    }

    /// Maps an unnormalized projection back to input space.
    pub fn reconstruct(&self, projected: &[f32]) -> Result<Vec<f32>> {
        check_dim(self.out_dim, projected.len())?;
        let mut out: Vec<f64> = self.mean.iter().map(|&m| m as f64).collect();
        for ((row, &p), &l) in self.components.chunks_exact(self.in_dim).zip(projected).zip(&self.eigenvalues) {
            let mut p = p as f64;
            if self.whiten {
                p *= libm::sqrt((l as f64).max(WHITEN_FLOOR));
            }
            for (o, &c) in out.iter_mut().zip(row) {
                *o += p * c as f64;
            }
        }
        Ok(out.into_iter().map(|x| x as f32).collect())
    }
}

/// Free-function form of [`PcaModel::apply`].
pub fn pca_apply(model: &PcaModel, v: &[f32], normalize: bool) -> Result<Vec<f32>> {
    model.apply(v, normalize)
}

/// Fits the top `out_dim` principal components of `samples`.
///
/// The covariance uses the `1/n` normalization, so the mean squared
/// reconstruction residual of the training set equals the discarded
/// eigenvalue mass. When the input dimension exceeds the sample count the
/// decomposition runs on the `n x n` Gram matrix instead.
pub fn pca_fit<V: AsRef<[f32]>>(samples: &[V], out_dim: usize, whiten: bool) -> Result<PcaModel> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InsufficientData("no PCA samples".into()));
    }
    let in_dim = samples[0].as_ref().len();
    if out_dim == 0 || in_dim == 0 {
        return Err(Error::InvalidParameter("PCA dimensions must be positive".into()));
    }
    if out_dim > in_dim {
        return Err(Error::InvalidParameter(format!("output dimension {out_dim} exceeds input dimension {in_dim}")));
    }
    if n <= out_dim {
        return Err(Error::InsufficientData(format!("{n} samples for {out_dim} components")));
    }

    let mut mean = vec![0.0f64; in_dim];
    for s in samples {
        let s = s.as_ref();
        check_dim(in_dim, s.len())?;
        if !vector::is_finite(s) {
            return Err(Error::InvalidData("non-finite PCA sample".into()));
        }
        for (m, &x) in mean.iter_mut().zip(s) {
            *m += x as f64;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, in_dim, |r, c| samples[r].as_ref()[c] as f64 - mean[c]);

    let (mut rows, values) =
        if in_dim <= n { covariance_route(&centered, out_dim) } else { gram_route(&centered, out_dim) };
    complete_basis(&mut rows, out_dim, in_dim);
    for row in &mut rows {
        fix_sign(row);
    }

    let components = rows.iter().flatten().map(|&x| x as f32).collect();
    let eigenvalues = values.iter().map(|&l| l.max(0.0) as f32).collect();
    let mean = mean.into_iter().map(|m| m as f32).collect();
    PcaModel::new(mean, components, eigenvalues, whiten)
}

fn descending(eig: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eig.len()).collect();
    order.sort_by(|&a, &b| eig[b].total_cmp(&eig[a]).then(a.cmp(&b)));
    order
}

fn covariance_route(centered: &DMatrix<f64>, out_dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = centered.nrows() as f64;
    let cov = centered.transpose() * centered / n;
    let eig = cov.symmetric_eigen();
    let order = descending(&eig.eigenvalues);
    let rows = order[..out_dim].iter().map(|&j| eig.eigenvectors.column(j).iter().copied().collect()).collect();
    let values = order[..out_dim].iter().map(|&j| eig.eigenvalues[j]).collect();
    (rows, values)
}

fn gram_route(centered: &DMatrix<f64>, out_dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = centered.nrows() as f64;
    let gram = centered * centered.transpose() / n;
    let eig = gram.symmetric_eigen();
    let order = descending(&eig.eigenvalues);
    let top = eig.eigenvalues[order[0]].max(0.0);
    let mut rows = Vec::with_capacity(out_dim);
    let mut values = Vec::with_capacity(out_dim);
    for &j in &order[..out_dim] {
        let lambda = eig.eigenvalues[j];
        if lambda <= top * RANK_TOLERANCE || lambda <= 0.0 {
            break;
        }
        let lifted = centered.transpose() * eig.eigenvectors.column(j);
        let scale = 1.0 / libm::sqrt(n * lambda);
        rows.push(lifted.iter().map(|x| x * scale).collect());
        values.push(lambda);
    }
    values.resize(out_dim, 0.0);
    rows.truncate(out_dim);
    (rows, values)
}

/// Re-orthonormalizes `rows` and, when the data had lower rank than
/// `out_dim`, extends them with standard-basis directions. The padded
/// directions carry zero eigenvalues.
fn complete_basis(rows: &mut Vec<Vec<f64>>, out_dim: usize, in_dim: usize) {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(out_dim);
    for row in rows.drain(..) {
        if let Some(v) = orthogonalize(row, &basis) {
            basis.push(v);
        }
    }
    let mut axis = 0;
    while basis.len() < out_dim && axis < in_dim {
        let mut e = vec![0.0; in_dim];
        e[axis] = 1.0;
        if let Some(v) = orthogonalize(e, &basis) {
            basis.push(v);
        }
        axis += 1;
    }
    *rows = basis;
}

fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
    let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if n <= 1e-8 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

fn fix_sign(row: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in row.iter().enumerate() {
        if x.abs() > row[pivot].abs() {
            pivot = i;
        }
    }
    if row[pivot] < 0.0 {
        row.iter_mut().for_each(|x| *x = -*x);
    }
}
