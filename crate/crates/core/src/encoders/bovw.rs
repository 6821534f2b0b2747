//! Bag of visual words with TF-IDF weighting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codebook::Codebook;
use crate::error::{check_dim, Error, Result};
use crate::types::LocalFeature;
use crate::vector;

/// Database-wide document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TfIdfStats {
    n_images: u64,
    doc_freq: Vec<u64>,
}

impl TfIdfStats {
    pub fn new(n_images: u64, doc_freq: Vec<u64>) -> Result<Self> {
        if n_images == 0 {
            return Err(Error::InsufficientData("TF-IDF statistics need at least one image".into()));
        }
        if doc_freq.is_empty() {
            return Err(Error::InvalidParameter("empty vocabulary".into()));
        }
        if let Some((i, &n)) = doc_freq.iter().enumerate().find(|(_, &n)| n > n_images) {
            return Err(Error::InvalidData(format!("word {i} appears in {n} images out of {n_images}")));
        }
        Ok(Self { n_images, doc_freq })
    }

    /// Number of database images (`N`).
    pub fn n_images(&self) -> u64 {
        self.n_images
    }

    /// Images containing each word (`N_i`).
    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn vocabulary_size(&self) -> usize {
        self.doc_freq.len()
    }

    /// `ln(N / N_i)`, or 0 when the word never occurs or occurs everywhere.
    pub fn idf(&self, word: usize) -> f64 {
        let ni = self.doc_freq[word];
        if ni == 0 || ni == self.n_images {
            0.0
        } else {
            libm::log(self.n_images as f64 / ni as f64)
        }
    }

    /// Combines statistics of two disjoint image sets.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        check_dim(self.vocabulary_size(), other.vocabulary_size())?;
        let doc_freq = self.doc_freq.iter().zip(&other.doc_freq).map(|(a, b)| a + b).collect();
        Self::new(self.n_images + other.n_images, doc_freq)
    }
}

/// Sorted, de-duplicated visual words occurring in `features`.
pub fn word_presence(features: &[LocalFeature], codebook: &Codebook) -> Result<Vec<usize>> {
    let mut seen = vec![false; codebook.k()];
    for f in features {
        seen[codebook.assign(&f.descriptor)?] = true;
    }
    Ok(seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i).collect())
}

/// Counts document frequencies over a stream of per-image word sets.
pub fn update_tfidf_stats<I, S>(presence_sets: I, vocabulary_size: usize) -> Result<TfIdfStats>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[usize]>,
{
    if vocabulary_size == 0 {
        return Err(Error::InvalidParameter("empty vocabulary".into()));
    }
    let mut doc_freq = vec![0u64; vocabulary_size];
    let mut marks = vec![u64::MAX; vocabulary_size];
    let mut n = 0u64;
    for set in presence_sets {
        for &w in set.as_ref() {
            if w >= vocabulary_size {
                return Err(Error::InvalidData(format!("word {w} outside vocabulary of {vocabulary_size}")));
            }
            if marks[w] != n {
                marks[w] = n;
                doc_freq[w] += 1;
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InsufficientData("no images for TF-IDF statistics".into()));
    }
    TfIdfStats::new(n, doc_freq)
}

/// Unnormalized TF-IDF vector: `t_i = (n_id / n_d) * ln(N / N_i)`.
pub fn tfidf_weights(features: &[LocalFeature], codebook: &Codebook, stats: &TfIdfStats) -> Result<Vec<f64>> {
    check_dim(codebook.k(), stats.vocabulary_size())?;
    let mut counts = vec![0u64; codebook.k()];
    for f in features {
        counts[codebook.assign(&f.descriptor)?] += 1;
    }
    let total = features.len() as f64;
    Ok(counts.iter().enumerate().map(|(i, &c)| if c == 0 { 0.0 } else { (c as f64 / total) * stats.idf(i) }).collect())
}

/// L2-normalized TF-IDF vector of length `V`.
pub fn bovw_encode(features: &[LocalFeature], codebook: &Codebook, stats: &TfIdfStats) -> Result<Vec<f32>> {
    Ok(vector::normalized_f32(&tfidf_weights(features, codebook, stats)?))
}
