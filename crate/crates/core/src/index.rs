//! Exact top-N search over a flat descriptor store.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{check_dim, Error, Result};
use crate::par;
use crate::types::{Descriptor, Method};
use crate::vector::squared_distance_unchecked;

/// Default retrieval depth.
pub const DEFAULT_TOP_N: usize = 20;

const SCAN_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub image_id: String,
    pub distance: f64,
}

/// Hits for one query, ascending by distance, ties by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query_id: String,
    pub hits: Vec<Hit>,
}

/// Immutable store of same-method, same-length descriptors.
#[derive(Debug, Clone)]
pub struct DescriptorIndex {
    method: Method,
    dim: usize,
    ids: Vec<String>,
    values: Vec<f32>,
    lookup: BTreeMap<String, usize>,
}

impl DescriptorIndex {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, image_id: &str) -> Option<&[f32]> {
        self.lookup.get(image_id).map(|&i| self.values(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids.iter().map(String::as_str).zip(self.values.chunks_exact(self.dim))
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        let id_bytes: usize = self.ids.iter().map(|s| s.capacity()).sum();
        self.values.capacity() * core::mem::size_of::<f32>()
            + self.ids.capacity() * core::mem::size_of::<String>()
            + 2 * id_bytes
            // B-tree nodes hold the keys and values plus a few pointers each
            + self.lookup.len() * (core::mem::size_of::<String>() + core::mem::size_of::<usize>() + 16)
    }

    /// Exact top-`n` neighbors of `query` by Euclidean distance.
    pub fn search_knn(&self, query: &Descriptor, n: usize) -> Result<RankedResult> {
        if query.method != self.method {
            return Err(Error::InvalidParameter(format!(
                "query encoded with {}, index holds {}",
                query.method, self.method
            )));
        }
        let hits = self.search_values(&query.values, n)?;
        Ok(RankedResult { query_id: query.image_id.clone(), hits })
    }

    /// Top-`n` neighbors of a raw vector, scanning entry chunks in parallel
    /// when the `parallel` feature is on.
    pub fn search_values(&self, query: &[f32], n: usize) -> Result<Vec<Hit>> {
        self.check_query(query, n)?;
        let partials =
            par::map_chunks(&self.ids, SCAN_CHUNK, |offset, chunk| self.scan(query, n, offset, offset + chunk.len()));
        let mut merged: Vec<Candidate<'_>> = partials.into_iter().flatten().collect();
        merged.sort();
        merged.truncate(n);
        Ok(self.to_hits(merged))
    }

    /// Answers a batch of queries; queries run in parallel, each scanning the
    /// index sequentially.
    pub fn search_batch(&self, queries: &[Descriptor], n: usize) -> Result<Vec<RankedResult>> {
        for q in queries {
            if q.method != self.method {
                return Err(Error::InvalidParameter(format!(
                    "query `{}` encoded with {}, index holds {}",
                    q.image_id, q.method, self.method
                )));
            }
            self.check_query(&q.values, n)?;
        }
        Ok(par::map_items(queries, |q| {
            let mut best = self.scan(&q.values, n, 0, self.len());
            best.sort();
            RankedResult { query_id: q.image_id.clone(), hits: self.to_hits(best) }
        }))
    }

    fn check_query(&self, query: &[f32], n: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if n == 0 {
            return Err(Error::InvalidParameter("top-n must be at least 1".into()));
        }
        check_dim(self.dim, query.len())
    }

    fn scan(&self, query: &[f32], n: usize, start: usize, end: usize) -> Vec<Candidate<'_>> {
        let mut heap: BinaryHeap<Candidate<'_>> = BinaryHeap::with_capacity(n + 1);
        for i in start..end {
            let cand = Candidate { dist2: squared_distance_unchecked(query, self.values(i)), id: &self.ids[i] };
            if heap.len() < n {
                heap.push(cand);
            } else if let Some(worst) = heap.peek() {
                if cand < *worst {
                    heap.pop();
                    heap.push(cand);
                }
            }
        }
        heap.into_vec()
    }

    fn to_hits(&self, cands: Vec<Candidate<'_>>) -> Vec<Hit> {
        cands.into_iter().map(|c| Hit { image_id: String::from(c.id), distance: libm::sqrt(c.dist2) }).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate<'a> {
    dist2: f64,
    id: &'a str,
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then_with(|| self.id.cmp(other.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

/// Builds an index from descriptors sharing one method and length.
pub fn build_index<I>(descriptors: I) -> Result<DescriptorIndex>
where
    I: IntoIterator<Item = Descriptor>,
{
    let mut iter = descriptors.into_iter();
    let first = iter.next().ok_or_else(|| Error::InsufficientData("no descriptors to index".into()))?;
    let (method, dim) = (first.method, first.dim());
    let mut index = DescriptorIndex { method, dim, ids: Vec::new(), values: Vec::new(), lookup: BTreeMap::new() };
    for d in core::iter::once(first).chain(iter) {
        if d.method != method {
            return Err(Error::InvalidData(format!(
                "descriptor `{}` uses {}, index holds {method}",
                d.image_id, d.method
            )));
        }
        check_dim(dim, d.dim())?;
        if index.lookup.contains_key(&d.image_id) {
            return Err(Error::DuplicateId(d.image_id));
        }
        index.lookup.insert(d.image_id.clone(), index.ids.len());
        index.ids.push(d.image_id);
        index.values.extend_from_slice(&d.values);
    }
    index.values.shrink_to_fit();
    index.ids.shrink_to_fit();
    Ok(index)
}
