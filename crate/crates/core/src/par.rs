//! Chunked map with results returned in chunk order.
//!
//! Chunk boundaries depend only on the input length and chunk size, never on
//! the worker count, so reductions over the returned partials are
//! reproducible with or without the `parallel` feature.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk_size: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_chunks(chunk_size.max(1)).enumerate().map(|(i, c)| f(i * chunk_size.max(1), c)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk_size: usize, f: F) -> Vec<R>
where
    F: Fn(usize, &[T]) -> R,
{
    items.chunks(chunk_size.max(1)).enumerate().map(|(i, c)| f(i * chunk_size.max(1), c)).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}
