//! Thin switch between rayon and sequential iteration.
//!
//! With the `parallel` feature every helper fans out over rayon; without it
//! the same closures run in a plain loop. Reductions go through
//! [`fixed_sum`], which sums fixed-size chunks and then the chunk partials in
//! index order, so the result is bitwise identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const SUM_CHUNK: usize = 4096;

/// Fill `out[i] = f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

/// Collect `f(i)` for `i in 0..len`.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..len).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    (0..len).map(f).collect()
}

/// Run `f(chunk_index, chunk)` on consecutive chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Deterministic sum of `f(i)` over `0..len`.
pub fn fixed_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial = map_range(chunks, |c| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Deterministic maximum of `f(i)` over `0..len` (`-inf` when empty).
pub fn fixed_max<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(SUM_CHUNK);
    let partial = map_range(chunks, |c| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(len);
        (lo..hi).map(&f).fold(f64::NEG_INFINITY, f64::max)
    });
    partial.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
