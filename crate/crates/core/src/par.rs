//! Site-parallel loops with partition-independent results.
//!
//! Sites are cut into fixed-size chunks regardless of the worker count, and
//! reductions combine per-chunk partials in a fixed pairwise order.

use std::marker::PhantomData;
use std::ops::Range;

use rayon::prelude::*;

/// Sites per work item. Fixed so chunk partial sums never depend on threads.
pub const CHUNK: usize = 512;

fn chunks(n: usize) -> impl IndexedParallelIterator<Item = Range<usize>> {
    let count = n.div_ceil(CHUNK);
    (0..count).into_par_iter().map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n))
}

/// Runs `f` on every chunk of `0..n`.
pub fn for_each_chunk<F>(n: usize, f: F)
where
    F: Fn(Range<usize>) + Sync + Send,
{
    chunks(n).for_each(f);
}

/// `f` on every chunk, results in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    chunks(n).map(f).collect()
}

/// Pairwise sum in a fixed tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Σ over chunks of `f(range)`, combined with [`pairwise_sum`].
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = chunks(n).map(f).collect();
    pairwise_sum(&parts)
}

/// Several sums at once; `f` adds into the `k`-vector it is given.
pub fn sum_many<F>(n: usize, k: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    let parts: Vec<Vec<f64>> = chunks(n)
        .map(|r| {
            let mut acc = vec![0.0; k];
            f(r, &mut acc);
            acc
        })
        .collect();
    (0..k)
        .map(|j| {
            let col: Vec<f64> = parts.iter().map(|p| p[j]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

/// Componentwise maxima over chunks.
pub fn max_many<F>(n: usize, k: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64]) + Sync + Send,
{
    chunks(n)
        .map(|r| {
            let mut acc = vec![0.0; k];
            f(r, &mut acc);
            acc
        })
        .reduce(|| vec![0.0; k], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

/// Shared write access to a slice for kernels whose workers write disjoint
/// indices.
pub(crate) struct DisjointSlice<'a, T> {
    ptr: *mut T,
    len: usize,
    _marker: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for DisjointSlice<'_, T> {}
unsafe impl<T: Send> Sync for DisjointSlice<'_, T> {}

impl<'a, T> DisjointSlice<'a, T> {
    pub fn new(s: &'a mut [T]) -> Self {
        Self { ptr: s.as_mut_ptr(), len: s.len(), _marker: PhantomData }
    }

    /// # Safety
    /// No two concurrent callers may pass the same `i`.
    #[inline]
    pub unsafe fn write(&self, i: usize, v: T) {
        assert!(i < self.len);
        unsafe { self.ptr.add(i).write(v) }
    }
}

/// Thread pool of `threads` workers (0 means the rayon default).
pub fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool construction")
}

/// Worker count from an explicit request, then `MKG_THREADS`, then 0.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    requested.or_else(|| std::env::var("MKG_THREADS").ok().and_then(|v| v.trim().parse().ok())).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_do_not_depend_on_pool_size() {
        let n = 10_007;
        let f = |r: Range<usize>| r.map(|i| ((i as f64) * 0.37).sin() * 1e-3).sum::<f64>();
        let a = pool(1).install(|| sum(n, f));
        let b = pool(3).install(|| sum(n, f));
        let c = pool(8).install(|| sum(n, f));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn pairwise_small() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }
}
