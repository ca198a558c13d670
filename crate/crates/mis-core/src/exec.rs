//! Execution shim: data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default), [`map_indexed`] fans out over the
//! rayon thread pool; without it, the same call compiles to a plain
//! sequential loop. Results are always collected in index order and callers
//! reduce them in that fixed order, so outputs are bit-identical across both
//! paths and across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Send + Sync) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Sequential variant, available regardless of features. The benchmark suite
/// compares this against [`map_indexed`] on the same workloads.
pub fn map_indexed_seq<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}
