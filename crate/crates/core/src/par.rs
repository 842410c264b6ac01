//! Site-parallel loops over lattice arrays.
//!
//! With the `parallel` feature the [`Execution::Parallel`] path runs on the
//! rayon global pool; without it both variants run the same sequential loop.
//! Every site is written exactly once from read-only inputs, so the two paths
//! produce bitwise-identical arrays.

use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Minimum number of sites handed to one rayon task.
pub const MIN_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this build can actually run work on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Appends `f(j)` for every `j` in `sites`, in order.
pub fn extend_sites<F>(exec: Execution, out: &mut Vec<f64>, sites: Range<usize>, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && sites.len() >= 2 * MIN_CHUNK {
        use rayon::prelude::*;
        out.par_extend(sites.into_par_iter().with_min_len(MIN_CHUNK).map(f));
        return;
    }
    let _ = exec;
    out.extend(sites.map(f));
}

/// `[f(0), .., f(n - 1)]`.
pub fn collect_sites<F>(exec: Execution, n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let mut out = Vec::with_capacity(n);
    extend_sites(exec, &mut out, 0..n, f);
    out
}

/// Runs two independent closures, concurrently when parallelism is available.
pub fn join<A, B, RA, RB>(exec: Execution, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::join(a, b);
    }
    let _ = exec;
    (a(), b())
}

/// `items.map(f).collect()`, parallel when available; preserves order.
pub fn map_collect<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
