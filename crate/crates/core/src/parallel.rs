//! Order-preserving fan-out used by evaluation, corruption and batched training.
//!
//! `JGE_THREADS` caps the worker count; `0` (or `1`) forces the sequential
//! path. Results are always collected in index order, so the output is
//! identical whichever path runs.

use std::sync::OnceLock;

pub const THREADS_ENV: &str = "JGE_THREADS";

/// Worker count from `JGE_THREADS`, defaulting to the available parallelism.
pub fn worker_threads() -> usize {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()) {
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = worker_threads();
        (threads > 1)
            .then(|| rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok())
            .flatten()
    })
    .as_ref()
}

/// `(0..n).map(f).collect()`, possibly evaluated on several threads.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match pool() {
        Some(pool) => {
            use rayon::prelude::*;
            pool.install(|| (0..n).into_par_iter().map(&f).collect())
        }
        None => (0..n).map(f).collect(),
    }
}
