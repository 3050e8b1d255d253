//! Worker-pool plumbing for the data-parallel entry points.
//!
//! With the `parallel` feature (default) inner loops fan out over rayon;
//! without it they run as plain sequential loops producing bitwise-identical
//! results. `VORONOI_FDR_THREADS` caps the worker count.

/// Environment variable capping the rayon worker count.
pub const THREADS_ENV: &str = "VORONOI_FDR_THREADS";

/// Run `f` inside a worker pool of `threads` workers (`None` = env var or
/// rayon default). Without the `parallel` feature this just calls `f`.
#[cfg(feature = "parallel")]
pub fn install<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    let threads = threads.or_else(env_threads);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn install<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

#[cfg(feature = "parallel")]
fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

/// `(0..n).map(f)` collected in index order, in parallel when enabled.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
