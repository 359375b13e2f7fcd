//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature (the default) these fan work out over the
//! rayon pool; without it they run on the calling thread. Results are
//! collected in input order either way, so every caller observes the same
//! output regardless of mode or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving input order.
pub fn map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Fallible variant of [`map_ordered`]; the first error (by input order in
/// sequential mode, by whichever task reports in parallel mode) aborts the
/// map. Callers treat any error as fatal, so which one surfaces is
/// immaterial.
pub fn try_map_ordered<T, U, E, F>(items: Vec<T>, f: F) -> Result<Vec<U>, E>
where
    T: Send,
    U: Send,
    E: Send,
    F: Fn(T) -> Result<U, E> + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// True when this build fans work out over a thread pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Caps the worker pool at `jobs` threads (0 keeps the default). Call once,
/// before any parallel work; later calls fail. A no-op in sequential builds.
/// Results never depend on the worker count, only throughput does.
#[cfg(feature = "parallel")]
pub fn configure_workers(jobs: usize) -> Result<(), String> {
    if jobs == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Caps the worker pool at `jobs` threads (0 keeps the default). Call once,
/// before any parallel work; later calls fail. A no-op in sequential builds.
/// Results never depend on the worker count, only throughput does.
#[cfg(not(feature = "parallel"))]
pub fn configure_workers(_jobs: usize) -> Result<(), String> {
    Ok(())
}
