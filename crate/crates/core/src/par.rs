//! Chunked sample loops, parallel when the `parallel` feature is on.

/// Evaluates `f` on `0..chunks` and returns the results in chunk order.
pub fn map_ordered<T, F>(chunks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(f).collect()
    }
}

/// Evaluates `f` on `0..chunks` and merges the results in whatever order the
/// scheduler produces them.
pub fn map_reduce<T, F, R>(chunks: usize, f: F, identity: impl Fn() -> T + Sync + Send, reduce: R) -> T
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(f).reduce(identity, reduce)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(f).fold(identity(), reduce)
    }
}

/// Configures the global worker pool. Only the first call has an effect.
pub fn set_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}
