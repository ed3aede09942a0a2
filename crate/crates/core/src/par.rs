//! Data-parallel helpers.
//!
//! With the `parallel` feature the closures run on the rayon pool when the
//! caller asks for it; otherwise, or when `parallel` is false, they run in
//! index order on the calling thread. Results are always returned in index
//! order, so both paths produce identical output.

/// Map `f` over `0..n` and collect in index order.
pub fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]. On failure the error with the lowest
/// index is returned.
pub fn try_map_indexed<T, E, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Send + Sync,
{
    map_indexed(n, parallel, f).into_iter().collect()
}

/// Whether this build can run anything in parallel.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}
