//! Data-parallel map helpers.
//!
//! Sweeps across grids, samples, and parameter sets are embarrassingly
//! parallel. With the `parallel` feature (default) they run on rayon;
//! without it the same entry points run sequentially. Results are always
//! collected in index order, so the output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over an index range, parallel when the feature is enabled.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_range_seq(n, f)
    }
}

/// Sequential variant, always available (benchmarks compare against it).
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Map over a slice, parallel when the feature is enabled.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Cap the global worker count. Returns false if a pool was already built.
#[cfg(feature = "parallel")]
pub fn set_workers(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn set_workers(_n: usize) -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| (i as f64 * 0.37).sin() / (1.0 + i as f64);
        let a = map_range(1000, f);
        let b = map_range_seq(1000, f);
        assert_eq!(a, b);
    }
}
