//! Data-parallel helpers with a sequential fallback.
//!
//! Order-preserving maps only: every helper returns results in input order so
//! downstream reductions are deterministic regardless of thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum items per rayon task; fine-grained maps are otherwise dominated
/// by task dispatch.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 64;

/// Maps `f` over `0..n`, collecting in index order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .with_min_len(MIN_CHUNK)
            .map(f)
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_range`]; kept unconditionally for benchmarks and
/// equivalence tests.
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, collecting in input order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().with_min_len(MIN_CHUNK).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map_slice`].
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_maps_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x * x + 1;
        assert_eq!(map_slice(&xs, f), map_slice_seq(&xs, f));
        let g = |i: usize| (i as f64).sqrt();
        assert_eq!(map_range(257, g), map_range_seq(257, g));
    }
}
