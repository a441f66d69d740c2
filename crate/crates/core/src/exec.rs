//! Data-parallel helpers. Sampling loops are embarrassingly parallel over
//! seed indices; results are collected in index order so output never
//! depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is
/// enabled and `parallel` is true. The result vector is always in index
/// order.
pub fn map_indexed<T, F>(n: u64, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(1000, true, |k| k * k);
        let b = map_indexed(1000, false, |k| k * k);
        assert_eq!(a, b);
    }
}
