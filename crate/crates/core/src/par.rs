//! Data-parallel map with a sequential fallback.
//!
//! All bulk sweeps in this crate funnel through [`par_map`], which uses a
//! rayon parallel iterator when the `parallel` feature is enabled and a
//! plain sequential loop otherwise. Results are collected **in input
//! order** in both modes, and reductions downstream are performed
//! sequentially over that ordered buffer, so numerical output is
//! bit-for-bit identical regardless of thread count or feature selection.

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Configure the global worker pool to `n` threads.
///
/// Call at most once, before any parallel work; later calls are ignored
/// (rayon's global pool can only be built once). A no-op in sequential
/// builds or when `n` is `None`.
pub fn configure_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let items: Vec<u64> = (0..10_000).collect();
        let out = par_map(&items, |&x| x * x);
        for (i, &v) in out.iter().enumerate() {
            assert_eq!(v, (i as u64) * (i as u64));
        }
    }

    #[test]
    fn ordered_reduction_is_deterministic() {
        let items: Vec<f64> = (0..5_000).map(|i| (i as f64).sin() * 1e-3).collect();
        let a: f64 = par_map(&items, |&x| x.exp().ln_1p()).iter().sum();
        let b: f64 = par_map(&items, |&x| x.exp().ln_1p()).iter().sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
