//! Order-preserving parallel maps.
//!
//! With the `parallel` feature (default) work is spread over the rayon
//! global pool; without it the same functions run sequentially. Results are
//! always returned in input order, so output never depends on scheduling.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f(i)` for every `i` in `range`, in order.
pub fn map_range<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

/// `f(item)` for every item, in order.
pub fn map_slice<A, T, F>(items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
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

/// Sizes the global worker pool. `None` keeps the default (all cores).
/// Returns the worker count in effect afterwards; always 1 without the
/// `parallel` feature.
pub fn configure_threads(threads: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads.filter(|&n| n > 0) {
            // Fails only if the pool was already built; keep the existing one.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        1
    }
}

pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
