//! Parallel/sequential dispatch for the data-parallel sweeps.
//!
//! With the `parallel` feature the mapped closures run on the rayon pool;
//! without it they run in a plain loop. Output order is the input order in
//! both cases, so results are bit-identical across thread counts. Reductions
//! are always performed sequentially over the collected vector for the same
//! reason.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
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

/// Sequential map with the same signature, kept unconditionally so the bench
/// suite can compare both code paths in a single build.
pub(crate) fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
