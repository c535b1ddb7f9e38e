use alloc::vec::Vec;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on. Order is preserved.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<I: Sync, T: Send, F: Fn(&I) -> T + Sync>(items: &[I], f: F) -> Vec<T> {
    use rayon::prelude::*;
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<I, T, F: Fn(&I) -> T>(items: &[I], f: F) -> Vec<T> {
    items.iter().map(f).collect()
}
