//! Data-parallel dispatch.
//!
//! With the `parallel` feature the closures run on the rayon pool; without
//! it the same closures run sequentially. Both builds produce the output
//! vector in index order, and every reduction in the crate consumes that
//! vector in index order, so results are bitwise identical across thread
//! counts and across the two builds.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}
