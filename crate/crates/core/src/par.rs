//! Order-preserving data parallelism with a serial fallback.
//!
//! Every parallel call site in the crate goes through here, so building
//! without the `parallel` feature (or passing `parallel = false`) yields the
//! exact same results computed on one thread.

/// Maps `f` over `items`, keeping input order in the output.
pub fn map_collect<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Whether the crate was built with thread parallelism.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}
