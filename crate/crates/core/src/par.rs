//! Order-preserving data-parallel map. With the `parallel` feature off every
//! call runs sequentially on the caller's thread; results are identical
//! either way because each slot depends only on its index.

pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

/// Whether this build fans work out over a thread pool.
pub const PARALLEL: bool = cfg!(feature = "parallel");
