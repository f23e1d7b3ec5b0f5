use rayon::prelude::*;
use rayon::ThreadPool;

/// A worker pool for `threads > 1`; `None` means run inline.
pub fn make_pool(threads: usize) -> Option<ThreadPool> {
    if threads <= 1 {
        return None;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .ok()
}

/// Order-preserving map, on the pool when one is given.
pub fn ordered_map<I, O, F>(pool: Option<&ThreadPool>, items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    match pool {
        Some(p) if items.len() > 1 => p.install(|| items.par_iter().map(&f).collect()),
        _ => items.iter().map(f).collect(),
    }
}
