use rayon::prelude::*;
use swcluster_core::exec::Executor;

/// Runs trials on a rayon pool. Results are collected in trial order, so
/// the thread count never changes them.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `threads = 0` uses rayon's default (one per core).
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        Ok(Pool { pool })
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..count).into_par_iter().map(f).collect())
    }

    fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        self.pool.install(|| {
            items
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, item)| f(i, item))
        })
    }
}
