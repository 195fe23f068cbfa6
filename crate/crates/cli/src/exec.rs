use rayon::prelude::*;

use gamma_bsde_core::Executor;

/// Environment variable overriding `--threads`.
pub const THREADS_ENV: &str = "GB_THREADS";

/// Runs per-slice jobs on a dedicated rayon pool. Results come back in index
/// order, so outputs do not depend on the thread count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads = 0` uses every available core.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if n < 2 {
            return (0..n).map(f).collect();
        }
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Thread count from the environment, falling back to the flag.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}
