//! Thread-pool implementation of [`ScanExecutor`].

use std::sync::Arc;

use ptycho_core::ScanExecutor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs the per-scan jobs on a rayon pool. Results come back in scan order,
/// so every reduction downstream is identical to a serial run.
#[derive(Clone, Default)]
pub struct RayonExecutor {
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for RayonExecutor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RayonExecutor")
            .field("threads", &self.threads())
            .finish()
    }
}

impl RayonExecutor {
    /// Uses rayon's global pool.
    pub fn global() -> Self {
        Self::default()
    }

    /// A dedicated pool of `threads` workers (0 lets rayon decide).
    pub fn with_threads(threads: usize) -> crate::Result<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self {
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn threads(&self) -> usize {
        match &self.pool {
            Some(p) => p.current_num_threads(),
            None => rayon::current_num_threads(),
        }
    }
}

impl ScanExecutor for RayonExecutor {
    fn map_scans<T, F>(&self, n_scans: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let job = || (0..n_scans).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(p) => p.install(job),
            None => job(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_scan_order() {
        let ex = RayonExecutor::with_threads(4).unwrap();
        assert_eq!(ex.threads(), 4);
        let out = ex.map_scans(1000, |j| j * j);
        assert!(out.iter().enumerate().all(|(j, &v)| v == j * j));
    }
}
