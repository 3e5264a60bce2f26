//! Scan-level execution strategy.
//!
//! The parallel scheme and the Difference Map baseline compute one result per
//! scan from frozen inputs. The [`ScanExecutor`] decides how those per-scan
//! jobs run; the results are always returned in scan order, so the reductions
//! that follow are independent of the executor.

use alloc::vec::Vec;

pub trait ScanExecutor: Sync {
    fn map_scans<T, F>(&self, n_scans: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every scan on the calling thread, in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl ScanExecutor for Serial {
    fn map_scans<T, F>(&self, n_scans: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n_scans).map(f).collect()
    }
}
