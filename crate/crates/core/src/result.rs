use alloc::vec::Vec;

use crate::image::{ComplexImage, RealImage};

/// Metrics recorded after one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    pub fitness: f64,
    /// Phase-aligned NMSE in dB, when the dataset carries a ground truth.
    pub nmse_db: Option<f64>,
    /// Relative change of the object estimate over the iteration.
    pub change: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub object: ComplexImage,
    /// Per-pixel posterior precision `Γ̂`; its inverse is the uncertainty map.
    /// Only the message-passing engine produces one.
    pub precision: Option<RealImage>,
    pub probe: ComplexImage,
    pub trace: Vec<IterationRecord>,
}
