//! Ptychographic phase retrieval by expectation propagation.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//! the windowed forward model, the message-passing reconstruction engine with
//! blind probe retrieval, the classical projection baselines, dataset
//! synthesis and the evaluation metrics. File formats, the FFT-backed
//! propagator, threading and the command line live in the `ptycho` crate.
//!
//! Scan indices are zero-based throughout.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod denoise;
pub mod engine;
mod error;
pub mod exec;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod propagator;
pub mod result;
pub mod sim;

pub use error::{Error, Result};
pub use exec::{ScanExecutor, Serial};
pub use geometry::{gather, scatter_add, ScanGeometry};
pub use image::{ComplexImage, RealImage};
pub use num_complex::Complex;
pub use propagator::{Dft2d, Propagator};
pub use result::{IterationRecord, ReconstructionResult};
pub use sim::PtychoDataset;

/// Complex scalar used for every field in the crate.
pub type C64 = Complex<f64>;
