//! File formats, an FFT propagator, a thread-pool scan executor, the command
//! line front end and the benchmark harness for [`ptycho_core`].
//!
//! On-disk layout:
//!
//! * `.cimg` rasters ([`cimg`]), bit exact for both complex and real images.
//! * Dataset directories ([`dataset`]): `manifest.json`, `probe.cimg`,
//!   optional `truth.cimg` and one `intensity_NNNN.cimg` per scan. The CLI
//!   adds `probe_init.cimg`, a starting probe for blind runs.
//! * Result directories ([`output`]): `o_hat.cimg`, `gamma_hat.cimg`,
//!   `probe.cimg`, `trace.csv`, `timing.csv`, `summary.json`, the run manifest
//!   and optional PNG previews.

pub mod bench;
pub mod cimg;
pub mod config;
pub mod dataset;
mod error;
pub mod exec;
pub mod fft;
pub mod output;
pub mod preview;
pub mod simulate;

pub use error::{Error, Result};
pub use exec::RayonExecutor;
pub use fft::FftPropagator;
