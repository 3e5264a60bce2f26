//! Expectation-propagation reconstruction engine.
//!
//! The object posterior is approximated by a Gaussian belief `(Ô, Γ̂)` built
//! from one prior-side message and one data-side message per scan. Each outer
//! iteration refreshes the data messages through the output denoiser, either
//! one scan at a time with an incremental belief refresh (sequential scheme)
//! or all at once from a frozen belief (parallel scheme), then refreshes the
//! prior message and, in blind mode, re-estimates the probe and the per-scan
//! precisions by EM.

mod em;
mod schedule;
mod state;
mod update;

pub use em::em_update;
pub use schedule::{iterate_parallel, iterate_sequential, run, run_with, sequential_step};
pub use state::MessageState;
pub use update::{
    damp, damp_precision, message_update_by_data, message_update_by_prior, DataMessage,
};

use crate::denoise::{OutputNoise, Prior};
use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::metrics::Crop;
use crate::sim::PtychoDataset;
// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

/// Order in which the data messages are refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Scan by scan, refreshing the belief after each one.
    #[default]
    Sequential,
    /// All scans from the same belief; the per-scan work may run concurrently.
    Parallel,
}

/// Reconstruction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Damping constant in `(0, 1]`; 1 disables damping.
    pub mu: f64,
    /// Number of outer iterations `T`.
    pub max_iter: usize,
    /// EM sweeps `τ` per outer iteration in blind mode.
    pub em_updates: usize,
    pub scheme: Scheme,
    pub prior: Prior,
    /// Amplitude-noise level assumed by the output denoiser. `None` takes the
    /// dataset's value, or a small multiple of the RMS amplitude if that is zero.
    pub sigma: Option<f64>,
    /// Lower bound applied to every precision produced by a subtraction.
    pub precision_floor: f64,
    /// Initial data-message precision.
    pub init_psi_precision: f64,
    pub seed: u64,
    /// Initial probe. Setting it selects blind mode, where the probe is
    /// re-estimated; otherwise the dataset's probe is used and kept fixed.
    pub probe_init: Option<ComplexImage>,
    /// Outer iterations before the first EM update.
    pub em_warmup: usize,
    /// Stop early once the relative object change drops below this value.
    pub tolerance: Option<f64>,
    /// Record metrics every this many iterations (the last one is always recorded).
    pub record_every: usize,
    /// NMSE evaluation window; defaults to the central half of the object.
    pub crop: Option<Crop>,
}

/// Relative noise level used when the data are noiseless.
pub const NOISELESS_SIGMA: f64 = 1e-3;

impl EngineConfig {
    /// Defaults for the given prior: `μ = 0.9` for the Gaussian prior and
    /// `μ = 0.95` for the Bernoulli-Gaussian one.
    pub fn new(prior: Prior) -> Self {
        let mu = match prior {
            Prior::Gaussian => 0.9,
            Prior::BernoulliGaussian { .. } => 0.95,
        };
        EngineConfig {
            mu,
            max_iter: 100,
            em_updates: 2,
            scheme: Scheme::Sequential,
            prior,
            sigma: None,
            precision_floor: 1e-8,
            init_psi_precision: 1e-2,
            seed: 0,
            probe_init: None,
            em_warmup: 2,
            tolerance: None,
            record_every: 1,
            crop: None,
        }
    }

    pub fn blind(&self) -> bool {
        self.probe_init.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "damping must lie in (0, 1], got {}",
                self.mu
            )));
        }
        self.prior
            .validate()
            .map_err(|e| Error::Config(alloc::format!("{e}")))?;
        if !(self.precision_floor > 0.0 && self.precision_floor.is_finite()) {
            return Err(Error::Config("precision floor must be positive".into()));
        }
        if !(self.init_psi_precision >= self.precision_floor && self.init_psi_precision.is_finite())
        {
            return Err(Error::Config(
                "initial precision must be finite and at least the floor".into(),
            ));
        }
        if let Some(s) = self.sigma {
            OutputNoise::new(s).map_err(|e| Error::Config(alloc::format!("{e}")))?;
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if let Some(p) = &self.probe_init {
            if !p.is_finite() {
                return Err(Error::Config("initial probe has non-finite values".into()));
            }
        }
        Ok(())
    }

    /// Noise level handed to the output denoiser for `data`.
    pub fn noise(&self, data: &PtychoDataset) -> Result<OutputNoise> {
        let sigma = match self.sigma {
            Some(s) => s,
            None if data.sigma() > 0.0 => data.sigma(),
            None => {
                let g = data.geometry();
                let rms = (data.total_intensity() / (g.n_scans() * g.window_len()) as f64).sqrt();
                NOISELESS_SIGMA * if rms > 0.0 { rms } else { 1.0 }
            }
        };
        OutputNoise::new(sigma).map_err(|e| Error::Config(alloc::format!("{e}")))
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::new(Prior::Gaussian)
    }
}
