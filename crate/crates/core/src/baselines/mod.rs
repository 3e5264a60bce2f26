//! Classical projection-based reconstructions used as references.
//!
//! PIE, ePIE and rPIE sweep the scans one at a time and correct the object
//! (and optionally the probe) by the amplitude-projected residual of each
//! diffraction pattern. Difference Map works on all exit waves at once,
//! alternating an overlap projection with the amplitude projection.

mod dm;
mod pie;

pub use dm::run_difference_map;
pub use pie::run_pie_family;

use alloc::format;
use alloc::vec::Vec;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::ScanExecutor;
use crate::image::ComplexImage;
use crate::metrics::{fitness, nmse, Crop};
use crate::propagator::Propagator;
use crate::result::{IterationRecord, ReconstructionResult};
use crate::sim::PtychoDataset;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pie,
    EPie,
    RPie,
    DifferenceMap,
}

/// Settings of a baseline run.
///
/// `alpha` acts on the object update and `beta` on the probe update:
///
/// * PIE: `alpha` regularizes the weighted division, relative to `max|P|²`.
/// * ePIE: `alpha` and `beta` are the object and probe step sizes.
/// * rPIE: `alpha` and `beta` blend `|P|²` (`|O|²`) with its maximum in the
///   object (probe) denominator; `beta = 1` gives the ePIE probe rule.
/// * Difference Map: `beta` is the difference-map parameter (only 1 is
///   supported) and `alpha` is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub update_probe: bool,
    /// Starting probe; `None` takes the dataset's probe.
    pub probe_init: Option<ComplexImage>,
    /// Starting object; `None` draws it from `CN(0, I)` with `seed`.
    pub object_init: Option<ComplexImage>,
    /// NMSE evaluation window; defaults to the central half of the object.
    pub crop: Option<Crop>,
}

impl BaselineConfig {
    /// Customary parameters: PIE `α = 0.1`; ePIE `α = β = 1`;
    /// rPIE `α = 0.1, β = 1`; Difference Map `β = 1`.
    pub fn new(algorithm: Algorithm) -> Self {
        let (alpha, beta) = match algorithm {
            Algorithm::Pie => (0.1, 1.0),
            Algorithm::EPie => (1.0, 1.0),
            Algorithm::RPie => (0.1, 1.0),
            Algorithm::DifferenceMap => (1.0, 1.0),
        };
        BaselineConfig {
            algorithm,
            alpha,
            beta,
            iterations: 100,
            seed: 0,
            update_probe: false,
            probe_init: None,
            object_init: None,
            crop: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(Error::Config(format!(
                "parameters must be positive, got α = {}, β = {}",
                self.alpha, self.beta
            )));
        }
        if matches!(self.algorithm, Algorithm::RPie) && (self.alpha > 1.0 || self.beta > 1.0) {
            return Err(Error::Config("rPIE parameters must not exceed 1".into()));
        }
        if matches!(self.algorithm, Algorithm::DifferenceMap) && self.beta != 1.0 {
            return Err(Error::Config("Difference Map supports only β = 1".into()));
        }
        Ok(())
    }
}

/// Runs the configured baseline.
pub fn run<P: Propagator + ?Sized, E: ScanExecutor>(
    data: &PtychoDataset,
    cfg: &BaselineConfig,
    prop: &P,
    exec: &E,
) -> Result<ReconstructionResult> {
    match cfg.algorithm {
        Algorithm::DifferenceMap => run_difference_map(data, cfg, prop, exec),
        _ => run_pie_family(data, cfg, prop),
    }
}

/// `√I · e^{i∠Ψ}` per pixel; zero pixels take phase 0.
pub fn amplitude_project(psi: &[C64], intensity: &[f64], out: &mut [C64]) {
    for ((o, p), &i) in out.iter_mut().zip(psi).zip(intensity) {
        let amp = i.max(0.0).sqrt();
        let mag = p.norm();
        *o = if mag > 0.0 {
            p * (amp / mag)
        } else {
            C64::new(amp, 0.0)
        };
    }
}

/// Starting object (random `CN(0, I)` unless given) and probe.
pub(crate) fn initial_guess(
    data: &PtychoDataset,
    cfg: &BaselineConfig,
) -> Result<(ComplexImage, ComplexImage)> {
    cfg.validate()?;
    let geom = data.geometry();
    let probe = match (&cfg.probe_init, data.probe()) {
        (Some(p), _) | (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(Error::Config(
                "no probe: the dataset has none and no initial probe was given".into(),
            ))
        }
    };
    probe.check_shape(geom.window(), "probe")?;
    if let Some(o) = &cfg.object_init {
        o.check_shape(geom.object_shape(), "initial object")?;
        return Ok((o.clone(), probe));
    }
    let (h, w) = geom.object_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = core::f64::consts::FRAC_1_SQRT_2;
    let obj = ComplexImage::from_fn(h, w, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re * half, im * half)
    });
    Ok((obj, probe))
}

/// Per-iteration bookkeeping shared by the baselines.
pub(crate) struct Recorder<'a, P: ?Sized> {
    data: &'a PtychoDataset,
    prop: &'a P,
    crop: Crop,
    previous: Vec<C64>,
    pub trace: Vec<IterationRecord>,
}

impl<'a, P: Propagator + ?Sized> Recorder<'a, P> {
    pub fn new(
        data: &'a PtychoDataset,
        cfg: &BaselineConfig,
        prop: &'a P,
        obj: &ComplexImage,
    ) -> Self {
        let crop = cfg
            .crop
            .unwrap_or_else(|| Crop::central_half(data.geometry().object_shape()));
        Recorder {
            data,
            prop,
            crop,
            previous: obj.as_slice().to_vec(),
            trace: Vec::new(),
        }
    }

    pub fn record(&mut self, t: usize, obj: &ComplexImage, probe: &ComplexImage) -> Result<()> {
        if !obj.is_finite() || !probe.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                what: "non-finite object or probe".into(),
            });
        }
        let fit = fitness(self.data, obj, probe, self.prop)?;
        if !fit.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                what: "non-finite fitness".into(),
            });
        }
        let num: f64 = obj
            .as_slice()
            .iter()
            .zip(&self.previous)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = self.previous.iter().map(|z| z.norm_sqr()).sum();
        self.previous.copy_from_slice(obj.as_slice());
        let nmse_db = match self.data.truth() {
            Some(truth) => Some(nmse(truth, obj, self.crop)?.db),
            None => None,
        };
        let change = if den > 0.0 {
            (num / den).sqrt()
        } else {
            f64::INFINITY
        };
        self.trace.push(IterationRecord {
            iter: t,
            fitness: fit,
            nmse_db,
            change,
        });
        Ok(())
    }
}
