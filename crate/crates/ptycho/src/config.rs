//! Run configuration: the JSON config file, its defaults and the mapping onto
//! the engine and baseline settings.

use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use ptycho_core::baselines::{self, Algorithm, BaselineConfig};
use ptycho_core::denoise::Prior;
use ptycho_core::engine::{self, EngineConfig, Scheme};
use ptycho_core::{ComplexImage, PtychoDataset, ReconstructionResult, ScanExecutor};
use serde::{Deserialize, Serialize};

use crate::{cimg, Error, FftPropagator, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    PtychoEp,
    Pie,
    Epie,
    Rpie,
    Dm,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::PtychoEp => "ptycho-ep",
            Algo::Pie => "pie",
            Algo::Epie => "epie",
            Algo::Rpie => "rpie",
            Algo::Dm => "dm",
        }
    }

    fn baseline(self) -> Option<Algorithm> {
        match self {
            Algo::PtychoEp => None,
            Algo::Pie => Some(Algorithm::Pie),
            Algo::Epie => Some(Algorithm::EPie),
            Algo::Rpie => Some(Algorithm::RPie),
            Algo::Dm => Some(Algorithm::DifferenceMap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Gaussian,
    BernoulliGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Sequential,
    Parallel,
}

/// Every setting of a reconstruction run. Unset optional values fall back to
/// the algorithm's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algo: Algo,
    pub prior: PriorKind,
    /// Fraction of non-zero pixels for the Bernoulli-Gaussian prior.
    pub rho: f64,
    /// Damping; defaults to 0.9 (Gaussian prior) or 0.95 (Bernoulli-Gaussian).
    pub mu: Option<f64>,
    pub iters: usize,
    pub em_updates: usize,
    pub em_warmup: usize,
    pub scheme: SchemeKind,
    /// Noise level assumed by the engine; defaults to the dataset's.
    pub sigma: Option<f64>,
    pub precision_floor: f64,
    pub init_psi_precision: f64,
    pub tolerance: Option<f64>,
    pub record_every: usize,
    /// Baseline object parameter; defaults per algorithm.
    pub alpha: Option<f64>,
    /// Baseline probe parameter; defaults per algorithm.
    pub beta: Option<f64>,
    /// Reconstruct the probe too, starting from `probe_init`.
    pub blind: bool,
    pub probe_init: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EngineConfig::default();
        RunConfig {
            algo: Algo::PtychoEp,
            prior: PriorKind::Gaussian,
            rho: 1.0,
            mu: None,
            iters: e.max_iter,
            em_updates: e.em_updates,
            em_warmup: e.em_warmup,
            scheme: SchemeKind::Sequential,
            sigma: None,
            precision_floor: e.precision_floor,
            init_psi_precision: e.init_psi_precision,
            tolerance: None,
            record_every: 1,
            alpha: None,
            beta: None,
            blind: false,
            probe_init: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn prior(&self) -> Prior {
        match self.prior {
            PriorKind::Gaussian => Prior::Gaussian,
            PriorKind::BernoulliGaussian => Prior::BernoulliGaussian { rho: self.rho },
        }
    }

    /// The initial probe of a blind run.
    pub fn load_probe_init(&self) -> Result<Option<ComplexImage>> {
        match (&self.probe_init, self.blind) {
            (Some(p), true) => Ok(Some(cimg::read_complex(p)?)),
            (None, true) => Err(Error::Config(
                "blind mode needs an initial probe (--probe-init)".into(),
            )),
            (Some(_), false) => Err(Error::Config(
                "an initial probe is only used in blind mode (--blind)".into(),
            )),
            (None, false) => Ok(None),
        }
    }

    pub fn engine_config(&self, probe_init: Option<ComplexImage>) -> EngineConfig {
        let mut c = EngineConfig::new(self.prior());
        if let Some(mu) = self.mu {
            c.mu = mu;
        }
        c.max_iter = self.iters;
        c.em_updates = self.em_updates;
        c.em_warmup = self.em_warmup;
        c.scheme = match self.scheme {
            SchemeKind::Sequential => Scheme::Sequential,
            SchemeKind::Parallel => Scheme::Parallel,
        };
        c.sigma = self.sigma;
        c.precision_floor = self.precision_floor;
        c.init_psi_precision = self.init_psi_precision;
        c.seed = self.seed;
        c.probe_init = probe_init;
        c.tolerance = self.tolerance;
        c.record_every = self.record_every;
        c
    }

    pub fn baseline_config(&self, probe_init: Option<ComplexImage>) -> Option<BaselineConfig> {
        let mut c = BaselineConfig::new(self.algo.baseline()?);
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        c.iterations = self.iters;
        c.seed = self.seed;
        c.update_probe = probe_init.is_some();
        c.probe_init = probe_init;
        Some(c)
    }
}

/// A finished run with the wall-clock time (ms since start) at each recorded
/// iteration.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: ReconstructionResult,
    pub wall_ms: Vec<(usize, f64)>,
}

/// Runs the configured algorithm on `data`, reading the initial probe of a
/// blind run from `cfg.probe_init`.
pub fn run<E: ScanExecutor>(data: &PtychoDataset, cfg: &RunConfig, exec: &E) -> Result<Outcome> {
    run_from(data, cfg, cfg.load_probe_init()?, exec)
}

/// Like [`run`], with the initial probe given in memory; `Some` selects blind
/// mode regardless of `cfg.blind`.
pub fn run_from<E: ScanExecutor>(
    data: &PtychoDataset,
    cfg: &RunConfig,
    probe_init: Option<ComplexImage>,
    exec: &E,
) -> Result<Outcome> {
    let prop = FftPropagator::new(data.geometry().window())?;
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    match cfg.baseline_config(probe_init.clone()) {
        Some(b) => {
            let result = baselines::run(data, &b, &prop, exec)?;
            let wall = ms(start);
            let wall_ms = result
                .trace
                .last()
                .map(|r| vec![(r.iter, wall)])
                .unwrap_or_default();
            Ok(Outcome { result, wall_ms })
        }
        None => {
            let e = cfg.engine_config(probe_init);
            let mut wall_ms = Vec::new();
            let result = engine::run_with(data, &e, &prop, exec, |r, _| {
                wall_ms.push((r.iter, ms(start)))
            })?;
            Ok(Outcome { result, wall_ms })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_names() {
        let c: RunConfig = serde_json::from_str(r#"{"algo": "epie", "iters": 7}"#).unwrap();
        assert_eq!(c.algo, Algo::Epie);
        assert_eq!(c.iters, 7);
        assert_eq!(c.prior, PriorKind::Gaussian);
        assert!(serde_json::from_str::<RunConfig>(r#"{"iterz": 7}"#).is_err());
        let b = c.baseline_config(None).unwrap();
        assert_eq!((b.alpha, b.beta), (1.0, 1.0));
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert!(text.contains("\"ptycho-ep\""));
    }

    #[test]
    fn blind_needs_initial_probe() {
        let c = RunConfig {
            blind: true,
            ..RunConfig::default()
        };
        assert!(matches!(c.load_probe_init(), Err(Error::Config(_))));
        assert_eq!(c.load_probe_init().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn engine_defaults_follow_prior() {
        let mut c = RunConfig::default();
        assert_eq!(c.engine_config(None).mu, 0.9);
        c.prior = PriorKind::BernoulliGaussian;
        c.rho = 0.4;
        assert_eq!(c.engine_config(None).mu, 0.95);
        c.mu = Some(0.5);
        assert_eq!(c.engine_config(None).mu, 0.5);
    }
}
