//! Benchmark harness: sweeps sampling ratios or raster overlaps over several
//! algorithms and trials and reports the median metric per cell.
//!
//! Every cell (condition, algorithm, trial) is an isolated simulation plus
//! reconstruction; cells run on a bounded thread pool.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ptycho_core::{metrics, sim, Serial};
use rayon::prelude::*;
use rayon::ThreadPoolBuilder;
use serde::{Deserialize, Serialize};

use crate::config::{self, Algo, RunConfig};
use crate::dataset::{create_dir, write_json};
use crate::output::trace_csv;
use crate::simulate::{self, ObjectSpec, ProbeSpec, ScanSpec, SimSpec};
use crate::{Error, FftPropagator, Result};

/// Sampling ratios of the known-probe study.
pub const KNOWN_PROBE_ALPHAS: [f64; 7] = [4.0, 3.0, 2.5, 2.4, 2.3, 2.2, 2.1];
/// Overlap ratios of the blind study.
pub const BLIND_OVERLAPS: [f64; 3] = [0.6, 0.5, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Study {
    /// Fermat spirals tuned to each sampling ratio.
    SamplingRatio { alphas: Vec<f64> },
    /// Jittered rasters whose step gives each overlap ratio for the probe.
    Overlap { overlaps: Vec<f64>, max_dev: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub study: Study,
    pub object_size: usize,
    pub probe: ProbeSpec,
    pub keep_fraction: Option<f64>,
    pub snr_db: Option<f64>,
    pub algos: Vec<Algo>,
    pub trials: usize,
    /// Trial `t` uses seed `seed + t` for the data and the initial object.
    pub seed: u64,
    /// Settings shared by all cells; `algo` and `seed` are overridden.
    pub run: RunConfig,
    /// Reconstruct the probe from [`simulate::blind_start`].
    pub blind: bool,
}

/// One (condition, algorithm, trial) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Sampling ratio or overlap ratio.
    pub condition: f64,
    /// Realized sampling ratio or overlap ratio.
    pub realized: f64,
    pub algo: Algo,
    pub trial: usize,
    pub nmse_db: Option<f64>,
    pub fitness: f64,
    pub noise_floor: f64,
    pub wall_ms: f64,
    /// `(iter, fitness, nmse_db)` per recorded iteration.
    pub trace: Vec<(usize, f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<Cell>,
}

/// Median of a non-empty sample (mean of the two middle values when even).
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

impl BenchSpec {
    pub fn conditions(&self) -> Vec<f64> {
        match &self.study {
            Study::SamplingRatio { alphas } => alphas.clone(),
            Study::Overlap { overlaps, .. } => overlaps.clone(),
        }
    }

    /// Simulation spec of one condition and trial.
    pub fn sim_spec(&self, condition: f64, trial: usize) -> Result<SimSpec> {
        let scan = match &self.study {
            Study::SamplingRatio { .. } => ScanSpec::Fermat {
                target_alpha: Some(condition),
                n_scans: None,
                radius_scale: None,
                clamp: false,
            },
            Study::Overlap { max_dev, .. } => {
                let d = sim::probe_support_diameter(&simulate::build_probe(&self.probe)?)?;
                let step = ((1.0 - condition) * d as f64).round() as usize;
                ScanSpec::Raster {
                    step: step.max(1),
                    grid: None,
                    max_dev: *max_dev,
                }
            }
        };
        Ok(SimSpec {
            object: ObjectSpec::Synthetic {
                height: self.object_size,
                width: self.object_size,
            },
            keep_fraction: self.keep_fraction,
            probe: self.probe.clone(),
            scan,
            snr_db: self.snr_db,
            seed: self.seed + trial as u64,
        })
    }

    /// Runs one cell.
    pub fn run_cell(&self, condition: f64, algo: Algo, trial: usize) -> Result<Cell> {
        let spec = self.sim_spec(condition, trial)?;
        let simulated = simulate::simulate(&spec)?;
        let data = &simulated.data;
        let cfg = RunConfig {
            algo,
            seed: spec.seed,
            blind: self.blind,
            probe_init: None,
            ..self.run.clone()
        };
        let probe_init = if self.blind {
            Some(simulate::blind_start(&self.probe)?)
        } else {
            None
        };
        let out = config::run_from(data, &cfg, probe_init, &Serial)?;
        let res = &out.result;
        let prop = FftPropagator::new(data.geometry().window())?;
        let fitness = metrics::fitness(data, &res.object, &res.probe, &prop)?;
        Ok(Cell {
            condition,
            realized: simulated.overlap.unwrap_or(simulated.sampling_ratio),
            algo,
            trial,
            nmse_db: res.trace.last().and_then(|r| r.nmse_db),
            fitness,
            noise_floor: simulated.noise_floor,
            wall_ms: out.wall_ms.last().map_or(0.0, |w| w.1),
            trace: res
                .trace
                .iter()
                .map(|r| (r.iter, r.fitness, r.nmse_db))
                .collect(),
        })
    }

    /// Runs every cell on `jobs` threads (0 lets rayon decide). Cells come
    /// back in (condition, algorithm, trial) order.
    pub fn run(&self, jobs: usize) -> Result<BenchReport> {
        if self.trials == 0 || self.algos.is_empty() {
            return Err(Error::Config(
                "a benchmark needs trials and algorithms".into(),
            ));
        }
        let mut keys = Vec::new();
        for c in self.conditions() {
            for &a in &self.algos {
                for t in 0..self.trials {
                    keys.push((c, a, t));
                }
            }
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        let cells = pool.install(|| {
            keys.par_iter()
                .map(|&(c, a, t)| self.run_cell(c, a, t))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(BenchReport { cells })
    }
}

impl BenchReport {
    fn values(&self, condition: f64, algo: Algo, f: impl Fn(&Cell) -> Option<f64>) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.condition == condition && c.algo == algo)
            .filter_map(f)
            .collect()
    }

    pub fn median_nmse_db(&self, condition: f64, algo: Algo) -> Option<f64> {
        median(&self.values(condition, algo, |c| c.nmse_db))
    }

    pub fn median_fitness(&self, condition: f64, algo: Algo) -> Option<f64> {
        median(&self.values(condition, algo, |c| Some(c.fitness)))
    }

    /// Median over trials of the fitness recorded at iteration `iter`.
    pub fn median_fitness_at(&self, condition: f64, algo: Algo, iter: usize) -> Option<f64> {
        median(&self.values(condition, algo, |c| {
            c.trace.iter().find(|r| r.0 == iter).map(|r| r.1)
        }))
    }

    fn conditions(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.condition) {
                out.push(c.condition);
            }
        }
        out
    }

    fn algos(&self) -> Vec<Algo> {
        let mut out = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.algo) {
                out.push(c.algo);
            }
        }
        out
    }

    /// One row per condition, one column per algorithm, holding the median
    /// of `metric` over the trials.
    pub fn table(&self, metric: impl Fn(&Self, f64, Algo) -> Option<f64>) -> String {
        let algos = self.algos();
        let mut s = String::from("condition");
        for a in &algos {
            write!(s, ",{}", a.name()).unwrap();
        }
        s.push('\n');
        for c in self.conditions() {
            write!(s, "{c}").unwrap();
            for &a in &algos {
                let v = metric(self, c, a)
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_default();
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Writes `cells.csv`, `median_nmse_db.csv`, `median_fitness.csv`,
    /// `bench_spec.json` and one trace per cell under `traces/`.
    pub fn write(&self, dir: impl AsRef<Path>, spec: &BenchSpec) -> Result<()> {
        let dir = dir.as_ref();
        let traces = dir.join("traces");
        create_dir(&traces)?;
        let put = |p: &Path, text: &str| fs::write(p, text).map_err(|e| Error::io(p, e));
        let mut cells =
            String::from("condition,realized,algo,trial,nmse_db,fitness,noise_floor,wall_ms\n");
        for c in &self.cells {
            let nmse = c.nmse_db.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                cells,
                "{},{},{},{},{},{},{},{:.3}",
                c.condition,
                c.realized,
                c.algo.name(),
                c.trial,
                nmse,
                c.fitness,
                c.noise_floor,
                c.wall_ms
            )
            .unwrap();
            let records: Vec<_> = c
                .trace
                .iter()
                .map(|&(iter, fitness, nmse_db)| ptycho_core::IterationRecord {
                    iter,
                    fitness,
                    nmse_db,
                    change: f64::NAN,
                })
                .collect();
            let name = format!("{}_{}_{}.csv", c.condition, c.algo.name(), c.trial);
            put(&traces.join(name), &trace_csv(&records))?;
        }
        put(&dir.join("cells.csv"), &cells)?;
        put(
            &dir.join("median_nmse_db.csv"),
            &self.table(|r, c, a| r.median_nmse_db(c, a)),
        )?;
        put(
            &dir.join("median_fitness.csv"),
            &self.table(|r, c, a| r.median_fitness(c, a)),
        )?;
        write_json(&dir.join("bench_spec.json"), spec)
    }
}
