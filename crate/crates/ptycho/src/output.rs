//! Result directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ptycho_core::metrics::{self, Crop};
use ptycho_core::{IterationRecord, PtychoDataset, RealImage};
use serde::{Deserialize, Serialize};

use crate::config::{Outcome, RunConfig};
use crate::dataset::{create_dir, read_json, write_json};
use crate::{cimg, preview, Error, FftPropagator, Result};

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Everything needed to repeat a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset: PathBuf,
    pub config: RunConfig,
    /// Wall-clock duration of the run; informational only.
    pub wall_ms: f64,
}

impl RunManifest {
    pub fn new(dataset: &Path, config: &RunConfig, wall_ms: f64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: dataset.to_path_buf(),
            config: config.clone(),
            wall_ms,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algo: String,
    pub iterations: usize,
    pub fitness: f64,
    pub noise_floor: f64,
    pub nmse_db: Option<f64>,
    pub nmse_raw: Option<f64>,
    /// NMSE without energy normalization.
    pub nmse_per_n2: Option<f64>,
    pub crop: (usize, usize, usize, usize),
    pub sampling_ratio: f64,
    pub wall_ms: f64,
}

/// `iter,fitness,nmse_db`, one line per recorded iteration. Floats use the
/// shortest round-trip representation, so equal traces give equal bytes.
pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut s = String::from("iter,fitness,nmse_db\n");
    for r in trace {
        let nmse = r.nmse_db.map(|v| v.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{}", r.iter, r.fitness, nmse).expect("writing to a string");
    }
    s
}

/// Parses [`trace_csv`] output back into `(iter, fitness, nmse_db)` rows.
pub fn parse_trace_csv(text: &str) -> Option<Vec<(usize, f64, Option<f64>)>> {
    let mut lines = text.lines();
    if lines.next()? != "iter,fitness,nmse_db" {
        return None;
    }
    lines
        .map(|l| {
            let mut f = l.split(',');
            let iter = f.next()?.parse().ok()?;
            let fit = f.next()?.parse().ok()?;
            let nmse = match f.next()? {
                "" => None,
                v => Some(v.parse().ok()?),
            };
            Some((iter, fit, nmse))
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the result files into `dir` and returns the summary.
pub fn write_run(
    dir: impl AsRef<Path>,
    data: &PtychoDataset,
    outcome: &Outcome,
    manifest: &RunManifest,
    previews: bool,
) -> Result<Summary> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let res = &outcome.result;
    cimg::write_complex(dir.join("o_hat.cimg"), &res.object)?;
    cimg::write_complex(dir.join("probe.cimg"), &res.probe)?;
    if let Some(g) = &res.precision {
        cimg::write_real(dir.join("gamma_hat.cimg"), g)?;
    }
    write_text(&dir.join("trace.csv"), &trace_csv(&res.trace))?;
    let mut timing = String::from("iter,wall_ms\n");
    for (i, ms) in &outcome.wall_ms {
        writeln!(timing, "{i},{ms:.3}").expect("writing to a string");
    }
    write_text(&dir.join("timing.csv"), &timing)?;

    let prop = FftPropagator::new(data.geometry().window())?;
    let crop = Crop::central_half(data.geometry().object_shape());
    let report = metrics::report(data, &res.object, &res.probe, &prop, crop)?;
    let summary = Summary {
        algo: manifest.config.algo.name().to_string(),
        iterations: res.trace.last().map_or(0, |r| r.iter),
        fitness: report.fitness,
        noise_floor: metrics::noise_floor(data)?,
        nmse_db: report.nmse.map(|n| n.db),
        nmse_raw: report.nmse.map(|n| n.raw),
        nmse_per_n2: report.nmse.map(|n| n.per_n2),
        crop: (crop.row, crop.col, crop.height, crop.width),
        sampling_ratio: ptycho_core::sim::sampling_ratio(data.geometry())?,
        wall_ms: manifest.wall_ms,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join(RUN_MANIFEST), manifest)?;

    if previews {
        preview::write_magnitude(dir.join("o_hat_magnitude.png"), &res.object)?;
        preview::write_phase(dir.join("o_hat_phase.png"), &res.object)?;
        preview::write_magnitude(dir.join("probe_magnitude.png"), &res.probe)?;
        if let Some(g) = &res.precision {
            let var = RealImage::from_fn(g.height(), g.width(), |r, c| 1.0 / g[(r, c)]);
            preview::write_real(dir.join("uncertainty.png"), &var)?;
        }
    }
    Ok(summary)
}
