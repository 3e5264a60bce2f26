//! Declarative dataset synthesis, shared by the CLI, the benchmark harness
//! and the tests.

use std::path::PathBuf;

use ptycho_core::sim::{
    self, add_noise, disk_probe, fermat_spiral, fermat_spiral_clamped, fermat_spiral_clamped_tuned,
    fermat_spiral_for_alpha, fermat_spiral_tuned, raster_jitter, smooth_disk_probe,
    sorted_by_center_distance, sparsify, synthetic_object, NoiseSpec,
};
use ptycho_core::{metrics, ComplexImage, PtychoDataset, ScanGeometry, C64};
use serde::{Deserialize, Serialize};

use crate::{cimg, Error, FftPropagator, Result};

/// Default peak amplitude of the built-in probes.
///
/// The reconstruction prior is `CN(0, 1)` on the object, so the probe carries
/// the photon scale. Unit-amplitude probes give measurements so weak against
/// the prior that the message passing settles on the empty object.
pub const PROBE_AMPLITUDE: f64 = 10.0;

/// Tolerance on the realized sampling ratio when a target is given.
pub const ALPHA_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectSpec {
    /// Smooth pseudo-random magnitude and phase textures.
    Synthetic {
        height: usize,
        width: usize,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    /// Flat circular aperture.
    Disk {
        window: (usize, usize),
        diameter: f64,
        amplitude: f64,
    },
    /// Blurred aperture with a quadratic phase.
    SmoothDisk {
        window: (usize, usize),
        diameter: f64,
        blur: usize,
        curvature: f64,
        amplitude: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanSpec {
    /// Fermat spiral. With `target_alpha` the radius (and, unless
    /// `n_scans` is given, the scan count) is tuned to that sampling ratio;
    /// otherwise `n_scans` and `radius_scale` are used as given. `clamp`
    /// moves windows that would leave the object back inside it.
    Fermat {
        target_alpha: Option<f64>,
        n_scans: Option<usize>,
        radius_scale: Option<f64>,
        #[serde(default)]
        clamp: bool,
    },
    /// Jittered raster, visited nearest-to-center first. Without `grid`, as
    /// many rows and columns as fit.
    Raster {
        step: usize,
        grid: Option<(usize, usize)>,
        max_dev: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub object: ObjectSpec,
    /// Keep this fraction of the pixels and zero the rest.
    pub keep_fraction: Option<f64>,
    pub probe: ProbeSpec,
    pub scan: ScanSpec,
    /// `None` for noiseless data.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// A simulated dataset and its descriptive numbers.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: PtychoDataset,
    pub sampling_ratio: f64,
    /// Raster overlap ratio `1 − step/d`.
    pub overlap: Option<f64>,
    pub covered_pixels: usize,
    pub noise_floor: f64,
}

impl SimSpec {
    /// Known-probe study setup: synthetic object, flat disk probe filling
    /// 23/32 of the window, Fermat spiral at sampling ratio `alpha`.
    pub fn spiral(n: usize, window: usize, alpha: f64, snr_db: Option<f64>, seed: u64) -> Self {
        SimSpec {
            object: ObjectSpec::Synthetic {
                height: n,
                width: n,
            },
            keep_fraction: None,
            probe: ProbeSpec::Disk {
                window: (window, window),
                diameter: window as f64 * 23.0 / 32.0,
                amplitude: PROBE_AMPLITUDE,
            },
            scan: ScanSpec::Fermat {
                target_alpha: Some(alpha),
                n_scans: None,
                radius_scale: None,
                clamp: false,
            },
            snr_db,
            seed,
        }
    }

    pub fn window(&self) -> Result<(usize, usize)> {
        Ok(match &self.probe {
            ProbeSpec::Disk { window, .. } | ProbeSpec::SmoothDisk { window, .. } => *window,
            ProbeSpec::File { path } => cimg::read_complex(path)?.shape(),
        })
    }
}

/// Seeds of the independent random streams derived from the spec seed.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream)
}

pub fn build_probe(spec: &ProbeSpec) -> Result<ComplexImage> {
    let scaled = |mut p: ComplexImage, a: f64| {
        p.scale(C64::new(a, 0.0));
        p
    };
    Ok(match spec {
        ProbeSpec::Disk {
            window,
            diameter,
            amplitude,
        } => scaled(disk_probe(*window, *diameter), *amplitude),
        ProbeSpec::SmoothDisk {
            window,
            diameter,
            blur,
            curvature,
            amplitude,
        } => scaled(
            smooth_disk_probe(*window, *diameter, *blur, *curvature),
            *amplitude,
        ),
        ProbeSpec::File { path } => cimg::read_complex(path)?,
    })
}

pub fn build_object(spec: &ObjectSpec, seed: u64) -> Result<ComplexImage> {
    Ok(match spec {
        ObjectSpec::Synthetic { height, width } => {
            synthetic_object(*height, *width, stream_seed(seed, 1))
        }
        ObjectSpec::File { path } => cimg::read_complex(path)?,
    })
}

pub fn build_geometry(
    spec: &ScanSpec,
    object_shape: (usize, usize),
    window: (usize, usize),
    seed: u64,
) -> Result<ScanGeometry> {
    match *spec {
        ScanSpec::Fermat {
            target_alpha: Some(a),
            n_scans: None,
            clamp: false,
            ..
        } => Ok(fermat_spiral_for_alpha(object_shape, window, a, ALPHA_TOLERANCE)?.0),
        ScanSpec::Fermat {
            target_alpha: Some(a),
            n_scans: Some(n),
            clamp,
            ..
        } => {
            let tuned = if clamp {
                fermat_spiral_clamped_tuned
            } else {
                fermat_spiral_tuned
            };
            Ok(tuned(object_shape, window, n, a, ALPHA_TOLERANCE)?.0)
        }
        ScanSpec::Fermat {
            target_alpha: None,
            n_scans: Some(n),
            radius_scale: Some(s),
            clamp,
        } => Ok(if clamp {
            fermat_spiral_clamped(object_shape, window, n, s)?
        } else {
            fermat_spiral(object_shape, window, n, s)?
        }),
        ScanSpec::Fermat { .. } => Err(Error::Config(
            "a Fermat scan needs a target sampling ratio (with a scan count when clamped) \
             or both a scan count and a radius scale"
                .into(),
        )),
        ScanSpec::Raster {
            step,
            grid,
            max_dev,
        } => {
            if step == 0 {
                return Err(Error::Config("raster step must be positive".into()));
            }
            let fit = |n: usize, m: usize| match n.checked_sub(m + 2 * max_dev) {
                Some(room) => room / step + 1,
                None => 0,
            };
            let grid =
                grid.unwrap_or((fit(object_shape.0, window.0), fit(object_shape.1, window.1)));
            let raster = raster_jitter(
                object_shape,
                window,
                step,
                grid,
                max_dev,
                stream_seed(seed, 2),
            )?;
            Ok(sorted_by_center_distance(&raster)?)
        }
    }
}

/// Deliberately wrong starting probe for blind runs: the true probe's
/// aperture blurred and shifted by a few pixels, with a flat phase and the
/// same peak amplitude.
pub fn blind_start(spec: &ProbeSpec) -> Result<ComplexImage> {
    let (window, diameter, amplitude) = match *spec {
        ProbeSpec::Disk {
            window,
            diameter,
            amplitude,
        }
        | ProbeSpec::SmoothDisk {
            window,
            diameter,
            amplitude,
            ..
        } => (window, diameter, amplitude),
        ProbeSpec::File { ref path } => {
            let p = cimg::read_complex(path)?;
            let peak = p.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
            let d = sim::probe_support_diameter(&p)? as f64;
            (p.shape(), d, peak)
        }
    };
    let start = smooth_disk_probe(window, diameter, 3, 0.0);
    let peak = start
        .as_slice()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let shift = (window.0.min(window.1) / 16).max(1) as isize;
    let mut p = sim::shifted(&start, shift, -shift / 2);
    p.scale(C64::new(amplitude / peak, 0.0));
    Ok(p)
}

/// Generates the dataset described by `spec`.
pub fn simulate(spec: &SimSpec) -> Result<Simulated> {
    let probe = build_probe(&spec.probe)?;
    let mut obj = build_object(&spec.object, spec.seed)?;
    if let Some(rho) = spec.keep_fraction {
        obj = sparsify(&obj, rho)?;
    }
    let geom = build_geometry(&spec.scan, obj.shape(), probe.shape(), spec.seed)?;
    let prop = FftPropagator::new(probe.shape())?;
    let fields = sim::forward(&obj, &probe, &geom, &prop)?;
    let (intensities, sigma) = add_noise(
        &fields,
        NoiseSpec {
            snr_db: spec.snr_db.unwrap_or(f64::INFINITY),
            seed: stream_seed(spec.seed, 3),
        },
    )?;
    let overlap = match spec.scan {
        ScanSpec::Raster { step, .. } => Some(sim::overlap_ratio(&probe, step)?),
        ScanSpec::Fermat { .. } => None,
    };
    let sampling_ratio = sim::sampling_ratio(&geom)?;
    let covered_pixels = geom.covered_pixels();
    let data = PtychoDataset::new(geom, intensities, sigma, Some(probe), Some(obj))?;
    let noise_floor = metrics::noise_floor(&data)?;
    Ok(Simulated {
        data,
        sampling_ratio,
        overlap,
        covered_pixels,
        noise_floor,
    })
}
