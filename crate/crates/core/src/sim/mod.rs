//! Dataset synthesis: scan patterns, test objects and probes, the noiseless
//! forward model and amplitude-Gaussian measurement noise.

mod forward;
mod object;
mod scan;

use alloc::vec::Vec;

pub use forward::{add_noise, exit_wave, forward, sigma_for_snr, NoiseSpec};
pub use object::{
    complex_object, disk_probe, probe_support_diameter, shifted, smooth_disk_probe, smooth_texture,
    sparsify, synthetic_object,
};
pub use scan::{
    fermat_spiral, fermat_spiral_clamped, fermat_spiral_clamped_tuned, fermat_spiral_for_alpha,
    fermat_spiral_tuned, overlap_ratio, raster_jitter, sampling_ratio, sorted_by_center_distance,
    GOLDEN_ANGLE,
};

use crate::error::{arg_err, Result};
use crate::geometry::ScanGeometry;
use crate::image::{ComplexImage, RealImage};

/// Measured diffraction data plus everything a reconstruction needs to know about it.
#[derive(Debug, Clone)]
pub struct PtychoDataset {
    geometry: ScanGeometry,
    intensities: Vec<RealImage>,
    sigma: f64,
    probe: Option<ComplexImage>,
    truth: Option<ComplexImage>,
}

impl PtychoDataset {
    pub fn new(
        geometry: ScanGeometry,
        intensities: Vec<RealImage>,
        sigma: f64,
        probe: Option<ComplexImage>,
        truth: Option<ComplexImage>,
    ) -> Result<Self> {
        if intensities.len() != geometry.n_scans() {
            return Err(arg_err!(
                "{} intensity frames for {} scans",
                intensities.len(),
                geometry.n_scans()
            ));
        }
        for (j, frame) in intensities.iter().enumerate() {
            frame.check_shape(geometry.window(), "intensity frame")?;
            if frame
                .as_slice()
                .iter()
                .any(|&x| !(x >= 0.0) || !x.is_finite())
            {
                return Err(arg_err!(
                    "intensity frame {j} has negative or non-finite pixels"
                ));
            }
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(arg_err!(
                "noise sigma must be finite and non-negative, got {sigma}"
            ));
        }
        if let Some(p) = &probe {
            p.check_shape(geometry.window(), "probe")?;
        }
        if let Some(t) = &truth {
            t.check_shape(geometry.object_shape(), "ground truth")?;
        }
        Ok(Self {
            geometry,
            intensities,
            sigma,
            probe,
            truth,
        })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn intensities(&self) -> &[RealImage] {
        &self.intensities
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn probe(&self) -> Option<&ComplexImage> {
        self.probe.as_ref()
    }

    pub fn truth(&self) -> Option<&ComplexImage> {
        self.truth.as_ref()
    }

    /// Drops the known probe, turning the dataset into a blind problem.
    pub fn without_probe(mut self) -> Self {
        self.probe = None;
        self
    }

    /// The same measurements visited in another scan order.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let geometry = self.geometry.reordered(order)?;
        let intensities = order.iter().map(|&j| self.intensities[j].clone()).collect();
        Self::new(
            geometry,
            intensities,
            self.sigma,
            self.probe.clone(),
            self.truth.clone(),
        )
    }

    /// Total measured intensity `Σ_j tr I^(j)`.
    pub fn total_intensity(&self) -> f64 {
        self.intensities.iter().map(RealImage::sum).sum()
    }
}
