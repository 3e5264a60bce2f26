//! Componentwise posterior-moment maps ("denoisers").
//!
//! The input denoiser returns the posterior mean and variance of an object
//! pixel under the prior and a Gaussian pseudo-observation `CN(Õ, 1/Γ̃)`.
//! The output denoiser does the same for a detector pixel under the
//! amplitude-Gaussian likelihood `√I ~ N(|Ψ|, σ²)`, using a Laplace
//! approximation around the observed amplitude.

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{arg_err, Result};
use crate::C64;

/// Prior on object pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// `CN(0, 1)` per pixel.
    Gaussian,
    /// `ρ·CN(0, 1) + (1 − ρ)·δ(0)` per pixel.
    BernoulliGaussian { rho: f64 },
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::Gaussian => Ok(()),
            Prior::BernoulliGaussian { rho } if rho > 0.0 && rho <= 1.0 => Ok(()),
            Prior::BernoulliGaussian { rho } => {
                Err(arg_err!("sparsity rate must lie in (0, 1], got {rho}"))
            }
        }
    }

    /// Posterior `(mean, variance)` of one pixel given `CN(o_tilde, 1/gamma)`.
    pub fn posterior(&self, o_tilde: C64, gamma: f64) -> (C64, f64) {
        let shrink = 1.0 / (1.0 + gamma);
        let mean_g = o_tilde * (gamma * shrink);
        match *self {
            Prior::Gaussian => (mean_g, shrink),
            Prior::BernoulliGaussian { rho } => {
                let pi = active_probability(rho, o_tilde, gamma);
                // Mixture of the active component's posterior CN(Γ̃Õ/(1+Γ̃), 1/(1+Γ̃))
                // and a point mass at zero, weighted by π.
                (
                    mean_g * pi,
                    pi * (1.0 - pi) * mean_g.norm_sqr() + pi * shrink,
                )
            }
        }
    }
}

/// Posterior probability that a pixel is drawn from the active (Gaussian)
/// component, evaluated as a logistic of the log density ratio
/// `ln[ρ·CN(Õ; 0, 1 + 1/Γ̃)] − ln[(1−ρ)·CN(Õ; 0, 1/Γ̃)]`.
pub fn active_probability(rho: f64, o_tilde: C64, gamma: f64) -> f64 {
    if rho >= 1.0 {
        return 1.0;
    }
    let logit = (rho / (1.0 - rho)).ln() - gamma.ln_1p()
        + o_tilde.norm_sqr() * gamma * gamma / (1.0 + gamma);
    if logit >= 0.0 {
        1.0 / (1.0 + (-logit).exp())
    } else {
        let e = logit.exp();
        e / (1.0 + e)
    }
}

/// Applies the input denoiser to every pixel.
///
/// Writes posterior means to `mean` and posterior variances (`Γ̂⁻¹`) to `var`.
pub fn g_in(
    prior: &Prior,
    o_tilde: &[C64],
    gamma: &[f64],
    mean: &mut [C64],
    var: &mut [f64],
) -> Result<()> {
    prior.validate()?;
    if o_tilde.len() != gamma.len() || mean.len() != o_tilde.len() || var.len() != o_tilde.len() {
        return Err(arg_err!("g_in: mismatched input lengths"));
    }
    if let Some(bad) = gamma.iter().find(|&&g| !(g > 0.0)) {
        return Err(arg_err!("g_in: precision must be positive, got {bad}"));
    }
    for (((o, &g), m), v) in o_tilde
        .iter()
        .zip(gamma)
        .zip(mean.iter_mut())
        .zip(var.iter_mut())
    {
        (*m, *v) = prior.posterior(*o, g);
    }
    Ok(())
}

/// Amplitude-noise level of the measurement model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputNoise {
    sigma: f64,
}

impl OutputNoise {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(arg_err!(
                "noise sigma must be positive and finite, got {sigma}"
            ));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Result of [`g_out`] on one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputMoments {
    /// Trace-averaged posterior variance, the inverse of the scalar precision.
    pub variance: f64,
}

/// Relative floor on `|Ψ̃|` that keeps the Laplace variance bounded.
pub const MAGNITUDE_FLOOR: f64 = 1e-8;

/// Per-pixel Laplace posterior `(mean, variance)` of the output denoiser.
///
/// `floor` is the absolute magnitude floor for the window.
#[inline]
pub fn output_posterior(
    sigma: f64,
    psi_tilde: C64,
    gamma: f64,
    intensity: f64,
    floor: f64,
) -> (C64, f64) {
    let amp = intensity.max(0.0).sqrt();
    let raw = psi_tilde.norm();
    let phase = if raw > 0.0 {
        psi_tilde / raw
    } else {
        C64::new(1.0, 0.0)
    };
    let mag = raw.max(floor);
    let s = 2.0 * sigma * sigma * gamma;
    let mean_mag = (amp + s * mag) / (1.0 + s);
    let var = (amp + 2.0 * s * mag) / (2.0 * gamma * mag * (1.0 + s));
    (phase * mean_mag, var)
}

/// Applies the output denoiser to one window with scalar input precision `gamma`.
///
/// Writes the posterior means into `mean` and returns the trace-averaged
/// variance. Negative intensities are treated as zero.
pub fn g_out(
    noise: &OutputNoise,
    psi_tilde: &[C64],
    gamma: f64,
    intensity: &[f64],
    mean: &mut [C64],
) -> Result<OutputMoments> {
    if !(gamma > 0.0) {
        return Err(arg_err!("g_out: precision must be positive, got {gamma}"));
    }
    if psi_tilde.len() != intensity.len() || mean.len() != psi_tilde.len() || psi_tilde.is_empty() {
        return Err(arg_err!("g_out: mismatched input lengths"));
    }
    let max_mag = psi_tilde.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = MAGNITUDE_FLOOR * max_mag + 1e-30;
    let mut var_sum = 0.0;
    for ((p, &i), m) in psi_tilde.iter().zip(intensity).zip(mean.iter_mut()) {
        let (mu, v) = output_posterior(noise.sigma, *p, gamma, i, floor);
        *m = mu;
        var_sum += v;
    }
    Ok(OutputMoments {
        variance: var_sum / psi_tilde.len() as f64,
    })
}
