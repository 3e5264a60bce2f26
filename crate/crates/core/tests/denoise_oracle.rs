//! Input and output denoisers against numerical integration of the exact
//! one-pixel posteriors.

mod common;

use common::oracle::{g_in_error, g_out_error, quadrature};
use ptycho_core::denoise::{g_out, output_posterior, OutputNoise, Prior};
use ptycho_core::C64;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn input_denoiser_matches_quadrature() {
    let priors = [
        Prior::Gaussian,
        Prior::BernoulliGaussian { rho: 0.1 },
        Prior::BernoulliGaussian { rho: 0.5 },
        Prior::BernoulliGaussian { rho: 0.9 },
    ];
    for (k, prior) in priors.into_iter().enumerate() {
        let err = g_in_error(prior, 100, 11 + k as u64);
        assert!(err < 1e-6, "{prior:?}: {err:e}");
    }
}

#[test]
fn output_denoiser_matches_direct_evaluation() {
    let err = g_out_error(50, 12);
    assert!(err < 1e-12, "{err:e}");
}

#[test]
fn output_denoiser_zero_input_uses_phase_zero() {
    let psi = [C64::new(0.0, 0.0), C64::new(3.0, 4.0)];
    let mut mean = [C64::new(0.0, 0.0); 2];
    g_out(
        &OutputNoise::new(0.1).unwrap(),
        &psi,
        1.0,
        &[4.0, 25.0],
        &mut mean,
    )
    .unwrap();
    assert_eq!(mean[0].im, 0.0);
    assert!(mean[0].re > 0.0);
}

#[test]
fn output_denoiser_all_zero_window_is_finite() {
    let psi = vec![C64::new(0.0, 0.0); 16];
    let i = vec![1.0; 16];
    let mut mean = vec![C64::new(0.0, 0.0); 16];
    let out = g_out(&OutputNoise::new(0.1).unwrap(), &psi, 1.0, &i, &mut mean).unwrap();
    assert!(out.variance.is_finite() && out.variance > 0.0);
    assert!(mean.iter().all(|z| z.re.is_finite() && z.im == 0.0));
}

#[test]
fn laplace_approaches_exact_posterior_at_high_snr() {
    // When the amplitude is large against both spreads the posterior is close
    // to Gaussian, so the Laplace moments must agree with quadrature.
    let (sigma, gamma, y) = (0.05, 4.0, 20.0);
    let psi = C64::from_polar(19.5, 0.7);
    let (mu, v) = output_posterior(sigma, psi, gamma, y * y, 0.0);
    let log_w = |x: C64| {
        let d = y - x.norm();
        -d * d / (2.0 * sigma * sigma) - gamma * (x - psi).norm_sqr()
    };
    let s = (0.5 / gamma).sqrt();
    let (_, m, var) = quadrature(log_w, mu, s);
    assert!((m - mu).norm() / mu.norm() < 1e-3);
    assert!(rel(v, var) < 1e-2, "{v} vs {var}");
}
