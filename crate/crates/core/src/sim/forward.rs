use alloc::vec::Vec;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{arg_err, Result};
use crate::geometry::{gather_into, ScanGeometry};
use crate::image::{ComplexImage, RealImage};
use crate::propagator::Propagator;
use crate::C64;

/// Exit wave `P ⊙ S^(j) O` of scan `j`, written into `out`.
pub fn exit_wave(obj: &[C64], probe: &[C64], geom: &ScanGeometry, j: usize, out: &mut [C64]) {
    gather_into(obj, geom, j, out);
    out.iter_mut().zip(probe).for_each(|(o, p)| *o *= p);
}

/// Noiseless detector-plane fields `Ψ^(j) = F[P ⊙ S^(j) O]` for every scan.
pub fn forward<P: Propagator + ?Sized>(
    obj: &ComplexImage,
    probe: &ComplexImage,
    geom: &ScanGeometry,
    prop: &P,
) -> Result<Vec<ComplexImage>> {
    obj.check_shape(geom.object_shape(), "forward object")?;
    probe.check_shape(geom.window(), "forward probe")?;
    if prop.shape() != geom.window() {
        return Err(arg_err!(
            "propagator shape {:?} differs from window {:?}",
            prop.shape(),
            geom.window()
        ));
    }
    let (mh, mw) = geom.window();
    Ok((0..geom.n_scans())
        .map(|j| {
            let mut field = ComplexImage::zeros(mh, mw);
            exit_wave(
                obj.as_slice(),
                probe.as_slice(),
                geom,
                j,
                field.as_mut_slice(),
            );
            prop.forward_in_place(field.as_mut_slice());
            field
        })
        .collect())
}

/// Target measurement SNR and the seed of the noise draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// `+∞` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

fn noisy_intensities(amps: &[RealImage], normals: &[Vec<f64>], sigma: f64) -> Vec<RealImage> {
    amps.iter()
        .zip(normals)
        .map(|(a, z)| {
            let data = a
                .as_slice()
                .iter()
                .zip(z)
                .map(|(&a, &e)| (a + sigma * e).max(0.0).powi(2))
                .collect();
            RealImage::from_vec(a.height(), a.width(), data).expect("shape preserved")
        })
        .collect()
}

fn mean_pixel(frames: &[RealImage]) -> f64 {
    let n: usize = frames.iter().map(RealImage::len).sum();
    frames.iter().map(RealImage::sum).sum::<f64>() / n as f64
}

/// Noise level giving `σ² / mean(I) = 10^(−snr_db/10)` for noiseless data,
/// ignoring the (small) contribution of the noise to the mean intensity.
pub fn sigma_for_snr(wavefields: &[ComplexImage], snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let n: usize = wavefields.iter().map(ComplexImage::len).sum();
    let mean = wavefields.iter().map(ComplexImage::norm_sqr).sum::<f64>() / n as f64;
    (mean * 10f64.powf(-snr_db / 10.0)).sqrt()
}

/// Noisy intensities `I = max(|Ψ| + ε, 0)²` with `ε ~ N(0, σ²)` i.i.d.
///
/// `σ` is chosen so the generated data realize the requested SNR exactly,
/// with `SNR⁻¹ = σ² / mean_pixel(I)` measured on the noisy intensities.
/// Returns the intensities and `σ`.
pub fn add_noise(wavefields: &[ComplexImage], spec: NoiseSpec) -> Result<(Vec<RealImage>, f64)> {
    if spec.snr_db.is_nan() || spec.snr_db == f64::NEG_INFINITY {
        return Err(arg_err!("SNR must be finite or +inf, got {}", spec.snr_db));
    }
    if spec.snr_db == f64::INFINITY {
        return Ok((wavefields.iter().map(ComplexImage::abs_sqr).collect(), 0.0));
    }
    let amps: Vec<RealImage> = wavefields.iter().map(ComplexImage::abs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normals: Vec<Vec<f64>> = amps
        .iter()
        .map(|a| {
            (0..a.len())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    let target = 10f64.powf(-spec.snr_db / 10.0);
    // g(σ) = σ² − target·mean(I(σ)) is increasing for target < 1; bracket
    // its root and bisect. The noiseless estimate seeds the bracket.
    let g = |s: f64| s * s - target * mean_pixel(&noisy_intensities(&amps, &normals, s));
    let guess = sigma_for_snr(wavefields, spec.snr_db);
    if guess == 0.0 {
        return Ok((noisy_intensities(&amps, &normals, 0.0), 0.0));
    }
    let (mut lo, mut hi) = (0.0, guess);
    let mut grow = 0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(arg_err!("no noise level realizes SNR {} dB", spec.snr_db));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    Ok((noisy_intensities(&amps, &normals, sigma), sigma))
}
