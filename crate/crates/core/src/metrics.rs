//! Reconstruction quality: phase-aligned NMSE and data fitness.

use alloc::vec;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{arg_err, Result};
use crate::geometry::ScanGeometry;
use crate::image::ComplexImage;
use crate::propagator::Propagator;
use crate::sim::{exit_wave, PtychoDataset};
use crate::C64;

/// Reported in place of `+∞` dB for an exact reconstruction.
pub const NMSE_DB_CAP: f64 = 300.0;

/// Rectangle of the object used for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crop {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Crop {
    pub fn full(shape: (usize, usize)) -> Self {
        Crop {
            row: 0,
            col: 0,
            height: shape.0,
            width: shape.1,
        }
    }

    /// The central half of the object in each dimension.
    pub fn central_half(shape: (usize, usize)) -> Self {
        let (h, w) = ((shape.0 / 2).max(1), (shape.1 / 2).max(1));
        Crop {
            row: (shape.0 - h) / 2,
            col: (shape.1 - w) / 2,
            height: h,
            width: w,
        }
    }

    pub fn apply(&self, img: &ComplexImage) -> Result<ComplexImage> {
        img.crop(self.row, self.col, self.height, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmse {
    /// `‖truth − e^{iθ*}·est‖² / ‖truth‖²` on the crop.
    pub raw: f64,
    /// `−10·log10(raw)`, capped at [`NMSE_DB_CAP`]; larger is better.
    pub db: f64,
    /// The unnormalized `min_θ ‖truth − e^{iθ}·est‖² / N²` with `N` the crop size.
    pub per_n2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub nmse: Option<Nmse>,
    pub fitness: f64,
    pub crop: Crop,
}

/// Global phase `θ* = arg⟨est, truth⟩` minimizing `‖truth − e^{iθ}·est‖²`
/// and the rotated estimate. A vanishing inner product gives `θ* = 0`.
pub fn align_phase(truth: &ComplexImage, est: &ComplexImage) -> Result<(f64, ComplexImage)> {
    est.check_shape(truth.shape(), "align_phase estimate")?;
    let ip = est.inner(truth);
    let theta = if ip.norm() > 0.0 { ip.arg() } else { 0.0 };
    let mut aligned = est.clone();
    aligned.scale(C64::from_polar(1.0, theta));
    Ok((theta, aligned))
}

pub fn nmse(truth: &ComplexImage, est: &ComplexImage, crop: Crop) -> Result<Nmse> {
    est.check_shape(truth.shape(), "nmse estimate")?;
    let t = crop.apply(truth)?;
    let e = crop.apply(est)?;
    let energy = t.norm_sqr();
    if !(energy > 0.0) {
        return Err(arg_err!("ground truth is zero on the evaluation crop"));
    }
    let (_, aligned) = align_phase(&t, &e)?;
    let err: f64 = t
        .as_slice()
        .iter()
        .zip(aligned.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let raw = err / energy;
    let db = if raw > 0.0 {
        (-10.0 * raw.log10()).min(NMSE_DB_CAP)
    } else {
        NMSE_DB_CAP
    };
    let n = t.len() as f64;
    Ok(Nmse {
        raw,
        db,
        per_n2: err / (n * n),
    })
}

/// Amplitude residual `Σ_j ‖√I^(j) − |F[P ⊙ O^(j)]|‖² / Σ_j tr I^(j)`.
pub fn fitness<P: Propagator + ?Sized>(
    data: &PtychoDataset,
    obj: &ComplexImage,
    probe: &ComplexImage,
    prop: &P,
) -> Result<f64> {
    let geom = data.geometry();
    check_model_shapes(geom, obj, probe, prop)?;
    let total = data.total_intensity();
    if !(total > 0.0) {
        return Err(arg_err!("dataset has zero total intensity"));
    }
    let mut field = vec![C64::new(0.0, 0.0); geom.window_len()];
    let mut resid = 0.0;
    for (j, frame) in data.intensities().iter().enumerate() {
        exit_wave(obj.as_slice(), probe.as_slice(), geom, j, &mut field);
        prop.forward_in_place(&mut field);
        resid += frame
            .as_slice()
            .iter()
            .zip(&field)
            .map(|(&i, z)| (i.sqrt() - z.norm()).powi(2))
            .sum::<f64>();
    }
    Ok(resid / total)
}

/// Expected fitness of the true object under the injected noise, `J·M·σ² / Σ_j tr I^(j)`.
pub fn noise_floor(data: &PtychoDataset) -> Result<f64> {
    let total = data.total_intensity();
    if !(total > 0.0) {
        return Err(arg_err!("dataset has zero total intensity"));
    }
    let geom = data.geometry();
    Ok((geom.n_scans() * geom.window_len()) as f64 * data.sigma() * data.sigma() / total)
}

pub(crate) fn check_model_shapes<P: Propagator + ?Sized>(
    geom: &ScanGeometry,
    obj: &ComplexImage,
    probe: &ComplexImage,
    prop: &P,
) -> Result<()> {
    obj.check_shape(geom.object_shape(), "object")?;
    probe.check_shape(geom.window(), "probe")?;
    if prop.shape() != geom.window() {
        return Err(arg_err!(
            "propagator shape {:?} differs from window {:?}",
            prop.shape(),
            geom.window()
        ));
    }
    Ok(())
}

/// Evaluates everything that applies to `(obj, probe)`.
pub fn report<P: Propagator + ?Sized>(
    data: &PtychoDataset,
    obj: &ComplexImage,
    probe: &ComplexImage,
    prop: &P,
    crop: Crop,
) -> Result<MetricsReport> {
    let nmse = match data.truth() {
        Some(t) => Some(nmse(t, obj, crop)?),
        None => None,
    };
    Ok(MetricsReport {
        nmse,
        fitness: fitness(data, obj, probe, prop)?,
        crop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::Dft2d;
    use crate::sim::{add_noise, forward, NoiseSpec};
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(h, w, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn align_recovers_global_phase() {
        let t = random_image(8, 8, 1);
        for phi in [0.3, -2.0, PI] {
            let mut e = t.clone();
            e.scale(C64::from_polar(1.0, phi));
            let (_, a) = align_phase(&t, &e).unwrap();
            let err = a
                .as_slice()
                .iter()
                .zip(t.as_slice())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-14);
        }
        assert_eq!(align_phase(&t, &t).unwrap().0, 0.0);
        assert_eq!(align_phase(&t, &ComplexImage::zeros(8, 8)).unwrap().0, 0.0);
    }

    #[test]
    fn align_beats_sampled_angles() {
        let t = random_image(6, 6, 2);
        let e = random_image(6, 6, 3);
        let (_, a) = align_phase(&t, &e).unwrap();
        let best: f64 = t
            .as_slice()
            .iter()
            .zip(a.as_slice())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        for k in 0..360 {
            let rot = C64::from_polar(1.0, k as f64 * PI / 180.0);
            let d: f64 = t
                .as_slice()
                .iter()
                .zip(e.as_slice())
                .map(|(x, y)| (x - rot * y).norm_sqr())
                .sum();
            assert!(best <= d + 1e-12);
        }
    }

    #[test]
    fn nmse_special_values() {
        let t = random_image(8, 8, 4);
        let full = Crop::full((8, 8));
        let exact = nmse(&t, &t, full).unwrap();
        assert_eq!((exact.raw, exact.db), (0.0, NMSE_DB_CAP));
        let zero = nmse(&t, &ComplexImage::zeros(8, 8), full).unwrap();
        assert_eq!((zero.raw, zero.db), (1.0, 0.0));
        assert!(nmse(&ComplexImage::zeros(8, 8), &t, full).is_err());
    }

    #[test]
    fn nmse_of_known_perturbation() {
        // Perturbation orthogonal to the truth with 1% relative energy → 20 dB.
        let t = random_image(16, 16, 5);
        let mut d = random_image(16, 16, 6);
        let proj = t.inner(&d) / t.norm_sqr();
        for (x, y) in d.as_mut_slice().iter_mut().zip(t.as_slice()) {
            *x -= proj * y;
        }
        // Also orthogonal to i·truth so phase alignment leaves it untouched.
        let s = (0.01 * t.norm_sqr() / d.norm_sqr()).sqrt();
        let e = ComplexImage::from_fn(16, 16, |r, c| t[(r, c)] + d[(r, c)] * s);
        let n = nmse(&t, &e, Crop::full((16, 16))).unwrap();
        assert!((n.db - 20.0).abs() < 0.1, "{}", n.db);
    }

    #[test]
    fn central_half_crop() {
        assert_eq!(
            Crop::central_half((512, 512)),
            Crop {
                row: 128,
                col: 128,
                height: 256,
                width: 256
            }
        );
    }

    fn dataset(snr_db: f64) -> (PtychoDataset, Dft2d) {
        let geom = ScanGeometry::new(
            (12, 12),
            (6, 6),
            alloc::vec![(0, 0), (3, 3), (6, 6), (0, 6)],
        )
        .unwrap();
        let prop = Dft2d::new((6, 6)).unwrap();
        let obj = random_image(12, 12, 7);
        let probe = random_image(6, 6, 8);
        let fields = forward(&obj, &probe, &geom, &prop).unwrap();
        let (i, sigma) = add_noise(&fields, NoiseSpec { snr_db, seed: 1 }).unwrap();
        (
            PtychoDataset::new(geom, i, sigma, Some(probe), Some(obj)).unwrap(),
            prop,
        )
    }

    #[test]
    fn fitness_special_values() {
        let (data, prop) = dataset(f64::INFINITY);
        let f = fitness(&data, data.truth().unwrap(), data.probe().unwrap(), &prop).unwrap();
        assert!(f < 1e-28, "{f}");
        let f0 = fitness(
            &data,
            data.truth().unwrap(),
            &ComplexImage::zeros(6, 6),
            &prop,
        )
        .unwrap();
        assert!((f0 - 1.0).abs() < 1e-15);
        assert_eq!(noise_floor(&data).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn nmse_phase_invariant(phi in 0.0f64..6.3, seed in 0u64..1000) {
            let t = random_image(8, 8, seed);
            let e = random_image(8, 8, seed + 1);
            let mut r = e.clone();
            r.scale(C64::from_polar(1.0, phi));
            let a = nmse(&t, &e, Crop::full((8, 8))).unwrap();
            let b = nmse(&t, &r, Crop::full((8, 8))).unwrap();
            prop_assert!((a.raw - b.raw).abs() <= 1e-12);
        }

        #[test]
        fn fitness_scale_invariant(beta in 0.1f64..10.0) {
            let (data, prop) = dataset(20.0);
            let mut o = data.truth().unwrap().clone();
            let mut p = data.probe().unwrap().clone();
            let f = fitness(&data, &o, &p, &prop).unwrap();
            o.scale(C64::new(beta, 0.0));
            p.scale(C64::new(1.0 / beta, 0.0));
            let g = fitness(&data, &o, &p, &prop).unwrap();
            prop_assert!((f - g).abs() <= 1e-12 * f.max(1e-300) + 1e-15);
        }
    }
}
