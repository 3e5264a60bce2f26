//! Helpers shared by the integration tests: seeded random data and a tiny
//! dense complex matrix type for transcription oracles.

#![allow(dead_code)]

pub mod oracle;

use std::f64::consts::PI;

use ptycho_core::sim::{add_noise, forward, synthetic_object, NoiseSpec};
use ptycho_core::{ComplexImage, Dft2d, PtychoDataset, ScanGeometry, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<C64> {
    (0..n)
        .map(|_| {
            C64::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        })
        .collect()
}

pub fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

pub fn rel_err_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.a[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.a[r * self.cols + c] = v;
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (k, &v) in d.iter().enumerate() {
            m.set(k, k, v);
        }
        m
    }

    /// Conjugate transpose.
    pub fn h(&self) -> Self {
        let mut m = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(c, r, self.at(r, c).conj());
            }
        }
        m
    }

    pub fn mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows);
        let mut m = Mat::zeros(self.rows, b.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let x = self.at(r, k);
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..b.cols {
                    m.a[r * b.cols + c] += x * b.at(k, c);
                }
            }
        }
        m
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c) * x[c]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self.at(k, k)).sum()
    }

    /// Orthonormal 2-D DFT on row-major `h × w` rasters, built entry by entry.
    pub fn dft2(h: usize, w: usize) -> Self {
        let m = h * w;
        let mut f = Mat::zeros(m, m);
        let scale = 1.0 / (m as f64).sqrt();
        for (k1, k2) in (0..h).flat_map(|a| (0..w).map(move |b| (a, b))) {
            for (n1, n2) in (0..h).flat_map(|a| (0..w).map(move |b| (a, b))) {
                let t = -2.0 * PI * ((k1 * n1) as f64 / h as f64 + (k2 * n2) as f64 / w as f64);
                f.set(k1 * w + k2, n1 * w + n2, C64::from_polar(scale, t));
            }
        }
        f
    }

    /// Selection matrix of scan `j`: picks the window out of the object.
    pub fn selection(geom: &ScanGeometry, j: usize) -> Self {
        let (h, w) = geom.window();
        let (r0, c0) = geom.offsets()[j];
        let ow = geom.object_shape().1;
        let mut s = Mat::zeros(h * w, geom.object_len());
        for r in 0..h {
            for c in 0..w {
                s.set(r * w + c, (r0 + r) * ow + c0 + c, C64::new(1.0, 0.0));
            }
        }
        s
    }
}

/// Noisy synthetic dataset with a known probe.
pub fn dataset(geom: ScanGeometry, probe: ComplexImage, snr_db: f64, seed: u64) -> PtychoDataset {
    let (h, w) = geom.object_shape();
    let obj = synthetic_object(h, w, seed);
    let prop = Dft2d::new(geom.window()).unwrap();
    let fields = forward(&obj, &probe, &geom, &prop).unwrap();
    let (i, sigma) = add_noise(
        &fields,
        NoiseSpec {
            snr_db,
            seed: seed + 1,
        },
    )
    .unwrap();
    PtychoDataset::new(geom, i, sigma, Some(probe), Some(obj)).unwrap()
}
