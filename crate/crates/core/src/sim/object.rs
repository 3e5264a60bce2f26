use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg_err, Result};
use crate::image::{ComplexImage, RealImage};
use crate::C64;

/// Box blur along rows then columns with periodic boundaries.
fn box_blur(data: &mut [f64], h: usize, w: usize, radius: usize) {
    let mut tmp = vec![0.0; data.len()];
    let norm = 1.0 / (2 * radius + 1) as f64;
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for d in 0..=2 * radius {
                acc += data[r * w + (c + w * (radius + 1) + d - radius) % w];
            }
            tmp[r * w + c] = acc * norm;
        }
    }
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for d in 0..=2 * radius {
                acc += tmp[((r + h * (radius + 1) + d - radius) % h) * w + c];
            }
            data[r * w + c] = acc * norm;
        }
    }
}

/// Smooth random texture with values spread over `[0, 1]`: white noise
/// low-passed by three box blurs of `radius`, then min-max normalized.
pub fn smooth_texture(height: usize, width: usize, radius: usize, seed: u64) -> RealImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..height * width)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    if radius > 0 {
        for _ in 0..3 {
            box_blur(&mut data, height, width, radius);
        }
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    data.iter_mut().for_each(|x| *x = (*x - lo) / span);
    RealImage::from_vec(height, width, data).expect("length matches")
}

/// `magnitude · exp(i·(π/2)·phase)` from two rasters with values in `[0, 1]`,
/// so magnitudes lie in `[0, 1]` and phases in `[0, π/2]`.
pub fn complex_object(magnitude: &RealImage, phase: &RealImage) -> Result<ComplexImage> {
    phase.check_shape(magnitude.shape(), "phase raster")?;
    let data = magnitude
        .as_slice()
        .iter()
        .zip(phase.as_slice())
        .map(|(&m, &p)| C64::from_polar(m.clamp(0.0, 1.0), FRAC_PI_2 * p.clamp(0.0, 1.0)))
        .collect();
    ComplexImage::from_vec(magnitude.height(), magnitude.width(), data)
}

/// Test object built from two independent smooth textures.
pub fn synthetic_object(height: usize, width: usize, seed: u64) -> ComplexImage {
    let radius = (height.min(width) / 32).max(1);
    let mag = smooth_texture(height, width, radius, seed);
    let phase = smooth_texture(height, width, radius, seed ^ 0x9E37_79B9_7F4A_7C15);
    complex_object(&mag, &phase).expect("same shape")
}

/// Zeroes the `1 − rho` fraction of pixels with the smallest magnitude.
pub fn sparsify(obj: &ComplexImage, rho: f64) -> Result<ComplexImage> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(arg_err!("kept fraction must lie in (0, 1], got {rho}"));
    }
    let n = obj.len();
    let n_zero = ((1.0 - rho) * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        obj.as_slice()[a]
            .norm()
            .total_cmp(&obj.as_slice()[b].norm())
    });
    let mut out = obj.clone();
    for &k in &order[..n_zero] {
        out.as_mut_slice()[k] = C64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Flat circular aperture of the given diameter, centered in the window.
pub fn disk_probe(window: (usize, usize), diameter: f64) -> ComplexImage {
    let (cy, cx) = (window.0 as f64 / 2.0, window.1 as f64 / 2.0);
    let r2 = diameter * diameter / 4.0;
    ComplexImage::from_fn(window.0, window.1, |r, c| {
        let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
        C64::new(if dy * dy + dx * dx <= r2 { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Disk aperture softened by `blur` box-blur passes of radius 1 and given a
/// quadratic (defocus-like) phase of `curvature` radians at the disk edge.
pub fn smooth_disk_probe(
    window: (usize, usize),
    diameter: f64,
    blur: usize,
    curvature: f64,
) -> ComplexImage {
    let (h, w) = window;
    let mut amp: Vec<f64> = disk_probe(window, diameter)
        .as_slice()
        .iter()
        .map(|z| z.re)
        .collect();
    for _ in 0..blur {
        box_blur(&mut amp, h, w, 1);
    }
    let (cy, cx) = (h as f64 / 2.0, w as f64 / 2.0);
    let r2 = diameter * diameter / 4.0;
    ComplexImage::from_fn(h, w, |r, c| {
        let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
        C64::from_polar(amp[r * w + c], curvature * (dy * dy + dx * dx) / r2)
    })
}

/// Circular shift by `(dy, dx)` pixels.
pub fn shifted(img: &ComplexImage, dy: isize, dx: isize) -> ComplexImage {
    let (h, w) = img.shape();
    ComplexImage::from_fn(h, w, |r, c| {
        let rr = (r as isize - dy).rem_euclid(h as isize) as usize;
        let cc = (c as isize - dx).rem_euclid(w as isize) as usize;
        img[(rr, cc)]
    })
}

/// Bounding-box extent of the 10%-of-peak intensity region.
pub fn probe_support_diameter(probe: &ComplexImage) -> Result<usize> {
    super::scan::probe_diameter(probe)
}
