//! 8-bit PNG renderings for quick inspection. They are never read back.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ptycho_core::{ComplexImage, RealImage};

use crate::{Error, Result};

fn write_png(path: &Path, w: usize, h: usize, color: png::ColorType, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(io)?;
    writer.write_image_data(data).map_err(io)?;
    writer.finish().map_err(io)
}

/// Linear map of `values` onto `0..=255` by their maximum.
pub fn to_gray(values: &[f64]) -> Vec<u8> {
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    values
        .iter()
        .map(|&v| {
            if max > 0.0 && v.is_finite() {
                (255.0 * (v / max).clamp(0.0, 1.0)).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// HSV to RGB with `h` in turns.
fn hsv(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let i = h6.floor() as u32 % 6;
    let f = h6 - h6.floor();
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    let (r, g, b) = match i {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|x| (255.0 * x).round() as u8)
}

/// Grayscale magnitude image.
pub fn write_magnitude(path: impl AsRef<Path>, img: &ComplexImage) -> Result<()> {
    let mags: Vec<f64> = img.as_slice().iter().map(|z| z.norm()).collect();
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::ColorType::Grayscale,
        &to_gray(&mags),
    )
}

/// Phase as hue, magnitude as value.
pub fn write_phase(path: impl AsRef<Path>, img: &ComplexImage) -> Result<()> {
    let mags: Vec<f64> = img.as_slice().iter().map(|z| z.norm()).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    let rgb: Vec<u8> = img
        .as_slice()
        .iter()
        .zip(&mags)
        .flat_map(|(z, &m)| {
            let v = if max > 0.0 { m / max } else { 0.0 };
            hsv(z.arg() / std::f64::consts::TAU, 1.0, v)
        })
        .collect();
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::ColorType::Rgb,
        &rgb,
    )
}

/// Grayscale image of a real raster, e.g. the posterior variance `1/Γ̂`.
pub fn write_real(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::ColorType::Grayscale,
        &to_gray(img.as_slice()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_scaling() {
        assert_eq!(to_gray(&[0.0, 1.0, 2.0, f64::NAN]), vec![0, 128, 255, 0]);
        assert_eq!(to_gray(&[0.0, 0.0]), vec![0, 0]);
    }

    #[test]
    fn hue_wheel() {
        assert_eq!(hsv(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv(1.0 / 3.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv(2.0 / 3.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv(0.5, 1.0, 0.0), [0, 0, 0]);
    }
}
