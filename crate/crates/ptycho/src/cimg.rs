//! The CIMG raster format.
//!
//! Little-endian layout: magic `CIMG`, `u16` version (1), `u32` height,
//! `u32` width, `u8` flag (0 complex, 1 real-only), then the row-major
//! samples as `f64` pairs `(re, im)` or single `f64` values.

use std::fs;
use std::io::Write;
use std::path::Path;

use ptycho_core::{ComplexImage, RealImage, C64};

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CIMG";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 1;

/// A decoded raster of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Complex(ComplexImage),
    Real(RealImage),
}

fn header(h: usize, w: usize, real: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.push(real as u8);
    out
}

pub fn encode_complex(img: &ComplexImage) -> Vec<u8> {
    let mut out = header(img.height(), img.width(), false);
    out.reserve(img.len() * 16);
    for z in img.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn encode_real(img: &RealImage) -> Vec<u8> {
    let mut out = header(img.height(), img.width(), true);
    out.reserve(img.len() * 8);
    for x in img.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses a CIMG byte stream; `Err` carries a human-readable reason.
pub fn decode(bytes: &[u8]) -> std::result::Result<Raster, String> {
    if bytes.len() < HEADER_LEN {
        return Err("truncated header".into());
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic, not a CIMG file".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let h = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let real = match bytes[14] {
        0 => false,
        1 => true,
        f => return Err(format!("unknown flag {f}")),
    };
    let width = if real { 8 } else { 16 };
    let body = &bytes[HEADER_LEN..];
    let expect = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(width))
        .ok_or("image size overflows")?;
    if body.len() != expect {
        return Err(format!(
            "{h}x{w} image needs {expect} data bytes, found {}",
            body.len()
        ));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let shape_err = |e: ptycho_core::Error| e.to_string();
    if real {
        let data = body.chunks_exact(8).map(f).collect();
        RealImage::from_vec(h, w, data)
            .map(Raster::Real)
            .map_err(shape_err)
    } else {
        let data = body
            .chunks_exact(16)
            .map(|c| C64::new(f(&c[..8]), f(&c[8..])))
            .collect();
        ComplexImage::from_vec(h, w, data)
            .map(Raster::Complex)
            .map_err(shape_err)
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_complex(path: impl AsRef<Path>, img: &ComplexImage) -> Result<()> {
    write_bytes(path.as_ref(), &encode_complex(img))
}

pub fn write_real(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    write_bytes(path.as_ref(), &encode_real(img))
}

pub fn read(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|r| Error::format(path, r))
}

/// Reads a complex raster; a real-only file is promoted to zero imaginary parts.
pub fn read_complex(path: impl AsRef<Path>) -> Result<ComplexImage> {
    Ok(match read(path)? {
        Raster::Complex(c) => c,
        Raster::Real(r) => {
            ComplexImage::from_fn(r.height(), r.width(), |i, k| C64::new(r[(i, k)], 0.0))
        }
    })
}

/// Reads a real-only raster.
pub fn read_real(path: impl AsRef<Path>) -> Result<RealImage> {
    let path = path.as_ref();
    match read(path)? {
        Raster::Real(r) => Ok(r),
        Raster::Complex(_) => Err(Error::format(path, "expected a real-only raster")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = RealImage::from_vec(1, 2, vec![1.5, -0.0]).unwrap();
        let b = encode_real(&img);
        assert_eq!(&b[..4], b"CIMG");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..10], &[1, 0, 0, 0]);
        assert_eq!(&b[10..14], &[2, 0, 0, 0]);
        assert_eq!(b[14], 1);
        assert_eq!(b.len(), HEADER_LEN + 16);
        assert_eq!(&b[15..23], &1.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_bad_input() {
        let img = ComplexImage::zeros(2, 2);
        let mut b = encode_complex(&img);
        assert!(decode(&b[..b.len() - 1]).is_err());
        b[14] = 7;
        assert!(decode(&b).is_err());
        b[0] = b'X';
        assert!(decode(&b).is_err());
        assert!(decode(b"CIM").is_err());
    }

    proptest! {
        #[test]
        fn complex_round_trip_is_bit_exact(
            h in 1usize..6, w in 1usize..6,
            bits in proptest::collection::vec(any::<u64>(), 72),
        ) {
            // Arbitrary bit patterns, NaN payloads and signed zeros included.
            let img = ComplexImage::from_fn(h, w, |r, c| {
                let k = 2 * (r * w + c);
                C64::new(f64::from_bits(bits[k]), f64::from_bits(bits[k + 1]))
            });
            let Raster::Complex(back) = decode(&encode_complex(&img)).unwrap() else {
                panic!("kind changed");
            };
            let same = img.as_slice().iter().zip(back.as_slice()).all(|(a, b)| {
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
            });
            prop_assert!(same && back.shape() == (h, w));
        }

        #[test]
        fn real_round_trip_is_bit_exact(
            h in 1usize..6, w in 1usize..6,
            bits in proptest::collection::vec(any::<u64>(), 36),
        ) {
            let img = RealImage::from_fn(h, w, |r, c| f64::from_bits(bits[r * w + c]));
            let Raster::Real(back) = decode(&encode_real(&img)).unwrap() else {
                panic!("kind changed");
            };
            let same = img.as_slice().iter().zip(back.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same && back.shape() == (h, w));
        }
    }
}
