//! Dense row-major rasters.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{arg_err, Result};
use crate::C64;

macro_rules! raster {
    ($(#[$m:meta])* $name:ident, $elem:ty, $zero:expr) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            height: usize,
            width: usize,
            data: Vec<$elem>,
        }

        impl $name {
            pub fn zeros(height: usize, width: usize) -> Self {
                Self::filled(height, width, $zero)
            }

            pub fn filled(height: usize, width: usize, value: $elem) -> Self {
                Self { height, width, data: vec![value; height * width] }
            }

            pub fn from_vec(height: usize, width: usize, data: Vec<$elem>) -> Result<Self> {
                if height == 0 || width == 0 {
                    return Err(arg_err!("raster dimensions must be positive, got {height}x{width}"));
                }
                if data.len() != height * width {
                    return Err(arg_err!(
                        "raster {height}x{width} needs {} values, got {}",
                        height * width,
                        data.len()
                    ));
                }
                Ok(Self { height, width, data })
            }

            pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> $elem) -> Self {
                let mut data = Vec::with_capacity(height * width);
                for r in 0..height {
                    for c in 0..width {
                        data.push(f(r, c));
                    }
                }
                Self { height, width, data }
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.height
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.width
            }

            #[inline]
            pub fn shape(&self) -> (usize, usize) {
                (self.height, self.width)
            }

            #[inline]
            pub fn len(&self) -> usize {
                self.data.len()
            }

            #[inline]
            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            #[inline]
            pub fn as_slice(&self) -> &[$elem] {
                &self.data
            }

            #[inline]
            pub fn as_mut_slice(&mut self) -> &mut [$elem] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<$elem> {
                self.data
            }

            pub fn row(&self, r: usize) -> &[$elem] {
                &self.data[r * self.width..(r + 1) * self.width]
            }

            pub fn row_mut(&mut self, r: usize) -> &mut [$elem] {
                &mut self.data[r * self.width..(r + 1) * self.width]
            }

            pub(crate) fn check_shape(&self, shape: (usize, usize), what: &str) -> Result<()> {
                if self.shape() != shape {
                    return Err(arg_err!(
                        "{what}: expected {}x{}, got {}x{}",
                        shape.0,
                        shape.1,
                        self.height,
                        self.width
                    ));
                }
                Ok(())
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = $elem;
            #[inline]
            fn index(&self, (r, c): (usize, usize)) -> &$elem {
                &self.data[r * self.width + c]
            }
        }

        impl IndexMut<(usize, usize)> for $name {
            #[inline]
            fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut $elem {
                &mut self.data[r * self.width + c]
            }
        }
    };
}

raster!(
    /// Complex-valued image: objects, probes and detector-plane wavefields.
    ComplexImage,
    C64,
    C64::new(0.0, 0.0)
);

raster!(
    /// Real-valued image: intensities and per-pixel precisions.
    RealImage,
    f64,
    0.0
);

impl ComplexImage {
    /// `Σ conj(self)·other`.
    pub fn inner(&self, other: &ComplexImage) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn abs(&self) -> RealImage {
        RealImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn abs_sqr(&self) -> RealImage {
        RealImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn arg(&self) -> RealImage {
        RealImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|z| z.arg()).collect(),
        }
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Copy of the rectangle `[row, row + h) × [col, col + w)`.
    pub fn crop(&self, row: usize, col: usize, h: usize, w: usize) -> Result<ComplexImage> {
        if row + h > self.height || col + w > self.width || h == 0 || w == 0 {
            return Err(arg_err!(
                "crop {h}x{w} at ({row}, {col}) outside {}x{} image",
                self.height,
                self.width
            ));
        }
        Ok(ComplexImage::from_fn(h, w, |r, c| self[(row + r, col + c)]))
    }
}

impl From<&RealImage> for ComplexImage {
    fn from(img: &RealImage) -> Self {
        ComplexImage {
            height: img.height,
            width: img.width,
            data: img.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }
}

impl RealImage {
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(ComplexImage::from_vec(2, 3, vec![C64::new(0.0, 0.0); 5]).is_err());
        assert!(RealImage::from_vec(0, 3, vec![]).is_err());
        let img = RealImage::from_vec(2, 3, (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(img[(1, 2)], 5.0);
        assert_eq!(img.row(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn crop_is_bounds_checked() {
        let img = ComplexImage::from_fn(4, 4, |r, c| C64::new((4 * r + c) as f64, 0.0));
        let sub = img.crop(1, 2, 2, 2).unwrap();
        assert_eq!(
            sub.as_slice().iter().map(|z| z.re).collect::<Vec<_>>(),
            vec![6.0, 7.0, 10.0, 11.0]
        );
        assert!(img.crop(3, 0, 2, 2).is_err());
    }
}
