//! Scan geometry and the selection operators.
//!
//! Scan `j` selects the `window`-sized rectangle whose top-left corner is
//! `offsets[j]`. [`gather`] applies the selection, [`scatter_add`] its
//! adjoint (transpose), so `⟨scatter_add(0, w, j), v⟩ = ⟨w, gather(v, j)⟩`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::AddAssign;

use crate::error::{arg_err, Error, Result};
use crate::image::{ComplexImage, RealImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanGeometry {
    object_shape: (usize, usize),
    window: (usize, usize),
    offsets: Vec<(usize, usize)>,
}

impl ScanGeometry {
    /// Validates that every window lies inside the object. Offsets are kept
    /// in the given order, which is the processing order of sequential solvers.
    pub fn new(
        object_shape: (usize, usize),
        window: (usize, usize),
        offsets: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if object_shape.0 == 0 || object_shape.1 == 0 || window.0 == 0 || window.1 == 0 {
            return Err(arg_err!(
                "object {object_shape:?} and window {window:?} must be non-empty"
            ));
        }
        if offsets.is_empty() {
            return Err(arg_err!("a scan geometry needs at least one scan"));
        }
        for (j, &(r, c)) in offsets.iter().enumerate() {
            if r + window.0 > object_shape.0 || c + window.1 > object_shape.1 {
                return Err(Error::Geometry {
                    scan: j,
                    reason: format!(
                        "window {}x{} at ({r}, {c}) leaves the {}x{} object",
                        window.0, window.1, object_shape.0, object_shape.1
                    ),
                });
            }
        }
        Ok(Self {
            object_shape,
            window,
            offsets,
        })
    }

    #[inline]
    pub fn object_shape(&self) -> (usize, usize) {
        self.object_shape
    }

    #[inline]
    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    /// Pixels per window (`M`).
    #[inline]
    pub fn window_len(&self) -> usize {
        self.window.0 * self.window.1
    }

    #[inline]
    pub fn object_len(&self) -> usize {
        self.object_shape.0 * self.object_shape.1
    }

    #[inline]
    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.offsets
    }

    /// Number of scans (`J`).
    #[inline]
    pub fn n_scans(&self) -> usize {
        self.offsets.len()
    }

    pub(crate) fn check_scan(&self, j: usize) -> Result<()> {
        if j >= self.offsets.len() {
            return Err(arg_err!(
                "scan index {j} out of range for {} scans",
                self.offsets.len()
            ));
        }
        Ok(())
    }

    /// Per-pixel count of windows covering each object pixel.
    pub fn coverage(&self) -> Vec<u32> {
        let mut cover = alloc::vec![0u32; self.object_len()];
        for j in 0..self.n_scans() {
            for_each_row(self, j, |obj, _| {
                cover[obj].iter_mut().for_each(|c| *c += 1)
            });
        }
        cover
    }

    /// Number of object pixels inside at least one window.
    pub fn covered_pixels(&self) -> usize {
        self.coverage().iter().filter(|&&c| c > 0).count()
    }

    /// Same scans visited in a different order.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let offsets = order
            .iter()
            .map(|&j| {
                self.offsets
                    .get(j)
                    .copied()
                    .ok_or_else(|| arg_err!("scan index {j} out of range"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.object_shape, self.window, offsets)
    }
}

/// Calls `f(object_row_range, window_row_range)` once per window row of scan `j`.
#[inline]
fn for_each_row(
    geom: &ScanGeometry,
    j: usize,
    mut f: impl FnMut(core::ops::Range<usize>, core::ops::Range<usize>),
) {
    let (r0, c0) = geom.offsets[j];
    let (mh, mw) = geom.window;
    let w = geom.object_shape.1;
    for r in 0..mh {
        let start = (r0 + r) * w + c0;
        f(start..start + mw, r * mw..(r + 1) * mw);
    }
}

/// Slice-level selection `out = S^(j) obj`; `out` has window length.
#[inline]
pub fn gather_into<T: Copy>(obj: &[T], geom: &ScanGeometry, j: usize, out: &mut [T]) {
    for_each_row(geom, j, |o, w| out[w].copy_from_slice(&obj[o]));
}

/// Slice-level adjoint `acc += S^(j)T win`.
#[inline]
pub fn scatter_add_into<T: Copy + AddAssign>(
    acc: &mut [T],
    win: &[T],
    geom: &ScanGeometry,
    j: usize,
) {
    for_each_row(geom, j, |o, w| {
        acc[o].iter_mut().zip(&win[w]).for_each(|(a, &b)| *a += b);
    });
}

/// Applies `f(object_pixel, window_pixel)` over the rectangle of scan `j`.
#[inline]
pub fn zip_window<T, U>(
    obj: &mut [T],
    win: &[U],
    geom: &ScanGeometry,
    j: usize,
    mut f: impl FnMut(&mut T, &U),
) {
    for_each_row(geom, j, |o, w| {
        obj[o].iter_mut().zip(&win[w]).for_each(|(a, b)| f(a, b));
    });
}

/// The sub-image `O^(j) = S^(j) O` seen by scan `j`.
pub fn gather(obj: &ComplexImage, geom: &ScanGeometry, j: usize) -> Result<ComplexImage> {
    obj.check_shape(geom.object_shape, "gather object")?;
    geom.check_scan(j)?;
    let mut out = ComplexImage::zeros(geom.window.0, geom.window.1);
    gather_into(obj.as_slice(), geom, j, out.as_mut_slice());
    Ok(out)
}

/// Real-valued counterpart of [`gather`].
pub fn gather_real(obj: &RealImage, geom: &ScanGeometry, j: usize) -> Result<RealImage> {
    obj.check_shape(geom.object_shape, "gather object")?;
    geom.check_scan(j)?;
    let mut out = RealImage::zeros(geom.window.0, geom.window.1);
    gather_into(obj.as_slice(), geom, j, out.as_mut_slice());
    Ok(out)
}

/// Adds `win` into the rectangle of scan `j`; pixels outside it are untouched.
pub fn scatter_add(
    acc: &mut ComplexImage,
    win: &ComplexImage,
    geom: &ScanGeometry,
    j: usize,
) -> Result<()> {
    acc.check_shape(geom.object_shape, "scatter accumulator")?;
    win.check_shape(geom.window, "scatter window")?;
    geom.check_scan(j)?;
    scatter_add_into(acc.as_mut_slice(), win.as_slice(), geom, j);
    Ok(())
}

/// Real-valued counterpart of [`scatter_add`].
pub fn scatter_add_real(
    acc: &mut RealImage,
    win: &RealImage,
    geom: &ScanGeometry,
    j: usize,
) -> Result<()> {
    acc.check_shape(geom.object_shape, "scatter accumulator")?;
    win.check_shape(geom.window, "scatter window")?;
    geom.check_scan(j)?;
    scatter_add_into(acc.as_mut_slice(), win.as_slice(), geom, j);
    Ok(())
}
