//! Exit-wave to detector propagation.
//!
//! Only the far-field propagator (2-D DFT) is provided. It is orthonormal:
//! forward and adjoint both carry a `1/√M` factor so that the operator is
//! unitary.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{arg_err, Result};
use crate::image::ComplexImage;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    Dft2d,
}

/// A unitary map on window-sized fields, applied in place on row-major data.
pub trait Propagator: Sync {
    fn kind(&self) -> PropagatorKind;

    /// Window shape `(m_h, m_w)`.
    fn shape(&self) -> (usize, usize);

    fn forward_in_place(&self, buf: &mut [C64]);

    fn adjoint_in_place(&self, buf: &mut [C64]);

    fn propagate(&self, x: &ComplexImage) -> Result<ComplexImage> {
        x.check_shape(self.shape(), "propagate")?;
        let mut y = x.clone();
        self.forward_in_place(y.as_mut_slice());
        Ok(y)
    }

    fn propagate_adjoint(&self, y: &ComplexImage) -> Result<ComplexImage> {
        y.check_shape(self.shape(), "propagate_adjoint")?;
        let mut x = y.clone();
        self.adjoint_in_place(x.as_mut_slice());
        Ok(x)
    }
}

impl<P: Propagator + ?Sized> Propagator for &P {
    fn kind(&self) -> PropagatorKind {
        (**self).kind()
    }
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn forward_in_place(&self, buf: &mut [C64]) {
        (**self).forward_in_place(buf)
    }
    fn adjoint_in_place(&self, buf: &mut [C64]) {
        (**self).adjoint_in_place(buf)
    }
}

/// Orthonormal 2-D DFT evaluated directly from twiddle tables.
///
/// Costs `O(M·(m_h + m_w))` per transform. It is exact and dependency free,
/// which makes it the reference implementation; the `ptycho` crate ships an
/// FFT-backed equivalent for production sizes.
#[derive(Debug, Clone)]
pub struct Dft2d {
    shape: (usize, usize),
    row_twiddles: Vec<C64>,
    col_twiddles: Vec<C64>,
    scale: f64,
}

fn twiddles(n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            let t = -2.0 * PI * k as f64 / n as f64;
            C64::new(t.cos(), t.sin())
        })
        .collect()
}

/// `out[k] = Σ_n x[n]·w[(k·n) mod len]` for the strided line `x`.
fn dft_line(line: &[C64], tw: &[C64], inverse: bool, out: &mut [C64]) {
    let n = line.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        let mut idx = 0usize;
        for &x in line {
            let w = tw[idx];
            acc += x * if inverse { w.conj() } else { w };
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        *o = acc;
    }
}

impl Dft2d {
    pub fn new(shape: (usize, usize)) -> Result<Self> {
        if shape.0 == 0 || shape.1 == 0 {
            return Err(arg_err!("propagator shape must be positive, got {shape:?}"));
        }
        Ok(Self {
            shape,
            row_twiddles: twiddles(shape.1),
            col_twiddles: twiddles(shape.0),
            scale: 1.0 / ((shape.0 * shape.1) as f64).sqrt(),
        })
    }

    fn transform(&self, buf: &mut [C64], inverse: bool) {
        let (h, w) = self.shape;
        assert_eq!(buf.len(), h * w, "propagator buffer length");
        let mut line = vec![C64::new(0.0, 0.0); h.max(w)];
        let mut out = vec![C64::new(0.0, 0.0); h.max(w)];
        for row in buf.chunks_exact_mut(w) {
            dft_line(row, &self.row_twiddles, inverse, &mut out[..w]);
            row.copy_from_slice(&out[..w]);
        }
        for c in 0..w {
            for r in 0..h {
                line[r] = buf[r * w + c];
            }
            dft_line(&line[..h], &self.col_twiddles, inverse, &mut out[..h]);
            for r in 0..h {
                buf[r * w + c] = out[r] * self.scale;
            }
        }
    }
}

impl Propagator for Dft2d {
    fn kind(&self) -> PropagatorKind {
        PropagatorKind::Dft2d
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn forward_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, false)
    }

    fn adjoint_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, true)
    }
}
