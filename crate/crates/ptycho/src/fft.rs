//! Orthonormal 2-D DFT backed by `rustfft`.

use std::sync::Arc;

use ptycho_core::propagator::PropagatorKind;
use ptycho_core::{Error, Propagator, C64};
use rustfft::{Fft, FftPlanner};

/// Far-field propagator with the same convention as
/// [`ptycho_core::Dft2d`] (`1/√M` on both directions), in `O(M log M)`.
#[derive(Clone)]
pub struct FftPropagator {
    shape: (usize, usize),
    rows: [Arc<dyn Fft<f64>>; 2],
    cols: [Arc<dyn Fft<f64>>; 2],
    scale: f64,
}

impl std::fmt::Debug for FftPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPropagator")
            .field("shape", &self.shape)
            .finish()
    }
}

impl FftPropagator {
    pub fn new(shape: (usize, usize)) -> ptycho_core::Result<Self> {
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Argument(format!(
                "propagator shape must be positive, got {shape:?}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            shape,
            rows: [
                planner.plan_fft_forward(shape.1),
                planner.plan_fft_inverse(shape.1),
            ],
            cols: [
                planner.plan_fft_forward(shape.0),
                planner.plan_fft_inverse(shape.0),
            ],
            scale: 1.0 / ((shape.0 * shape.1) as f64).sqrt(),
        })
    }

    fn transform(&self, buf: &mut [C64], dir: usize) {
        let (h, w) = self.shape;
        assert_eq!(buf.len(), h * w, "propagator buffer length");
        let (rows, cols) = (&self.rows[dir], &self.cols[dir]);
        let mut scratch = vec![
            C64::new(0.0, 0.0);
            rows.get_inplace_scratch_len()
                .max(cols.get_inplace_scratch_len())
        ];
        rows.process_with_scratch(buf, &mut scratch);
        let mut col = vec![C64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = buf[r * w + c];
            }
            cols.process_with_scratch(&mut col, &mut scratch);
            for r in 0..h {
                buf[r * w + c] = col[r] * self.scale;
            }
        }
    }
}

impl Propagator for FftPropagator {
    fn kind(&self) -> PropagatorKind {
        PropagatorKind::Dft2d
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn forward_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, 0)
    }

    fn adjoint_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, 1)
    }
}
