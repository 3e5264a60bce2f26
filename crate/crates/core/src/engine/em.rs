use alloc::vec;
use alloc::vec::Vec;

use super::{EngineConfig, MessageState};
use crate::error::Result;
use crate::geometry::gather_into;
use crate::propagator::Propagator;
use crate::C64;

/// Relative floor on the probe-update denominator.
const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `config.em_updates` EM sweeps for the probe and the per-scan data
/// precisions, with the belief held fixed. Each sweep maximizes the expected
/// log-likelihood over `P` (closed form, per pixel) and then over every
/// `Γ̃^(j)`. The belief is recomputed afterwards.
pub fn em_update<P: Propagator + ?Sized>(
    state: &mut MessageState,
    config: &EngineConfig,
    prop: &P,
) -> Result<()> {
    if config.em_updates == 0 {
        return Ok(());
    }
    let geom = state.geom.clone();
    let m = geom.window_len();
    let n_scans = geom.n_scans();
    // Belief restricted to each window: means and variances.
    let mut o_win = Vec::with_capacity(n_scans);
    let mut v_win = Vec::with_capacity(n_scans);
    for j in 0..n_scans {
        let mut o = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![0.0; m];
        gather_into(&state.o_hat, &geom, j, &mut o);
        gather_into(&state.gamma_hat, &geom, j, &mut g);
        g.iter_mut().for_each(|x| *x = 1.0 / *x);
        o_win.push(o);
        v_win.push(g);
    }

    let mut field = vec![C64::new(0.0, 0.0); m];
    for _ in 0..config.em_updates {
        let mut num = vec![C64::new(0.0, 0.0); m];
        let mut den = vec![0.0; m];
        for j in 0..n_scans {
            let g = state.gamma_psi[j];
            for k in 0..m {
                num[k] += o_win[j][k].conj() * state.back[j][k] * g;
                den[k] += g * (v_win[j][k] + o_win[j][k].norm_sqr());
            }
        }
        let dmax = den.iter().copied().fold(0.0, f64::max);
        let dfloor = DENOMINATOR_FLOOR * dmax + f64::MIN_POSITIVE;
        let probe: Vec<C64> = num
            .iter()
            .zip(&den)
            .map(|(n, &d)| n / d.max(dfloor))
            .collect();
        state.set_probe(probe);

        for j in 0..n_scans {
            let mut trace = 0.0;
            for k in 0..m {
                field[k] = state.probe[k] * o_win[j][k];
                trace += state.probe_abs2[k] * v_win[j][k];
            }
            prop.forward_in_place(&mut field);
            let resid: f64 = field
                .iter()
                .zip(&state.psi[j])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let gamma = m as f64 / (resid + trace);
            state.gamma_psi[j] = gamma.clamp(config.precision_floor, 1.0 / config.precision_floor);
        }
    }
    state.belief_update();
    Ok(())
}
