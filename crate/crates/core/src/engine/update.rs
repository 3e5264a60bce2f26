use alloc::vec;
use alloc::vec::Vec;

// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use super::{EngineConfig, MessageState};
use crate::denoise::{g_in, g_out, OutputNoise, Prior};
use crate::error::Result;
use crate::geometry::gather_into;
use crate::propagator::Propagator;
use crate::sim::PtychoDataset;
use crate::C64;

/// A freshly computed data-side message for one scan, before damping.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMessage {
    pub psi: Vec<C64>,
    pub gamma: f64,
}

/// Refreshes the data message of scan `j` from the current belief.
///
/// Projects the belief onto the detector plane, removes the scan's own
/// message to form the extrinsic input, applies the output denoiser and
/// divides the result by the extrinsic input again.
pub fn message_update_by_data<P: Propagator + ?Sized>(
    state: &MessageState,
    j: usize,
    data: &PtychoDataset,
    noise: &OutputNoise,
    config: &EngineConfig,
    prop: &P,
) -> Result<DataMessage> {
    let geom = &state.geom;
    geom.check_scan(j)?;
    let m = geom.window_len();
    let floor = config.precision_floor;

    let mut psi_hat = vec![C64::new(0.0, 0.0); m];
    let mut var = vec![0.0; m];
    gather_into(&state.o_hat, geom, j, &mut psi_hat);
    gather_into(&state.gamma_hat, geom, j, &mut var);
    let mut trace = 0.0;
    for k in 0..m {
        psi_hat[k] *= state.probe[k];
        trace += state.probe_abs2[k] / var[k];
    }
    prop.forward_in_place(&mut psi_hat);
    let gamma_hat_psi = m as f64 / trace;

    let (psi_old, g_old) = (&state.psi[j], state.gamma_psi[j]);
    let (g_ext, psi_ext) = match extrinsic(gamma_hat_psi, g_old, floor) {
        Some(g) => (
            g,
            psi_hat
                .iter()
                .zip(psi_old)
                .map(|(h, o)| (h * gamma_hat_psi - o * g_old) / g)
                .collect(),
        ),
        None => (floor, psi_hat),
    };

    let mut post = vec![C64::new(0.0, 0.0); m];
    let moments = g_out(
        noise,
        &psi_ext,
        g_ext,
        data.intensities()[j].as_slice(),
        &mut post,
    )?;
    let g_post = 1.0 / moments.variance;
    let msg = match extrinsic(g_post, g_ext, floor) {
        Some(gamma) => {
            let psi = post
                .iter()
                .zip(&psi_ext)
                .map(|(p, e)| (p * g_post - e * g_ext) / gamma)
                .collect();
            DataMessage { psi, gamma }
        }
        None => DataMessage {
            psi: post,
            gamma: floor,
        },
    };
    Ok(msg)
}

/// Refreshes the prior-side message from the current belief and returns the
/// new `(Õ_int, Γ̃_O,int)`. The Gaussian prior always gives `(0, 1)`.
pub fn message_update_by_prior(
    state: &MessageState,
    config: &EngineConfig,
) -> Result<(Vec<C64>, Vec<f64>)> {
    let n = state.geom.object_len();
    let gaussian = match config.prior {
        Prior::Gaussian => true,
        Prior::BernoulliGaussian { rho } => rho >= 1.0,
    };
    if gaussian {
        config.prior.validate()?;
        return Ok((vec![C64::new(0.0, 0.0); n], vec![1.0; n]));
    }
    let floor = config.precision_floor;
    let mut g_ext = vec![0.0; n];
    let mut o_ext = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        (g_ext[k], o_ext[k]) = match extrinsic(state.gamma_hat[k], state.gamma_o[k], floor) {
            Some(g) => (
                g,
                (state.lambda_hat[k] - state.o_tilde[k] * state.gamma_o[k]) / g,
            ),
            None => (floor, state.o_hat[k]),
        };
    }
    let mut mean = vec![C64::new(0.0, 0.0); n];
    let mut var = vec![0.0; n];
    g_in(&config.prior, &o_ext, &g_ext, &mut mean, &mut var)?;
    let mut o_new = mean;
    let mut g_new = var;
    for k in 0..n {
        let g_post = 1.0 / g_new[k];
        g_new[k] = match extrinsic(g_post, g_ext[k], floor) {
            Some(g) => {
                o_new[k] = (o_new[k] * g_post - o_ext[k] * g_ext[k]) / g;
                g
            }
            None => floor,
        };
    }
    Ok((o_new, g_new))
}

/// Precision `total − part` of a Gaussian quotient, or `None` when it falls
/// below `floor`. The caller then uses `floor` as the precision and a bounded
/// mean (the numerator's mean), so the clamped message carries almost no
/// information instead of an unbounded mean.
fn extrinsic(total: f64, part: f64, floor: f64) -> Option<f64> {
    let g = total - part;
    (g >= floor).then_some(g)
}

/// Damped precision `(μ·raw^{-1/2} + (1−μ)·old^{-1/2})^{-2}`.
pub fn damp_precision(raw: f64, old: f64, mu: f64) -> f64 {
    if mu == 1.0 {
        return raw;
    }
    if raw == old {
        return old;
    }
    let s = mu / raw.sqrt() + (1.0 - mu) / old.sqrt();
    1.0 / (s * s)
}

/// Damps a message: means are mixed linearly, precisions through their
/// inverse square roots. `μ = 1` returns `raw` and `raw = old` returns `old`,
/// both bit for bit.
pub fn damp(raw: DataMessage, old: (&[C64], f64), mu: f64) -> DataMessage {
    if mu == 1.0 {
        return raw;
    }
    let psi = raw
        .psi
        .iter()
        .zip(old.0)
        .map(|(&r, &o)| if r == o { o } else { r * mu + o * (1.0 - mu) })
        .collect();
    DataMessage {
        psi,
        gamma: damp_precision(raw.gamma, old.1, mu),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_examples() {
        assert_eq!(damp_precision(4.0, 1.0, 0.5), 16.0 / 9.0);
        assert_eq!(damp_precision(4.0, 1.0, 1.0), 4.0);
        assert_eq!(damp_precision(0.3, 0.3, 0.37), 0.3);
        let raw = DataMessage {
            psi: vec![C64::new(0.1, 0.7), C64::new(2.0, -1.0)],
            gamma: 3.0,
        };
        let old = [C64::new(0.1, 0.7), C64::new(0.0, 1.0)];
        let d = damp(raw.clone(), (&old, 3.0), 0.3);
        assert_eq!(d.psi[0], old[0]);
        assert_eq!(d.gamma, 3.0);
        assert!((d.psi[1] - C64::new(0.6, 0.4)).norm() < 1e-15);
        assert_eq!(damp(raw.clone(), (&old, 1.0), 1.0), raw);
    }
}
