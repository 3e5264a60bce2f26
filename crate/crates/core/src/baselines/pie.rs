use alloc::vec;
// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use super::{amplitude_project, initial_guess, Algorithm, BaselineConfig, Recorder};
use crate::error::Result;
use crate::geometry::{gather_into, zip_window};
use crate::propagator::Propagator;
use crate::result::ReconstructionResult;
use crate::sim::{exit_wave, PtychoDataset};
use crate::C64;

/// PIE, ePIE or rPIE, sweeping the scans in geometry order.
///
/// With `Δ = ψ − P⊙O^(j)` the amplitude-projected exit-wave residual:
///
/// * PIE (Rodenburg and Faulkner 2004):
///   `O += (|P|/max|P|) · P*Δ / (|P|² + α·max|P|²)`
/// * ePIE (Maiden and Rodenburg 2009): `O += α·P*Δ / max|P|²`
/// * rPIE (Maiden, Johnson and Li 2017): `O += P*Δ / ((1−α)|P|² + α·max|P|²)`
///
/// The probe update, when enabled, is the rPIE rule with `O` and `P`
/// exchanged and `β` in place of `α`; for `β = 1` that is the ePIE rule
/// `P += O*Δ / max|O|²`. PIE and ePIE use `β` as the probe step instead.
pub fn run_pie_family<P: Propagator + ?Sized>(
    data: &PtychoDataset,
    cfg: &BaselineConfig,
    prop: &P,
) -> Result<ReconstructionResult> {
    let (mut obj, mut probe) = initial_guess(data, cfg)?;
    crate::metrics::check_model_shapes(data.geometry(), &obj, &probe, prop)?;
    let geom = data.geometry();
    let m = geom.window_len();
    let mut rec = Recorder::new(data, cfg, prop, &obj);
    let mut field = vec![C64::new(0.0, 0.0); m];
    let mut proj = vec![C64::new(0.0, 0.0); m];
    let mut patch = vec![C64::new(0.0, 0.0); m];
    let mut upd = vec![C64::new(0.0, 0.0); m];
    let (alpha, beta) = (cfg.alpha, cfg.beta);

    for t in 1..=cfg.iterations {
        for j in 0..geom.n_scans() {
            let p = probe.as_mut_slice();
            exit_wave(obj.as_slice(), p, geom, j, &mut field);
            prop.forward_in_place(&mut field);
            amplitude_project(&field, data.intensities()[j].as_slice(), &mut proj);
            prop.adjoint_in_place(&mut proj);
            gather_into(obj.as_slice(), geom, j, &mut patch);
            // proj becomes the residual Δ.
            for k in 0..m {
                proj[k] -= p[k] * patch[k];
            }

            let p2max = p.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
            if p2max > 0.0 {
                let pmax = p2max.sqrt();
                for k in 0..m {
                    let a2 = p[k].norm_sqr();
                    let step = p[k].conj() * proj[k];
                    upd[k] = match cfg.algorithm {
                        Algorithm::Pie => step * (a2.sqrt() / pmax / (a2 + alpha * p2max)),
                        Algorithm::EPie => step * (alpha / p2max),
                        _ => step / ((1.0 - alpha) * a2 + alpha * p2max),
                    };
                }
                zip_window(obj.as_mut_slice(), &upd, geom, j, |o, d| *o += d);
            }

            if cfg.update_probe {
                let o2max = patch.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
                if o2max > 0.0 {
                    for k in 0..m {
                        let step = patch[k].conj() * proj[k];
                        p[k] += match cfg.algorithm {
                            Algorithm::RPie => {
                                step / ((1.0 - beta) * patch[k].norm_sqr() + beta * o2max)
                            }
                            _ => step * (beta / o2max),
                        };
                    }
                }
            }
        }
        rec.record(t, &obj, &probe)?;
    }
    Ok(ReconstructionResult {
        object: obj,
        precision: None,
        probe,
        trace: rec.trace,
    })
}
