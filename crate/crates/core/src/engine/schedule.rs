use alloc::format;
use alloc::vec::Vec;
// Needed without std; shadowed by inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use super::{
    damp, em_update, message_update_by_data, message_update_by_prior, EngineConfig, MessageState,
    Scheme,
};
use crate::denoise::OutputNoise;
use crate::error::{Error, Result};
use crate::exec::ScanExecutor;
use crate::metrics::{fitness, nmse, Crop};
use crate::propagator::Propagator;
use crate::result::{IterationRecord, ReconstructionResult};
use crate::sim::PtychoDataset;

/// Refreshes the data message of scan `j`, damps it against the current one
/// and folds the difference into the belief incrementally.
pub fn sequential_step<P: Propagator + ?Sized>(
    state: &mut MessageState,
    j: usize,
    data: &PtychoDataset,
    noise: &OutputNoise,
    config: &EngineConfig,
    prop: &P,
) -> Result<()> {
    let raw = message_update_by_data(state, j, data, noise, config, prop)?;
    let msg = damp(raw, (&state.psi[j], state.gamma_psi[j]), config.mu);
    let mut back = msg.psi.clone();
    prop.adjoint_in_place(&mut back);
    state.incremental_refresh(j, msg.psi, msg.gamma, back);
    Ok(())
}

fn prior_step(state: &mut MessageState, config: &EngineConfig) -> Result<()> {
    let (o, g) = message_update_by_prior(state, config)?;
    state.o_tilde = o;
    state.gamma_o = g;
    state.belief_update();
    Ok(())
}

/// One outer iteration of the sequential scheme: every scan in geometry
/// order, then a full belief recomputation and the prior-side refresh.
pub fn iterate_sequential<P: Propagator + ?Sized>(
    state: &mut MessageState,
    data: &PtychoDataset,
    config: &EngineConfig,
    prop: &P,
) -> Result<()> {
    let noise = config.noise(data)?;
    for j in 0..state.geom.n_scans() {
        sequential_step(state, j, data, &noise, config, prop)?;
    }
    state.belief_update();
    prior_step(state, config)
}

/// One outer iteration of the parallel scheme: all data messages from the
/// same belief, through `exec`, then a full belief recomputation and the
/// prior-side refresh. The result does not depend on the executor.
pub fn iterate_parallel<P: Propagator + ?Sized, E: ScanExecutor>(
    state: &mut MessageState,
    data: &PtychoDataset,
    config: &EngineConfig,
    prop: &P,
    exec: &E,
) -> Result<()> {
    let noise = config.noise(data)?;
    let frozen = &*state;
    let results = exec.map_scans(state.geom.n_scans(), |j| {
        let raw = message_update_by_data(frozen, j, data, &noise, config, prop)?;
        let msg = damp(raw, (&frozen.psi[j], frozen.gamma_psi[j]), config.mu);
        let mut back = msg.psi.clone();
        prop.adjoint_in_place(&mut back);
        Ok((msg, back))
    });
    let results: Vec<_> = results.into_iter().collect::<Result<_>>()?;
    for (j, (msg, back)) in results.into_iter().enumerate() {
        state.psi[j] = msg.psi;
        state.gamma_psi[j] = msg.gamma;
        state.back[j] = back;
    }
    state.belief_update();
    prior_step(state, config)
}

/// Full reconstruction; see [`run_with`].
pub fn run<P: Propagator + ?Sized, E: ScanExecutor>(
    data: &PtychoDataset,
    config: &EngineConfig,
    prop: &P,
    exec: &E,
) -> Result<ReconstructionResult> {
    run_with(data, config, prop, exec, |_, _| {})
}

/// Initializes the state and runs `config.max_iter` outer iterations,
/// calling `observer` after every recorded one.
///
/// In blind mode each iteration after the warm-up ends with the EM update.
pub fn run_with<P, E, F>(
    data: &PtychoDataset,
    config: &EngineConfig,
    prop: &P,
    exec: &E,
    mut observer: F,
) -> Result<ReconstructionResult>
where
    P: Propagator + ?Sized,
    E: ScanExecutor,
    F: FnMut(&IterationRecord, &MessageState),
{
    let mut state = MessageState::init(data, config, prop)?;
    config.noise(data)?;
    let crop = config
        .crop
        .unwrap_or_else(|| Crop::central_half(data.geometry().object_shape()));
    let mut trace = Vec::new();
    let mut previous = state.o_hat.clone();
    for t in 1..=config.max_iter {
        let step = match config.scheme {
            Scheme::Sequential => iterate_sequential(&mut state, data, config, prop),
            Scheme::Parallel => iterate_parallel(&mut state, data, config, prop, exec),
        };
        let step = step.and_then(|_| {
            if config.blind() && t > config.em_warmup {
                em_update(&mut state, config, prop)
            } else {
                Ok(())
            }
        });
        if !state.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                what: "non-finite belief or probe".into(),
            });
        }
        step.map_err(|e| Error::Diverged {
            iteration: t,
            what: format!("{e}"),
        })?;

        let num: f64 = state
            .o_hat
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = previous.iter().map(|z| z.norm_sqr()).sum();
        let change = if den > 0.0 {
            (num / den).sqrt()
        } else {
            f64::INFINITY
        };
        previous.clone_from(&state.o_hat);

        let converged = config.tolerance.is_some_and(|tol| change < tol);
        let last = t == config.max_iter || converged;
        if t % config.record_every == 0 || last {
            let object = state.object();
            let fit = fitness(data, &object, &state.probe(), prop)?;
            let nmse_db = match data.truth() {
                Some(truth) => Some(nmse(truth, &object, crop)?.db),
                None => None,
            };
            let record = IterationRecord {
                iter: t,
                fitness: fit,
                nmse_db,
                change,
            };
            observer(&record, &state);
            trace.push(record);
        }
        if converged {
            break;
        }
    }
    Ok(ReconstructionResult {
        object: state.object(),
        precision: Some(state.precision()),
        probe: state.probe(),
        trace,
    })
}
