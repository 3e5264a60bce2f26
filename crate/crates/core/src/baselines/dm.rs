use alloc::vec;
use alloc::vec::Vec;

use super::{amplitude_project, initial_guess, BaselineConfig, Recorder};
use crate::error::Result;
use crate::exec::ScanExecutor;
use crate::geometry::{gather_into, scatter_add_into};
use crate::image::ComplexImage;
use crate::propagator::Propagator;
use crate::result::ReconstructionResult;
use crate::sim::{exit_wave, PtychoDataset};
use crate::C64;

/// Least-squares object (and, optionally, probe) consistent with the exit
/// waves `psi`: `O = Σ S^T(P*ψ) / Σ S^T|P|²`, then
/// `P = Σ O^(j)*ψ / Σ |O^(j)|²`. Pixels without illumination keep their value.
fn overlap_projection(
    psi: &[Vec<C64>],
    data: &PtychoDataset,
    obj: &mut ComplexImage,
    probe: &mut ComplexImage,
    update_probe: bool,
) {
    let geom = data.geometry();
    let m = geom.window_len();
    let mut num = vec![C64::new(0.0, 0.0); geom.object_len()];
    let mut den = vec![0.0; geom.object_len()];
    let p = probe.as_slice();
    let p2: Vec<f64> = p.iter().map(|z| z.norm_sqr()).collect();
    let mut w = vec![C64::new(0.0, 0.0); m];
    for (j, ps) in psi.iter().enumerate() {
        for k in 0..m {
            w[k] = p[k].conj() * ps[k];
        }
        scatter_add_into(&mut num, &w, geom, j);
        scatter_add_into(&mut den, &p2, geom, j);
    }
    for ((o, n), &d) in obj.as_mut_slice().iter_mut().zip(&num).zip(&den) {
        if d > 0.0 {
            *o = n / d;
        }
    }
    if !update_probe {
        return;
    }
    let mut pnum = vec![C64::new(0.0, 0.0); m];
    let mut pden = vec![0.0; m];
    let mut patch = vec![C64::new(0.0, 0.0); m];
    for (j, ps) in psi.iter().enumerate() {
        gather_into(obj.as_slice(), geom, j, &mut patch);
        for k in 0..m {
            pnum[k] += patch[k].conj() * ps[k];
            pden[k] += patch[k].norm_sqr();
        }
    }
    let floor = 1e-12 * pden.iter().copied().fold(0.0, f64::max) + f64::MIN_POSITIVE;
    for ((q, n), &d) in probe.as_mut_slice().iter_mut().zip(&pnum).zip(&pden) {
        *q = n / d.max(floor);
    }
}

/// Difference Map (Thibault et al. 2009) with `β = 1`:
/// `ψ ← ψ + Π_F(2Π_O ψ − ψ) − Π_O ψ`, where `Π_O` is the overlap projection
/// and `Π_F` the amplitude projection in the detector plane. The per-scan
/// work runs through `exec`.
pub fn run_difference_map<P: Propagator + ?Sized, E: ScanExecutor>(
    data: &PtychoDataset,
    cfg: &BaselineConfig,
    prop: &P,
    exec: &E,
) -> Result<ReconstructionResult> {
    let (mut obj, mut probe) = initial_guess(data, cfg)?;
    crate::metrics::check_model_shapes(data.geometry(), &obj, &probe, prop)?;
    let geom = data.geometry();
    let m = geom.window_len();
    let mut rec = Recorder::new(data, cfg, prop, &obj);
    let mut psi: Vec<Vec<C64>> = (0..geom.n_scans())
        .map(|j| {
            let mut w = vec![C64::new(0.0, 0.0); m];
            exit_wave(obj.as_slice(), probe.as_slice(), geom, j, &mut w);
            w
        })
        .collect();

    for t in 1..=cfg.iterations {
        let (o, p, current) = (&obj, &probe, &psi);
        psi = exec.map_scans(geom.n_scans(), |j| {
            let mut po = vec![C64::new(0.0, 0.0); m];
            exit_wave(o.as_slice(), p.as_slice(), geom, j, &mut po);
            let mut refl: Vec<C64> = po
                .iter()
                .zip(&current[j])
                .map(|(a, b)| a * 2.0 - b)
                .collect();
            prop.forward_in_place(&mut refl);
            let mut fixed = vec![C64::new(0.0, 0.0); m];
            amplitude_project(&refl, data.intensities()[j].as_slice(), &mut fixed);
            prop.adjoint_in_place(&mut fixed);
            (0..m).map(|k| current[j][k] + fixed[k] - po[k]).collect()
        });
        overlap_projection(&psi, data, &mut obj, &mut probe, cfg.update_probe);
        rec.record(t, &obj, &probe)?;
    }
    Ok(ReconstructionResult {
        object: obj,
        precision: None,
        probe,
        trace: rec.trace,
    })
}
