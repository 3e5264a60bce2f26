use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EngineConfig;
use crate::error::{Error, Result};
use crate::geometry::{scatter_add_into, zip_window, ScanGeometry};
use crate::image::{ComplexImage, RealImage};
use crate::propagator::Propagator;
use crate::sim::{exit_wave, PtychoDataset};
use crate::C64;

/// Every message and belief of the solver.
///
/// Object-side quantities are object-sized vectors, scan-side ones are
/// window-sized (one per scan). Besides the messages `Ψ̃^(j)` the state
/// caches their back-propagations `F^H Ψ̃^(j)`, which is all the belief
/// update needs, so belief refreshes never call the propagator.
#[derive(Debug, Clone)]
pub struct MessageState {
    pub(crate) geom: ScanGeometry,
    /// Prior-side message into the linear block: mean `Õ_int` and precision `Γ̃_O,int`.
    pub(crate) o_tilde: Vec<C64>,
    pub(crate) gamma_o: Vec<f64>,
    /// Belief: `Ô_int`, `Γ̂_O,int` and the accumulator `Λ̂_O,int = Γ̂ ⊙ Ô`.
    pub(crate) o_hat: Vec<C64>,
    pub(crate) gamma_hat: Vec<f64>,
    pub(crate) lambda_hat: Vec<C64>,
    /// Data-side messages `Ψ̃^(j)_int` with scalar precisions `Γ̃^(j)_Ψ,int`.
    pub(crate) psi: Vec<Vec<C64>>,
    pub(crate) gamma_psi: Vec<f64>,
    /// `F^H Ψ̃^(j)_int`.
    pub(crate) back: Vec<Vec<C64>>,
    pub(crate) probe: Vec<C64>,
    pub(crate) probe_abs2: Vec<f64>,
}

impl MessageState {
    /// Initial state: `Õ_int = 0`, `Γ̃_O,int = 1`, data messages
    /// `Ψ̃^(j) = F[P ⊙ S^(j) O_init]` from a random `O_init ~ CN(0, I)` with
    /// precision `config.init_psi_precision`, and the matching belief.
    pub fn init<P: Propagator + ?Sized>(
        data: &PtychoDataset,
        config: &EngineConfig,
        prop: &P,
    ) -> Result<Self> {
        config.validate()?;
        let geom = data.geometry().clone();
        let probe = match (&config.probe_init, data.probe()) {
            (Some(p), _) | (None, Some(p)) => p.clone(),
            (None, None) => {
                return Err(Error::Config(
                    "no probe: the dataset has none and no initial probe was given".into(),
                ))
            }
        };
        probe.check_shape(geom.window(), "probe")?;
        if prop.shape() != geom.window() {
            return Err(Error::Config(alloc::format!(
                "propagator shape {:?} differs from window {:?}",
                prop.shape(),
                geom.window()
            )));
        }
        let n = geom.object_len();
        let m = geom.window_len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let half = core::f64::consts::FRAC_1_SQRT_2;
        let o_init: Vec<C64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re * half, im * half)
            })
            .collect();

        let probe = probe.into_vec();
        let mut psi = Vec::with_capacity(geom.n_scans());
        let mut back = Vec::with_capacity(geom.n_scans());
        for j in 0..geom.n_scans() {
            let mut ew = vec![C64::new(0.0, 0.0); m];
            exit_wave(&o_init, &probe, &geom, j, &mut ew);
            back.push(ew.clone());
            prop.forward_in_place(&mut ew);
            psi.push(ew);
        }
        let mut state = MessageState {
            o_tilde: vec![C64::new(0.0, 0.0); n],
            gamma_o: vec![1.0; n],
            o_hat: vec![C64::new(0.0, 0.0); n],
            gamma_hat: vec![0.0; n],
            lambda_hat: vec![C64::new(0.0, 0.0); n],
            gamma_psi: vec![config.init_psi_precision; geom.n_scans()],
            psi,
            back,
            probe_abs2: probe.iter().map(|p| p.norm_sqr()).collect(),
            probe,
            geom,
        };
        // F^H F is the identity only up to rounding; keep the cache exact.
        state.refresh_back(prop);
        state.belief_update();
        Ok(state)
    }

    pub(crate) fn refresh_back<P: Propagator + ?Sized>(&mut self, prop: &P) {
        for (b, p) in self.back.iter_mut().zip(&self.psi) {
            b.copy_from_slice(p);
            prop.adjoint_in_place(b);
        }
    }

    /// Full belief update from the current messages:
    /// `Γ̂ = Γ̃_O + Σ_j Γ̃^(j)_Ψ S^(j)T|P|²`,
    /// `Λ̂ = Γ̃_O ⊙ Õ + Σ_j Γ̃^(j)_Ψ S^(j)T[P* ⊙ F^H Ψ̃^(j)]`, `Ô = Λ̂ / Γ̂`.
    ///
    /// Scans are summed in index order, so the result does not depend on how
    /// the messages were produced.
    pub fn belief_update(&mut self) {
        let (gamma_hat, lambda_hat) = self.recompute_accumulators();
        self.gamma_hat = gamma_hat;
        self.lambda_hat = lambda_hat;
        for ((o, l), g) in self
            .o_hat
            .iter_mut()
            .zip(&self.lambda_hat)
            .zip(&self.gamma_hat)
        {
            *o = l / g;
        }
    }

    /// `(Γ̂, Λ̂)` recomputed from scratch without touching the state.
    pub fn recompute_accumulators(&self) -> (Vec<f64>, Vec<C64>) {
        let mut gamma_hat = self.gamma_o.clone();
        let mut lambda_hat: Vec<C64> = self
            .gamma_o
            .iter()
            .zip(&self.o_tilde)
            .map(|(g, o)| o * g)
            .collect();
        let mut wg = vec![0.0; self.probe.len()];
        let mut wl = vec![C64::new(0.0, 0.0); self.probe.len()];
        for j in 0..self.geom.n_scans() {
            let g = self.gamma_psi[j];
            for (k, (w, l)) in wg.iter_mut().zip(wl.iter_mut()).enumerate() {
                *w = g * self.probe_abs2[k];
                *l = self.probe[k].conj() * self.back[j][k] * g;
            }
            scatter_add_into(&mut gamma_hat, &wg, &self.geom, j);
            scatter_add_into(&mut lambda_hat, &wl, &self.geom, j);
        }
        (gamma_hat, lambda_hat)
    }

    /// Replaces the message of scan `j` and updates the belief incrementally:
    /// `Γ̂ += (Γ̃_new − Γ̃_old) S^(j)T|P|²` and
    /// `Λ̂ += S^(j)T[P* ⊙ (Γ̃_new F^H Ψ̃_new − Γ̃_old F^H Ψ̃_old)]`, then
    /// `Ô = Λ̂/Γ̂` on the window. `back` is `F^H psi`.
    pub fn incremental_refresh(&mut self, j: usize, psi: Vec<C64>, gamma: f64, back: Vec<C64>) {
        let g_old = self.gamma_psi[j];
        let mut dg = vec![0.0; self.probe.len()];
        let mut dl = vec![C64::new(0.0, 0.0); self.probe.len()];
        for k in 0..self.probe.len() {
            dg[k] = (gamma - g_old) * self.probe_abs2[k];
            dl[k] = self.probe[k].conj() * (back[k] * gamma - self.back[j][k] * g_old);
        }
        zip_window(&mut self.gamma_hat, &dg, &self.geom, j, |a, d| *a += d);
        zip_window(&mut self.lambda_hat, &dl, &self.geom, j, |a, d| *a += d);
        let (lambda, gamma_hat) = (&self.lambda_hat, &self.gamma_hat);
        // Indices of the window rectangle, visited through its own rows.
        let (r0, c0) = self.geom.offsets()[j];
        let (mh, mw) = self.geom.window();
        let w = self.geom.object_shape().1;
        for r in 0..mh {
            let start = (r0 + r) * w + c0;
            for idx in start..start + mw {
                self.o_hat[idx] = lambda[idx] / gamma_hat[idx];
            }
        }
        self.psi[j] = psi;
        self.back[j] = back;
        self.gamma_psi[j] = gamma;
    }

    /// Largest relative deviation of the stored `(Γ̂, Λ̂)` from a full recomputation.
    pub fn accumulator_drift(&self) -> f64 {
        let (g, l) = self.recompute_accumulators();
        let dg = self
            .gamma_hat
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
            .fold(0.0, f64::max);
        let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let dl = self
            .lambda_hat
            .iter()
            .zip(&l)
            .map(|(a, b)| (a - b).norm() / scale)
            .fold(0.0, f64::max);
        dg.max(dl)
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geom
    }

    /// Current object estimate `Ô_int`.
    pub fn object(&self) -> ComplexImage {
        let (h, w) = self.geom.object_shape();
        ComplexImage::from_vec(h, w, self.o_hat.clone()).expect("object-sized")
    }

    /// Posterior precision `Γ̂_O,int`.
    pub fn precision(&self) -> RealImage {
        let (h, w) = self.geom.object_shape();
        RealImage::from_vec(h, w, self.gamma_hat.clone()).expect("object-sized")
    }

    pub fn probe(&self) -> ComplexImage {
        let (h, w) = self.geom.window();
        ComplexImage::from_vec(h, w, self.probe.clone()).expect("window-sized")
    }

    pub fn lambda_hat(&self) -> &[C64] {
        &self.lambda_hat
    }

    pub fn prior_message(&self) -> (&[C64], &[f64]) {
        (&self.o_tilde, &self.gamma_o)
    }

    pub fn data_message(&self, j: usize) -> (&[C64], f64) {
        (&self.psi[j], self.gamma_psi[j])
    }

    pub fn data_precisions(&self) -> &[f64] {
        &self.gamma_psi
    }

    /// Smallest precision held anywhere in the state.
    pub fn min_precision(&self) -> f64 {
        let a = self.gamma_o.iter().copied().fold(f64::INFINITY, f64::min);
        let b = self.gamma_psi.iter().copied().fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.o_hat
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            && self.gamma_hat.iter().all(|g| g.is_finite())
            && self
                .probe
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn set_probe(&mut self, probe: Vec<C64>) {
        self.probe_abs2 = probe.iter().map(|p| p.norm_sqr()).collect();
        self.probe = probe;
    }

    /// Overwrites the data messages, e.g. to set up a test scenario. The
    /// belief is recomputed.
    pub fn set_data_messages<P: Propagator + ?Sized>(
        &mut self,
        psi: Vec<Vec<C64>>,
        gamma: Vec<f64>,
        prop: &P,
    ) -> Result<()> {
        if psi.len() != self.geom.n_scans() || gamma.len() != psi.len() {
            return Err(crate::error::arg_err!("need one message per scan"));
        }
        if psi.iter().any(|p| p.len() != self.geom.window_len()) {
            return Err(crate::error::arg_err!("messages must be window-sized"));
        }
        self.psi = psi;
        self.gamma_psi = gamma;
        self.refresh_back(prop);
        self.belief_update();
        Ok(())
    }

    /// Overwrites the prior-side message; the belief is recomputed.
    pub fn set_prior_message(&mut self, o_tilde: Vec<C64>, gamma: Vec<f64>) -> Result<()> {
        if o_tilde.len() != self.geom.object_len() || gamma.len() != o_tilde.len() {
            return Err(crate::error::arg_err!("prior message must be object-sized"));
        }
        self.o_tilde = o_tilde;
        self.gamma_o = gamma;
        self.belief_update();
        Ok(())
    }
}
