//! Independent transcriptions of the engine updates and the denoisers, with
//! scoring functions shared by the core tests and the acceptance suite.

use super::{random_complex, rel_err, rel_err_real, rng, Mat};
use ptycho_core::denoise::{g_in, g_out, OutputNoise, Prior, MAGNITUDE_FLOOR};
use ptycho_core::engine::{
    iterate_parallel, iterate_sequential, sequential_step, EngineConfig, MessageState, Scheme,
};
use ptycho_core::sim::{add_noise, forward, NoiseSpec};
use ptycho_core::{ComplexImage, Dft2d, PtychoDataset, ScanGeometry, Serial, C64};
use rand::Rng;
use std::f64::consts::PI;

pub struct Setup {
    pub data: PtychoDataset,
    pub a: Vec<Mat>,
    pub psi: Vec<Vec<C64>>,
    pub gamma_psi: Vec<f64>,
    pub o_tilde: Vec<C64>,
    pub gamma_o: Vec<f64>,
}

pub fn setup(seed: u64) -> Setup {
    let mut r = rng(seed);
    let (n, m) = ((16, 16), (8, 8));
    let geom = ScanGeometry::new(n, m, vec![(0, 0), (4, 6), (8, 8)]).unwrap();
    let probe = ComplexImage::from_vec(8, 8, random_complex(&mut r, 64, 2.0)).unwrap();
    let obj = ComplexImage::from_vec(16, 16, random_complex(&mut r, 256, 1.0)).unwrap();
    let prop = Dft2d::new(m).unwrap();
    let fields = forward(&obj, &probe, &geom, &prop).unwrap();
    let (i, sigma) = add_noise(&fields, NoiseSpec { snr_db: 20.0, seed }).unwrap();
    let data = PtychoDataset::new(geom.clone(), i, sigma, Some(probe.clone()), Some(obj)).unwrap();

    let f = Mat::dft2(8, 8);
    let p = Mat::diag(probe.as_slice());
    let a = (0..3)
        .map(|j| f.mul(&p).mul(&Mat::selection(&geom, j)))
        .collect();
    let psi = (0..3).map(|_| random_complex(&mut r, 64, 3.0)).collect();
    let gamma_psi = (0..3).map(|_| r.random_range(0.2..2.0)).collect();
    let o_tilde = random_complex(&mut r, 256, 1.0);
    let gamma_o = (0..256).map(|_| r.random_range(0.5..3.0)).collect();
    Setup {
        data,
        a,
        psi,
        gamma_psi,
        o_tilde,
        gamma_o,
    }
}

/// Belief `(Ô, Γ̂)` from the messages: diagonal of the summed precision
/// operator and the summed information vector.
pub fn belief(
    s: &Setup,
    psi: &[Vec<C64>],
    g: &[f64],
    o_t: &[C64],
    g_o: &[f64],
) -> (Vec<C64>, Vec<f64>) {
    let n = o_t.len();
    let mut prec = g_o.to_vec();
    let mut info: Vec<C64> = o_t.iter().zip(g_o).map(|(o, g)| o * g).collect();
    for (j, a) in s.a.iter().enumerate() {
        let gram = a.h().mul(a);
        let back = a.h().apply(&psi[j]);
        for k in 0..n {
            prec[k] += g[j] * gram.at(k, k).re;
            info[k] += back[k] * g[j];
        }
    }
    let mean = info.iter().zip(&prec).map(|(l, g)| l / g).collect();
    (mean, prec)
}

/// Gaussian quotient with the floor rule: below the floor the message takes
/// the floor precision and the numerator's mean.
pub fn quotient(num: (&[C64], f64), den: (&[C64], f64), floor: f64) -> (Vec<C64>, f64) {
    let g = num.1 - den.1;
    if g < floor {
        return (num.0.to_vec(), floor);
    }
    let mean = num
        .0
        .iter()
        .zip(den.0)
        .map(|(a, b)| (a * num.1 - b * den.1) / g)
        .collect();
    (mean, g)
}

/// Laplace posterior of one detector pixel under `√I ~ N(|Ψ|, σ²)` and
/// `Ψ ~ CN(ψ, 1/γ)`, expanded at the (floored) prior magnitude `r`. The log
/// posterior along the ray of `ψ` is `−(y − ρ)²/(2σ²) − γ(ρ − r)²`; its
/// curvature gives the radial variance and `−γ|ρe^{iθ} − r|²` the tangential one.
pub fn laplace(sigma: f64, psi: C64, gamma: f64, intensity: f64, floor: f64) -> (C64, f64) {
    let y = intensity.sqrt();
    let r = psi.norm().max(floor);
    let u = if psi.norm() > 0.0 {
        psi / psi.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let rho = (y / (sigma * sigma) + 2.0 * gamma * r) / (1.0 / (sigma * sigma) + 2.0 * gamma);
    let v_rad = 1.0 / (1.0 / (sigma * sigma) + 2.0 * gamma);
    let v_tan = rho / (2.0 * gamma * r);
    (u * rho, v_rad + v_tan)
}

pub fn oracle(
    s: &Setup,
    cfg: &EngineConfig,
) -> (
    Vec<C64>,
    Vec<f64>,
    Vec<(Vec<C64>, f64)>,
    (Vec<C64>, Vec<f64>),
) {
    let floor = cfg.precision_floor;
    let sigma = s.data.sigma();
    let (o_hat, g_hat) = belief(s, &s.psi, &s.gamma_psi, &s.o_tilde, &s.gamma_o);
    let inv: Vec<C64> = g_hat.iter().map(|g| C64::new(1.0 / g, 0.0)).collect();
    let cov = Mat::diag(&inv);
    let m = 64.0;

    let mut msgs = Vec::new();
    for (j, a) in s.a.iter().enumerate() {
        let psi_hat = a.apply(&o_hat);
        let g_psi = m / a.mul(&cov).mul(&a.h()).trace().re;
        let (psi_ext, g_ext) = quotient((&psi_hat, g_psi), (&s.psi[j], s.gamma_psi[j]), floor);
        let i = s.data.intensities()[j].as_slice();
        let max = psi_ext.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mag_floor = 1e-8 * max + 1e-30;
        let (post, vars): (Vec<C64>, Vec<f64>) = psi_ext
            .iter()
            .zip(i)
            .map(|(p, &y)| laplace(sigma, *p, g_ext, y, mag_floor))
            .unzip();
        let g_post = m / vars.iter().sum::<f64>();
        let (raw, g_raw) = quotient((&post, g_post), (&psi_ext, g_ext), floor);
        let mu = cfg.mu;
        let psi_new: Vec<C64> = raw
            .iter()
            .zip(&s.psi[j])
            .map(|(r, o)| r * mu + o * (1.0 - mu))
            .collect();
        let g_new = (mu / g_raw.sqrt() + (1.0 - mu) / s.gamma_psi[j].sqrt()).powi(-2);
        msgs.push((psi_new, g_new));
    }
    let psi: Vec<Vec<C64>> = msgs.iter().map(|m| m.0.clone()).collect();
    let g: Vec<f64> = msgs.iter().map(|m| m.1).collect();
    let (o_mid, g_mid) = belief(s, &psi, &g, &s.o_tilde, &s.gamma_o);

    let prior = match cfg.prior {
        Prior::Gaussian => (vec![C64::new(0.0, 0.0); 256], vec![1.0; 256]),
        Prior::BernoulliGaussian { rho } => {
            let mut o_new = Vec::new();
            let mut g_new = Vec::new();
            for k in 0..256 {
                let lam = o_mid[k] * g_mid[k];
                let (oe, ge) = quotient(
                    (&[lam / g_mid[k]], g_mid[k]),
                    (&[s.o_tilde[k]], s.gamma_o[k]),
                    floor,
                );
                let (mean, var) = bg_posterior(rho, oe[0], ge);
                let (om, gm) = quotient((&[mean], 1.0 / var), (&oe, ge), floor);
                o_new.push(om[0]);
                g_new.push(gm);
            }
            (o_new, g_new)
        }
    };
    let (o_end, g_end) = belief(s, &psi, &g, &prior.0, &prior.1);
    (o_end, g_end, msgs, prior)
}

/// Posterior moments of `ρ·CN(0,1) + (1−ρ)·δ₀` observed through `CN(o, 1/g)`,
/// from the two evidence terms written out directly.
pub fn bg_posterior(rho: f64, o: C64, g: f64) -> (C64, f64) {
    let cn = |z: C64, v: f64| (-z.norm_sqr() / v).exp() / (std::f64::consts::PI * v);
    let on = rho * cn(o, 1.0 + 1.0 / g);
    let off = (1.0 - rho) * cn(o, 1.0 / g);
    let pi = on / (on + off);
    let m = o * g / (1.0 + g);
    let v = 1.0 / (1.0 + g);
    let mean = m * pi;
    (mean, pi * (v + m.norm_sqr()) - mean.norm_sqr())
}

pub const POINTS: usize = 201;
pub const HALF_WIDTH: f64 = 10.0;

/// Moments `(Z, E[x], E|x − c|²)` of `exp(log_w(x))` on the complex plane by
/// the trapezoid rule on a square grid centred at `c` with per-axis spread
/// `s`. Weights are exponentiated relative to their maximum; `Z` is returned
/// as a logarithm.
pub fn quadrature(log_w: impl Fn(C64) -> f64, c: C64, s: f64) -> (f64, C64, f64) {
    let h = 2.0 * HALF_WIDTH * s / (POINTS - 1) as f64;
    let node = |i: usize| -HALF_WIDTH * s + i as f64 * h;
    let trap = |i: usize| if i == 0 || i == POINTS - 1 { 0.5 } else { 1.0 };
    let mut logs = Vec::with_capacity(POINTS * POINTS);
    for a in 0..POINTS {
        for b in 0..POINTS {
            let x = c + C64::new(node(a), node(b));
            logs.push((x, trap(a) * trap(b), log_w(x)));
        }
    }
    let top = logs.iter().map(|l| l.2).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1) = (0.0, C64::new(0.0, 0.0));
    for &(x, t, l) in &logs {
        let w = t * (l - top).exp();
        z += w;
        m1 += x * w;
    }
    let mean = m1 / z;
    let m2: f64 = logs
        .iter()
        .map(|&(x, t, l)| t * (l - top).exp() * (x - mean).norm_sqr())
        .sum::<f64>()
        / z;
    (top + (z * h * h).ln(), mean, m2)
}

pub fn log_cn(x: C64, mean: C64, var: f64) -> f64 {
    -(x - mean).norm_sqr() / var - (PI * var).ln()
}

/// Posterior moments of one pixel under the prior given `CN(o, 1/g)`. The
/// point mass of the Bernoulli-Gaussian prior enters through its exact
/// evidence; only the continuous part is integrated.
pub fn in_oracle(prior: Prior, o: C64, g: f64) -> (C64, f64) {
    let centre = o * g / (1.0 + g);
    let s = (0.5 / (1.0 + g)).sqrt();
    let (log_z, mean, var) = quadrature(
        |x| log_cn(x, C64::new(0.0, 0.0), 1.0) + log_cn(o, x, 1.0 / g),
        centre,
        s,
    );
    match prior {
        Prior::Gaussian => (mean, var),
        Prior::BernoulliGaussian { rho } => {
            let on = rho.ln() + log_z;
            let off = (1.0 - rho).ln() + log_cn(o, C64::new(0.0, 0.0), 1.0 / g);
            let pi = 1.0 / (1.0 + (off - on).exp());
            let m = mean * pi;
            // E|x − m|² over the mixture: active part around its own mean plus
            // the spread between the components.
            let v = pi * (var + (mean - m).norm_sqr()) + (1.0 - pi) * m.norm_sqr();
            (m, v)
        }
    }
}

/// Outcome of one dense-oracle comparison.
pub struct DenseReport {
    /// Largest relative error over belief, data messages and prior message.
    pub max_rel: f64,
    /// Prior-side quotients that hit the precision floor.
    pub clamped: usize,
}

/// Runs one parallel engine iteration from randomized messages and compares
/// every updated quantity with [`oracle`].
pub fn dense_check(prior: Prior, mu: f64, seed: u64) -> DenseReport {
    let s = setup(seed);
    let mut cfg = EngineConfig::new(prior);
    cfg.mu = mu;
    cfg.scheme = Scheme::Parallel;
    let prop = Dft2d::new((8, 8)).unwrap();
    let mut state = MessageState::init(&s.data, &cfg, &prop).unwrap();
    state
        .set_data_messages(s.psi.clone(), s.gamma_psi.clone(), &prop)
        .unwrap();
    state
        .set_prior_message(s.o_tilde.clone(), s.gamma_o.clone())
        .unwrap();
    iterate_parallel(&mut state, &s.data, &cfg, &prop, &Serial).unwrap();

    let (o, g, msgs, pr) = oracle(&s, &cfg);
    let mut errs = vec![
        rel_err(state.object().as_slice(), &o),
        rel_err_real(state.precision().as_slice(), &g),
    ];
    for (j, (psi, gamma)) in msgs.iter().enumerate() {
        let (p, gg) = state.data_message(j);
        errs.push(rel_err(p, psi));
        errs.push(((gg - gamma) / gamma).abs());
    }
    let (po, pg) = state.prior_message();
    let zero = |v: &[C64]| v.iter().all(|z| z.norm() == 0.0);
    errs.push(if zero(&pr.0) {
        if zero(po) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        rel_err(po, &pr.0)
    });
    errs.push(rel_err_real(pg, &pr.1));
    DenseReport {
        max_rel: errs.iter().copied().fold(0.0, f64::max),
        clamped: pr.1.iter().filter(|&&g| g == cfg.precision_floor).count(),
    }
}

/// Largest relative error of `g_in` against [`in_oracle`] over `n` random
/// pixels. Means are compared relative to their size, floored at a small
/// fraction of the posterior spread so near-zero means stay meaningful.
pub fn g_in_error(prior: Prior, n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let o: Vec<C64> = random_complex(&mut r, n, 3.0);
    let g: Vec<f64> = (0..n)
        .map(|_| 10f64.powf(r.random_range(-2.0..2.0)))
        .collect();
    let mut mean = vec![C64::new(0.0, 0.0); n];
    let mut var = vec![0.0; n];
    g_in(&prior, &o, &g, &mut mean, &mut var).unwrap();
    (0..n)
        .map(|k| {
            let (m, v) = in_oracle(prior, o[k], g[k]);
            let scale = m.norm().max(var[k].sqrt() * 1e-3);
            ((mean[k] - m).norm() / scale).max((var[k] - v).abs() / v)
        })
        .fold(0.0, f64::max)
}

/// Largest relative error of `g_out` against [`laplace`] over random windows
/// whose first pixels exercise the magnitude floor.
pub fn g_out_error(windows: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..windows {
        let m = 64;
        let sigma = 10f64.powf(r.random_range(-2.0..0.0));
        let gamma = 10f64.powf(r.random_range(-2.0..2.0));
        let mut psi = random_complex(&mut r, m, 4.0);
        psi[0] = C64::new(0.0, 0.0);
        psi[1] = C64::new(1e-12, -1e-12);
        let i: Vec<f64> = (0..m).map(|_| r.random_range(0.0..16.0)).collect();
        let mut mean = vec![C64::new(0.0, 0.0); m];
        let out = g_out(
            &OutputNoise::new(sigma).unwrap(),
            &psi,
            gamma,
            &i,
            &mut mean,
        )
        .unwrap();
        let floor = MAGNITUDE_FLOOR * psi.iter().map(|z| z.norm()).fold(0.0, f64::max) + 1e-30;
        let mut vsum = 0.0;
        for k in 0..m {
            let (mu, v) = laplace(sigma, psi[k], gamma, i[k], floor);
            worst = worst.max((mean[k] - mu).norm() / mu.norm().max(1e-300));
            vsum += v;
        }
        let v = vsum / m as f64;
        worst = worst.max((out.variance - v).abs() / v);
    }
    worst
}

/// Largest accumulator drift against full recomputation, checked after every
/// scan update over `iters` sequential iterations on a 12-scan problem.
pub fn max_drift(prior: Prior, iters: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let offsets: Vec<(usize, usize)> = (0..12)
        .map(|_| (r.random_range(0..=24), r.random_range(0..=24)))
        .collect();
    let geom = ScanGeometry::new((32, 32), (8, 8), offsets).unwrap();
    let probe = ComplexImage::from_vec(8, 8, random_complex(&mut r, 64, 3.0)).unwrap();
    let data = super::dataset(geom, probe, 30.0, seed);
    let prop = Dft2d::new((8, 8)).unwrap();
    let cfg = EngineConfig::new(prior);
    let noise = cfg.noise(&data).unwrap();
    let mut state = MessageState::init(&data, &cfg, &prop).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..iters {
        for j in 0..data.geometry().n_scans() {
            sequential_step(&mut state, j, &data, &noise, &cfg, &prop).unwrap();
            worst = worst.max(state.accumulator_drift());
        }
    }
    // The full schedule, checked after every outer iteration.
    let mut state = MessageState::init(&data, &cfg, &prop).unwrap();
    for _ in 0..iters {
        iterate_sequential(&mut state, &data, &cfg, &prop).unwrap();
        worst = worst.max(state.accumulator_drift());
    }
    worst
}
