//! Gaussian-process metamodel on the normalized search box.
//!
//! Squared-exponential kernel with per-dimension length scales. Periodic
//! dimensions (normalized period 1) use the chordal distance
//! `sin(π·Δu)/π`, which makes the kernel exactly periodic.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};

const LOG_ELL_MIN: f64 = -4.6; // ln 0.01
const LOG_ELL_MAX: f64 = 2.3; // ln 10
const LOG_SF2_MIN: f64 = -6.9;
const LOG_SF2_MAX: f64 = 6.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    /// Signal variance in units of the standardized training values.
    pub log_sf2: f64,
    pub log_ell: Vec<f64>,
}

impl GpHyper {
    pub fn default_for(d: usize) -> Self {
        GpHyper { log_sf2: 0.0, log_ell: vec![(0.3f64).ln(); d] }
    }

    fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.log_sf2).chain(self.log_ell.iter().copied()).collect()
    }

    fn from_vec(v: &[f64]) -> Self {
        GpHyper {
            log_sf2: v[0].clamp(LOG_SF2_MIN, LOG_SF2_MAX),
            log_ell: v[1..].iter().map(|x| x.clamp(LOG_ELL_MIN, LOG_ELL_MAX)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub starts: usize,
    pub max_iters: u64,
    /// Hyperparameters are fitted on at most this many points.
    pub mle_subset: usize,
    pub seed: u64,
    pub init: Option<GpHyper>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { starts: 3, max_iters: 250, mle_subset: 120, seed: 0, init: None }
    }
}

/// One training observation: normalized point, value, noise variance.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub u: Vec<f64>,
    pub y: f64,
    pub noise_var: f64,
}

#[derive(Clone, Debug)]
pub struct Metamodel {
    periodic: Vec<bool>,
    x: Vec<Vec<f64>>,
    hyper: GpHyper,
    /// Data mean and scale used to standardize values.
    mean: f64,
    scale: f64,
    alpha: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

fn sq_dist(a: &[f64], b: &[f64], periodic: &[bool], inv_ell2: &[f64]) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        let mut r = a[d] - b[d];
        if periodic[d] {
            r = (std::f64::consts::PI * r).sin() / std::f64::consts::PI;
        }
        s += r * r * inv_ell2[d];
    }
    s
}

fn kernel_matrix(x: &[Vec<f64>], noise: &[f64], periodic: &[bool], h: &GpHyper) -> DMatrix<f64> {
    let n = x.len();
    let sf2 = h.log_sf2.exp();
    let inv: Vec<f64> = h.log_ell.iter().map(|l| (-2.0 * l).exp()).collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = sf2 * (-0.5 * sq_dist(&x[i], &x[j], periodic, &inv)).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] = sf2 * (1.0 + 1e-10) + noise[i];
    }
    k
}

fn neg_log_likelihood(x: &[Vec<f64>], y: &DVector<f64>, noise: &[f64], periodic: &[bool], h: &GpHyper) -> f64 {
    let k = kernel_matrix(x, noise, periodic, h);
    match Cholesky::new(k) {
        Some(ch) => {
            let a = ch.solve(y);
            let logdet: f64 = ch.l().diagonal().iter().map(|v| v.ln()).sum();
            0.5 * y.dot(&a) + logdet + 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
        }
        None => f64::INFINITY,
    }
}

struct Likelihood<'a> {
    x: &'a [Vec<f64>],
    y: &'a DVector<f64>,
    noise: &'a [f64],
    periodic: &'a [bool],
}

impl CostFunction for Likelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let h = GpHyper::from_vec(p);
        // Penalize leaving the box so the simplex turns back.
        let out: f64 = p.iter().zip(h.to_vec()).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(neg_log_likelihood(self.x, self.y, self.noise, self.periodic, &h) + 10.0 * out)
    }
}

fn nelder_mead<F: CostFunction<Param = Vec<f64>, Output = f64>>(
    f: F,
    start: &[f64],
    step: f64,
    max_iters: u64,
) -> Option<(Vec<f64>, f64)> {
    let mut simplex = vec![start.to_vec()];
    for d in 0..start.len() {
        let mut p = start.to_vec();
        p[d] += step;
        simplex.push(p);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-7).ok()?;
    let res = Executor::new(f, solver).configure(|s| s.max_iters(max_iters)).run().ok()?;
    let cost = res.state.best_cost;
    res.state.best_param.map(|p| (p, cost))
}

impl Metamodel {
    /// Fits hyperparameters by maximum marginal likelihood, then conditions
    /// on all observations.
    pub fn fit(obs: &[Observation], periodic: &[bool], opts: &FitOptions) -> Result<Self> {
        let d = periodic.len();
        if obs.len() < 2 {
            return Err(VqsError::InsufficientData("metamodel needs at least two points".into()));
        }
        if obs.iter().any(|o| o.u.len() != d) {
            return Err(VqsError::SizeMismatch { expected: d, actual: obs[0].u.len() });
        }
        let n = obs.len() as f64;
        let mean = obs.iter().map(|o| o.y).sum::<f64>() / n;
        let var = obs.iter().map(|o| (o.y - mean).powi(2)).sum::<f64>() / n;
        if var <= 1e-300 {
            // Flat data: prior-only model around the common value.
            return Metamodel::condition(obs, periodic, GpHyper::default_for(d), mean, 1.0, true);
        }
        let scale = var.sqrt();

        // Hyperparameters from a subset: best points first, then a spread of the rest.
        let mut idx: Vec<usize> = (0..obs.len()).collect();
        if obs.len() > opts.mle_subset {
            idx.sort_by(|&a, &b| obs[a].y.total_cmp(&obs[b].y));
            let half = opts.mle_subset / 2;
            let rest = &idx[half..];
            let stride = rest.len() as f64 / (opts.mle_subset - half) as f64;
            let mut chosen: Vec<usize> = idx[..half].to_vec();
            chosen.extend((0..opts.mle_subset - half).map(|k| rest[(k as f64 * stride) as usize]));
            idx = chosen;
        }
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| obs[i].u.clone()).collect();
        let ys = DVector::from_iterator(idx.len(), idx.iter().map(|&i| (obs[i].y - mean) / scale));
        let ns: Vec<f64> = idx.iter().map(|&i| obs[i].noise_var / (scale * scale)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut starts = Vec::new();
        match &opts.init {
            // A previous fit is a good start; one local polish suffices.
            Some(h) if opts.starts <= 1 => starts.push(h.to_vec()),
            Some(h) => starts.extend([h.to_vec(), GpHyper::default_for(d).to_vec()]),
            None => starts.push(GpHyper::default_for(d).to_vec()),
        }
        while starts.len() < opts.starts.max(1) {
            let mut v = vec![rng.random_range(-1.0..1.0)];
            v.extend((0..d).map(|_| rng.random_range(-3.0..1.0)));
            starts.push(v);
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in &starts {
            let lik = Likelihood { x: &xs, y: &ys, noise: &ns, periodic };
            if let Some((p, c)) = nelder_mead(lik, s, 0.5, opts.max_iters) {
                if c.is_finite() && best.as_ref().is_none_or(|b| c < b.1) {
                    best = Some((p, c));
                }
            }
        }
        let hyper = best.map(|(p, _)| GpHyper::from_vec(&p)).unwrap_or_else(|| GpHyper::default_for(d));
        Metamodel::condition(obs, periodic, hyper, mean, scale, false)
    }

    /// Conditions on all observations with fixed hyperparameters, given in
    /// the units of the raw values (no standardization).
    pub fn with_hyper(obs: &[Observation], periodic: &[bool], hyper: GpHyper) -> Result<Self> {
        let mean = obs.iter().map(|o| o.y).sum::<f64>() / obs.len().max(1) as f64;
        Metamodel::condition(obs, periodic, hyper, mean, 1.0, obs.is_empty())
    }

    fn condition(obs: &[Observation], periodic: &[bool], hyper: GpHyper, mean: f64, scale: f64, flat: bool) -> Result<Self> {
        let x: Vec<Vec<f64>> = obs.iter().map(|o| o.u.clone()).collect();
        if flat {
            return Ok(Metamodel {
                periodic: periodic.to_vec(),
                x,
                hyper,
                mean,
                scale,
                alpha: DVector::zeros(obs.len()),
                chol: None,
            });
        }
        let noise: Vec<f64> = obs.iter().map(|o| o.noise_var / (scale * scale)).collect();
        let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| (o.y - mean) / scale));
        let mut k = kernel_matrix(&x, &noise, periodic, &hyper);
        let mut jitter = 1e-10;
        let chol = loop {
            if let Some(c) = Cholesky::new(k.clone()) {
                break c;
            }
            if jitter > 1e-2 {
                return Err(VqsError::Numerical("metamodel covariance is not positive definite".into()));
            }
            for i in 0..k.nrows() {
                k[(i, i)] += jitter;
            }
            jitter *= 10.0;
        };
        let alpha = chol.solve(&y);
        Ok(Metamodel { periodic: periodic.to_vec(), x, hyper, mean, scale, alpha, chol: Some(chol) })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn kvec(&self, u: &[f64]) -> DVector<f64> {
        let sf2 = self.hyper.log_sf2.exp();
        let inv: Vec<f64> = self.hyper.log_ell.iter().map(|l| (-2.0 * l).exp()).collect();
        DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| sf2 * (-0.5 * sq_dist(u, xi, &self.periodic, &inv)).exp()))
    }

    /// Posterior mean of the latent function at `u`.
    pub fn mean_at(&self, u: &[f64]) -> f64 {
        if self.chol.is_none() {
            return self.mean;
        }
        self.mean + self.scale * self.kvec(u).dot(&self.alpha)
    }

    /// Posterior mean and variance of the latent function at `u`.
    pub fn predict(&self, u: &[f64]) -> (f64, f64) {
        let sf2 = self.hyper.log_sf2.exp();
        let Some(ch) = &self.chol else {
            return (self.mean, sf2 * self.scale * self.scale);
        };
        let k = self.kvec(u);
        let m = self.mean + self.scale * k.dot(&self.alpha);
        let v = ch.solve(&k);
        let var = (sf2 - k.dot(&v)).max(0.0);
        (m, var * self.scale * self.scale)
    }

    /// Mean and variance of a fresh observation with noise variance `noise_var`.
    pub fn predict_observed(&self, u: &[f64], noise_var: f64) -> (f64, f64) {
        let (m, v) = self.predict(u);
        (m, v + noise_var)
    }

    /// Minimizes the posterior mean over the unit box by Nelder–Mead from
    /// each start (clamping bounded and wrapping periodic coordinates).
    /// Returns the best point; ties keep the earlier start.
    pub fn minimize_mean(&self, starts: &[Vec<f64>], max_iters: u64) -> Option<Vec<f64>> {
        struct MeanCost<'a>(&'a Metamodel);
        impl CostFunction for MeanCost<'_> {
            type Param = Vec<f64>;
            type Output = f64;
            fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
                let u = self.0.fold(p);
                let out: f64 = p.iter().zip(&u).zip(&self.0.periodic).map(|((a, b), &per)| if per { 0.0 } else { (a - b).powi(2) }).sum();
                Ok(self.0.mean_at(&u) + 1e3 * out * self.0.scale)
            }
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in starts {
            let Some((p, _)) = nelder_mead(MeanCost(self), s, 0.05, max_iters) else { continue };
            let u = self.fold(&p);
            let v = self.mean_at(&u);
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((u, v));
            }
        }
        best.map(|b| b.0)
    }

    /// Maps an arbitrary point into the box.
    pub fn fold(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.periodic)
            .map(|(&x, &per)| if per { x.rem_euclid(1.0) } else { x.clamp(0.0, 1.0) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(points: &[(f64, f64)], noise: f64) -> Vec<Observation> {
        points.iter().map(|&(u, y)| Observation { u: vec![u], y, noise_var: noise }).collect()
    }

    #[test]
    fn interpolates_noise_free_data() {
        let data = obs(&[(0.1, 1.0), (0.4, -0.5), (0.7, 0.3), (0.9, 0.8)], 0.0);
        let m = Metamodel::fit(&data, &[false], &FitOptions::default()).unwrap();
        for o in &data {
            assert!((m.mean_at(&o.u) - o.y).abs() < 1e-8);
        }
    }

    #[test]
    fn periodic_kernel_is_periodic() {
        let data = obs(&[(0.1, 1.0), (0.4, -0.5), (0.7, 0.3)], 1e-4);
        let m = Metamodel::with_hyper(&data, &[true], GpHyper::default_for(1)).unwrap();
        let a = m.predict(&[0.25]);
        let b = m.predict(&[1.25]);
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn flat_data_gives_prior_model() {
        let data = obs(&[(0.1, 2.0), (0.5, 2.0)], 0.0);
        let m = Metamodel::fit(&data, &[false], &FitOptions::default()).unwrap();
        assert_eq!(m.predict(&[0.3]).0, 2.0);
    }
}
