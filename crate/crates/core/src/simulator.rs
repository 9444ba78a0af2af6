//! State-vector model of the trapped-ion co-processor: Néel preparation,
//! layered circuits, basis rotation, shot sampling and exact diagnostics.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, Layer, Layout, ParamPoint};
use crate::error::{Result, VqsError};
use crate::measurement::basis::{Axis, MeasurementBasis, ShotBatch};
use crate::operator::SectorOperator;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::sector::{SectorBasis, StateVector};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceMode {
    /// Flip-flop XY coupling, magnetization conserving.
    #[default]
    IdealXy,
    /// Ising XX coupling plus a transverse-field term, on the full space.
    NativeIsing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceParams {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub j0: f64,
    /// Power-law exponent; defaults per system size via [`default_alpha`].
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default)]
    pub mode: ResourceMode,
}

fn one() -> f64 {
    1.0
}

fn default_b() -> f64 {
    10.0
}

/// Coupling exponent used at `n` sites: 1.34 at 8 sites, 0.98 at 20,
/// linear in between and beyond, clamped into (0, 3).
pub fn default_alpha(n: usize) -> f64 {
    let a = 1.34 + (n as f64 - 8.0) * (0.98 - 1.34) / 12.0;
    a.clamp(0.05, 2.95)
}

/// Néel preparation fidelity at `n` sites: 0.98 at 8, 0.91 at 20, linear in
/// between, clamped into [0.5, 1].
pub fn default_init_fidelity(n: usize) -> f64 {
    let f = 0.98 + (n as f64 - 8.0) * (0.91 - 0.98) / 12.0;
    f.clamp(0.5, 1.0)
}

impl ResourceParams {
    pub fn new(n_sites: usize) -> Self {
        ResourceParams { n_sites, j0: 1.0, alpha: None, b: 10.0, mode: ResourceMode::IdealXy }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| default_alpha(self.n_sites))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return Err(VqsError::InvalidParameter(format!("resource needs an even site count, got {}", self.n_sites)));
        }
        if !(self.j0 > 0.0 && self.j0.is_finite()) {
            return Err(VqsError::InvalidParameter("J0 must be positive".into()));
        }
        let a = self.alpha();
        if !(a > 0.0 && a < 3.0) {
            return Err(VqsError::InvalidParameter(format!("alpha must lie in (0, 3), got {a}")));
        }
        if !self.b.is_finite() {
            return Err(VqsError::InvalidParameter("B must be finite".into()));
        }
        Ok(())
    }

    /// `J_ij = J0/|i−j|^α` (1-based sites).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.j0 / ((i as f64 - j as f64).abs()).powf(self.alpha())
    }

    /// Entangling generator as a Pauli sum.
    pub fn generator(&self) -> Result<PauliSum> {
        let n = self.n_sites;
        let mut h = PauliSum::zero(n);
        for i in 1..n {
            for j in i + 1..=n {
                let jij = self.coupling(i, j);
                match self.mode {
                    ResourceMode::IdealXy => {
                        h.add_term(PauliString::from_sites(n, &[(i, Pauli::X), (j, Pauli::X)])?, jij / 2.0);
                        h.add_term(PauliString::from_sites(n, &[(i, Pauli::Y), (j, Pauli::Y)])?, jij / 2.0);
                    }
                    ResourceMode::NativeIsing => {
                        h.add_term(PauliString::from_sites(n, &[(i, Pauli::X), (j, Pauli::X)])?, jij);
                    }
                }
            }
        }
        for j in 1..=n {
            h.add_term(PauliString::from_sites(n, &[(j, Pauli::Z)])?, self.b);
        }
        Ok(h)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeelPhase {
    /// `|↑↓↑↓…⟩`, the bare vacuum.
    #[default]
    Vacuum,
    /// `|↓↑↓↑…⟩`.
    Anti,
}

/// Bit pattern of a Néel state (bit set = spin down).
pub fn neel_config(n: usize, phase: NeelPhase) -> u64 {
    let odd_sites_down: u64 = (0..n).filter(|k| k % 2 == 0).fold(0, |m, k| m | 1 << k);
    match phase {
        NeelPhase::Vacuum => !odd_sites_down & ((1u64 << n) - 1),
        NeelPhase::Anti => odd_sites_down,
    }
}

pub fn neel_state(n: usize, phase: NeelPhase) -> Result<StateVector> {
    if n % 2 != 0 || n == 0 {
        return Err(VqsError::InvalidParameter(format!("Néel states need an even site count, got {n}")));
    }
    let basis = Arc::new(SectorBasis::zero_magnetization(n)?);
    StateVector::basis_state(basis, neel_config(n, phase))
}

/// Per-site phases `e^{∓iθ_j/2}` on up/down components.
pub fn apply_local_layer(state: &StateVector, angles: &[f64]) -> Result<StateVector> {
    let n = state.n_sites();
    if angles.len() != n {
        return Err(VqsError::SizeMismatch { expected: n, actual: angles.len() });
    }
    let phases: Vec<C> = angles.iter().map(|&t| C::from_polar(1.0, -t / 2.0)).collect();
    let basis = state.basis().clone();
    let mut amps = state.amplitudes().to_vec();
    for (a, &c) in amps.iter_mut().zip(basis.states()) {
        let mut ph = C::new(1.0, 0.0);
        for (k, p) in phases.iter().enumerate() {
            ph *= if (c >> k) & 1 == 0 { *p } else { p.conj() };
        }
        *a *= ph;
    }
    StateVector::new(basis, amps)
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `exp(−i·tau·H)·v` by Lanczos projection, with `H` Hermitian and given as
/// a matrix-vector product. The Krylov dimension grows until the a
/// posteriori error estimate falls below `tol`; if it cannot, the time step
/// is split.
pub fn krylov_expm(apply: &dyn Fn(&[C], &mut [C]), v: &[C], tau: f64, tol: f64) -> Result<Vec<C>> {
    const MAX_M: usize = 48;
    let n = v.len();
    let mut w = v.to_vec();
    let mut remaining = tau;
    let mut guard = 0;
    while remaining != 0.0 {
        guard += 1;
        if guard > 10_000 {
            return Err(VqsError::Numerical("Krylov propagation needed too many substeps".into()));
        }
        let beta0 = norm(&w);
        if beta0 == 0.0 {
            return Ok(w);
        }
        let mut basis: Vec<Vec<C>> = vec![w.iter().map(|a| a / beta0).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut u = vec![ZERO; n];
        let mut step: Option<(f64, Vec<C>)> = None;
        for j in 0..MAX_M.min(n) {
            apply(&basis[j], &mut u);
            let a = dotc(&basis[j], &u).re;
            alpha.push(a);
            // Three-term recurrence, then one cleanup pass against the same
            // two vectors. Full reorthogonalization costs more than the
            // matvec at N=20 and the short time steps do not need it.
            for _ in 0..2 {
                for q in basis.iter().rev().take(2) {
                    let c = dotc(q, &u);
                    u.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&u);
            let m = j + 1;
            let happy = b < 1e-13 * (1.0 + a.abs()) || m == n;
            let try_dt = |dt: f64| -> (f64, Vec<C>) {
                let t = DMatrix::from_fn(m, m, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let coeffs: Vec<C> = (0..m)
                    .map(|r| {
                        (0..m)
                            .map(|k| {
                                eig.eigenvectors[(r, k)]
                                    * eig.eigenvectors[(0, k)]
                                    * C::from_polar(1.0, -dt * eig.eigenvalues[k])
                            })
                            .sum()
                    })
                    .collect();
                let err = if happy { 0.0 } else { beta0 * b * coeffs[m - 1].norm() };
                (err, coeffs)
            };
            let (err, coeffs) = try_dt(remaining);
            if err < tol {
                step = Some((remaining, coeffs));
            } else if m == MAX_M.min(n) {
                let mut dt = remaining / 2.0;
                loop {
                    let (e, c) = try_dt(dt);
                    if e < tol {
                        step = Some((dt, c));
                        break;
                    }
                    dt /= 2.0;
                    if dt.abs() < 1e-12 * tau.abs().max(1.0) {
                        return Err(VqsError::Numerical("Krylov step size underflow".into()));
                    }
                }
            }
            if step.is_some() {
                break;
            }
            beta.push(b);
            basis.push(u.iter().map(|x| x / b).collect());
        }
        let (dt, coeffs) = step.ok_or_else(|| VqsError::Numerical("Krylov propagation failed".into()))?;
        let mut out = vec![ZERO; n];
        for (q, c) in basis.iter().zip(&coeffs) {
            let c = c * beta0;
            out.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
        }
        w = out;
        remaining -= dt;
        if remaining.abs() < 1e-15 * tau.abs() {
            remaining = 0.0;
        }
    }
    Ok(w)
}

/// Largest space diagonalized up front for the entangling propagator.
pub const DENSE_PROPAGATOR_LIMIT: usize = 1024;

#[derive(Clone, Debug)]
enum Propagator {
    Dense { vals: Vec<f64>, vecs: DMatrix<f64> },
    Krylov,
}

/// Circuit simulator for one resource configuration and ansatz.
#[derive(Clone, Debug)]
pub struct Simulator {
    resource: ResourceParams,
    spec: AnsatzSpec,
    layout: Layout,
    basis: Arc<SectorBasis>,
    generator: Arc<SectorOperator>,
    propagator: Propagator,
    pub krylov_tol: f64,
}

impl Simulator {
    pub fn new(resource: ResourceParams, spec: AnsatzSpec) -> Result<Self> {
        Simulator::with_dense_limit(resource, spec, DENSE_PROPAGATOR_LIMIT)
    }

    pub fn with_dense_limit(resource: ResourceParams, spec: AnsatzSpec, dense_limit: usize) -> Result<Self> {
        resource.validate()?;
        if spec.n_sites != resource.n_sites {
            return Err(VqsError::SizeMismatch { expected: resource.n_sites, actual: spec.n_sites });
        }
        let layout = spec.layout()?;
        let n = resource.n_sites;
        let basis = Arc::new(match resource.mode {
            ResourceMode::IdealXy => SectorBasis::zero_magnetization(n)?,
            ResourceMode::NativeIsing => SectorBasis::full(n)?,
        });
        let generator = Arc::new(SectorOperator::new(&resource.generator()?, basis.clone())?);
        let propagator = if basis.dim() <= dense_limit {
            let eig = SymmetricEigen::new(generator.to_dense_real());
            Propagator::Dense { vals: eig.eigenvalues.iter().copied().collect(), vecs: eig.eigenvectors }
        } else {
            Propagator::Krylov
        };
        Ok(Simulator { resource, spec, layout, basis, generator, propagator, krylov_tol: 1e-10 })
    }

    pub fn resource(&self) -> &ResourceParams {
        &self.resource
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.n_params
    }

    /// Space the circuit acts on.
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    fn lift(&self, state: &StateVector) -> Result<StateVector> {
        if state.basis().as_ref() == self.basis.as_ref() {
            return Ok(state.clone());
        }
        let (s, lost) = state.project_onto(self.basis.clone())?;
        if lost > 0.0 {
            return Err(VqsError::SectorLeakage);
        }
        Ok(s)
    }

    fn propagate(&self, amps: &[C], tau: f64) -> Result<Vec<C>> {
        match &self.propagator {
            Propagator::Dense { vals, vecs } => {
                let d = vals.len();
                let mut coeff = vec![ZERO; d];
                for (k, ck) in coeff.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (r, a) in amps.iter().enumerate() {
                        acc += a * vecs[(r, k)];
                    }
                    *ck = acc * C::from_polar(1.0, -tau * vals[k]);
                }
                let mut out = vec![ZERO; d];
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for (k, ck) in coeff.iter().enumerate() {
                        acc += ck * vecs[(r, k)];
                    }
                    *o = acc;
                }
                Ok(out)
            }
            Propagator::Krylov => {
                let g = self.generator.clone();
                krylov_expm(&move |x, y| g.apply(x, y), amps, tau, self.krylov_tol)
            }
        }
    }

    /// `exp(−iθH_R)` applied to a normalized state.
    pub fn apply_entangling(&self, state: &StateVector, theta: f64) -> Result<StateVector> {
        state.ensure_normalized()?;
        if !theta.is_finite() || theta < -1e-12 || theta > self.spec.entangling_max + 1e-12 {
            return Err(VqsError::OutOfBounds { index: 0, lo: 0.0, hi: self.spec.entangling_max });
        }
        let s = self.lift(state)?;
        StateVector::new(self.basis.clone(), self.propagate(s.amplitudes(), theta)?)
    }

    pub fn prepare(&self, p: &ParamPoint, init: &StateVector) -> Result<StateVector> {
        self.spec.check_bounds(p)?;
        init.ensure_normalized()?;
        let mut s = self.lift(init)?;
        for layer in self.spec.expand(p)? {
            s = match layer {
                Layer::Entangling(t) => StateVector::new(self.basis.clone(), self.propagate(s.amplitudes(), t)?)?,
                Layer::Local(angles) => apply_local_layer(&s, &angles)?,
            };
        }
        Ok(s)
    }

    /// `U(θ)†` applied to the part of `state` inside the simulator's basis.
    pub fn unprepare(&self, p: &ParamPoint, state: &StateVector) -> Result<StateVector> {
        self.spec.check_bounds(p)?;
        let (mut s, _) = state.project_onto(self.basis.clone())?;
        for layer in self.spec.expand(p)?.into_iter().rev() {
            s = match layer {
                Layer::Entangling(t) => StateVector::new(self.basis.clone(), self.propagate(s.amplitudes(), -t)?)?,
                Layer::Local(angles) => apply_local_layer(&s, &angles.iter().map(|a| -a).collect::<Vec<_>>())?,
            };
        }
        Ok(s)
    }

    /// Energy `⟨ψ(θ)|H|ψ(θ)⟩` and its gradient in the free parameters, by
    /// reverse-mode propagation through the layers.
    pub fn energy_gradient(&self, h: &SectorOperator, p: &ParamPoint, init: &StateVector) -> Result<(f64, Vec<f64>)> {
        if h.basis().as_ref() != self.basis.as_ref() {
            return Err(VqsError::SizeMismatch { expected: self.basis.dim(), actual: h.dim() });
        }
        let layers = self.spec.expand(p)?;
        let mut psi = self.prepare(p, init)?;
        let mut lam = h.apply_state(&psi)?;
        let energy = psi.inner(&lam)?.re;
        let mut grad = vec![0.0; self.layout.n_params];
        let mut gpsi = vec![ZERO; self.basis.dim()];
        for (l, layer) in layers.iter().enumerate().rev() {
            let off = self.layout.offsets[l];
            match layer {
                Layer::Entangling(t) => {
                    self.generator.apply(psi.amplitudes(), &mut gpsi);
                    grad[off] = 2.0 * dotc(lam.amplitudes(), &gpsi).im;
                    psi = StateVector::new(self.basis.clone(), self.propagate(psi.amplitudes(), -t)?)?;
                    lam = StateVector::new(self.basis.clone(), self.propagate(lam.amplitudes(), -t)?)?;
                }
                Layer::Local(angles) => {
                    let n = self.resource.n_sites;
                    let mut site_grad = vec![0.0; n];
                    for ((l_amp, p_amp), &c) in
                        lam.amplitudes().iter().zip(psi.amplitudes()).zip(self.basis.states())
                    {
                        let z = (l_amp.conj() * p_amp).im;
                        for (k, g) in site_grad.iter_mut().enumerate() {
                            *g += if (c >> k) & 1 == 0 { z } else { -z };
                        }
                    }
                    for (k, site) in self.layout.local.sites.iter().enumerate() {
                        if let Some((slot, sign)) = site {
                            grad[off + slot] += sign * site_grad[k];
                        }
                    }
                    let back: Vec<f64> = angles.iter().map(|a| -a).collect();
                    psi = apply_local_layer(&psi, &back)?;
                    lam = apply_local_layer(&lam, &back)?;
                }
            }
        }
        Ok((energy, grad))
    }
}

/// Applies the readout rotations of `basis`. Returns the state unchanged for
/// the all-z basis, otherwise a full-space state.
pub fn rotate_to_basis(state: &StateVector, basis: &MeasurementBasis) -> Result<StateVector> {
    let n = state.n_sites();
    if basis.n_sites() != n {
        return Err(VqsError::SizeMismatch { expected: n, actual: basis.n_sites() });
    }
    if basis.is_all_z() {
        return Ok(state.clone());
    }
    let full = state.to_full()?;
    let fb = full.basis().clone();
    let mut amps = full.into_amplitudes();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (k, axis) in basis.axes().iter().enumerate() {
        // 2×2 rotation in (up, down) order.
        let m: [[C; 2]; 2] = match axis {
            Axis::Z => continue,
            Axis::X => [[C::new(r, 0.0), C::new(r, 0.0)], [C::new(-r, 0.0), C::new(r, 0.0)]],
            Axis::Y => [[C::new(r, 0.0), C::new(0.0, r)], [C::new(0.0, r), C::new(r, 0.0)]],
        };
        let bit = 1usize << k;
        for i in 0..amps.len() {
            if i & bit == 0 {
                let a0 = amps[i];
                let a1 = amps[i | bit];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
    StateVector::new(fb, amps)
}

/// Draws `shots` readout bitstrings of `state` in `basis`.
pub fn sample_bits<R: Rng>(state: &StateVector, basis: &MeasurementBasis, shots: usize, rng: &mut R) -> Result<Vec<u64>> {
    let rotated = rotate_to_basis(state, basis)?;
    let probs = rotated.probabilities();
    let dist = WeightedIndex::new(&probs).map_err(|e| VqsError::Numerical(format!("sampling weights: {e}")))?;
    let b = rotated.basis();
    Ok((0..shots).map(|_| b.config(dist.sample(rng))).collect())
}

pub fn sample(state: &StateVector, basis: &MeasurementBasis, shots: usize, seed: u64, theta: &[f64]) -> Result<ShotBatch> {
    if shots == 0 {
        return Err(VqsError::InvalidParameter("shot count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = sample_bits(state, basis, shots, &mut rng)?;
    Ok(ShotBatch {
        theta: theta.to_vec(),
        basis: basis.descriptor(),
        seed,
        shots,
        bits,
        n_sites: state.n_sites(),
    })
}

pub fn exact_expectation(state: &StateVector, op: &PauliSum) -> Result<f64> {
    crate::operator::expectation(state, op)
}

/// Second-order Rényi entropy `−log₂ Tr ρ_A²` of the contiguous 1-based site
/// block `first..=last`.
pub fn renyi2_entropy(state: &StateVector, first: usize, last: usize) -> Result<f64> {
    let n = state.n_sites();
    if first == 0 || last < first || last > n || (first == 1 && last == n) {
        return Err(VqsError::InvalidParameter(format!("invalid partition {first}..={last} of {n} sites")));
    }
    let na = last - first + 1;
    let nb = n - na;
    let low = first - 1;
    let mask_a = ((1u64 << na) - 1) << low;
    let mut psi = DMatrix::<C>::zeros(1 << na, 1 << nb);
    for (&c, &amp) in state.basis().states().iter().zip(state.amplitudes()) {
        let a = ((c & mask_a) >> low) as usize;
        let rest = c & !mask_a;
        let b = ((rest & ((1u64 << low) - 1)) | ((rest >> (last)) << low)) as usize;
        psi[(a, b)] = amp;
    }
    let gram = if na <= nb { &psi * psi.adjoint() } else { psi.adjoint() * &psi };
    let purity: f64 = gram.iter().map(|x| x.norm_sqr()).sum();
    Ok(-purity.log2())
}

/// Imperfect Néel preparation: with probability `1 − fidelity` a random
/// up/down site pair is flipped before the circuit.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateChannel {
    pub fidelity: f64,
}

impl InitialStateChannel {
    /// All magnetization-preserving single flip pairs of `config`.
    pub fn flip_pairs(config: u64, n: usize) -> Vec<(usize, usize)> {
        let ups: Vec<usize> = (0..n).filter(|k| (config >> k) & 1 == 0).collect();
        let downs: Vec<usize> = (0..n).filter(|k| (config >> k) & 1 == 1).collect();
        ups.iter().flat_map(|&u| downs.iter().map(move |&d| (u, d))).collect()
    }
}

/// The co-processor as seen by the control loop: fixed initial Néel phase,
/// optional preparation errors, and sampling in arbitrary bases.
#[derive(Clone, Debug)]
pub struct Device {
    pub sim: Simulator,
    pub phase: NeelPhase,
    pub channel: Option<InitialStateChannel>,
}

impl Device {
    pub fn new(sim: Simulator, phase: NeelPhase, channel: Option<InitialStateChannel>) -> Self {
        Device { sim, phase, channel }
    }

    pub fn n_sites(&self) -> usize {
        self.sim.resource.n_sites
    }

    pub fn initial_config(&self) -> u64 {
        neel_config(self.n_sites(), self.phase)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        neel_state(self.n_sites(), self.phase)
    }

    /// Ideal trial state, no preparation errors.
    pub fn prepare(&self, p: &ParamPoint) -> Result<StateVector> {
        self.sim.prepare(p, &self.initial_state()?)
    }

    fn prepare_from(&self, p: &ParamPoint, config: u64) -> Result<StateVector> {
        let basis = Arc::new(SectorBasis::zero_magnetization(self.n_sites())?);
        self.sim.prepare(p, &StateVector::basis_state(basis, config)?)
    }

    /// Samples every basis at `p`, `shots` each. Basis `i` uses seed
    /// `seeds[i]`; preparation errors are drawn per shot from the same seed.
    pub fn measure(&self, p: &ParamPoint, bases: &[MeasurementBasis], shots: usize, seeds: &[u64]) -> Result<Vec<ShotBatch>> {
        if seeds.len() != bases.len() {
            return Err(VqsError::SizeMismatch { expected: bases.len(), actual: seeds.len() });
        }
        if shots == 0 {
            return Err(VqsError::InvalidParameter("shot count must be positive".into()));
        }
        let clean = self.prepare(p)?;
        let n = self.n_sites();
        let init = self.initial_config();
        let pairs = InitialStateChannel::flip_pairs(init, n);
        let mut cache: HashMap<(usize, usize), StateVector> = HashMap::new();
        let mut out = Vec::with_capacity(bases.len());
        for (basis, &seed) in bases.iter().zip(seeds) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut groups: Vec<(Option<(usize, usize)>, usize)> = vec![(None, 0)];
            if let Some(ch) = self.channel {
                let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
                for _ in 0..shots {
                    if rng.random::<f64>() >= ch.fidelity {
                        let pr = pairs[rng.random_range(0..pairs.len())];
                        *counts.entry(pr).or_default() += 1;
                    } else {
                        groups[0].1 += 1;
                    }
                }
                let mut extra: Vec<_> = counts.into_iter().map(|(k, v)| (Some(k), v)).collect();
                extra.sort();
                groups.extend(extra);
            } else {
                groups[0].1 = shots;
            }
            let mut bits = Vec::with_capacity(shots);
            for (pair, count) in groups {
                if count == 0 {
                    continue;
                }
                let state = match pair {
                    None => &clean,
                    Some(pr) => {
                        if !cache.contains_key(&pr) {
                            let cfg = init ^ (1 << pr.0) ^ (1 << pr.1);
                            cache.insert(pr, self.prepare_from(p, cfg)?);
                        }
                        &cache[&pr]
                    }
                };
                bits.extend(sample_bits(state, basis, count, &mut rng)?);
            }
            out.push(ShotBatch { theta: p.theta.clone(), basis: basis.descriptor(), seed, shots, bits, n_sites: n });
        }
        Ok(out)
    }

    /// Fidelity of the (possibly mixed) prepared state with `target`.
    /// Error branches start from basis states, so one backward pass gives
    /// all of their overlaps at once.
    pub fn fidelity(&self, p: &ParamPoint, target: &StateVector) -> Result<f64> {
        let clean = self.prepare(p)?;
        let f_clean = fidelity_any(&clean, target)?;
        let Some(ch) = self.channel else { return Ok(f_clean) };
        let init = self.initial_config();
        let pairs = InitialStateChannel::flip_pairs(init, self.n_sites());
        let back = self.sim.unprepare(p, target)?;
        let f_err: f64 = pairs.iter().map(|&(a, b)| back.amplitude(init ^ (1 << a) ^ (1 << b)).norm_sqr()).sum();
        Ok(ch.fidelity * f_clean + (1.0 - ch.fidelity) * f_err / pairs.len() as f64)
    }

    /// Same as [`Device::fidelity`], preparing every error branch forward.
    pub fn fidelity_forward(&self, p: &ParamPoint, target: &StateVector) -> Result<f64> {
        let f_clean = fidelity_any(&self.prepare(p)?, target)?;
        let Some(ch) = self.channel else { return Ok(f_clean) };
        let init = self.initial_config();
        let pairs = InitialStateChannel::flip_pairs(init, self.n_sites());
        let mut f_err = 0.0;
        for &(a, b) in &pairs {
            f_err += fidelity_any(&self.prepare_from(p, init ^ (1 << a) ^ (1 << b))?, target)?;
        }
        Ok(ch.fidelity * f_clean + (1.0 - ch.fidelity) * f_err / pairs.len() as f64)
    }
}

/// Fidelity between states that may live on different bases of the same
/// sites (for example a sector state and a full-space state).
pub fn fidelity_any(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.basis().as_ref() == b.basis().as_ref() {
        return a.fidelity(b);
    }
    if a.n_sites() != b.n_sites() {
        return Err(VqsError::SizeMismatch { expected: a.n_sites(), actual: b.n_sites() });
    }
    let mut acc = ZERO;
    for (&c, &amp) in a.basis().states().iter().zip(a.amplitudes()) {
        acc += amp.conj() * b.amplitude(c);
    }
    Ok(acc.norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_state(basis: Arc<SectorBasis>, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..basis.dim()).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let mut s = StateVector::new(basis, amps).unwrap();
        s.normalize().unwrap();
        s
    }

    #[test]
    fn neel_patterns() {
        assert_eq!(neel_config(4, NeelPhase::Vacuum), 0b1010);
        assert_eq!(neel_config(4, NeelPhase::Anti), 0b0101);
        assert!(neel_state(3, NeelPhase::Vacuum).is_err());
    }

    #[test]
    fn two_site_entangling_matches_analytic() {
        let mut r = ResourceParams::new(2);
        r.b = 0.7;
        let sim = Simulator::new(r, AnsatzSpec::new(2, 1)).unwrap();
        let init = neel_state(2, NeelPhase::Vacuum).unwrap();
        let t = 0.37;
        let out = sim.apply_entangling(&init, t).unwrap();
        let up_down = out.amplitude(0b10);
        let down_up = out.amplitude(0b01);
        assert_relative_eq!(up_down.re, t.cos(), epsilon = 1e-12);
        assert_relative_eq!(down_up.im, -t.sin(), epsilon = 1e-12);
    }

    #[test]
    fn krylov_matches_dense_propagator() {
        for n in [8, 12] {
            let r = ResourceParams::new(n);
            let dense = Simulator::new(r.clone(), AnsatzSpec::new(n, 4)).unwrap();
            let krylov = Simulator::with_dense_limit(r, AnsatzSpec::new(n, 4), 0).unwrap();
            let s = random_state(dense.basis().clone(), 3);
            for &t in &[0.0, 0.3, 2.9, std::f64::consts::PI] {
                let a = dense.apply_entangling(&s, t).unwrap();
                let b = krylov.apply_entangling(&s, t).unwrap();
                assert!((a.inner(&b).unwrap().re - 1.0).abs() < 1e-9, "N={n} t={t}");
                assert!((b.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rotation_reproduces_xx_correlator() {
        let basis = Arc::new(SectorBasis::full(4).unwrap());
        let s = random_state(basis, 11);
        for (text, desc) in [("X1 X2", "xxzz"), ("Y2 Y3 Z4", "zyyz"), ("X1 Y3", "xzyz")] {
            let op = PauliString::parse(text, 4).unwrap();
            let exact = exact_expectation(&s, &PauliSum::from_string(op, 1.0)).unwrap();
            let mb = MeasurementBasis::parse(desc).unwrap();
            let rotated = rotate_to_basis(&s, &mb).unwrap();
            let y_mask = mb.mask(Axis::Y);
            let via: f64 = rotated
                .basis()
                .states()
                .iter()
                .zip(rotated.probabilities())
                .map(|(&c, p)| p * MeasurementBasis::outcome_sign(&op, y_mask, c))
                .sum();
            assert_relative_eq!(exact, via, epsilon = 1e-12);
        }
    }

    #[test]
    fn renyi_limits() {
        let s = neel_state(4, NeelPhase::Vacuum).unwrap();
        assert!(renyi2_entropy(&s, 1, 2).unwrap().abs() < 1e-12);
        let b = Arc::new(SectorBasis::zero_magnetization(2).unwrap());
        let bell = StateVector::from_real(b, &[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]).unwrap();
        assert_relative_eq!(renyi2_entropy(&bell, 1, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert!(renyi2_entropy(&bell, 1, 2).is_err());
    }
}
