use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{call_seed, stream, RunConfig};
use crate::ansatz::ParamPoint;
use crate::ed::{ed_spectrum, EdSector};
use crate::error::{Result, VqsError};
use crate::measurement::{
    estimate_energy, estimate_variance, group_by_basis, Axis, CdrStore, EstimatorConfig, MeasurementBasis,
    MeasurementPlan, ShotBatch,
};
use crate::operator::expectation;
use crate::optimizer::{self, CallKind, Origin, EvaluationRecord, Evaluation, OptimizerResult, Oracle, SearchTree, TrajectoryEntry, WarmStart};
use crate::pauli::PauliSum;
use crate::qse::{
    build_subspace_exact, build_subspace_shots, covering_bases, excitation_operators, gap_estimate, reference_gaps,
    ReferenceGaps, SubspaceProblem,
};
use crate::schwinger::{order_parameter, particle_density, particle_densities};
use crate::sector::StateVector;
use crate::simulator::{renyi2_entropy, Device, NeelPhase};

/// A reported number: measured with a statistical error, or exact.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Quantity {
    Measured { value: f64, std_error: f64 },
    Exact { value: f64 },
}

impl Quantity {
    pub fn value(&self) -> f64 {
        match *self {
            Quantity::Measured { value, .. } | Quantity::Exact { value } => value,
        }
    }

    pub fn std_error(&self) -> f64 {
        match *self {
            Quantity::Measured { std_error, .. } => std_error,
            Quantity::Exact { .. } => 0.0,
        }
    }

    fn measured(value: f64, std_error: f64) -> Self {
        Quantity::Measured { value, std_error }
    }
}

/// Energy estimates for the optimizer. Every call samples the energy bases
/// with fresh seeds, files the batches in the record store and estimates from
/// those batches alone.
pub struct EnergyOracle<'a> {
    device: &'a Device,
    plan: MeasurementPlan,
    bases: Vec<MeasurementBasis>,
    estimator: &'a EstimatorConfig,
    cdr: &'a CdrStore,
    master: u64,
    calls: u64,
}

impl<'a> EnergyOracle<'a> {
    pub fn new(device: &'a Device, h: &PauliSum, estimator: &'a EstimatorConfig, cdr: &'a CdrStore, master: u64) -> Result<Self> {
        let bases = estimator.scheme.energy_bases(device.n_sites());
        let plan = MeasurementPlan::new(h, &bases, estimator.scheme)?;
        Ok(EnergyOracle { device, plan, bases, estimator, cdr, master, calls: 0 })
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

impl Oracle for EnergyOracle<'_> {
    fn evaluate(&mut self, x: &[f64], shots: u32) -> Result<Evaluation> {
        let nb = self.bases.len() as u64;
        let seeds: Vec<u64> = (0..nb).map(|i| call_seed(self.master, stream::ENERGY, self.calls * nb + i)).collect();
        self.calls += 1;
        let batches = self.device.measure(&ParamPoint::new(x.to_vec()), &self.bases, shots as usize, &seeds)?;
        let data = store_all(self.cdr, batches)?;
        let r = self.plan.estimate(&data, self.estimator)?;
        Ok(Evaluation { value: r.value, std_error: r.std_error, shots, cost: self.cost(shots) })
    }

    fn cost(&self, shots: u32) -> u64 {
        u64::from(shots) * self.bases.len() as u64
    }
}

type Grouped = std::collections::BTreeMap<String, Vec<Arc<ShotBatch>>>;

fn store_all(cdr: &CdrStore, batches: Vec<ShotBatch>) -> Result<Grouped> {
    let mut fresh = Vec::with_capacity(batches.len());
    for b in batches {
        cdr.store(b.clone())?;
        fresh.push(Arc::new(b));
    }
    Ok(group_by_basis(fresh))
}

/// Exact-diagonalization numbers, all exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReference {
    pub ground_energy: f64,
    pub first_excited: f64,
    pub gap: f64,
    /// Whole zero-magnetization spectrum, for small sectors only.
    pub spectrum: Option<Vec<f64>>,
    pub gaps: Option<ReferenceGaps>,
    pub order_parameter: f64,
    pub renyi2_half: f64,
    #[serde(skip)]
    pub ground_state: Option<StateVector>,
}

impl ExactReference {
    pub fn compute(h: &PauliSum, full_spectrum_max_dim: usize) -> Result<Self> {
        let n = h.n_sites();
        let pairs = ed_spectrum(h, EdSector::zero_magnetization(), 2)?;
        let dim = pairs[0].state.basis().dim();
        let (spectrum, gaps) = if dim <= full_spectrum_max_dim {
            let all = ed_spectrum(h, EdSector::zero_magnetization(), dim)?;
            (Some(all.iter().map(|p| p.energy).collect()), Some(reference_gaps(h)?))
        } else {
            (None, None)
        };
        let gs = &pairs[0].state;
        Ok(ExactReference {
            ground_energy: pairs[0].energy,
            first_excited: pairs[1].energy,
            gap: pairs[1].energy - pairs[0].energy,
            spectrum,
            gaps,
            order_parameter: expectation(gs, &order_parameter(n)?)?,
            renyi2_half: renyi2_entropy(gs, 1, n / 2)?,
            ground_state: Some(gs.clone()),
        })
    }

    /// Distance from `e` to the nearest known eigenvalue.
    pub fn distance(&self, e: f64) -> f64 {
        match &self.spectrum {
            Some(s) => s.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min),
            None => (self.ground_energy - e).abs().min((self.first_excited - e).abs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `min_ℓ |E_ℓ − E|` over the reference spectrum.
    pub distance: f64,
    /// `ℰ + 3σ_ℰ`.
    pub limit: f64,
    pub holds: bool,
    /// False when only the two lowest levels were available.
    pub full_spectrum: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub budget_spent: u64,
    pub theta: Vec<f64>,
    pub energy: Quantity,
    pub variance: Quantity,
    pub error_bar: Quantity,
    /// `ℰ/Δ` against the exact gap.
    pub ratio_to_gap: Option<f64>,
    pub fidelity: Option<Quantity>,
    pub bound: Option<BoundCheck>,
    pub shots_per_basis: u32,
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// From z-basis shots at the final point.
    pub densities: Vec<Quantity>,
    pub densities_exact: Vec<Quantity>,
    pub order_parameter: Quantity,
    pub order_parameter_exact: Quantity,
    /// Half-chain second Rényi entropy of the ideal trial state.
    pub renyi2_half: Quantity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QseReport {
    /// Expansion around the ideal trial state, without shot noise.
    pub ideal_ground: Quantity,
    pub ideal_gap: Quantity,
    pub measured_ground: Option<Quantity>,
    pub measured_gap: Option<Quantity>,
    pub measured_problem: Option<SubspaceProblem>,
    pub shots_per_basis: u32,
    pub n_bases: usize,
    pub cost: u64,
    pub warning: Option<String>,
}

/// Measurement spend by purpose, in shots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    /// Sum of per-call costs of the optimizer's evaluations.
    pub optimizer: u64,
    /// What the optimizer itself recorded; equals `optimizer`.
    pub optimizer_recorded: u64,
    pub checkpoints: u64,
    pub qse: u64,
    pub total: u64,
    pub optimizer_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub n_sites: usize,
    pub mass: f64,
    pub phase: NeelPhase,
    pub n_layers: usize,
    pub n_params: usize,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub energy: Quantity,
    /// Energy of the ideal trial state at `theta`.
    pub energy_exact: Quantity,
    pub reference: Option<ExactReference>,
    pub fidelity: Option<Quantity>,
    /// `(E − E₀)/Δ` from the exact trial-state energy.
    pub excitation_fraction: Option<Quantity>,
    pub checkpoints: Vec<Checkpoint>,
    pub skipped_checkpoints: Vec<usize>,
    pub observables: Observables,
    pub qse: Option<QseReport>,
    pub budget: BudgetLedger,
    pub iterations: usize,
    pub stopped_by: String,
    pub warm_started: bool,
    pub error: Option<String>,
}

/// A finished run with everything needed to write it out or continue from it.
pub struct RunOutcome {
    pub config: RunConfig,
    pub report: RunReport,
    pub trajectory: Vec<TrajectoryEntry>,
    pub evaluations: Vec<EvaluationRecord>,
    pub tree: Option<SearchTree>,
    pub cdr: CdrStore,
}

/// 1-based iteration numbers of `count` log-spaced checkpoints ending at `n_iter`.
pub fn checkpoint_iterations(n_iter: usize, count: usize) -> Vec<usize> {
    if n_iter == 0 || count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![n_iter];
    }
    let top = (n_iter as f64).ln();
    let mut out: Vec<usize> = (0..count)
        .map(|k| ((top * k as f64 / (count - 1) as f64).exp().round() as usize).clamp(1, n_iter))
        .collect();
    out.dedup();
    out
}

pub fn run_ground_state(cfg: &RunConfig) -> Result<RunOutcome> {
    run_ground_state_warm(cfg, None)
}

/// Same as [`run_ground_state`], optionally resuming a re-scored search.
pub fn run_ground_state_warm(cfg: &RunConfig, warm: Option<&WarmStart>) -> Result<RunOutcome> {
    let problem = cfg.build()?;
    let n = cfg.model.n_sites;
    let h = &problem.h;
    let device = &problem.device;
    let cdr = CdrStore::in_memory();
    let reference = if cfg.oracle.enabled {
        match ExactReference::compute(h, cfg.oracle.full_spectrum_max_dim) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("exact reference unavailable: {e}");
                None
            }
        }
    } else {
        None
    };

    let ocfg = cfg.optimizer_config();
    let mut oracle = EnergyOracle::new(device, h, &cfg.estimator, &cdr, cfg.seed)?;
    let result = if warm.is_none() && ocfg.budget < oracle.cost(ocfg.initial_shots) {
        // No room for a search: one evaluation of the initial Néel state.
        let x = vec![0.0; problem.dims.len()];
        let ev = oracle.evaluate(&x, ocfg.initial_shots)?;
        zero_budget_result(x, ev)
    } else {
        optimizer::run(&mut oracle, &problem.dims, &ocfg, warm)?
    };
    let optimizer_calls = result.evaluations.len();
    let optimizer_cost: u64 = result.evaluations.iter().map(|e| e.cost).sum();

    // Self-verification along the trajectory.
    let mut checkpoints = Vec::new();
    let mut skipped = Vec::new();
    let mut checkpoint_cost = 0u64;
    let nvb = cfg.estimator.scheme.variance_bases(n).len() as u64;
    for (k, it) in checkpoint_iterations(result.trajectory.len(), cfg.checkpoints.count).into_iter().enumerate() {
        let cost = u64::from(cfg.checkpoints.shots) * nvb;
        if cfg.checkpoints.budget.is_some_and(|cap| checkpoint_cost + cost > cap) {
            log::warn!("checkpoint at iteration {it} skipped: checkpoint budget exhausted");
            skipped.push(it);
            continue;
        }
        let entry = &result.trajectory[it - 1];
        let seeds = (0..nvb).map(|i| call_seed(cfg.seed, stream::CHECKPOINT, k as u64 * nvb + i)).collect::<Vec<_>>();
        match measure_error_bar(device, h, &entry.theta, cfg, &cdr, &seeds, reference.as_ref()) {
            Ok(mut c) => {
                c.iteration = entry.iteration;
                c.budget_spent = entry.budget_spent;
                checkpoint_cost += c.cost;
                checkpoints.push(c);
            }
            Err(e) => {
                log::warn!("checkpoint at iteration {it} failed: {e}");
                skipped.push(it);
            }
        }
    }

    let theta = result.best_x.clone();
    let p = ParamPoint::new(theta.clone());
    let ideal = device.prepare(&p)?;
    let energy_exact = expectation(&ideal, h)?;
    let (fidelity, excitation_fraction) = match &reference {
        Some(r) => (
            Some(Quantity::Exact { value: device.fidelity(&p, r.ground_state.as_ref().expect("computed above"))? }),
            Some(Quantity::Exact { value: (energy_exact - r.ground_energy) / r.gap }),
        ),
        None => (None, None),
    };
    let observables = measure_observables(&ideal, &cdr, &theta, &cfg.estimator)?;

    let qse = if cfg.qse.enabled { Some(run_qse(device, h, &ideal, &theta, cfg, &cdr)?) } else { None };
    let qse_cost = qse.as_ref().map_or(0, |q| q.cost);

    let report = RunReport {
        n_sites: n,
        mass: cfg.model.m,
        phase: device.phase,
        n_layers: cfg.ansatz.n_layers,
        n_params: problem.dims.len(),
        seed: cfg.seed,
        theta,
        energy: Quantity::measured(result.best_value, result.best_std_error),
        energy_exact: Quantity::Exact { value: energy_exact },
        reference,
        fidelity,
        excitation_fraction,
        checkpoints,
        skipped_checkpoints: skipped,
        observables,
        qse,
        budget: BudgetLedger {
            optimizer: optimizer_cost,
            optimizer_recorded: result.budget_spent,
            checkpoints: checkpoint_cost,
            qse: qse_cost,
            total: optimizer_cost + checkpoint_cost + qse_cost,
            optimizer_calls,
        },
        iterations: result.iterations,
        stopped_by: result.stopped_by.clone(),
        warm_started: warm.is_some(),
        error: result.error.clone(),
    };
    Ok(RunOutcome {
        config: cfg.clone(),
        report,
        trajectory: result.trajectory,
        evaluations: result.evaluations,
        tree: (!result.tree.cells.is_empty()).then_some(result.tree),
        cdr,
    })
}

fn zero_budget_result(x: Vec<f64>, ev: Evaluation) -> OptimizerResult {
    OptimizerResult {
        best_x: x.clone(),
        best_value: ev.value,
        best_std_error: ev.std_error,
        budget_spent: ev.cost,
        iterations: 0,
        trajectory: Vec::new(),
        evaluations: vec![EvaluationRecord {
            index: 0,
            point: 0,
            x: x.clone(),
            value: ev.value,
            std_error: ev.std_error,
            shots: ev.shots,
            cost: ev.cost,
            budget_spent: ev.cost,
            origin: Origin::Cell,
            kind: CallKind::Explore,
        }],
        tree: SearchTree { dims: Vec::new(), cells: Vec::new(), points: Vec::new() },
        error: None,
        stopped_by: "budget".into(),
    }
}

/// E and ℰ at `theta` from fresh samples of the variance bases.
fn measure_error_bar(
    device: &Device,
    h: &PauliSum,
    theta: &[f64],
    cfg: &RunConfig,
    cdr: &CdrStore,
    seeds: &[u64],
    reference: Option<&ExactReference>,
) -> Result<Checkpoint> {
    let n = device.n_sites();
    let bases = cfg.estimator.scheme.variance_bases(n);
    let shots = cfg.checkpoints.shots;
    let p = ParamPoint::new(theta.to_vec());
    let data = store_all(cdr, device.measure(&p, &bases, shots as usize, seeds)?)?;
    let e = estimate_energy(&data, h, &cfg.estimator)?;
    let v = estimate_variance(&data, h, e.value, &cfg.estimator)?;
    let (ratio, fidelity, bound) = match reference {
        Some(r) => {
            let distance = r.distance(e.value);
            let limit = v.error_bar + 3.0 * v.error_bar_std;
            let f = device.fidelity(&p, r.ground_state.as_ref().expect("reference carries its state"))?;
            (
                Some(v.error_bar / r.gap),
                Some(Quantity::Exact { value: f }),
                Some(BoundCheck { distance, limit, holds: distance <= limit, full_spectrum: r.spectrum.is_some() }),
            )
        }
        None => (None, None, None),
    };
    Ok(Checkpoint {
        iteration: 0,
        budget_spent: 0,
        theta: theta.to_vec(),
        energy: Quantity::measured(e.value, e.std_error),
        variance: Quantity::measured(v.variance.value, v.variance.std_error),
        error_bar: Quantity::measured(v.error_bar, v.error_bar_std),
        ratio_to_gap: ratio,
        fidelity,
        bound,
        shots_per_basis: shots,
        cost: u64::from(shots) * bases.len() as u64,
    })
}

fn measure_observables(ideal: &StateVector, cdr: &CdrStore, theta: &[f64], est: &EstimatorConfig) -> Result<Observables> {
    let n = ideal.n_sites();
    let z = MeasurementBasis::uniform(n, Axis::Z);
    let data = cdr.query_all(theta);
    let measure = |op: &PauliSum| -> Result<Quantity> {
        let r = MeasurementPlan::new(op, std::slice::from_ref(&z), est.scheme)?.estimate(&data, est)?;
        Ok(Quantity::measured(r.value, r.std_error))
    };
    let densities = (1..=n).map(|j| measure(&particle_density(j, n)?)).collect::<Result<Vec<_>>>()?;
    let o = order_parameter(n)?;
    Ok(Observables {
        densities,
        densities_exact: particle_densities(ideal)?.into_iter().map(|value| Quantity::Exact { value }).collect(),
        order_parameter: measure(&o)?,
        order_parameter_exact: Quantity::Exact { value: expectation(ideal, &o)? },
        renyi2_half: Quantity::Exact { value: renyi2_entropy(ideal, 1, n / 2)? },
    })
}

fn run_qse(device: &Device, h: &PauliSum, ideal: &StateVector, theta: &[f64], cfg: &RunConfig, cdr: &CdrStore) -> Result<QseReport> {
    let n = device.n_sites();
    let ops = excitation_operators(n)?;
    let (l0, gap) = gap_estimate(&build_subspace_exact(ideal, h, &ops)?)?;
    let mut bases = cfg.estimator.scheme.variance_bases(n);
    bases.extend(covering_bases(h, &ops, &bases)?);
    let shots = cfg.qse.shots;
    let seeds: Vec<u64> = (0..bases.len() as u64).map(|i| call_seed(cfg.seed, stream::QSE, i)).collect();
    let data = store_all(cdr, device.measure(&ParamPoint::new(theta.to_vec()), &bases, shots as usize, &seeds)?)?;
    let cost = u64::from(shots) * bases.len() as u64;
    let mut report = QseReport {
        ideal_ground: Quantity::Exact { value: l0 },
        ideal_gap: Quantity::Exact { value: gap },
        measured_ground: None,
        measured_gap: None,
        measured_problem: None,
        shots_per_basis: shots,
        n_bases: bases.len(),
        cost,
        warning: None,
    };
    let problem = build_subspace_shots(&data, h, &ops, &bases, &cfg.estimator)?;
    match gap_estimate(&problem) {
        Ok((m0, mgap)) => {
            let (s0, sgap) = resampled_errors(&problem, cfg.qse.resamples, call_seed(cfg.seed, stream::RESAMPLE, 0));
            report.measured_ground = Some(Quantity::measured(m0, s0));
            report.measured_gap = Some(Quantity::measured(mgap, sgap));
        }
        Err(e) => report.warning = Some(e.to_string()),
    }
    report.measured_problem = Some(problem);
    Ok(report)
}

/// Standard deviations of `(λ₀, Δ)` under Gaussian perturbation of the
/// matrix entries by their standard errors.
fn resampled_errors(p: &SubspaceProblem, resamples: usize, seed: u64) -> (f64, f64) {
    let (Some(he), Some(me)) = (&p.h_err, &p.overlap_err) else { return (0.0, 0.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let k = p.dim();
    let mut samples = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut q = p.clone();
        for i in 0..k {
            for j in i..k {
                let dh = he[i][j] * unit.sample(&mut rng);
                let dm = me[i][j] * unit.sample(&mut rng);
                q.h_eff[i][j] += dh;
                q.overlap[i][j] += dm;
                if j != i {
                    q.h_eff[j][i] += dh;
                    q.overlap[j][i] += dm;
                }
            }
        }
        if let Ok(g) = gap_estimate(&q) {
            samples.push(g);
        }
    }
    if samples.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let sd = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let m = samples.iter().map(f).sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    };
    (sd(&|s| s.0), sd(&|s| s.1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n_sites: usize,
    pub mass: f64,
    pub checkpoint: Checkpoint,
    pub reference: Option<ExactReference>,
}

/// Measures E and ℰ at a given point with the checkpoint shot count.
pub fn verify(cfg: &RunConfig, theta: &[f64]) -> Result<VerifyReport> {
    let problem = cfg.build()?;
    if theta.len() != problem.dims.len() {
        return Err(VqsError::SizeMismatch { expected: problem.dims.len(), actual: theta.len() });
    }
    let reference = if cfg.oracle.enabled { Some(ExactReference::compute(&problem.h, cfg.oracle.full_spectrum_max_dim)?) } else { None };
    let nvb = cfg.estimator.scheme.variance_bases(cfg.model.n_sites).len() as u64;
    let seeds: Vec<u64> = (0..nvb).map(|i| call_seed(cfg.seed, stream::VERIFY, i)).collect();
    let cdr = CdrStore::in_memory();
    let checkpoint = measure_error_bar(&problem.device, &problem.h, theta, cfg, &cdr, &seeds, reference.as_ref())?;
    Ok(VerifyReport { n_sites: cfg.model.n_sites, mass: cfg.model.m, checkpoint, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_log_spaced() {
        assert_eq!(checkpoint_iterations(300, 6), vec![1, 3, 10, 31, 96, 300]);
        assert_eq!(checkpoint_iterations(3, 6), vec![1, 2, 3]);
        assert!(checkpoint_iterations(0, 6).is_empty());
    }
}
