use argmin::core::{CostFunction, Executor, Gradient};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{call_seed, stream, RunConfig};
use crate::ansatz::{AnsatzSpec, LayerKind, ParamPoint};
use crate::ed::{ed_spectrum, EdSector};
use crate::error::{Result, VqsError};
use crate::operator::SectorOperator;
use crate::schwinger::{build_hamiltonian, SchwingerParams};
use crate::sector::StateVector;
use crate::simulator::{fidelity_any, neel_state, NeelPhase, ResourceParams, Simulator};

/// Entangling angles are searched on the whole real line through `|θ|`, so
/// the quasi-Newton steps never meet the lower bound.
struct ExactEnergy<'a> {
    sim: &'a Simulator,
    h: &'a SectorOperator,
    init: &'a StateVector,
    folded: Vec<bool>,
}

impl ExactEnergy<'_> {
    fn fold(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.folded).map(|(v, &f)| if f { v.abs() } else { *v }).collect()
    }
}

impl CostFunction for ExactEnergy<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.sim.energy_gradient(self.h, &ParamPoint::new(self.fold(x)), self.init)?.0)
    }
}

impl Gradient for ExactEnergy<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let mut g = self.sim.energy_gradient(self.h, &ParamPoint::new(self.fold(x)), self.init)?.1;
        for ((gi, xi), &f) in g.iter_mut().zip(x).zip(&self.folded) {
            if f && *xi < 0.0 {
                *gi = -*gi;
            }
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityCell {
    pub n_sites: usize,
    pub delta_m: f64,
    pub mass: f64,
    pub n_layers: usize,
    pub n_params: usize,
    /// Lowest exact energy over all starts.
    pub energy: f64,
    pub ground_energy: f64,
    /// `1 − F` of the lowest-energy optimum.
    pub infidelity: f64,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequiredDepth {
    pub n_sites: usize,
    pub delta_m: f64,
    /// Smallest depth reaching the target; `None` if `max_layers` did not.
    pub n_layers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    pub infidelity_target: f64,
    pub critical_mass: f64,
    pub cells: Vec<ScalabilityCell>,
    pub required: Vec<RequiredDepth>,
}

impl ScalabilityReport {
    pub fn required_depth(&self, n_sites: usize, delta_m: f64) -> Option<Option<usize>> {
        self.required.iter().find(|r| r.n_sites == n_sites && r.delta_m == delta_m).map(|r| r.n_layers)
    }
}

fn minimize(problem: ExactEnergy<'_>, x0: Vec<f64>, max_iters: u64) -> Result<(f64, Vec<f64>)> {
    let folded = problem.folded.clone();
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 7);
    let res = Executor::new(problem, solver)
        .configure(|s| s.param(x0).max_iters(max_iters))
        .run()
        .map_err(|e| VqsError::Numerical(format!("quasi-Newton search failed: {e}")))?;
    let x = res.state.best_param.ok_or_else(|| VqsError::Numerical("search returned no point".into()))?;
    let x = x.iter().zip(&folded).map(|(v, &f)| if f { v.abs() } else { *v }).collect();
    Ok((res.state.best_cost, x))
}

/// Resource parameters of `cfg` moved to `n` sites; an unset exponent keeps
/// following the size default.
fn resource_for(cfg: &RunConfig, n: usize) -> ResourceParams {
    ResourceParams { n_sites: n, ..cfg.resource_params() }
}

/// Best exact energy at one depth from random starts plus the given seeds.
fn best_at_depth(
    spec: &AnsatzSpec,
    cfg: &RunConfig,
    h: &SectorOperator,
    init: &StateVector,
    seeds: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<f64>)> {
    let sim = Simulator::new(resource_for(cfg, spec.n_sites), spec.clone())?;
    let bounds = spec.bounds()?;
    let folded: Vec<bool> = bounds.iter().map(|b| b.kind == LayerKind::Entangling).collect();
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();
    for _ in 0..cfg.scalability.starts {
        starts.push(
            bounds.iter().map(|b| if b.periodic { rng.random_range(-b.hi..b.hi) } else { rng.random_range(0.0..1.0) }).collect(),
        );
    }
    let mut best = (f64::INFINITY, Vec::new());
    for x0 in starts {
        let problem = ExactEnergy { sim: &sim, h, init, folded: folded.clone() };
        let (e, x) = match minimize(problem, x0, cfg.scalability.max_iters) {
            Ok(r) => r,
            Err(err) => {
                log::warn!("start discarded: {err}");
                continue;
            }
        };
        if e < best.0 {
            best = (e, x);
        }
    }
    if best.1.is_empty() {
        return Err(VqsError::Numerical("every start failed".into()));
    }
    Ok(best)
}

/// Infidelity of the best exact-energy optimum against the ground state for
/// every size, mass offset and depth up to the first depth meeting the target.
pub fn run_scalability_study(cfg: &RunConfig) -> Result<ScalabilityReport> {
    let sc = &cfg.scalability;
    let mc = cfg.sweep.critical_mass;
    let mut cells = Vec::new();
    let mut required = Vec::new();
    for (ni, &n) in sc.sites.iter().enumerate() {
        // Largest offsets first; their optima seed the harder ones nearby.
        let mut offsets = sc.delta_masses.clone();
        offsets.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
        // Best optimum per depth, kept separately for each initial phase.
        let mut by_depth: [Vec<Option<Vec<f64>>>; 2] = [vec![None; sc.max_layers + 1], vec![None; sc.max_layers + 1]];
        for (di, &dm) in offsets.iter().enumerate() {
            let m = mc + dm;
            let params = SchwingerParams { n_sites: n, m, ..cfg.model.clone() };
            let hp = build_hamiltonian(&params)?;
            let gs = ed_spectrum(&hp, EdSector::zero_magnetization(), 1)?;
            let side = usize::from(m < mc);
            let phase = if side == 1 { NeelPhase::Anti } else { NeelPhase::Vacuum };
            let init = neel_state(n, phase)?;
            let h = SectorOperator::new(&hp, init.basis().clone())?;
            let mut rng = ChaCha8Rng::seed_from_u64(call_seed(cfg.seed, stream::SCALABILITY, (ni * 1000 + di) as u64));
            let mut reached = None;
            let mut previous: Option<Vec<f64>> = None;
            for layers in 1..=sc.max_layers {
                let spec = AnsatzSpec { entangling_max: 1e3, ..cfg.ansatz.spec(n, layers) };
                let np = spec.n_params()?;
                let mut seeds = Vec::new();
                // The shallower optimum padded with an identity layer.
                if let Some(p) = &previous {
                    let mut x = p.clone();
                    x.resize(np, 0.0);
                    seeds.push(x);
                }
                if let Some(p) = &by_depth[side][layers] {
                    seeds.push(p.clone());
                }
                let (energy, theta) = best_at_depth(&spec, cfg, &h, &init, &seeds, &mut rng)?;
                let sim = Simulator::new(resource_for(cfg, n), spec.clone())?;
                let state = sim.prepare(&ParamPoint::new(theta.clone()), &init)?;
                let infidelity = 1.0 - fidelity_any(&state, &gs[0].state)?;
                log::info!("N={n} δm={dm} layers={layers}: 1−F = {infidelity:.4}");
                cells.push(ScalabilityCell {
                    n_sites: n,
                    delta_m: dm,
                    mass: m,
                    n_layers: layers,
                    n_params: np,
                    energy,
                    ground_energy: gs[0].energy,
                    infidelity,
                    theta: theta.clone(),
                });
                by_depth[side][layers] = Some(theta.clone());
                previous = Some(theta);
                if infidelity <= sc.infidelity_target {
                    reached = Some(layers);
                    break;
                }
            }
            required.push(RequiredDepth { n_sites: n, delta_m: dm, n_layers: reached });
        }
    }
    required.sort_by(|a, b| a.n_sites.cmp(&b.n_sites).then(a.delta_m.total_cmp(&b.delta_m)));
    Ok(ScalabilityReport { infidelity_target: sc.infidelity_target, critical_mass: mc, cells, required })
}
