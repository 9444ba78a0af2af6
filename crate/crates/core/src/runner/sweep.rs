use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::{call_seed, stream, RunConfig};
use super::ground::{run_ground_state_warm, RunOutcome};
use crate::error::Result;
use crate::measurement::cdr::theta_key;
use crate::measurement::reevaluate;
use crate::optimizer::WarmStart;
use crate::schwinger::build_hamiltonian;
use crate::simulator::NeelPhase;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mass: f64,
    pub phase: NeelPhase,
    pub n_layers: usize,
    pub warm_started: bool,
    /// Index into the input mass list.
    pub input_index: usize,
}

pub struct SweepOutcome {
    /// In execution order.
    pub points: Vec<(SweepPoint, RunOutcome)>,
}

impl SweepOutcome {
    /// Points sorted by mass.
    pub fn by_mass(&self) -> Vec<&(SweepPoint, RunOutcome)> {
        let mut v: Vec<_> = self.points.iter().collect();
        v.sort_by(|a, b| a.0.mass.total_cmp(&b.0.mass));
        v
    }
}

/// Execution order: the side at or above `critical` first, then the side
/// below, each walking away from `critical`. Returns input indices.
pub fn order_masses(masses: &[f64], critical: f64) -> Vec<usize> {
    let side = |above: bool| {
        let mut v: Vec<usize> = (0..masses.len()).filter(|&i| (masses[i] >= critical) == above).collect();
        v.sort_by(|&a, &b| (masses[a] - critical).abs().total_cmp(&(masses[b] - critical).abs()));
        v
    };
    let mut order = side(true);
    order.extend(side(false));
    order
}

/// Re-scores the search of `prev` under the Hamiltonian of `cfg` using only
/// its stored shots. `None` when the domains differ or a tree point lacks data.
pub fn warm_start_from(prev: &RunOutcome, cfg: &RunConfig) -> Result<Option<WarmStart>> {
    let Some(tree) = &prev.tree else { return Ok(None) };
    let problem = cfg.build()?;
    if tree.dims != problem.dims || prev.report.phase != problem.device.phase {
        return Ok(None);
    }
    let h = build_hamiltonian(&cfg.model)?;
    let scores: HashMap<_, _> =
        reevaluate(&prev.cdr, &h, &cfg.estimator)?.into_iter().map(|(theta, r)| (theta_key(&theta), r)).collect();
    let mut points = Vec::with_capacity(tree.points.len());
    for p in &tree.points {
        let Some(r) = scores.get(&theta_key(&p.x)) else {
            log::warn!("warm start abandoned: a searched point has no stored shots");
            return Ok(None);
        };
        let shots = r.shots_used.values().copied().min().unwrap_or(0) as u32;
        points.push((p.x.clone(), r.value, r.std_error, shots.max(1)));
    }
    Ok(Some(WarmStart { cells: tree.cells.clone(), points }))
}

/// Runs every mass of `cfg.sweep`, warm-starting each from the previous
/// point on the same side of the transition.
pub fn run_mass_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    let sw = &cfg.sweep;
    let mut points: Vec<(SweepPoint, RunOutcome)> = Vec::new();
    let mut prev_side: Option<bool> = None;
    for (k, idx) in order_masses(&sw.masses, sw.critical_mass).into_iter().enumerate() {
        let m = sw.masses[idx];
        let mut run = cfg.clone();
        run.model.m = m;
        run.phase = None;
        run.seed = call_seed(cfg.seed, stream::SWEEP, k as u64);
        if (m - sw.critical_mass).abs() <= sw.near_critical_window {
            run.ansatz.n_layers = sw.near_critical_layers;
        }
        let above = m >= sw.critical_mass;
        let warm = match points.last() {
            Some((_, prev)) if sw.warm_start && prev_side == Some(above) => warm_start_from(prev, &run)?,
            _ => None,
        };
        log::info!("sweep point m = {m} ({} of {})", k + 1, sw.masses.len());
        let outcome = run_ground_state_warm(&run, warm.as_ref())?;
        let point = SweepPoint {
            mass: m,
            phase: outcome.report.phase,
            n_layers: run.ansatz.n_layers,
            warm_started: warm.is_some(),
            input_index: idx,
        };
        prev_side = Some(above);
        points.push((point, outcome));
    }
    Ok(SweepOutcome { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_walk_away_from_the_transition() {
        let masses = [-2.0, -1.0, -0.6, 0.0, 0.8];
        let order = order_masses(&masses, -0.7);
        let walked: Vec<f64> = order.iter().map(|&i| masses[i]).collect();
        assert_eq!(walked, vec![-0.6, 0.0, 0.8, -1.0, -2.0]);
    }
}
