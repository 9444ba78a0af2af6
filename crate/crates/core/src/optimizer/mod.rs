//! Noisy, budgeted global minimization: dividing-rectangles search with a
//! Gaussian-process metamodel and OCBA shot refinement.

pub mod direct;
pub mod gp;
pub mod ocba;

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
pub use direct::{potentially_optimal, Cell, HullPoint};
pub use gp::{FitOptions, GpHyper, Metamodel, Observation};
pub use ocba::{ocba_allocate, ocba_weights, Candidate};

/// One search coordinate.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Dimension {
    pub fn new(lo: f64, hi: f64, periodic: bool) -> Self {
        Dimension { lo, hi, periodic }
    }
}

/// Result of one noisy objective call.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub std_error: f64,
    pub shots: u32,
    /// Budget units consumed.
    pub cost: u64,
}

/// Noisy objective. `x` is in physical coordinates.
pub trait Oracle {
    fn evaluate(&mut self, x: &[f64], shots: u32) -> Result<Evaluation>;
    /// Budget units a call with `shots` shots will consume.
    fn cost(&self, shots: u32) -> u64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Stopping {
    /// Run until the budget is spent.
    Budget,
    /// Stop once the incumbent's pooled value reaches `value`.
    Threshold { value: f64 },
    /// Stop when the incumbent improved by less than `tol` over `window` iterations.
    Stationary { window: usize, tol: f64 },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncumbentRule {
    /// Lowest pooled mean among evaluated points.
    #[default]
    Pooled,
    /// Lowest metamodel mean among evaluated points.
    Metamodel,
}

/// Values the cell selection ranks by.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullValues {
    /// Pooled sample means.
    #[default]
    Pooled,
    /// Pooled means shrunk toward the metamodel by inverse-variance weighting.
    Smoothed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Total budget in oracle cost units.
    pub budget: u64,
    pub initial_shots: u32,
    /// Slack of the potentially-optimal test.
    pub eps: f64,
    pub refit_cadence: usize,
    pub gp_recent: usize,
    pub gp_best: usize,
    pub min_size: f64,
    pub metamodel: bool,
    pub ocba: bool,
    /// Extra shots per candidate handed out by one OCBA round.
    pub ocba_shots: u32,
    pub ocba_max_candidates: usize,
    /// Cap on the share of the budget spent by in-loop OCBA rounds.
    pub ocba_budget_fraction: f64,
    /// Share of the budget held back for the final incumbent choice.
    pub final_fraction: f64,
    pub final_candidates: usize,
    pub incumbent: IncumbentRule,
    pub hull_values: HullValues,
    pub stopping: Stopping,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            budget: 100_000,
            initial_shots: 30,
            eps: 1e-4,
            refit_cadence: 25,
            gp_recent: 500,
            gp_best: 100,
            min_size: 1e-6,
            metamodel: true,
            ocba: true,
            ocba_shots: 30,
            ocba_max_candidates: 4,
            ocba_budget_fraction: 0.2,
            final_fraction: 0.05,
            final_candidates: 8,
            incumbent: IncumbentRule::Pooled,
            hull_values: HullValues::Pooled,
            stopping: Stopping::Budget,
            seed: 0,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Cell,
    Probe,
    Warm,
}

/// Pooled record of every call at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// `(value, std_error, shots)` per call.
    pub batches: Vec<(f64, f64, u32)>,
    pub origin: Origin,
}

impl PointRecord {
    pub fn shots(&self) -> u64 {
        self.batches.iter().map(|b| b.2 as u64).sum()
    }

    /// Shot-weighted mean over all calls.
    pub fn mean(&self) -> f64 {
        let s = self.shots() as f64;
        if s == 0.0 {
            return self.batches.iter().map(|b| b.0).sum::<f64>() / self.batches.len() as f64;
        }
        self.batches.iter().map(|b| b.0 * b.2 as f64).sum::<f64>() / s
    }

    /// Standard error of [`mean`](Self::mean).
    pub fn std_error(&self) -> f64 {
        let s = self.shots() as f64;
        if s == 0.0 {
            return self.batches.first().map_or(0.0, |b| b.1);
        }
        self.batches.iter().map(|b| (b.1 * b.2 as f64).powi(2)).sum::<f64>().sqrt() / s
    }

    /// Per-shot standard deviation implied by the pooled error.
    pub fn sigma(&self) -> f64 {
        self.std_error() * (self.shots() as f64).sqrt()
    }
}

/// One oracle call as logged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub index: usize,
    pub point: usize,
    pub x: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
    pub shots: u32,
    pub cost: u64,
    pub budget_spent: u64,
    pub origin: Origin,
    pub kind: CallKind,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallKind {
    Explore,
    Probe,
    Refine,
    Final,
}

/// One line of the per-iteration trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub value: f64,
    pub std_error: f64,
    pub cell_size: Option<f64>,
    pub budget_spent: u64,
    /// Metamodel minimum prediction and its 2σ half-width.
    pub prediction: Option<(f64, f64)>,
    /// Running minimum of incumbent values.
    pub best_observed: f64,
}

/// Cell tree plus point ledger, enough to resume the search elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub dims: Vec<Dimension>,
    pub cells: Vec<Cell>,
    pub points: Vec<PointRecord>,
}

/// Re-scored prior search used to seed a new run at zero cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub cells: Vec<Cell>,
    /// Points with their new `(value, std_error, shots)`; order matches the
    /// `point` indices used by `cells`.
    pub points: Vec<(Vec<f64>, f64, f64, u32)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub best_std_error: f64,
    pub budget_spent: u64,
    pub iterations: usize,
    pub trajectory: Vec<TrajectoryEntry>,
    pub evaluations: Vec<EvaluationRecord>,
    pub tree: SearchTree,
    /// Cause of an early stop after an oracle failure.
    pub error: Option<String>,
    pub stopped_by: String,
}

struct Search<'a, O: Oracle> {
    oracle: &'a mut O,
    cfg: &'a OptimizerConfig,
    dims: Vec<Dimension>,
    periodic: Vec<bool>,
    cells: Vec<Cell>,
    points: Vec<PointRecord>,
    lookup: HashMap<Vec<i64>, usize>,
    spent: u64,
    ocba_spent: u64,
    evals: Vec<EvaluationRecord>,
    trajectory: Vec<TrajectoryEntry>,
    model: Option<Metamodel>,
    hyper: Option<GpHyper>,
    since_refit: usize,
    refits: usize,
    /// Candidates refined in the final stage; the incumbent is chosen among them.
    finalists: Option<Vec<usize>>,
    prediction: Option<(f64, f64)>,
    best_observed: f64,
}

fn key(u: &[f64]) -> Vec<i64> {
    u.iter().map(|x| (x * 1e12).round() as i64).collect()
}

impl<O: Oracle> Search<'_, O> {
    fn to_x(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.dims).map(|(&v, d)| d.lo + v * (d.hi - d.lo)).collect()
    }

    fn to_u(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.dims).map(|(&v, d)| (v - d.lo) / (d.hi - d.lo)).collect()
    }

    fn affordable(&self, shots: u32) -> bool {
        self.spent + self.oracle.cost(shots) <= self.cfg.budget
    }

    fn main_budget(&self) -> u64 {
        self.cfg.budget - (self.cfg.budget as f64 * self.cfg.final_fraction) as u64
    }

    fn point_for(&mut self, u: Vec<f64>, origin: Origin) -> usize {
        let k = key(&u);
        if let Some(&i) = self.lookup.get(&k) {
            return i;
        }
        let x = self.to_x(&u);
        self.points.push(PointRecord { x, u, batches: Vec::new(), origin });
        self.lookup.insert(k, self.points.len() - 1);
        self.points.len() - 1
    }

    fn call(&mut self, point: usize, shots: u32, kind: CallKind) -> Result<()> {
        let x = self.points[point].x.clone();
        let e = self.oracle.evaluate(&x, shots)?;
        self.spent += e.cost;
        if kind == CallKind::Refine {
            self.ocba_spent += e.cost;
        }
        self.points[point].batches.push((e.value, e.std_error, e.shots));
        self.evals.push(EvaluationRecord {
            index: self.evals.len(),
            point,
            x,
            value: e.value,
            std_error: e.std_error,
            shots: e.shots,
            cost: e.cost,
            budget_spent: self.spent,
            origin: self.points[point].origin,
            kind,
        });
        self.since_refit += 1;
        Ok(())
    }

    /// Ranking score of an evaluated point under the incumbent rule.
    fn score(&self, i: usize) -> f64 {
        match (self.cfg.incumbent, &self.model) {
            (IncumbentRule::Metamodel, Some(m)) => m.mean_at(&self.points[i].u),
            _ => self.points[i].mean(),
        }
    }

    fn incumbent(&self) -> usize {
        let pool: Vec<usize> = match &self.finalists {
            Some(f) => f.clone(),
            None => (0..self.points.len()).filter(|&i| !self.points[i].batches.is_empty()).collect(),
        };
        let key = |i: usize| if self.finalists.is_some() { self.points[i].mean() } else { self.score(i) };
        pool.into_iter().min_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b))).expect("at least one evaluated point")
    }

    fn active_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.cells[c].size() / 3.0 >= self.cfg.min_size).collect()
    }

    /// Value a cell is ranked by during selection.
    fn cell_value(&self, i: usize) -> f64 {
        let p = &self.points[i];
        match (&self.model, self.cfg.hull_values) {
            (Some(m), HullValues::Smoothed) => {
                let (gm, gv) = m.predict(&p.u);
                let se2 = p.std_error().powi(2);
                if gv + se2 <= 0.0 {
                    p.mean()
                } else {
                    (p.mean() * gv + gm * se2) / (gv + se2)
                }
            }
            _ => p.mean(),
        }
    }

    fn hull(&self, active: &[usize]) -> Vec<usize> {
        let pts: Vec<HullPoint> = active
            .iter()
            .map(|&c| HullPoint { size: self.cells[c].size(), value: self.cell_value(self.cells[c].point) })
            .collect();
        potentially_optimal(&pts, self.cfg.eps).into_iter().map(|k| active[k]).collect()
    }

    /// When the best cell of a size class is not clearly ahead of its
    /// runner-up, spend extra shots on the contenders.
    fn refine_contenders(&mut self, selected: &[usize], active: &[usize]) -> Result<bool> {
        if !self.cfg.ocba {
            return Ok(false);
        }
        let mut refined = false;
        for &c in selected {
            let cap = (self.cfg.budget as f64 * self.cfg.ocba_budget_fraction) as u64;
            if self.ocba_spent >= cap {
                break;
            }
            let size = self.cells[c].size_key();
            let lead = self.cells[c].point;
            let (m0, s0) = (self.points[lead].mean(), self.points[lead].std_error());
            let mut group: Vec<usize> = active
                .iter()
                .map(|&k| self.cells[k].point)
                .filter(|&p| p != lead)
                .filter(|&p| self.cells.iter().any(|cell| cell.point == p && cell.size_key() == size))
                .filter(|&p| {
                    let (m, s) = (self.points[p].mean(), self.points[p].std_error());
                    (m - m0).abs() < (s * s + s0 * s0).sqrt()
                })
                .collect();
            if group.is_empty() {
                continue;
            }
            group.sort_by(|&a, &b| self.points[a].mean().total_cmp(&self.points[b].mean()).then(a.cmp(&b)));
            group.dedup();
            group.truncate(self.cfg.ocba_max_candidates.saturating_sub(1).max(1));
            group.insert(0, lead);
            let cands: Vec<Candidate> =
                group.iter().map(|&p| Candidate { mean: self.points[p].mean(), sigma: self.points[p].sigma() }).collect();
            let extra = self.cfg.ocba_shots as u64 * group.len() as u64;
            let alloc = ocba_allocate(&cands, extra);
            for (&p, &n) in group.iter().zip(&alloc) {
                if n == 0 {
                    continue;
                }
                let n = n.min(u32::MAX as u64) as u32;
                if self.spent + self.oracle.cost(n) > self.main_budget() {
                    return Ok(refined);
                }
                self.call(p, n, CallKind::Refine)?;
                refined = true;
            }
        }
        Ok(refined)
    }

    fn subdivide(&mut self, c: usize) -> Result<bool> {
        let shots = self.cfg.initial_shots;
        if self.spent + 2 * self.oracle.cost(shots) > self.main_budget() {
            return Ok(false);
        }
        let [lo, mid, hi] = self.cells[c].trisect();
        let mut children = [lo, hi];
        for child in children.iter_mut() {
            let p = self.point_for(child.center.clone(), Origin::Cell);
            if self.points[p].batches.is_empty() {
                self.call(p, shots, CallKind::Explore)?;
            }
            child.point = p;
        }
        self.cells[c] = mid;
        self.cells.extend(children);
        Ok(true)
    }

    fn training_set(&self) -> Vec<Observation> {
        let evaluated: Vec<usize> = (0..self.points.len()).filter(|&i| !self.points[i].batches.is_empty()).collect();
        let mut chosen: Vec<usize> = evaluated.iter().rev().take(self.cfg.gp_recent).copied().collect();
        let mut by_value = evaluated.clone();
        by_value.sort_by(|&a, &b| self.points[a].mean().total_cmp(&self.points[b].mean()));
        for &i in by_value.iter().take(self.cfg.gp_best) {
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
        chosen.sort_unstable();
        chosen
            .iter()
            .map(|&i| Observation {
                u: self.points[i].u.clone(),
                y: self.points[i].mean(),
                noise_var: self.points[i].std_error().powi(2),
            })
            .collect()
    }

    fn refit_and_probe(&mut self) -> Result<()> {
        self.since_refit = 0;
        let obs = self.training_set();
        if obs.len() < 2 {
            return Ok(());
        }
        // Full multi-start fit on every fourth refit, warm polish otherwise.
        self.refits += 1;
        let full = self.hyper.is_none() || self.refits % 4 == 0;
        let opts = FitOptions {
            seed: self.cfg.seed ^ self.evals.len() as u64,
            init: self.hyper.clone(),
            starts: if full { 3 } else { 1 },
            max_iters: if full { 250 } else { 60 },
            ..Default::default()
        };
        let model = Metamodel::fit(&obs, &self.periodic, &opts)?;
        self.hyper = Some(model.hyper().clone());
        let mut ranked: Vec<usize> = (0..obs.len()).collect();
        ranked.sort_by(|&a, &b| obs[a].y.total_cmp(&obs[b].y));
        let starts: Vec<Vec<f64>> = ranked.iter().take(5).map(|&i| obs[i].u.clone()).collect();
        if let Some(u) = model.minimize_mean(&starts, 400) {
            let (m, v) = model.predict(&u);
            self.prediction = Some((m, 2.0 * v.sqrt()));
            self.model = Some(model);
            let p = self.point_for(u, Origin::Probe);
            if self.spent + self.oracle.cost(self.cfg.initial_shots) <= self.main_budget() {
                self.call(p, self.cfg.initial_shots, CallKind::Probe)?;
            }
        } else {
            self.model = Some(model);
        }
        Ok(())
    }

    fn log_iteration(&mut self, iteration: usize) {
        let inc = self.incumbent();
        let p = &self.points[inc];
        let value = p.mean();
        self.best_observed = self.best_observed.min(value);
        let cell_size = self.cells.iter().find(|c| c.point == inc).map(|c| c.size());
        self.trajectory.push(TrajectoryEntry {
            iteration,
            theta: p.x.clone(),
            value,
            std_error: p.std_error(),
            cell_size,
            budget_spent: self.spent,
            prediction: self.prediction,
            best_observed: self.best_observed,
        });
    }

    fn final_selection(&mut self) -> Result<()> {
        let left = |s: &Self| s.cfg.budget.saturating_sub(s.spent);
        if self.cfg.final_fraction <= 0.0 || left(self) == 0 {
            return Ok(());
        }
        if self.cfg.metamodel && self.since_refit > 0 {
            let obs = self.training_set();
            if obs.len() >= 2 {
                let opts = FitOptions { init: self.hyper.clone(), seed: self.cfg.seed, ..Default::default() };
                if let Ok(m) = Metamodel::fit(&obs, &self.periodic, &opts) {
                    self.model = Some(m);
                }
            }
        }
        let mut ranked: Vec<usize> = (0..self.points.len()).filter(|&i| !self.points[i].batches.is_empty()).collect();
        ranked.sort_by(|&a, &b| self.score(a).total_cmp(&self.score(b)).then(a.cmp(&b)));
        ranked.truncate(self.cfg.final_candidates.max(1));
        if let Some(m) = &self.model {
            let starts: Vec<Vec<f64>> = ranked.iter().take(3).map(|&i| self.points[i].u.clone()).collect();
            if let Some(u) = m.minimize_mean(&starts, 400) {
                let p = self.point_for(u, Origin::Probe);
                if !ranked.contains(&p) {
                    ranked.push(p);
                }
            }
        }
        // Untouched candidates get their initial batch first.
        for &p in &ranked {
            if self.points[p].batches.is_empty() && self.affordable(self.cfg.initial_shots) {
                self.call(p, self.cfg.initial_shots, CallKind::Final)?;
            }
        }
        ranked.retain(|&p| !self.points[p].batches.is_empty());
        self.finalists = Some(ranked.clone());
        if ranked.len() < 2 {
            return Ok(());
        }
        let unit = self.oracle.cost(1).max(1);
        const ROUNDS: u64 = 4;
        for round in 0..ROUNDS {
            let shots = left(self) / unit / (ROUNDS - round);
            if shots == 0 {
                break;
            }
            let cands: Vec<Candidate> =
                ranked.iter().map(|&p| Candidate { mean: self.points[p].mean(), sigma: self.points[p].sigma() }).collect();
            for (&p, &n) in ranked.iter().zip(&ocba_allocate(&cands, shots)) {
                let n = n.min(u32::MAX as u64) as u32;
                if n > 0 && self.affordable(n) {
                    self.call(p, n, CallKind::Final)?;
                }
            }
        }
        Ok(())
    }
}

/// Minimizes the oracle over the box `dims`.
pub fn run<O: Oracle>(oracle: &mut O, dims: &[Dimension], cfg: &OptimizerConfig, warm: Option<&WarmStart>) -> Result<OptimizerResult> {
    if dims.is_empty() {
        return Err(VqsError::InvalidParameter("empty search domain".into()));
    }
    if dims.iter().any(|d| !(d.hi > d.lo) || !d.lo.is_finite() || !d.hi.is_finite()) {
        return Err(VqsError::InvalidParameter("every dimension needs finite bounds with lo < hi".into()));
    }
    if dims.len() > 20 {
        log::warn!("searching {} dimensions; the cell search is tuned for at most 20", dims.len());
    }
    let mut s = Search {
        oracle,
        cfg,
        dims: dims.to_vec(),
        periodic: dims.iter().map(|d| d.periodic).collect(),
        cells: Vec::new(),
        points: Vec::new(),
        lookup: HashMap::new(),
        spent: 0,
        ocba_spent: 0,
        evals: Vec::new(),
        trajectory: Vec::new(),
        model: None,
        hyper: None,
        since_refit: 0,
        refits: 0,
        finalists: None,
        prediction: None,
        best_observed: f64::INFINITY,
    };
    let mut error = None;
    let mut stopped_by = "budget".to_string();

    match warm {
        Some(w) => {
            for (x, value, se, shots) in &w.points {
                let u = s.to_u(x);
                let p = s.point_for(u, Origin::Warm);
                s.points[p].batches.push((*value, *se, *shots));
            }
            s.cells = w.cells.clone();
            if s.cells.is_empty() || s.cells.iter().any(|c| c.point >= s.points.len()) {
                return Err(VqsError::InvalidParameter("warm start cells reference unknown points".into()));
            }
        }
        None => {
            let root = Cell::root(dims.len(), 0);
            let p = s.point_for(root.center.clone(), Origin::Cell);
            if !s.affordable(cfg.initial_shots) {
                return Err(VqsError::InvalidParameter("budget does not cover the first evaluation".into()));
            }
            s.call(p, cfg.initial_shots, CallKind::Explore)?;
            s.cells.push(Cell { point: p, ..root });
        }
    }

    let mut iteration = 0;
    let mut last_improvement = (0usize, f64::INFINITY);
    loop {
        iteration += 1;
        let active = s.active_cells();
        if active.is_empty() {
            stopped_by = "resolution".into();
            break;
        }
        let mut selected = s.hull(&active);
        match s.refine_contenders(&selected, &active) {
            Ok(true) => selected = s.hull(&active),
            Ok(false) => {}
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
        let mut progressed = false;
        for &c in &selected {
            match s.subdivide(c) {
                Ok(true) => progressed = true,
                Ok(false) => break,
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        if error.is_some() {
            s.log_iteration(iteration);
            break;
        }
        if cfg.metamodel && s.since_refit >= cfg.refit_cadence {
            if let Err(e) = s.refit_and_probe() {
                match e {
                    VqsError::Numerical(_) => log::warn!("metamodel refit skipped: {e}"),
                    other => {
                        error = Some(other.to_string());
                        s.log_iteration(iteration);
                        break;
                    }
                }
            }
        }
        s.log_iteration(iteration);
        if !progressed {
            break;
        }
        let current = s.trajectory.last().expect("logged").value;
        match &cfg.stopping {
            Stopping::Budget => {}
            Stopping::Threshold { value } => {
                if current <= *value {
                    stopped_by = "threshold".into();
                    break;
                }
            }
            Stopping::Stationary { window, tol } => {
                if current < last_improvement.1 - tol {
                    last_improvement = (iteration, current);
                } else if iteration - last_improvement.0 >= *window {
                    stopped_by = "stationary".into();
                    break;
                }
            }
        }
    }

    if error.is_none() && stopped_by == "budget" {
        if let Err(e) = s.final_selection() {
            error = Some(e.to_string());
        }
        if cfg.final_fraction > 0.0 {
            s.log_iteration(iteration + 1);
            iteration += 1;
        }
    }
    let inc = s.incumbent();
    let p = &s.points[inc];
    Ok(OptimizerResult {
        best_x: p.x.clone(),
        best_value: p.mean(),
        best_std_error: p.std_error(),
        budget_spent: s.spent,
        iterations: iteration,
        trajectory: s.trajectory,
        evaluations: s.evals,
        tree: SearchTree { dims: dims.to_vec(), cells: s.cells, points: s.points },
        error,
        stopped_by,
    })
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
