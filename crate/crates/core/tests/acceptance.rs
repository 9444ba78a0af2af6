//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Select criteria with `VQS_ACCEPTANCE_ONLY=1,2,n20`. The process exits
//! nonzero on a failure only when `VQS_ACCEPTANCE_STRICT=1`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vqs_core::ansatz::ParamPoint;
use vqs_core::ed::{ed_spectrum, EdSector};
use vqs_core::measurement::{
    estimate_energy, estimate_variance, group_by_basis, reevaluate, variance_bases, BasisScheme,
    CdrStore, EstimatorConfig, MeasurementBasis, MeasurementPlan, ShotBatch,
};
use vqs_core::measurement::cdr::theta_key;
use vqs_core::operator::expectation;
use vqs_core::optimizer::{self, ocba_allocate, Candidate, Dimension, Evaluation, OptimizerConfig, Oracle};
use vqs_core::pauli::PauliSum;
use vqs_core::qse::{build_subspace_exact, excitation_operators, gap_estimate};
use vqs_core::runner::{
    run_ground_state, run_ground_state_warm, run_mass_sweep, run_scalability_study, warm_start_from, RunConfig,
    RunOutcome,
};
use vqs_core::schwinger::{build_hamiltonian, order_parameter, SchwingerParams};
use vqs_core::simulator::{neel_state, sample, NeelPhase};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn recipe(name: &str, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::load(configs().join(name)).expect("recipe config");
    cfg.seed = seed;
    cfg.output_dir = None;
    cfg
}

fn model(n: usize, m: f64) -> PauliSum {
    build_hamiltonian(&SchwingerParams::new(n, m)).unwrap()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

fn shots_of(state: &vqs_core::sector::StateVector, bases: &[MeasurementBasis], shots: usize, seed: u64) -> BTreeMap<String, Vec<Arc<ShotBatch>>> {
    group_by_basis(
        bases.iter().enumerate().map(|(i, b)| Arc::new(sample(state, b, shots, seed * 1000 + i as u64, &[]).unwrap())),
    )
}

struct Outcome {
    failures: usize,
}

impl Outcome {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {id}: {}  {detail}", if pass { "PASS" } else { "FAIL" });
        std::io::stdout().flush().ok();
    }
}

fn criterion_1(out: &mut Outcome) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for k in 0..5 {
            let m = -2.0 + i as f64;
            let gbar = 0.25 + 0.5 * k as f64;
            let h = build_hamiltonian(&SchwingerParams { gbar, ..SchwingerParams::new(2, m) }).unwrap();
            let e = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap()[0].energy;
            worst = worst.max((e - (gbar / 2.0 - ((m + gbar / 2.0).powi(2) + 1.0).sqrt())).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    out.line("1", worst <= 1e-10 && secs < 1.0, format!("max deviation {worst:.1e}, {secs:.3} s"));
}

fn criterion_2(out: &mut Outcome) {
    let m = 0.37;
    let mut exact_worst: f64 = 0.0;
    let mut shot_ok = true;
    let mut notes = Vec::new();
    for n in [4, 8, 12] {
        let h = model(n, m);
        let vac = neel_state(n, NeelPhase::Vacuum).unwrap();
        let e = expectation(&vac, &h).unwrap();
        let e2 = expectation(&vac, &h.multiply(&h).unwrap()).unwrap() - e * e;
        exact_worst = exact_worst.max((e + m * n as f64 / 2.0).abs()).max((e2 - (n - 1) as f64).abs());

        let cfg = EstimatorConfig::default();
        let data = shots_of(&vac, &variance_bases(n), 10_000, n as u64);
        let es = estimate_energy(&data, &h, &cfg).unwrap();
        let v = estimate_variance(&data, &h, es.value, &cfg).unwrap();
        let ze = (es.value + m * n as f64 / 2.0).abs() / es.std_error.max(1e-12);
        let zv = (v.variance.value - (n - 1) as f64).abs() / v.variance.std_error;
        // A sharp Néel readout has zero spread; then the estimate must be exact.
        let e_ok = if es.std_error == 0.0 { (es.value + m * n as f64 / 2.0).abs() < 1e-10 } else { ze <= 3.0 };
        shot_ok &= e_ok && zv <= 3.0;
        notes.push(format!("N={n} E {:.4}±{:.4} ℰ² {:.3}±{:.3}", es.value, es.std_error, v.variance.value, v.variance.std_error));
    }
    out.line("2", exact_worst <= 1e-10 && shot_ok, format!("exact deviation {exact_worst:.1e}; {}", notes.join("; ")));
}

fn criterion_3(out: &mut Outcome) {
    let t = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in (2..=12).step_by(2) {
        let h = model(n, 0.1);
        let sq = h.multiply(&h).unwrap();
        let bases = variance_bases(n);
        // Every non-identity string of H² must be read by some basis.
        let uncovered = sq
            .strings()
            .filter(|s| !s.is_identity() && !bases.iter().any(|b| b.evaluates(s)))
            .count();
        ok &= uncovered == 0 && bases.len() == 3 * n && MeasurementPlan::new(&sq, &bases, BasisScheme::Full).is_ok();
        notes.push(format!("N={n}: {} strings, {uncovered} uncovered", sq.len()));
    }
    let n8 = variance_bases(8).len();
    let secs = t.elapsed().as_secs_f64();
    out.line("3", ok && n8 == 24 && secs < 30.0, format!("N=8 uses {n8} bases; {}; {secs:.1} s", notes.join(", ")));
}

fn criterion_4(out: &mut Outcome) {
    let h = model(8, 0.1);
    let gs = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap().remove(0);
    let data = shots_of(&gs.state, &variance_bases(8), 100_000, 4);
    let v = estimate_variance(&data, &h, gs.energy, &EstimatorConfig::default()).unwrap();
    let pass = v.variance.value.abs() <= 3.0 * v.variance.std_error;
    out.line("4", pass, format!("ℰ² = {:.5} ± {:.5}", v.variance.value, v.variance.std_error));
}

fn eight_site_runs() -> Vec<RunOutcome> {
    (1..=5)
        .map(|seed| {
            let t = Instant::now();
            let run = run_ground_state(&recipe("n8_ground_state.toml", seed)).unwrap();
            let r = &run.report;
            println!(
                "  seed {seed}: F = {:.3}, (E−E0)/Δ = {:.3}, {} evaluations, {:.0} s",
                r.fidelity.unwrap().value(),
                r.excitation_fraction.unwrap().value(),
                r.budget.optimizer_calls,
                t.elapsed().as_secs_f64()
            );
            run
        })
        .collect()
}

fn criterion_5(out: &mut Outcome, runs: &[RunOutcome]) {
    let mut total = 0;
    let mut bad = Vec::new();
    for run in runs {
        for c in &run.report.checkpoints {
            total += 1;
            let b = c.bound.as_ref().expect("reference spectrum");
            if !(b.holds && b.full_spectrum) {
                bad.push(format!("seed {} it {}: {:.4} > {:.4}", run.report.seed, c.iteration, b.distance, b.limit));
            }
        }
    }
    out.line("5", total > 0 && bad.is_empty(), format!("{total} checkpoints, {} violations {bad:?}", bad.len()));
}

fn criterion_6(out: &mut Outcome, runs: &[RunOutcome]) {
    let f: Vec<f64> = runs.iter().map(|r| r.report.fidelity.unwrap().value()).collect();
    let x: Vec<f64> = runs.iter().map(|r| r.report.excitation_fraction.unwrap().value()).collect();
    let params = runs[0].report.n_params;
    let (mf, mx) = (median(&f), median(&x));
    out.line(
        "6",
        mf >= 0.90 && mx <= 0.25 && params == 10,
        format!("median fidelity {mf:.3}, median excitation fraction {mx:.3}, {params} parameters"),
    );
}

fn criterion_7(out: &mut Outcome, runs: &[RunOutcome]) {
    let h = model(8, 0.1);
    let pairs = ed_spectrum(&h, EdSector::zero_magnetization(), 2).unwrap();
    let gap = pairs[1].energy - pairs[0].energy;
    let ops = excitation_operators(8).unwrap();
    let (_, exact_gap) = gap_estimate(&build_subspace_exact(&pairs[0].state, &h, &ops).unwrap()).unwrap();

    // The run of median fidelity stands for "the optimized state".
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        runs[a].report.fidelity.unwrap().value().total_cmp(&runs[b].report.fidelity.unwrap().value())
    });
    let pick = &runs[order[order.len() / 2]].report;
    let qse = pick.qse.as_ref().expect("QSE enabled in the recipe");
    let measured = qse.measured_gap.expect("measured QSE gap");
    let rel_opt = (measured.value() - gap).abs() / gap;
    let rel_exact = (exact_gap - gap).abs() / gap;
    out.line(
        "7",
        rel_opt <= 0.15 && rel_exact <= 0.10,
        format!(
            "ED gap {gap:.4}; optimized state (seed {}) {:.3} ± {:.3} ({:.1}%); exact state {exact_gap:.4} ({:.1}%)",
            pick.seed,
            measured.value(),
            measured.std_error(),
            100.0 * rel_opt,
            100.0 * rel_exact
        ),
    );
}

fn ed_order_parameter(n: usize, m: f64) -> (f64, f64) {
    let h = model(n, m);
    let gs = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap().remove(0);
    let o = expectation(&gs.state, &order_parameter(n).unwrap()).unwrap();
    (o, vqs_core::simulator::renyi2_entropy(&gs.state, 1, n / 2).unwrap())
}

fn criterion_8(out: &mut Outcome) {
    let n = 8;
    let grid: Vec<f64> = (0..=280).map(|i| -2.0 + 0.01 * i as f64).collect();
    let curve: Vec<f64> = grid.iter().map(|&m| ed_order_parameter(n, m).0).collect();
    let crossing = grid.windows(2).zip(curve.windows(2)).find(|(_, o)| (o[0] - 0.5) * (o[1] - 0.5) <= 0.0).map(|(m, o)| {
        m[0] + (0.5 - o[0]) * (m[1] - m[0]) / (o[1] - o[0])
    });
    let ed_ok = crossing.is_some_and(|c| (-0.9..=-0.5).contains(&c));

    let cfg = recipe("n8_mass_sweep.toml", 1);
    let t = Instant::now();
    let sweep = run_mass_sweep(&cfg).unwrap();
    let mut match_ok = true;
    let mut rows = Vec::new();
    let mut renyi = Vec::new();
    for (p, run) in sweep.by_mass() {
        let o = run.report.observables.order_parameter;
        let (o_ed, _) = ed_order_parameter(n, p.mass);
        let z = (o.value() - o_ed).abs() / o.std_error().max(1e-12);
        match_ok &= z <= 3.0;
        renyi.push((p.mass, run.report.observables.renyi2_half.value()));
        rows.push(format!("m={:+.1} L={} O={:.3}±{:.3} ED {:.3} ({z:.1}σ)", p.mass, p.n_layers, o.value(), o.std_error(), o_ed));
    }
    let masses: Vec<f64> = renyi.iter().map(|r| r.0).collect();
    let nearest = masses.iter().map(|m| (m - cfg.sweep.critical_mass).abs()).fold(f64::INFINITY, f64::min);
    let peak = renyi.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let peak_ok = ((peak - cfg.sweep.critical_mass).abs() - nearest).abs() < 1e-9;
    for r in &rows {
        println!("  {r}");
    }
    out.line(
        "8",
        ed_ok && match_ok && peak_ok,
        format!(
            "ED crossing at {}; VQS matches ED at every point: {match_ok}; Rényi peak at m = {peak} (nearest to {} wanted); {:.0} s",
            crossing.map_or("none".into(), |c| format!("{c:.3}")),
            cfg.sweep.critical_mass,
            t.elapsed().as_secs_f64()
        ),
    );
}

fn criterion_9(out: &mut Outcome) {
    let cfg = recipe("scalability.toml", 1);
    let t = Instant::now();
    let r = run_scalability_study(&cfg).unwrap();
    let sc = &cfg.scalability;
    let depth = |n: usize, dm: f64| r.required_depth(n, dm).flatten().unwrap_or(usize::MAX);
    let mut table = Vec::new();
    for &n in &sc.sites {
        let row: Vec<String> = sc
            .delta_masses
            .iter()
            .map(|&dm| r.required_depth(n, dm).flatten().map_or("-".into(), |l| l.to_string()))
            .collect();
        table.push(format!("N={n}: [{}]", row.join(" ")));
    }

    // Non-increasing away from the critical point, on each side.
    let mut monotone = true;
    for &n in &sc.sites {
        for side in [-1.0, 1.0] {
            let mut dms: Vec<f64> = sc.delta_masses.iter().copied().filter(|d| *d == 0.0 || d.signum() == side).collect();
            dms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            monotone &= dms.windows(2).all(|w| depth(n, w[1]) <= depth(n, w[0]));
        }
    }
    // Saturation: the largest size needs no more layers than the most any
    // smaller size needed.
    let mut sizes = sc.sites.clone();
    sizes.sort();
    let big = sizes[sizes.len() - 1];
    let saturated = sc.delta_masses.iter().filter(|d| d.abs() >= 1.0).all(|&dm| {
        let before = sizes[..sizes.len() - 1].iter().map(|&n| depth(n, dm)).max().unwrap_or(0);
        depth(big, dm) != usize::MAX && depth(big, dm) <= before
    });
    // At the critical point the depth stays within proportional scaling of
    // the smallest size.
    let n0 = sizes[0];
    let d0 = depth(n0, 0.0);
    let linear = d0 != usize::MAX
        && sizes.iter().all(|&n| depth(n, 0.0) != usize::MAX && depth(n, 0.0) * n0 <= d0 * n);
    out.line(
        "9",
        monotone && saturated && linear,
        format!(
            "δm = {:?}; {}; non-increasing {monotone}, saturated {saturated}, at most linear {linear}; {:.0} s",
            sc.delta_masses,
            table.join("; "),
            t.elapsed().as_secs_f64()
        ),
    );
}

struct Fixture<F: Fn(&[f64]) -> f64> {
    f: F,
    sigma: f64,
    rng: ChaCha8Rng,
}

impl<F: Fn(&[f64]) -> f64> Oracle for Fixture<F> {
    fn evaluate(&mut self, x: &[f64], shots: u32) -> vqs_core::Result<Evaluation> {
        let se = self.sigma / (shots as f64 / 30.0).sqrt();
        let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut self.rng);
        Ok(Evaluation { value: (self.f)(x) + se * z, std_error: se, shots, cost: shots as u64 })
    }
    fn cost(&self, shots: u32) -> u64 {
        shots as u64
    }
}

fn ocba_by_hand(c: &[Candidate], extra: u64) -> Vec<u64> {
    let best = (0..c.len()).fold(0, |b, i| if c[i].mean < c[b].mean { i } else { b });
    let mut w = vec![0.0; c.len()];
    for i in (0..c.len()).filter(|&i| i != best) {
        w[i] = (c[i].sigma / (c[i].mean - c[best].mean)).powi(2);
    }
    w[best] = c[best].sigma * (0..c.len()).filter(|&i| i != best).map(|i| (w[i] / c[i].sigma).powi(2)).sum::<f64>().sqrt();
    let total: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|x| x / total * extra as f64).collect();
    let mut a: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&i, &j| (exact[j] - exact[j].floor()).total_cmp(&(exact[i] - exact[i].floor())).then(i.cmp(&j)));
    let short = extra - a.iter().sum::<u64>();
    for &i in idx.iter().take(short as usize) {
        a[i] += 1;
    }
    a
}

fn criterion_10(out: &mut Outcome) {
    let unit = |d: usize| vec![Dimension::new(0.0, 1.0, false); d];
    // Budgets count shots; one evaluation at the initial shot count costs 30.
    let noiseless = |evals: u64| OptimizerConfig { budget: 30 * evals, ocba: false, final_fraction: 0.0, ..Default::default() };

    let mut o = Fixture { f: |x: &[f64]| (x[0] - 0.3).powi(2), sigma: 0.0, rng: ChaCha8Rng::seed_from_u64(0) };
    let r1 = optimizer::run(&mut o, &unit(1), &noiseless(500), None).unwrap();
    let e1 = (r1.best_x[0] - 0.3).abs();

    let f2 = |x: &[f64]| (x[0] - 0.62).powi(2) + 2.0 * (x[1] - 0.27).powi(2) + 0.5 * (x[0] - 0.62) * (x[1] - 0.27);
    let mut o = Fixture { f: f2, sigma: 0.0, rng: ChaCha8Rng::seed_from_u64(0) };
    let r2 = optimizer::run(&mut o, &unit(2), &noiseless(500), None).unwrap();
    let e2 = (r2.best_x[0] - 0.62).abs().max((r2.best_x[1] - 0.27).abs());

    let mut o = Fixture { f: |x: &[f64]| (x[0] - 0.3).powi(2), sigma: 0.1, rng: ChaCha8Rng::seed_from_u64(7) };
    let cfg = OptimizerConfig { budget: 30 * 5_000, seed: 3, ..Default::default() };
    let r3 = optimizer::run(&mut o, &unit(1), &cfg, None).unwrap();
    let e3 = (r3.best_x[0] - 0.3).abs();

    let fixtures = [
        vec![Candidate { mean: 0.0, sigma: 1.0 }, Candidate { mean: 0.5, sigma: 2.0 }, Candidate { mean: 1.0, sigma: 1.5 }],
        vec![Candidate { mean: -0.2, sigma: 0.3 }, Candidate { mean: -0.35, sigma: 0.8 }, Candidate { mean: 0.1, sigma: 0.1 }, Candidate { mean: -0.3, sigma: 0.5 }],
        vec![Candidate { mean: 1.0, sigma: 0.2 }, Candidate { mean: 1.1, sigma: 0.2 }],
    ];
    let ocba_ok = fixtures.iter().all(|c| [97, 1000, 12_345].iter().all(|&x| ocba_allocate(c, x) == ocba_by_hand(c, x)));

    out.line(
        "10",
        e1 <= 1e-2 && r1.evaluations.len() <= 500 && e2 <= 1e-2 && r2.evaluations.len() <= 500 && e3 <= 5e-2 && ocba_ok,
        format!(
            "1D error {e1:.1e} in {} evaluations, 2D error {e2:.1e} in {}, noisy error {e3:.1e} in {}, OCBA exact {ocba_ok}",
            r1.evaluations.len(),
            r2.evaluations.len(),
            r3.evaluations.len()
        ),
    );
}

/// First budget stamp at which the incumbent's exact energy is at most `threshold`.
fn budget_to_reach(run: &RunOutcome, threshold: f64) -> Option<u64> {
    let p = run.config.build().unwrap();
    run.trajectory.iter().find_map(|t| {
        let s = p.device.prepare(&ParamPoint::new(t.theta.clone())).unwrap();
        (expectation(&s, &p.h).unwrap() <= threshold).then_some(t.budget_spent)
    })
}

fn criterion_11(out: &mut Outcome, runs: &[RunOutcome]) {
    // Re-scoring under a new mass against estimates rebuilt from the same
    // batches after a round trip through disk.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cdr.jsonl");
    {
        let disk = CdrStore::open(&path).unwrap();
        for b in runs[0].cdr.records() {
            disk.store((*b).clone()).unwrap();
        }
    }
    let disk = CdrStore::open(&path).unwrap();
    let est = EstimatorConfig::default();
    let h = model(8, -0.4);
    let rescored = reevaluate(&runs[0].cdr, &h, &est).unwrap();
    let mut by_theta: BTreeMap<_, Vec<Arc<ShotBatch>>> = BTreeMap::new();
    for b in disk.records() {
        by_theta.entry(theta_key(&b.theta)).or_default().push(b);
    }
    let bits_ok = !rescored.is_empty()
        && rescored.iter().all(|(theta, r)| {
            let fresh = estimate_energy(&group_by_basis(by_theta[&theta_key(theta)].iter().cloned()), &h, &est).unwrap();
            fresh.value.to_bits() == r.value.to_bits() && fresh.std_error.to_bits() == r.std_error.to_bits()
        });

    // Warm against cold start at the same mass.
    let first = run_ground_state(&recipe("n8_ground_state.toml", 21).tap(|c| c.model.m = 0.3)).unwrap();
    let target = recipe("n8_ground_state.toml", 22);
    let warm = warm_start_from(&first, &target).unwrap().expect("compatible warm start");
    let warm_run = run_ground_state_warm(&target, Some(&warm)).unwrap();
    let cold_run = run_ground_state(&target).unwrap();
    let r = cold_run.report.reference.as_ref().unwrap();
    let threshold = r.ground_energy + 0.25 * r.gap;
    let (w, c) = (budget_to_reach(&warm_run, threshold), budget_to_reach(&cold_run, threshold));
    let warm_ok = match (w, c) {
        (Some(w), Some(c)) => w as f64 <= 0.7 * c as f64,
        (Some(_), None) => true,
        _ => false,
    };
    out.line(
        "11",
        bits_ok && warm_ok,
        format!(
            "{} points re-scored bit-for-bit: {bits_ok}; budget to reach E0 + Δ/4: warm {w:?}, cold {c:?}",
            rescored.len()
        ),
    );
}

trait Tap: Sized {
    fn tap(self, f: impl FnOnce(&mut Self)) -> Self;
}

impl Tap for RunConfig {
    fn tap(mut self, f: impl FnOnce(&mut Self)) -> Self {
        f(&mut self);
        self
    }
}

fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    Some(line.split_whitespace().nth(1)?.parse::<f64>().ok()? / 1024.0)
}

fn criterion_n20(out: &mut Outcome) {
    let t = Instant::now();
    let mut fid = Vec::new();
    for n in [8, 16, 20] {
        // Bulk keeps three free sites at each edge, as in the 20-site recipe.
        let cfg = recipe("n20_noisy.toml", 1).tap(|c| {
            c.model.n_sites = n;
            c.ansatz.bulk = Some((4, n - 3));
        });
        let run = run_ground_state(&cfg).unwrap();
        let f = run.report.fidelity.expect("reference available").value();
        println!("  N={n}: F = {f:.4}, budget {} shots", run.report.budget.total);
        fid.push(f);
    }
    let rss = peak_rss_mb();
    let pass = fid[0] > fid[1] && fid[1] > fid[2] && rss.is_some_and(|m| m < 4096.0);
    out.line(
        "n20",
        pass,
        format!("fidelities {fid:.4?}, peak memory {} MB, {:.0} s", rss.map_or("?".into(), |m| format!("{m:.0}")), t.elapsed().as_secs_f64()),
    );
}

fn main() {
    let only: Option<Vec<String>> =
        std::env::var("VQS_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(|t| t.trim().to_string()).collect());
    let want = |id: &str| only.as_ref().is_none_or(|v| v.iter().any(|t| t == id));
    let mut out = Outcome { failures: 0 };

    if want("1") {
        criterion_1(&mut out);
    }
    if want("2") {
        criterion_2(&mut out);
    }
    if want("3") {
        criterion_3(&mut out);
    }
    if want("4") {
        criterion_4(&mut out);
    }
    if ["5", "6", "7", "11"].iter().any(|id| want(id)) {
        let runs = eight_site_runs();
        if want("5") {
            criterion_5(&mut out, &runs);
        }
        if want("6") {
            criterion_6(&mut out, &runs);
        }
        if want("7") {
            criterion_7(&mut out, &runs);
        }
        if want("11") {
            criterion_11(&mut out, &runs);
        }
    }
    if want("8") {
        criterion_8(&mut out);
    }
    if want("9") {
        criterion_9(&mut out);
    }
    if want("10") {
        criterion_10(&mut out);
    }
    if want("n20") {
        criterion_n20(&mut out);
    }

    println!("{} criteria failed", out.failures);
    if out.failures > 0 && std::env::var("VQS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
