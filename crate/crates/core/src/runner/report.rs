use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::ground::{RunOutcome, VerifyReport};
use super::scalability::ScalabilityReport;
use super::sweep::SweepOutcome;
use crate::error::{Result, VqsError};
use crate::optimizer::write_jsonl;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    files: Vec<String>,
}

/// Creates `dir`. An existing run (one with a manifest) is only replaced
/// when `overwrite` is set.
pub fn prepare_run_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.join("manifest.json").exists() {
        if !overwrite {
            return Err(VqsError::InvalidParameter(format!(
                "{} already holds a run; pass --overwrite to replace it",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes `config.toml` and `manifest.json` listing every file under `dir`.
pub fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.push("manifest.json".into());
    files.sort();
    files.dedup();
    let m = Manifest { tool: "vqs", version: env!("CARGO_PKG_VERSION"), command, seed: cfg.seed, files };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn pm(value: f64, err: f64) -> String {
    format!("{value:.6} ± {err:.6}")
}

/// Writes one run: `report.json`, `trajectory.jsonl`, `evaluations.jsonl`,
/// `cdr.jsonl`, `checkpoints.csv`, `observables.csv`, `summary.txt` and
/// two-column plot files under `plots/`.
pub fn emit_report(out: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let r = &out.report;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(r)?)?;
    write_jsonl(create(&dir.join("trajectory.jsonl"))?, &out.trajectory)?;
    write_jsonl(create(&dir.join("evaluations.jsonl"))?, &out.evaluations)?;
    let mut w = create(&dir.join("cdr.jsonl"))?;
    for b in out.cdr.records() {
        writeln!(w, "{}", b.to_json_line()?)?;
    }
    w.flush()?;

    let mut w = create(&dir.join("checkpoints.csv"))?;
    writeln!(w, "iteration,budget_spent,energy,energy_se,error_bar,error_bar_se,ratio_to_gap,fidelity,bound_holds")?;
    for c in &r.checkpoints {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            c.iteration,
            c.budget_spent,
            c.energy.value(),
            c.energy.std_error(),
            c.error_bar.value(),
            c.error_bar.std_error(),
            c.ratio_to_gap.map_or(String::new(), |v| v.to_string()),
            c.fidelity.map_or(String::new(), |v| v.value().to_string()),
            c.bound.as_ref().map_or(String::new(), |b| b.holds.to_string()),
        )?;
    }
    w.flush()?;

    let mut w = create(&dir.join("observables.csv"))?;
    writeln!(w, "site,density,density_se,density_exact")?;
    for (j, (d, e)) in r.observables.densities.iter().zip(&r.observables.densities_exact).enumerate() {
        writeln!(w, "{},{},{},{}", j + 1, d.value(), d.std_error(), e.value())?;
    }
    w.flush()?;

    let mut w = create(&dir.join("plots/trajectory.dat"))?;
    writeln!(w, "# budget_spent incumbent_energy")?;
    for t in &out.trajectory {
        writeln!(w, "{} {}", t.budget_spent, t.value)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("plots/error_bar.dat"))?;
    writeln!(w, "# budget_spent error_bar error_bar_se")?;
    for c in &r.checkpoints {
        writeln!(w, "{} {} {}", c.budget_spent, c.error_bar.value(), c.error_bar.std_error())?;
    }
    w.flush()?;

    fs::write(dir.join("summary.txt"), summary(out))?;
    Ok(())
}

pub fn summary(out: &RunOutcome) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "N = {}, m = {}, {:?} start, {} layers ({} parameters), seed {}", r.n_sites, r.mass, r.phase, r.n_layers, r.n_params, r.seed);
    let _ = writeln!(s, "iterations {} ({}), optimizer calls {}", r.iterations, r.stopped_by, r.budget.optimizer_calls);
    let _ = writeln!(s, "E(θ_opt)      = {}", pm(r.energy.value(), r.energy.std_error()));
    let _ = writeln!(s, "E ideal state = {:.6} (exact)", r.energy_exact.value());
    if let Some(c) = r.checkpoints.last() {
        let _ = writeln!(s, "ℰ             = {}", pm(c.error_bar.value(), c.error_bar.std_error()));
        if let Some(ratio) = c.ratio_to_gap {
            let _ = writeln!(s, "ℰ/Δ           = {ratio:.4}");
        }
    }
    if let Some(x) = &r.reference {
        let _ = writeln!(s, "E₀ = {:.6}, Δ = {:.6} (exact)", x.ground_energy, x.gap);
    }
    if let Some(f) = r.fidelity {
        let _ = writeln!(s, "fidelity      = {:.4}", f.value());
    }
    if let Some(e) = r.excitation_fraction {
        let _ = writeln!(s, "(E−E₀)/Δ      = {:.4}", e.value());
    }
    let o = &r.observables;
    let _ = writeln!(s, "order parameter = {} (ideal state {:.6})", pm(o.order_parameter.value(), o.order_parameter.std_error()), o.order_parameter_exact.value());
    let _ = writeln!(s, "half-chain S2   = {:.6} (ideal state)", o.renyi2_half.value());
    if let Some(q) = &r.qse {
        let _ = write!(s, "QSE gap: ideal state {:.6}", q.ideal_gap.value());
        match q.measured_gap {
            Some(g) => {
                let _ = writeln!(s, ", measured {}", pm(g.value(), g.std_error()));
            }
            None => {
                let _ = writeln!(s, ", measured n/a");
            }
        }
    }
    let b = &r.budget;
    let _ = writeln!(s, "shots: optimizer {}, checkpoints {}, QSE {}, total {}", b.optimizer, b.checkpoints, b.qse, b.total);
    for c in &r.checkpoints {
        let _ = writeln!(
            s,
            "  checkpoint it {:>5} spent {:>7}: E = {}, ℰ = {}{}",
            c.iteration,
            c.budget_spent,
            pm(c.energy.value(), c.energy.std_error()),
            pm(c.error_bar.value(), c.error_bar.std_error()),
            c.bound.as_ref().map_or(String::new(), |b| format!(", bound {}", if b.holds { "holds" } else { "VIOLATED" }))
        );
    }
    if !r.skipped_checkpoints.is_empty() {
        let _ = writeln!(s, "skipped checkpoints at iterations {:?}", r.skipped_checkpoints);
    }
    if let Some(e) = &r.error {
        let _ = writeln!(s, "run stopped early: {e}");
    }
    s
}

/// Writes each sweep point to `m<k>/` plus `sweep.csv` and plot files.
pub fn emit_sweep(out: &SweepOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(&dir.join("sweep.csv"))?;
    writeln!(w, "mass,phase,layers,warm_started,order_parameter,order_parameter_se,order_parameter_ideal,order_parameter_ed,renyi2_ideal,renyi2_ed,fidelity")?;
    let mut op = create(&dir.join("plots/order_parameter.dat"))?;
    writeln!(op, "# mass measured measured_se exact")?;
    let mut en = create(&dir.join("plots/renyi2.dat"))?;
    writeln!(en, "# mass ideal_state exact")?;
    for (p, run) in out.by_mass() {
        emit_report(run, &dir.join(format!("m{:02}", p.input_index)))?;
        let r = &run.report;
        let o = &r.observables;
        let (oe, se) = r.reference.as_ref().map_or((f64::NAN, f64::NAN), |x| (x.order_parameter, x.renyi2_half));
        writeln!(
            w,
            "{},{:?},{},{},{},{},{},{},{},{},{}",
            p.mass,
            p.phase,
            p.n_layers,
            p.warm_started,
            o.order_parameter.value(),
            o.order_parameter.std_error(),
            o.order_parameter_exact.value(),
            oe,
            o.renyi2_half.value(),
            se,
            r.fidelity.map_or(f64::NAN, |f| f.value())
        )?;
        writeln!(op, "{} {} {} {}", p.mass, o.order_parameter.value(), o.order_parameter.std_error(), oe)?;
        writeln!(en, "{} {} {}", p.mass, o.renyi2_half.value(), se)?;
    }
    w.flush()?;
    op.flush()?;
    en.flush()?;
    Ok(())
}

pub fn emit_scalability(r: &ScalabilityReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scalability.json"), serde_json::to_string_pretty(r)?)?;
    let mut w = create(&dir.join("infidelity.csv"))?;
    writeln!(w, "n_sites,delta_m,mass,layers,n_params,energy,ground_energy,infidelity")?;
    for c in &r.cells {
        writeln!(w, "{},{},{},{},{},{},{},{}", c.n_sites, c.delta_m, c.mass, c.n_layers, c.n_params, c.energy, c.ground_energy, c.infidelity)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("required_depth.csv"))?;
    writeln!(w, "n_sites,delta_m,layers")?;
    for q in &r.required {
        writeln!(w, "{},{},{}", q.n_sites, q.delta_m, q.n_layers.map_or(String::new(), |l| l.to_string()))?;
    }
    w.flush()?;
    let mut w = create(&dir.join("plots/required_depth.dat"))?;
    writeln!(w, "# n_sites layers (one block per delta_m)")?;
    let mut offsets: Vec<f64> = r.required.iter().map(|q| q.delta_m).collect();
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();
    for dm in offsets {
        writeln!(w, "\n# delta_m = {dm}")?;
        for q in r.required.iter().filter(|q| q.delta_m == dm) {
            if let Some(l) = q.n_layers {
                writeln!(w, "{} {}", q.n_sites, l)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_verify(v: &VerifyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("verify.json"), serde_json::to_string_pretty(v)?)?;
    Ok(())
}
