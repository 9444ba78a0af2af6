use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vqs_core::measurement::{reevaluate, write_estimates_csv, CdrStore};
use vqs_core::runner::{
    emit_report, emit_scalability, emit_sweep, prepare_run_dir, run_ground_state, run_mass_sweep,
    run_scalability_study, summary, verify, write_manifest, write_verify, RunConfig, RunReport,
};
use vqs_core::schwinger::build_hamiltonian;

#[derive(Parser)]
#[command(name = "vqs", version, about = "Variational quantum simulation of the lattice Schwinger model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Run directory; overrides `output_dir` from the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Replace an existing run directory.
    #[arg(long)]
    overwrite: bool,
    /// Master seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop ground-state search with ℰ checkpoints and QSE.
    GroundState(Common),
    /// Ground states across the configured masses with warm starts.
    MassSweep(Common),
    /// Depth needed for a target infidelity, from exact energies.
    Scalability(Common),
    /// Measure E and ℰ at a given parameter point.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated parameters.
        #[arg(long, conflicts_with = "from_run", allow_hyphen_values = true)]
        theta: Option<String>,
        /// Take the optimized parameters from a finished ground-state run.
        #[arg(long)]
        from_run: Option<PathBuf>,
    },
    /// Re-score the stored shots of a run under the model of a new config.
    Reevaluate {
        #[command(flatten)]
        common: Common,
        /// Run directory holding `cdr.jsonl`.
        #[arg(long)]
        run: PathBuf,
    },
}

fn load(common: &Common, verb: &str) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{verb}-n{}-seed{}", cfg.model.n_sites, cfg.seed)));
    cfg.output_dir = Some(dir.clone());
    prepare_run_dir(&dir, common.overwrite)?;
    Ok((cfg, dir))
}

fn parse_theta(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().with_context(|| format!("bad parameter {t:?}"))).collect()
}

fn theta_from_run(dir: &Path) -> Result<Vec<f64>> {
    let path = dir.join("report.json");
    let report: RunReport = serde_json::from_str(&fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?)?;
    Ok(report.theta)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::GroundState(c) => {
            let (cfg, dir) = load(&c, "ground-state")?;
            let out = run_ground_state(&cfg)?;
            emit_report(&out, &dir)?;
            write_manifest(&dir, "ground-state", &cfg)?;
            print!("{}", summary(&out));
            println!("written to {}", dir.display());
        }
        Command::MassSweep(c) => {
            let (cfg, dir) = load(&c, "mass-sweep")?;
            let out = run_mass_sweep(&cfg)?;
            emit_sweep(&out, &dir)?;
            write_manifest(&dir, "mass-sweep", &cfg)?;
            for (p, run) in out.by_mass() {
                let o = run.report.observables.order_parameter;
                println!("m = {:>6.3}  O = {:.4} ± {:.4}  S2 = {:.4}", p.mass, o.value(), o.std_error(), run.report.observables.renyi2_half.value());
            }
            println!("written to {}", dir.display());
        }
        Command::Scalability(c) => {
            let (cfg, dir) = load(&c, "scalability")?;
            let r = run_scalability_study(&cfg)?;
            emit_scalability(&r, &dir)?;
            write_manifest(&dir, "scalability", &cfg)?;
            for q in &r.required {
                let l = q.n_layers.map_or("not reached".to_string(), |l| l.to_string());
                println!("N = {:>2}  δm = {:>5.2}  layers = {l}", q.n_sites, q.delta_m);
            }
            println!("written to {}", dir.display());
        }
        Command::Verify { common, theta, from_run } => {
            let theta = match (theta, from_run) {
                (Some(t), _) => parse_theta(&t)?,
                (None, Some(run)) => theta_from_run(&run)?,
                (None, None) => bail!("give --theta or --from-run"),
            };
            let (cfg, dir) = load(&common, "verify")?;
            let v = verify(&cfg, &theta)?;
            write_verify(&v, &dir)?;
            write_manifest(&dir, "verify", &cfg)?;
            let c = &v.checkpoint;
            println!("E = {:.6} ± {:.6}", c.energy.value(), c.energy.std_error());
            println!("ℰ = {:.6} ± {:.6}", c.error_bar.value(), c.error_bar.std_error());
            if let Some(b) = &c.bound {
                println!("distance to spectrum {:.6}, bound {:.6}: {}", b.distance, b.limit, if b.holds { "holds" } else { "violated" });
            }
        }
        Command::Reevaluate { common, run } => {
            let cdr = CdrStore::open(run.join("cdr.jsonl"))?;
            let (cfg, dir) = load(&common, "reevaluate")?;
            let h = build_hamiltonian(&cfg.model)?;
            let rows = reevaluate(&cdr, &h, &cfg.estimator)?;
            let mut thetas = fs::File::create(dir.join("thetas.jsonl"))?;
            for (i, (theta, _)) in rows.iter().enumerate() {
                writeln!(thetas, "{}", serde_json::json!({ "theta_id": i, "theta": theta }))?;
            }
            let table: Vec<_> = rows.into_iter().enumerate().map(|(i, (_, r))| (i, r)).collect();
            write_estimates_csv(fs::File::create(dir.join("estimates.csv"))?, &table)?;
            write_manifest(&dir, "reevaluate", &cfg)?;
            println!("{} points re-scored, written to {}", table.len(), dir.display());
        }
    }
    Ok(())
}
