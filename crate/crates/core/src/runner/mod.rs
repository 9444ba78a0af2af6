//! Closed-loop experiment recipes: ground-state search with self-verification,
//! mass sweeps, the depth-scaling study, and their on-disk reports.

mod config;
mod ground;
mod report;
mod scalability;
mod sweep;

pub use config::{
    call_seed, AnsatzSection, CheckpointConfig, NoiseConfig, OracleConfig, Problem, QseConfig, RunConfig,
    ScalabilityConfig, SweepConfig,
};
pub use ground::{
    checkpoint_iterations, run_ground_state, run_ground_state_warm, verify, BoundCheck, BudgetLedger, Checkpoint,
    EnergyOracle, ExactReference, Observables, QseReport, Quantity, RunOutcome, RunReport, VerifyReport,
};
pub use report::{emit_report, emit_scalability, emit_sweep, prepare_run_dir, summary, write_manifest, write_verify};
pub use scalability::{run_scalability_study, ScalabilityCell, ScalabilityReport, RequiredDepth};
pub use sweep::{order_masses, run_mass_sweep, warm_start_from, SweepOutcome, SweepPoint};
