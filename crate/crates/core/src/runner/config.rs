use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::error::{Result, VqsError};
use crate::measurement::EstimatorConfig;
use crate::optimizer::{Dimension, OptimizerConfig};
use crate::pauli::PauliSum;
use crate::schwinger::{build_hamiltonian, SchwingerParams};
use crate::simulator::{default_init_fidelity, Device, InitialStateChannel, NeelPhase, ResourceParams, Simulator};

/// Seed streams of the counter-based fan-out.
pub(crate) mod stream {
    pub const ENERGY: u64 = 1;
    pub const CHECKPOINT: u64 = 2;
    pub const QSE: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const OPTIMIZER: u64 = 5;
    pub const SWEEP: u64 = 6;
    pub const SCALABILITY: u64 = 7;
    pub const VERIFY: u64 = 8;
}

/// Seed number `index` of `stream` under `master`. ChaCha is a counter-mode
/// generator, so any seed is computed directly from its coordinates.
pub fn call_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzSection {
    pub n_layers: usize,
    pub bulk: Option<(usize, usize)>,
    pub cp_link: bool,
    pub bulk_tie: bool,
    pub entangling_max: f64,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        AnsatzSection { n_layers: 4, bulk: None, cp_link: true, bulk_tie: true, entangling_max: PI }
    }
}

impl AnsatzSection {
    pub fn spec(&self, n_sites: usize, n_layers: usize) -> AnsatzSpec {
        AnsatzSpec {
            n_sites,
            n_layers,
            bulk: self.bulk,
            cp_link: self.cp_link,
            bulk_tie: self.bulk_tie,
            entangling_max: self.entangling_max,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Turn on imperfect Néel preparation.
    pub initial_state_error: bool,
    /// Preparation fidelity; the size-dependent default when unset.
    pub init_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointConfig {
    pub count: usize,
    /// Shots per basis of one ℰ measurement.
    pub shots: u32,
    /// Cap on the total spent on checkpoints; later ones are skipped.
    pub budget: Option<u64>,
}

impl Default for CheckpointConfig {
    fn default() -> Self {
        CheckpointConfig { count: 6, shots: 1000, budget: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QseConfig {
    pub enabled: bool,
    /// Shots per basis for the measured subspace matrices.
    pub shots: u32,
    /// Resamples used for the gap's statistical error.
    pub resamples: usize,
}

impl Default for QseConfig {
    fn default() -> Self {
        QseConfig { enabled: true, shots: 10_000, resamples: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Compare against exact diagonalization where feasible.
    pub enabled: bool,
    /// Largest sector size for which the whole spectrum is computed.
    pub full_spectrum_max_dim: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { enabled: true, full_spectrum_max_dim: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub masses: Vec<f64>,
    pub critical_mass: f64,
    /// Masses this close to the critical one use `near_critical_layers`.
    pub near_critical_window: f64,
    pub near_critical_layers: usize,
    pub warm_start: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            masses: vec![-2.0, -1.4, -1.0, -0.8, -0.6, -0.4, 0.0, 0.4, 0.8],
            critical_mass: -0.7,
            near_critical_window: 0.2,
            near_critical_layers: 5,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalabilityConfig {
    pub sites: Vec<usize>,
    pub max_layers: usize,
    /// Offsets from the critical mass.
    pub delta_masses: Vec<f64>,
    pub starts: usize,
    pub max_iters: u64,
    pub infidelity_target: f64,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        ScalabilityConfig {
            sites: vec![4, 6, 8, 10],
            max_layers: 14,
            delta_masses: vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            starts: 6,
            max_iters: 400,
            infidelity_target: 0.05,
        }
    }
}

/// Everything a run needs. Together with `seed` it fixes the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Initial Néel phase; chosen from the mass when unset.
    #[serde(default)]
    pub phase: Option<NeelPhase>,
    pub model: SchwingerParams,
    /// Resource parameters; defaults for the model size when unset.
    #[serde(default)]
    pub resource: Option<ResourceParams>,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    /// `seed` is replaced by one derived from the master seed.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub checkpoints: CheckpointConfig,
    #[serde(default)]
    pub qse: QseConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub scalability: ScalabilityConfig,
}

impl RunConfig {
    pub fn new(n_sites: usize, m: f64, seed: u64) -> Self {
        RunConfig {
            seed,
            output_dir: None,
            phase: None,
            model: SchwingerParams::new(n_sites, m),
            resource: None,
            ansatz: AnsatzSection::default(),
            optimizer: OptimizerConfig::default(),
            estimator: EstimatorConfig::default(),
            noise: NoiseConfig::default(),
            checkpoints: CheckpointConfig::default(),
            qse: QseConfig::default(),
            oracle: OracleConfig::default(),
            sweep: SweepConfig::default(),
            scalability: ScalabilityConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text).map_err(|e| VqsError::Parse(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let resource = self.resource_params();
        if resource.n_sites != self.model.n_sites {
            return Err(VqsError::SizeMismatch { expected: self.model.n_sites, actual: resource.n_sites });
        }
        resource.validate()?;
        self.ansatz.spec(self.model.n_sites, self.ansatz.n_layers).validate()?;
        if let Some(f) = self.noise.init_fidelity {
            if !(0.0..=1.0).contains(&f) {
                return Err(VqsError::InvalidParameter(format!("initial-state fidelity {f} outside [0, 1]")));
            }
        }
        if self.checkpoints.shots == 0 || (self.qse.enabled && self.qse.shots == 0) {
            return Err(VqsError::InvalidParameter("shot counts must be positive".into()));
        }
        Ok(())
    }

    pub fn resource_params(&self) -> ResourceParams {
        self.resource.clone().unwrap_or_else(|| ResourceParams::new(self.model.n_sites))
    }

    /// Explicit phase, else anti-Néel below the critical mass.
    pub fn initial_phase(&self) -> NeelPhase {
        self.phase.unwrap_or(if self.model.m < self.sweep.critical_mass { NeelPhase::Anti } else { NeelPhase::Vacuum })
    }

    pub fn channel(&self) -> Option<InitialStateChannel> {
        self.noise.initial_state_error.then(|| InitialStateChannel {
            fidelity: self.noise.init_fidelity.unwrap_or_else(|| default_init_fidelity(self.model.n_sites)),
        })
    }

    pub fn spec(&self) -> AnsatzSpec {
        self.ansatz.spec(self.model.n_sites, self.ansatz.n_layers)
    }

    /// Hamiltonian, device and search domain for this configuration.
    pub fn build(&self) -> Result<Problem> {
        self.validate()?;
        let spec = self.spec();
        let dims = spec.bounds()?.iter().map(|b| Dimension::new(b.lo, b.hi, b.periodic)).collect();
        let sim = Simulator::new(self.resource_params(), spec)?;
        Ok(Problem {
            h: build_hamiltonian(&self.model)?,
            device: Device::new(sim, self.initial_phase(), self.channel()),
            dims,
        })
    }

    pub(crate) fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig { seed: call_seed(self.seed, stream::OPTIMIZER, 0), ..self.optimizer.clone() }
    }
}

pub struct Problem {
    pub h: PauliSum,
    pub device: Device,
    pub dims: Vec<Dimension>,
}
