//! Python bindings: Hamiltonians, trial states, the simulated device and the
//! ground-state recipe.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use vqs_core::ansatz::{AnsatzSpec, ParamPoint};
use vqs_core::ed::{ed_spectrum, EdSector};
use vqs_core::measurement::{group_by_basis, EstimatorConfig, MeasurementPlan};
use vqs_core::operator::expectation;
use vqs_core::pauli::PauliSum;
use vqs_core::qse::{build_subspace_exact, excitation_operators, gap_estimate};
use vqs_core::runner::{emit_report, prepare_run_dir, run_ground_state, write_manifest, RunConfig};
use vqs_core::schwinger::{build_hamiltonian, order_parameter, particle_densities, SchwingerParams};
use vqs_core::sector::StateVector;
use vqs_core::simulator::{fidelity_any, renyi2_entropy, Device, InitialStateChannel, NeelPhase, ResourceParams, Simulator};

create_exception!(vqs, VqsError, PyException);

fn err(e: vqs_core::VqsError) -> PyErr {
    VqsError::new_err(e.to_string())
}

fn phase(name: &str) -> PyResult<NeelPhase> {
    match name {
        "vacuum" => Ok(NeelPhase::Vacuum),
        "anti" => Ok(NeelPhase::Anti),
        other => Err(VqsError::new_err(format!("unknown phase {other:?}; use \"vacuum\" or \"anti\""))),
    }
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| VqsError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Weighted sum of Pauli strings.
#[pyclass(name = "PauliSum", module = "vqs", frozen)]
struct PyPauliSum {
    inner: PauliSum,
}

#[pymethods]
impl PyPauliSum {
    /// Spin form of the lattice Schwinger Hamiltonian.
    #[staticmethod]
    #[pyo3(signature = (n_sites, m, w = 1.0, gbar = 1.0, eps0 = 0.0))]
    fn schwinger(n_sites: usize, m: f64, w: f64, gbar: f64, eps0: f64) -> PyResult<Self> {
        let p = SchwingerParams { n_sites, w, m, gbar, eps0 };
        Ok(PyPauliSum { inner: build_hamiltonian(&p).map_err(err)? })
    }

    #[staticmethod]
    fn order_parameter(n_sites: usize) -> PyResult<Self> {
        Ok(PyPauliSum { inner: order_parameter(n_sites).map_err(err)? })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PauliSum(n_sites={}, terms={})", self.inner.n_sites(), self.inner.len())
    }

    /// `(label, coefficient)` pairs; fails for non-Hermitian sums.
    fn terms(&self) -> PyResult<Vec<(String, f64)>> {
        Ok(self.inner.real_terms().map_err(err)?.into_iter().map(|(s, c)| (s.to_string(), c)).collect())
    }

    fn __mul__(&self, other: &PyPauliSum) -> PyResult<Self> {
        Ok(PyPauliSum { inner: self.inner.multiply(&other.inner).map_err(err)? })
    }

    fn __add__(&self, other: &PyPauliSum) -> PyResult<Self> {
        Ok(PyPauliSum { inner: self.inner.plus(&other.inner).map_err(err)? })
    }

    fn expectation(&self, state: &PyStateVector) -> PyResult<f64> {
        expectation(&state.inner, &self.inner).map_err(err)
    }

    /// `⟨(H − ⟨H⟩)²⟩`, the squared algorithmic error bar of `state`.
    fn variance(&self, state: &PyStateVector) -> PyResult<f64> {
        let e = expectation(&state.inner, &self.inner).map_err(err)?;
        let sq = self.inner.multiply(&self.inner).map_err(err)?;
        Ok(expectation(&state.inner, &sq).map_err(err)? - e * e)
    }
}

/// State on a fixed-magnetization sector or the full space.
#[pyclass(name = "StateVector", module = "vqs", frozen)]
struct PyStateVector {
    inner: StateVector,
}

#[pymethods]
impl PyStateVector {
    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    /// Basis configurations (bit set = spin down), aligned with `amplitudes`.
    fn configs(&self) -> Vec<u64> {
        self.inner.basis().states().to_vec()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn fidelity(&self, other: &PyStateVector) -> PyResult<f64> {
        fidelity_any(&self.inner, &other.inner).map_err(err)
    }

    /// Second Rényi entropy of the 1-based site block `first..=last`.
    fn renyi2(&self, first: usize, last: usize) -> PyResult<f64> {
        renyi2_entropy(&self.inner, first, last).map_err(err)
    }

    fn particle_densities(&self) -> PyResult<Vec<f64>> {
        particle_densities(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("StateVector(n_sites={}, dim={})", self.inner.n_sites(), self.inner.basis().dim())
    }
}

/// Lowest `k` eigenpairs of `h` in the zero-magnetization sector.
#[pyfunction]
#[pyo3(signature = (h, k = 1))]
fn ground_states(h: &PyPauliSum, k: usize) -> PyResult<Vec<(f64, PyStateVector)>> {
    let pairs = ed_spectrum(&h.inner, EdSector::zero_magnetization(), k).map_err(err)?;
    Ok(pairs.into_iter().map(|p| (p.energy, PyStateVector { inner: p.state })).collect())
}

#[pyfunction]
#[pyo3(signature = (n_sites, phase_name = "vacuum"))]
fn neel_state(n_sites: usize, phase_name: &str) -> PyResult<PyStateVector> {
    Ok(PyStateVector { inner: vqs_core::simulator::neel_state(n_sites, phase(phase_name)?).map_err(err)? })
}

/// `(λ₀, λ₁ − λ₀)` from the symmetric subspace expansion around `state`.
#[pyfunction]
fn qse_gap(state: &PyStateVector, h: &PyPauliSum) -> PyResult<(f64, f64)> {
    let ops = excitation_operators(state.inner.n_sites()).map_err(err)?;
    let p = build_subspace_exact(&state.inner, &h.inner, &ops).map_err(err)?;
    gap_estimate(&p).map_err(err)
}

/// Simulated analog co-processor with a layered ansatz.
#[pyclass(name = "Device", module = "vqs", frozen)]
struct PyDevice {
    inner: Device,
}

#[pymethods]
impl PyDevice {
    #[new]
    #[pyo3(signature = (n_sites, n_layers = 4, phase_name = "vacuum", init_fidelity = None, entangling_max = std::f64::consts::PI))]
    fn new(n_sites: usize, n_layers: usize, phase_name: &str, init_fidelity: Option<f64>, entangling_max: f64) -> PyResult<Self> {
        let spec = AnsatzSpec { entangling_max, ..AnsatzSpec::new(n_sites, n_layers) };
        let sim = Simulator::new(ResourceParams::new(n_sites), spec).map_err(err)?;
        let channel = init_fidelity.map(|fidelity| InitialStateChannel { fidelity });
        Ok(PyDevice { inner: Device::new(sim, phase(phase_name)?, channel) })
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.sim.n_params()
    }

    /// Ideal trial state at `theta`.
    fn prepare(&self, theta: Vec<f64>) -> PyResult<PyStateVector> {
        Ok(PyStateVector { inner: self.inner.prepare(&ParamPoint::new(theta)).map_err(err)? })
    }

    /// Fidelity with `target`, averaged over preparation errors.
    fn fidelity(&self, theta: Vec<f64>, target: &PyStateVector) -> PyResult<f64> {
        self.inner.fidelity(&ParamPoint::new(theta), &target.inner).map_err(err)
    }

    /// Shot estimate `(value, std_error)` of `h` from the three energy bases.
    #[pyo3(signature = (h, theta, shots, seed = 0))]
    fn measure_energy(&self, h: &PyPauliSum, theta: Vec<f64>, shots: usize, seed: u64) -> PyResult<(f64, f64)> {
        let est = EstimatorConfig::default();
        let bases = est.scheme.energy_bases(self.inner.n_sites());
        let seeds: Vec<u64> = (0..bases.len() as u64).map(|i| seed.wrapping_mul(1_000_003).wrapping_add(i)).collect();
        let batches = self.inner.measure(&ParamPoint::new(theta), &bases, shots, &seeds).map_err(err)?;
        let data = group_by_basis(batches.into_iter().map(Arc::new));
        let plan = MeasurementPlan::new(&h.inner, &bases, est.scheme).map_err(err)?;
        let r = plan.estimate(&data, &est).map_err(err)?;
        Ok((r.value, r.std_error))
    }
}

/// Run configuration; see the TOML layout in the repository README.
#[pyclass(name = "RunConfig", module = "vqs", skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (n_sites, m, seed = 0))]
    fn new(n_sites: usize, m: f64, seed: u64) -> Self {
        PyRunConfig { inner: RunConfig::new(n_sites, m, seed) }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyRunConfig { inner: RunConfig::from_toml(text).map_err(err)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    #[getter]
    fn budget(&self) -> u64 {
        self.inner.optimizer.budget
    }

    #[setter]
    fn set_budget(&mut self, budget: u64) {
        self.inner.optimizer.budget = budget;
    }

    #[getter]
    fn qse_enabled(&self) -> bool {
        self.inner.qse.enabled
    }

    #[setter]
    fn set_qse_enabled(&mut self, on: bool) {
        self.inner.qse.enabled = on;
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(n_sites={}, m={}, seed={})", self.inner.model.n_sites, self.inner.model.m, self.inner.seed)
    }
}

/// Runs the closed loop and returns the report as a dict. With `out_dir`
/// the full run directory is written as well.
#[pyfunction(name = "run_ground_state")]
#[pyo3(signature = (config, out_dir = None))]
fn py_run_ground_state<'py>(py: Python<'py>, config: &PyRunConfig, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let report = py
        .detach(move || -> vqs_core::Result<_> {
            let out = run_ground_state(&cfg)?;
            if let Some(dir) = out_dir {
                prepare_run_dir(&dir, false)?;
                emit_report(&out, &dir)?;
                write_manifest(&dir, "ground-state", &cfg)?;
            }
            Ok(out.report)
        })
        .map_err(err)?;
    to_python(py, &report)
}

#[pymodule]
fn vqs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VqsError", m.py().get_type::<VqsError>())?;
    m.add_class::<PyPauliSum>()?;
    m.add_class::<PyStateVector>()?;
    m.add_class::<PyDevice>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(ground_states, m)?)?;
    m.add_function(wrap_pyfunction!(neel_state, m)?)?;
    m.add_function(wrap_pyfunction!(qse_gap, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_ground_state, m)?)?;
    Ok(())
}
