//! Central data repository: an append-only store of shot batches keyed by
//! circuit parameters and basis, optionally mirrored to a JSONL file.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::{Result, VqsError};
use crate::pauli::PauliSum;

use super::basis::ShotBatch;
use super::{EstimatorConfig, EstimatorResult, MeasurementPlan};

/// Parameters rounded to 1e−9, the identity of a circuit in the store.
pub type ThetaKey = Vec<i64>;

pub fn theta_key(theta: &[f64]) -> ThetaKey {
    theta.iter().map(|t| (t * 1e9).round() as i64).collect()
}

#[derive(Default)]
struct Inner {
    records: Vec<Arc<ShotBatch>>,
    index: HashMap<ThetaKey, BTreeMap<String, Vec<usize>>>,
    /// Keys in order of first appearance.
    order: Vec<ThetaKey>,
}

pub struct CdrStore {
    inner: RwLock<Inner>,
    sink: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for CdrStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CdrStore").field("records", &self.len()).field("path", &self.path).finish()
    }
}

impl Default for CdrStore {
    fn default() -> Self {
        CdrStore::in_memory()
    }
}

impl CdrStore {
    pub fn in_memory() -> Self {
        CdrStore { inner: RwLock::new(Inner::default()), sink: None, path: None }
    }

    /// Opens (or creates) a record file, loading any existing records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let store = CdrStore::in_memory();
        if path.exists() {
            let f = BufReader::new(File::open(&path)?);
            for (i, line) in f.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let batch = ShotBatch::from_json_line(&line)
                    .map_err(|e| VqsError::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
                store.insert(batch);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(CdrStore { sink: Some(Mutex::new(BufWriter::new(file))), path: Some(path), ..store })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn insert(&self, batch: ShotBatch) {
        let key = theta_key(&batch.theta);
        let mut g = self.inner.write().expect("store lock poisoned");
        let idx = g.records.len();
        let basis = batch.basis.clone();
        g.records.push(Arc::new(batch));
        if !g.index.contains_key(&key) {
            g.order.push(key.clone());
        }
        g.index.entry(key).or_default().entry(basis).or_default().push(idx);
    }

    /// Appends a batch; the file copy is written and flushed first.
    pub fn store(&self, batch: ShotBatch) -> Result<()> {
        if let Some(sink) = &self.sink {
            let line = batch.to_json_line()?;
            let mut w = sink.lock().expect("sink lock poisoned");
            writeln!(w, "{line}")?;
            w.flush()?;
        }
        self.insert(batch);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("store lock poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All batches at `theta` in `basis`, in insertion order. Unknown keys
    /// give an empty result.
    pub fn query(&self, theta: &[f64], basis: &str) -> Vec<Arc<ShotBatch>> {
        let g = self.inner.read().expect("store lock poisoned");
        g.index
            .get(&theta_key(theta))
            .and_then(|m| m.get(basis))
            .map(|ids| ids.iter().map(|&i| g.records[i].clone()).collect())
            .unwrap_or_default()
    }

    /// All batches at `theta`, grouped by basis descriptor.
    pub fn query_all(&self, theta: &[f64]) -> BTreeMap<String, Vec<Arc<ShotBatch>>> {
        let g = self.inner.read().expect("store lock poisoned");
        g.index
            .get(&theta_key(theta))
            .map(|m| m.iter().map(|(b, ids)| (b.clone(), ids.iter().map(|&i| g.records[i].clone()).collect())).collect())
            .unwrap_or_default()
    }

    /// Representative parameters of every stored key, in order of first
    /// appearance.
    pub fn thetas(&self) -> Vec<Vec<f64>> {
        let g = self.inner.read().expect("store lock poisoned");
        g.order
            .iter()
            .map(|k| {
                let first = g.index[k].values().next().expect("non-empty key")[0];
                g.records[first].theta.clone()
            })
            .collect()
    }

    pub fn records(&self) -> Vec<Arc<ShotBatch>> {
        self.inner.read().expect("store lock poisoned").records.clone()
    }
}

/// Energy estimates of `h` at every stored parameter point that has data
/// in all bases `h` needs. Points lacking a basis are skipped; terms that
/// no basis of the scheme can evaluate are an error.
pub fn reevaluate(cdr: &CdrStore, h: &PauliSum, cfg: &EstimatorConfig) -> Result<Vec<(Vec<f64>, EstimatorResult)>> {
    let plan = MeasurementPlan::new(h, &cfg.scheme.energy_bases(h.n_sites()), cfg.scheme)?;
    let mut out = Vec::new();
    for theta in cdr.thetas() {
        let data = cdr.query_all(&theta);
        match plan.estimate(&data, cfg) {
            Ok(r) => out.push((theta, r)),
            Err(VqsError::IncompleteData { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
