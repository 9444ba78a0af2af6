//! Estimators for Pauli-sum expectation values from shot records.

pub mod basis;
pub mod cdr;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
use crate::pauli::{PauliString, PauliSum};

pub use basis::{energy_bases, u1_partner, variance_bases, Axis, BasisScheme, MeasurementBasis, ShotBatch};
pub use cdr::{reevaluate, CdrStore};

/// How the statistical error of a weighted sum of term means is formed.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// Per-shot sums within each basis, so correlations between terms read
    /// from the same shots are included.
    #[default]
    Covariance,
    /// `sqrt(Σ h² var/s)`, treating every term as independent.
    Uncorrelated,
    /// `sqrt(Σ |h| var)`, kept for comparison with published numbers.
    Printed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub error_model: ErrorModel,
    /// Drop z-basis shots outside the zero-magnetization sector.
    #[serde(default)]
    pub post_select: bool,
    #[serde(default)]
    pub scheme: BasisScheme,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { error_model: ErrorModel::Covariance, post_select: false, scheme: BasisScheme::Full }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub value: f64,
    pub std_error: f64,
    /// Shots consumed per basis descriptor (after post-selection).
    pub shots_used: BTreeMap<String, usize>,
    /// Retained fraction of z-basis shots; 1 without post-selection.
    pub post_selected_fraction: f64,
}

/// Keeps only z-basis shots with zero total magnetization. Returns the
/// filtered batch and the retained fraction.
pub fn post_select_zero_mag(batch: &ShotBatch) -> Result<(ShotBatch, f64)> {
    let mb = batch.measurement_basis()?;
    if !mb.is_all_z() {
        return Err(VqsError::IncompatibleBasis { string: "post-selection".into(), basis: batch.basis.clone() });
    }
    let half = batch.n_sites as u32 / 2;
    let kept: Vec<u64> =
        if batch.n_sites % 2 == 0 { batch.bits.iter().copied().filter(|b| b.count_ones() == half).collect() } else { Vec::new() };
    let frac = if batch.shots == 0 { 0.0 } else { kept.len() as f64 / batch.shots as f64 };
    let out = ShotBatch { shots: kept.len(), bits: kept, ..batch.clone() };
    Ok((out, frac))
}

/// Sample mean and population variance of the eigenvalue of `s` over all
/// shots in `records`, plus the shot count.
pub fn estimate_term(records: &[&ShotBatch], s: &PauliString) -> Result<(f64, f64, usize)> {
    if records.is_empty() {
        return Err(VqsError::InsufficientData(format!("no records for {s}")));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in records {
        let mb = r.measurement_basis()?;
        if !mb.evaluates(s) {
            return Err(VqsError::IncompatibleBasis { string: s.to_string(), basis: r.basis.clone() });
        }
        let y = mb.mask(Axis::Y);
        for &b in &r.bits {
            sum += MeasurementBasis::outcome_sign(s, y, b);
        }
        count += r.bits.len();
    }
    if count == 0 {
        return Err(VqsError::InsufficientData(format!("no shots for {s}")));
    }
    let mean = sum / count as f64;
    // Outcomes are ±1, so the population variance is 1 − mean².
    Ok((mean, (1.0 - mean * mean).max(0.0), count))
}

/// One term routed to the basis that measures it.
#[derive(Clone, Debug)]
struct Assigned {
    coeff: f64,
    /// String actually read out (differs from the term under the reduced scheme).
    read: PauliString,
}

/// Routing of every term of an operator to a measurement basis: the first
/// basis in plan order that evaluates it.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    n_sites: usize,
    bases: Vec<MeasurementBasis>,
    constant: f64,
    per_basis: Vec<Vec<Assigned>>,
}

impl MeasurementPlan {
    pub fn new(op: &PauliSum, bases: &[MeasurementBasis], scheme: BasisScheme) -> Result<Self> {
        let terms = op.real_terms()?;
        let mut per_basis = vec![Vec::new(); bases.len()];
        let mut constant = 0.0;
        let mut uncovered = Vec::new();
        for (s, c) in terms {
            if s.is_identity() {
                constant += c;
                continue;
            }
            if let Some(k) = bases.iter().position(|b| b.evaluates(&s)) {
                per_basis[k].push(Assigned { coeff: c, read: s });
                continue;
            }
            if scheme == BasisScheme::Reduced {
                let (sign, t) = u1_partner(&s);
                if let Some(k) = bases.iter().position(|b| b.evaluates(&t)) {
                    per_basis[k].push(Assigned { coeff: sign * c, read: t });
                    continue;
                }
            }
            uncovered.push(s.to_string());
        }
        if !uncovered.is_empty() {
            return Err(VqsError::IncompleteData { missing: uncovered });
        }
        Ok(MeasurementPlan { n_sites: op.n_sites(), bases: bases.to_vec(), constant, per_basis })
    }

    /// Bases that carry at least one term.
    pub fn required_bases(&self) -> Vec<&MeasurementBasis> {
        self.bases.iter().zip(&self.per_basis).filter(|(_, t)| !t.is_empty()).map(|(b, _)| b).collect()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Estimates the operator from records grouped by basis descriptor.
    pub fn estimate(&self, data: &BTreeMap<String, Vec<Arc<ShotBatch>>>, cfg: &EstimatorConfig) -> Result<EstimatorResult> {
        let mut missing = Vec::new();
        for b in self.required_bases() {
            if data.get(&b.descriptor()).map_or(true, |v| v.is_empty()) {
                missing.push(b.tag().to_string());
            }
        }
        if !missing.is_empty() {
            return Err(VqsError::IncompleteData { missing });
        }
        let mut value = self.constant;
        let mut var_total = 0.0;
        let mut shots_used = BTreeMap::new();
        let mut z_total = 0usize;
        let mut z_kept = 0usize;
        for (basis, terms) in self.bases.iter().zip(&self.per_basis) {
            if terms.is_empty() {
                continue;
            }
            let desc = basis.descriptor();
            let y = basis.mask(Axis::Y);
            let mut bits: Vec<u64> = Vec::new();
            for r in &data[&desc] {
                if cfg.post_select && basis.is_all_z() {
                    let (kept, _) = post_select_zero_mag(r)?;
                    z_total += r.shots;
                    z_kept += kept.shots;
                    bits.extend_from_slice(&kept.bits);
                } else {
                    bits.extend_from_slice(&r.bits);
                }
            }
            let s = bits.len();
            if s == 0 {
                return Err(VqsError::InsufficientData(format!("no usable shots in basis {}", basis.tag())));
            }
            shots_used.insert(desc, s);
            let sf = s as f64;
            match cfg.error_model {
                ErrorModel::Covariance => {
                    let mut sum = 0.0;
                    let mut sum2 = 0.0;
                    for &b in &bits {
                        let f: f64 =
                            terms.iter().map(|t| t.coeff * MeasurementBasis::outcome_sign(&t.read, y, b)).sum();
                        sum += f;
                        sum2 += f * f;
                    }
                    let mean = sum / sf;
                    value += mean;
                    var_total += (sum2 / sf - mean * mean).max(0.0) / sf;
                }
                ErrorModel::Uncorrelated | ErrorModel::Printed => {
                    for t in terms {
                        let mut acc = 0.0;
                        for &b in &bits {
                            acc += MeasurementBasis::outcome_sign(&t.read, y, b);
                        }
                        let mean = acc / sf;
                        let var = (1.0 - mean * mean).max(0.0);
                        value += t.coeff * mean;
                        var_total += if cfg.error_model == ErrorModel::Uncorrelated {
                            t.coeff * t.coeff * var / sf
                        } else {
                            t.coeff.abs() * var
                        };
                    }
                }
            }
        }
        let post_selected_fraction = if z_total == 0 { 1.0 } else { z_kept as f64 / z_total as f64 };
        Ok(EstimatorResult { value, std_error: var_total.sqrt(), shots_used, post_selected_fraction })
    }
}

/// Signed `ℰ²` estimate and the derived error bar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    /// `⟨(H − E)²⟩`, not clipped.
    pub variance: EstimatorResult,
    /// `sqrt(max(ℰ², 0))`.
    pub error_bar: f64,
    /// Statistical error of `error_bar`, propagated from that of `ℰ²`.
    pub error_bar_std: f64,
}

/// Builds `(H − E)²` as a Pauli sum.
pub fn shifted_square(h: &PauliSum, e: f64) -> Result<PauliSum> {
    let shifted = h.minus(&PauliSum::identity(h.n_sites(), e))?;
    shifted.multiply(&shifted)
}

/// `ℰ²(E) = ⟨(H − E)²⟩` from records covering the variance bases.
pub fn estimate_variance(
    data: &BTreeMap<String, Vec<Arc<ShotBatch>>>,
    h: &PauliSum,
    e: f64,
    cfg: &EstimatorConfig,
) -> Result<VarianceEstimate> {
    let sq = shifted_square(h, e)?;
    let plan = MeasurementPlan::new(&sq, &cfg.scheme.variance_bases(h.n_sites()), cfg.scheme)?;
    let variance = plan.estimate(data, cfg)?;
    if variance.value < -3.0 * variance.std_error && variance.value < -1e-12 {
        return Err(VqsError::DataInconsistency(format!(
            "variance estimate {:.4} is {:.1} standard errors below zero",
            variance.value,
            -variance.value / variance.std_error.max(f64::MIN_POSITIVE)
        )));
    }
    let error_bar = variance.value.max(0.0).sqrt();
    // d sqrt(v) = dv / (2 sqrt v); at v ≈ 0 fall back to sqrt(σ_v).
    let error_bar_std = if error_bar > variance.std_error.sqrt() {
        variance.std_error / (2.0 * error_bar)
    } else {
        variance.std_error.sqrt()
    };
    Ok(VarianceEstimate { variance, error_bar, error_bar_std })
}

/// `Σ h_q ⟨Γ_q⟩` with its standard error from records covering the energy bases.
pub fn estimate_energy(data: &BTreeMap<String, Vec<Arc<ShotBatch>>>, h: &PauliSum, cfg: &EstimatorConfig) -> Result<EstimatorResult> {
    let plan = MeasurementPlan::new(h, &cfg.scheme.energy_bases(h.n_sites()), cfg.scheme)?;
    plan.estimate(data, cfg)
}

/// Groups batches by basis descriptor.
pub fn group_by_basis<I: IntoIterator<Item = Arc<ShotBatch>>>(batches: I) -> BTreeMap<String, Vec<Arc<ShotBatch>>> {
    let mut out: BTreeMap<String, Vec<Arc<ShotBatch>>> = BTreeMap::new();
    for b in batches {
        out.entry(b.basis.clone()).or_default().push(b);
    }
    out
}

/// Writes `theta-id,value,std_error,shots` rows.
pub fn write_estimates_csv<W: std::io::Write>(mut w: W, rows: &[(usize, EstimatorResult)]) -> Result<()> {
    writeln!(w, "theta_id,value,std_error,shots")?;
    for (id, r) in rows {
        let shots: usize = r.shots_used.values().sum();
        writeln!(w, "{id},{},{},{shots}", r.value, r.std_error)?;
    }
    Ok(())
}
