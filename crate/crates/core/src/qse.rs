//! Quantum subspace expansion around a variational state.
//!
//! The subspace is spanned by `O_q|ψ⟩` with `O_0 = 1` and, for
//! `j = 1..N/2`, `O_j = XX_j + YY_j + XX_{N−j} + YY_{N−j}` where `XX_j` acts on
//! sites `j, j+1`. At `j = N/2` the mirrored pair coincides with the first and
//! the operator is `2(XX + YY)` on the central bond.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ed::{ed_spectrum, EdSector};
use crate::error::{Result, VqsError};
use crate::measurement::basis::{Axis, MeasurementBasis, ShotBatch};
use crate::measurement::{BasisScheme, EstimatorConfig, MeasurementPlan};
use crate::operator::SectorOperator;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::sector::StateVector;

/// Default relative cutoff on the overlap spectrum.
pub const OVERLAP_CUTOFF: f64 = 1e-6;

fn flip_flop(n: usize, j: usize) -> Result<PauliSum> {
    let xx = PauliString::from_sites(n, &[(j, Pauli::X), (j + 1, Pauli::X)])?;
    let yy = PauliString::from_sites(n, &[(j, Pauli::Y), (j + 1, Pauli::Y)])?;
    PauliSum::from_terms(n, [(xx, 1.0), (yy, 1.0)])
}

/// `O_0 … O_{N/2}`.
pub fn excitation_operators(n: usize) -> Result<Vec<PauliSum>> {
    if n < 2 || n % 2 != 0 {
        return Err(VqsError::InvalidParameter(format!("excitation operators need an even site count, got {n}")));
    }
    let mut ops = vec![PauliSum::identity(n, 1.0)];
    for j in 1..=n / 2 {
        ops.push(flip_flop(n, j)?.plus(&flip_flop(n, n - j)?)?);
    }
    Ok(ops)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubspaceSource {
    ExactState,
    Shots,
}

/// Effective Hamiltonian and overlap matrices of the expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceProblem {
    pub h_eff: Vec<Vec<f64>>,
    pub overlap: Vec<Vec<f64>>,
    /// Entry standard errors (shot mode only).
    pub h_err: Option<Vec<Vec<f64>>>,
    pub overlap_err: Option<Vec<Vec<f64>>>,
    pub source: SubspaceSource,
    /// Largest `|A_ij − A_ji|` over its combined error, before symmetrizing.
    pub max_asymmetry_sigma: Option<f64>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = r.len();
    if r.iter().any(|row| row.len() != n) {
        return Err(VqsError::InvalidParameter("subspace matrices must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| r[i][j]))
}

impl SubspaceProblem {
    pub fn from_matrices(h: &DMatrix<f64>, m: &DMatrix<f64>) -> Self {
        SubspaceProblem {
            h_eff: to_rows(h),
            overlap: to_rows(m),
            h_err: None,
            overlap_err: None,
            source: SubspaceSource::ExactState,
            max_asymmetry_sigma: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.h_eff.len()
    }

    pub fn h_matrix(&self) -> Result<DMatrix<f64>> {
        from_rows(&self.h_eff)
    }

    pub fn overlap_matrix(&self) -> Result<DMatrix<f64>> {
        from_rows(&self.overlap)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Same problem with operators reordered: new index `k` is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = |a: &Vec<Vec<f64>>| perm.iter().map(|&i| perm.iter().map(|&j| a[i][j]).collect()).collect();
        SubspaceProblem {
            h_eff: p(&self.h_eff),
            overlap: p(&self.overlap),
            h_err: self.h_err.as_ref().map(p),
            overlap_err: self.overlap_err.as_ref().map(p),
            source: self.source,
            max_asymmetry_sigma: self.max_asymmetry_sigma,
        }
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Builds the matrices from an exact state.
pub fn build_subspace_exact(state: &StateVector, h: &PauliSum, ops: &[PauliSum]) -> Result<SubspaceProblem> {
    state.ensure_normalized()?;
    let basis = state.basis().clone();
    let h_op = SectorOperator::new(h, basis.clone())?;
    let phis: Vec<StateVector> =
        ops.iter().map(|o| SectorOperator::new(o, basis.clone())?.apply_state(state)).collect::<Result<_>>()?;
    let h_phis: Vec<StateVector> = phis.iter().map(|p| h_op.apply_state(p)).collect::<Result<_>>()?;
    let k = ops.len();
    let mut hm = DMatrix::zeros(k, k);
    let mut mm = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            hm[(a, b)] = phis[a].inner(&h_phis[b])?.re;
            mm[(a, b)] = phis[a].inner(&phis[b])?.re;
        }
    }
    Ok(SubspaceProblem::from_matrices(&symmetrize(&hm), &symmetrize(&mm)))
}

/// Hermitian part of `O_a H O_b` (or `O_a O_b` when `h` is `None`).
fn entry_operator(oa: &PauliSum, h: Option<&PauliSum>, ob: &PauliSum) -> Result<PauliSum> {
    let prod = match h {
        Some(h) => oa.multiply(h)?.multiply(ob)?,
        None => oa.multiply(ob)?,
    };
    PauliSum::from_terms(prod.n_sites(), prod.iter().map(|(s, c)| (*s, c.re)).collect::<Vec<_>>())
}

fn axis_of(p: Pauli) -> Option<Axis> {
    match p {
        Pauli::I => None,
        Pauli::X => Some(Axis::X),
        Pauli::Y => Some(Axis::Y),
        Pauli::Z => Some(Axis::Z),
    }
}

/// All Pauli strings whose expectations the expansion needs.
pub fn required_strings(h: &PauliSum, ops: &[PauliSum]) -> Result<Vec<PauliString>> {
    let mut out = std::collections::BTreeSet::new();
    for a in ops {
        for b in ops {
            for e in [entry_operator(a, Some(h), b)?, entry_operator(a, None, b)?] {
                out.extend(e.strings().filter(|s| !s.is_identity()).copied());
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Extra bases covering every required string not evaluable in `existing`,
/// built greedily: each new basis starts from the first uncovered string and
/// absorbs later compatible ones; unconstrained sites read `z`.
pub fn covering_bases(h: &PauliSum, ops: &[PauliSum], existing: &[MeasurementBasis]) -> Result<Vec<MeasurementBasis>> {
    let n = h.n_sites();
    let mut pending: Vec<PauliString> =
        required_strings(h, ops)?.into_iter().filter(|s| !existing.iter().any(|b| b.evaluates(s))).collect();
    let mut out = Vec::new();
    while !pending.is_empty() {
        let mut axes: Vec<Option<Axis>> = vec![None; n];
        let mut rest = Vec::new();
        for s in pending {
            let fits = (1..=n).all(|k| match (axis_of(s.op(k)), axes[k - 1]) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            });
            if fits {
                for k in 1..=n {
                    if let Some(a) = axis_of(s.op(k)) {
                        axes[k - 1] = Some(a);
                    }
                }
            } else {
                rest.push(s);
            }
        }
        let axes: Vec<Axis> = axes.into_iter().map(|a| a.unwrap_or(Axis::Z)).collect();
        out.push(MeasurementBasis::new(axes, format!("qse{}", out.len())));
        pending = rest;
    }
    Ok(out)
}

/// Builds the matrices from shot records grouped by basis descriptor.
/// `bases` lists every basis the data may use, in priority order.
pub fn build_subspace_shots(
    data: &BTreeMap<String, Vec<Arc<ShotBatch>>>,
    h: &PauliSum,
    ops: &[PauliSum],
    bases: &[MeasurementBasis],
    cfg: &EstimatorConfig,
) -> Result<SubspaceProblem> {
    let k = ops.len();
    let mut mats = [DMatrix::zeros(k, k), DMatrix::zeros(k, k)];
    let mut errs = [DMatrix::zeros(k, k), DMatrix::zeros(k, k)];
    let mut missing = std::collections::BTreeSet::new();
    for a in 0..k {
        for b in 0..k {
            for (slot, with_h) in [(0, Some(h)), (1, None)] {
                let op = entry_operator(&ops[a], with_h, &ops[b])?;
                let plan = MeasurementPlan::new(&op, bases, BasisScheme::Full)?;
                match plan.estimate(data, cfg) {
                    Ok(r) => {
                        mats[slot][(a, b)] = r.value;
                        errs[slot][(a, b)] = r.std_error;
                    }
                    Err(VqsError::IncompleteData { missing: m }) => missing.extend(m),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(VqsError::IncompleteData { missing: missing.into_iter().collect() });
    }
    let mut worst: f64 = 0.0;
    for slot in 0..2 {
        for a in 0..k {
            for b in a + 1..k {
                let d = (mats[slot][(a, b)] - mats[slot][(b, a)]).abs();
                let s = (errs[slot][(a, b)].powi(2) + errs[slot][(b, a)].powi(2)).sqrt();
                worst = worst.max(if s > 0.0 { d / s } else if d > 1e-12 { f64::INFINITY } else { 0.0 });
            }
        }
    }
    let sym_err = |e: &DMatrix<f64>| DMatrix::from_fn(k, k, |i, j| 0.5 * (e[(i, j)].powi(2) + e[(j, i)].powi(2)).sqrt());
    Ok(SubspaceProblem {
        h_eff: to_rows(&symmetrize(&mats[0])),
        overlap: to_rows(&symmetrize(&mats[1])),
        h_err: Some(to_rows(&sym_err(&errs[0]))),
        overlap_err: Some(to_rows(&sym_err(&errs[1]))),
        source: SubspaceSource::Shots,
        max_asymmetry_sigma: Some(worst),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSolution {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Coefficient vectors over the original operators, `M`-normalized.
    pub vectors: Vec<Vec<f64>>,
    /// Number of overlap eigenvectors kept.
    pub rank: usize,
}

/// Solves `H v = λ M v` on the eigenspace of `M` above `cutoff × λ_max(M)`.
pub fn solve_subspace(p: &SubspaceProblem, cutoff: f64) -> Result<SubspaceSolution> {
    let h = symmetrize(&p.h_matrix()?);
    let m = symmetrize(&p.overlap_matrix()?);
    let eig = SymmetricEigen::new(m);
    let lmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lmax > 0.0) {
        return Err(VqsError::Numerical("overlap matrix has no positive eigenvalue".into()));
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > cutoff * lmax).collect();
    let k = p.dim();
    let x = DMatrix::from_fn(k, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt());
    let reduced = symmetrize(&(x.transpose() * &h * &x));
    let red = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| red.eigenvalues[a].total_cmp(&red.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| red.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| (&x * red.eigenvectors.column(i)).iter().copied().collect()).collect();
    Ok(SubspaceSolution { eigenvalues, vectors, rank: keep.len() })
}

/// `(λ_0, λ_1 − λ_0)`.
pub fn gap_estimate(p: &SubspaceProblem) -> Result<(f64, f64)> {
    let s = solve_subspace(p, OVERLAP_CUTOFF)?;
    if s.eigenvalues.len() < 2 {
        return Err(VqsError::InsufficientData("subspace has fewer than two well-conditioned directions".into()));
    }
    Ok((s.eigenvalues[0], s.eigenvalues[1] - s.eigenvalues[0]))
}

/// Exact gaps for comparison with the expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGaps {
    pub ground_energy: f64,
    pub zero_magnetization: f64,
    pub cp_even: f64,
    pub cp_odd_above_ground: Option<f64>,
}

pub fn reference_gaps(h: &PauliSum) -> Result<ReferenceGaps> {
    let zm = ed_spectrum(h, EdSector::zero_magnetization(), 2)?;
    let even = ed_spectrum(h, EdSector::cp_even(), 2)?;
    let odd = ed_spectrum(h, EdSector::cp_odd(), 1).ok();
    Ok(ReferenceGaps {
        ground_energy: zm[0].energy,
        zero_magnetization: zm[1].energy - zm[0].energy,
        cp_even: even[1].energy - even[0].energy,
        cp_odd_above_ground: odd.map(|o| o[0].energy - zm[0].energy),
    })
}
