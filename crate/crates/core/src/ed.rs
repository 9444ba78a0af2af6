//! Exact diagonalization in a fixed-magnetization sector, optionally
//! restricted to one CP parity.
//!
//! Small sectors are diagonalized densely; larger ones use a thick-restart
//! Lanczos iteration with full reorthogonalization.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
use crate::operator::SectorOperator;
use crate::pauli::PauliSum;
use crate::schwinger::CpOperator;
use crate::sector::{binomial, SectorBasis, StateVector};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpParity {
    Even,
    Odd,
}

impl CpParity {
    pub fn sign(self) -> f64 {
        match self {
            CpParity::Even => 1.0,
            CpParity::Odd => -1.0,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdSector {
    pub magnetization: i64,
    pub cp: Option<CpParity>,
}

impl EdSector {
    pub fn zero_magnetization() -> Self {
        EdSector { magnetization: 0, cp: None }
    }

    pub fn cp_even() -> Self {
        EdSector { magnetization: 0, cp: Some(CpParity::Even) }
    }

    pub fn cp_odd() -> Self {
        EdSector { magnetization: 0, cp: Some(CpParity::Odd) }
    }
}

#[derive(Clone, Debug)]
pub struct EdConfig {
    /// Largest dimension handled by dense diagonalization.
    pub dense_limit: usize,
    /// Largest sector dimension accepted at all.
    pub dimension_cap: usize,
    /// Required residual `‖Hψ − Eψ‖` per returned pair.
    pub residual_tol: f64,
    /// Lanczos basis size that triggers a thick restart.
    pub max_basis: usize,
    pub max_matvecs: usize,
}

impl Default for EdConfig {
    fn default() -> Self {
        EdConfig {
            dense_limit: 4096,
            dimension_cap: binomial(20, 10) as usize,
            residual_tol: 1e-8,
            max_basis: 160,
            max_matvecs: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub energy: f64,
    /// Eigenvector over the magnetization sector.
    pub state: StateVector,
    pub residual: f64,
}

/// Orthonormal basis of a CP parity subspace, as sparse combinations of
/// sector configurations: each row is `[(index, weight)]`.
struct ParityBasis {
    rows: Vec<Vec<(usize, f64)>>,
}

impl ParityBasis {
    fn new(basis: &SectorBasis, cp: &CpOperator, parity: CpParity) -> Result<Self> {
        let mut rows = Vec::new();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (i, &c) in basis.states().iter().enumerate() {
            let j = basis.index(cp.apply_config(c)).ok_or(VqsError::SectorLeakage)?;
            if j == i {
                if parity == CpParity::Even {
                    rows.push(vec![(i, 1.0)]);
                }
            } else if i < j {
                rows.push(vec![(i, r), (j, parity.sign() * r)]);
            }
        }
        Ok(ParityBasis { rows })
    }

    fn expand(&self, x: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (row, &v) in self.rows.iter().zip(x) {
            for &(i, w) in row {
                out[i] += w * v;
            }
        }
        out
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(i, w)| w * y[i]).sum()).collect()
    }
}

/// Linear map on the (possibly parity-reduced) sector.
struct ReducedOperator<'a> {
    op: &'a SectorOperator,
    parity: Option<ParityBasis>,
}

impl ReducedOperator<'_> {
    fn dim(&self) -> usize {
        match &self.parity {
            Some(p) => p.rows.len(),
            None => self.op.dim(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.parity {
            None => self.op.apply_real(x, y),
            Some(p) => {
                let full = p.expand(x, self.op.dim());
                let mut hy = vec![0.0; self.op.dim()];
                self.op.apply_real(&full, &mut hy);
                y.copy_from_slice(&p.project(&hy));
            }
        }
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        match &self.parity {
            Some(p) => p.expand(x, self.op.dim()),
            None => x.to_vec(),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            m.set_column(j, &DVector::from_column_slice(&col));
        }
        m
    }
}

/// Lowest `k` eigenpairs of `h` in `sector`, energies ascending.
pub fn ed_spectrum(h: &PauliSum, sector: EdSector, k: usize) -> Result<Vec<Eigenpair>> {
    ed_spectrum_with(h, sector, k, &EdConfig::default())
}

pub fn ed_spectrum_with(h: &PauliSum, sector: EdSector, k: usize, cfg: &EdConfig) -> Result<Vec<Eigenpair>> {
    let n = h.n_sites();
    let basis = Arc::new(SectorBasis::with_magnetization(n, sector.magnetization)?);
    if basis.dim() > cfg.dimension_cap {
        return Err(VqsError::SectorTooLarge { dimension: basis.dim(), cap: cfg.dimension_cap });
    }
    let op = SectorOperator::new(h, basis.clone())?;
    if !op.is_real() {
        return Err(VqsError::InvalidParameter("exact diagonalization expects a real symmetric sector matrix".into()));
    }
    let parity = match sector.cp {
        None => None,
        Some(par) => {
            if sector.magnetization != 0 {
                return Err(VqsError::InvalidParameter("CP parity is defined only at zero magnetization".into()));
            }
            Some(ParityBasis::new(&basis, &CpOperator::new(n)?, par)?)
        }
    };
    let red = ReducedOperator { op: &op, parity };
    let dim = red.dim();
    if dim == 0 {
        return Err(VqsError::EmptySector);
    }
    if k == 0 || k > dim {
        return Err(VqsError::TooManyEigenpairs { requested: k, dimension: dim });
    }

    let pairs: Vec<(f64, Vec<f64>)> =
        if dim <= cfg.dense_limit { dense_lowest(&red, k) } else { lanczos_lowest(&red, k, cfg)? };

    let mut out = Vec::with_capacity(k);
    for (energy, x) in pairs {
        let mut hx = vec![0.0; dim];
        red.apply(&x, &mut hx);
        let residual = hx.iter().zip(&x).map(|(a, b)| (a - energy * b).powi(2)).sum::<f64>().sqrt();
        if residual > cfg.residual_tol {
            return Err(VqsError::Numerical(format!("eigenpair residual {residual:e} above tolerance")));
        }
        let full = red.expand(&x);
        let state = StateVector::new(basis.clone(), full.into_iter().map(|a| Complex64::new(a, 0.0)).collect())?;
        out.push(Eigenpair { energy, state, residual });
    }
    Ok(out)
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn dense_lowest(red: &ReducedOperator<'_>, k: usize) -> Vec<(f64, Vec<f64>)> {
    let (vals, vecs) = sorted_eigen(red.to_dense());
    (0..k).map(|i| (vals[i], vecs.column(i).iter().copied().collect())).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Thick-restart Lanczos: Rayleigh–Ritz on a growing orthonormal basis
/// expanded by Ritz residuals (which span the next Krylov direction), and
/// compressed onto the lowest Ritz vectors when it reaches `max_basis`.
fn lanczos_lowest(red: &ReducedOperator<'_>, k: usize, cfg: &EdConfig) -> Result<Vec<(f64, Vec<f64>)>> {
    let dim = red.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<Vec<f64>> = Vec::new();
    let mut t = DMatrix::<f64>::zeros(0, 0);
    let mut next: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut matvecs = 0;
    let keep = (k + 8).min(cfg.max_basis / 2);
    loop {
        if orthogonalize(&mut next, &v) < 1e-12 {
            next = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            if orthogonalize(&mut next, &v) < 1e-12 {
                return Err(VqsError::Numerical("Lanczos basis exhausted the sector".into()));
            }
        }
        let mut hv = vec![0.0; dim];
        red.apply(&next, &mut hv);
        matvecs += 1;
        let m = v.len();
        let mut t2 = DMatrix::<f64>::zeros(m + 1, m + 1);
        t2.view_mut((0, 0), (m, m)).copy_from(&t);
        for (i, vi) in v.iter().enumerate() {
            let x = dot(vi, &hv);
            t2[(i, m)] = x;
            t2[(m, i)] = x;
        }
        t2[(m, m)] = dot(&next, &hv);
        t = t2;
        v.push(std::mem::take(&mut next));
        w.push(hv);

        let m = v.len();
        if m < k {
            next = w[m - 1].clone();
            continue;
        }
        let (theta, y) = sorted_eigen(t.clone());
        let ritz = |col: usize| -> (Vec<f64>, Vec<f64>) {
            let mut x = vec![0.0; dim];
            let mut hx = vec![0.0; dim];
            for (j, (vj, wj)) in v.iter().zip(&w).enumerate() {
                let c = y[(j, col)];
                x.iter_mut().zip(vj).for_each(|(a, b)| *a += c * b);
                hx.iter_mut().zip(wj).for_each(|(a, b)| *a += c * b);
            }
            (x, hx)
        };
        let mut unconverged = None;
        let mut results = Vec::with_capacity(k);
        for col in 0..k {
            let (x, hx) = ritz(col);
            let r: Vec<f64> = hx.iter().zip(&x).map(|(a, b)| a - theta[col] * b).collect();
            let rn = dot(&r, &r).sqrt();
            // Aim below the acceptance tolerance so the final check holds.
            if rn > 0.1 * cfg.residual_tol && unconverged.is_none() {
                unconverged = Some(r);
            }
            results.push((theta[col], x));
        }
        match unconverged {
            None => return Ok(results),
            Some(r) => {
                if matvecs >= cfg.max_matvecs || m == dim {
                    if m == dim {
                        return Ok(results);
                    }
                    return Err(VqsError::Numerical("Lanczos did not converge".into()));
                }
                next = r;
            }
        }
        if v.len() >= cfg.max_basis {
            // Compress onto the lowest Ritz vectors.
            let mut nv = Vec::with_capacity(keep);
            let mut nw = Vec::with_capacity(keep);
            for col in 0..keep {
                let (x, hx) = ritz(col);
                nv.push(x);
                nw.push(hx);
            }
            v = nv;
            w = nw;
            t = DMatrix::from_fn(keep, keep, |i, j| if i == j { theta[i] } else { 0.0 });
        }
    }
}
