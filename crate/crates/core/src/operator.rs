//! Sparse matrices of Hermitian Pauli sums restricted to a [`SectorBasis`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, VqsError};
use crate::pauli::PauliSum;
use crate::sector::{SectorBasis, StateVector};

/// Row-compressed sparse matrix of a Hermitian operator on a sector.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    basis: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    real: bool,
    /// Real parts of `vals`, kept when the matrix is real so the hot
    /// product reads half the memory.
    re_vals: Vec<f64>,
}

impl SectorOperator {
    /// Builds the restriction of `op` to `basis`. Fails if `op` is not
    /// Hermitian or does not map the basis into itself.
    pub fn new(op: &PauliSum, basis: Arc<SectorBasis>) -> Result<Self> {
        if op.n_sites() != basis.n_sites() {
            return Err(VqsError::SizeMismatch { expected: basis.n_sites(), actual: op.n_sites() });
        }
        if !op.is_hermitian() {
            return Err(VqsError::NonHermitian(op.max_imaginary()));
        }
        // Group terms by flip mask so each row touches each target once.
        let mut groups: Vec<(u64, Vec<(u64, u8, f64)>)> = Vec::new();
        for (s, c) in op.iter() {
            let ny = (s.x_mask() & s.z_mask()).count_ones() as u8;
            match groups.iter_mut().find(|(x, _)| *x == s.x_mask()) {
                Some((_, v)) => v.push((s.z_mask(), ny, c.re)),
                None => groups.push((s.x_mask(), vec![(s.z_mask(), ny, c.re)])),
            }
        }
        groups.sort_by_key(|(x, _)| *x);

        let dim = basis.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut real = true;
        row_ptr.push(0);
        let mut row: Vec<(u32, Complex64)> = Vec::with_capacity(groups.len());
        for &c in basis.states() {
            row.clear();
            for (x, terms) in &groups {
                // ⟨c|H|c'⟩ = conj(⟨c'|H|c⟩); apply each term to |c⟩.
                let mut amp = Complex64::new(0.0, 0.0);
                for &(z, ny, coeff) in terms {
                    let sign = ((c & z).count_ones() % 2) as u8;
                    let k = (ny + 2 * sign) & 3;
                    let phase = match k {
                        0 => Complex64::new(1.0, 0.0),
                        1 => Complex64::new(0.0, 1.0),
                        2 => Complex64::new(-1.0, 0.0),
                        _ => Complex64::new(0.0, -1.0),
                    };
                    amp += phase * coeff;
                }
                if amp.norm() < 1e-15 {
                    continue;
                }
                let target = c ^ x;
                let j = basis.index(target).ok_or(VqsError::SectorLeakage)?;
                let v = amp.conj();
                if v.im.abs() > 1e-14 {
                    real = false;
                }
                row.push((j as u32, v));
            }
            row.sort_by_key(|(j, _)| *j);
            for &(j, v) in row.iter() {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        let re_vals = if real { vals.iter().map(|v| v.re).collect() } else { Vec::new() };
        Ok(SectorOperator { basis, row_ptr, cols, vals, real, re_vals })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// True when every matrix element is real (real symmetric matrix).
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        if self.real {
            for (i, yi) in y.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += x[self.cols[k] as usize] * self.re_vals[k];
                }
                *yi = acc;
            }
            return;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    /// Real matrix-vector product; only meaningful when [`is_real`](Self::is_real).
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k].re * x[self.cols[k] as usize];
            }
            *yi = acc;
        }
    }

    pub fn apply_state(&self, state: &StateVector) -> Result<StateVector> {
        if state.basis().as_ref() != self.basis.as_ref() {
            return Err(VqsError::SizeMismatch { expected: self.dim(), actual: state.basis().dim() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply(state.amplitudes(), &mut out);
        StateVector::new(self.basis.clone(), out)
    }

    /// `⟨ψ|A|ψ⟩` (real for Hermitian `A`).
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let a = self.apply_state(state)?;
        Ok(state.inner(&a)?.re)
    }

    /// Dense real matrix (used for small sectors).
    pub fn to_dense_real(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k] as usize)] += self.vals[k].re;
            }
        }
        m
    }

    /// Diagonal elements (real parts).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] as usize == i)
                    .map(|k| self.vals[k].re)
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

/// Exact `⟨ψ|O|ψ⟩` for a Hermitian Pauli sum, valid on any basis (the
/// operator may leave the basis: such components contribute nothing).
pub fn expectation(state: &StateVector, op: &PauliSum) -> Result<f64> {
    if op.n_sites() != state.n_sites() {
        return Err(VqsError::SizeMismatch { expected: state.n_sites(), actual: op.n_sites() });
    }
    if !op.is_hermitian() {
        return Err(VqsError::NonHermitian(op.max_imaginary()));
    }
    let basis = state.basis();
    let amps = state.amplitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for (s, c) in op.iter() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &cfg) in basis.states().iter().enumerate() {
            let a = amps[i];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let (amp, out) = s.apply(cfg);
            if let Some(j) = basis.index(out) {
                acc += amps[j].conj() * amp * a;
            }
        }
        total += acc * c;
    }
    Ok(total.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    #[test]
    fn sector_matrix_matches_dense_restriction() {
        let n = 4;
        let mut op = PauliSum::zero(n);
        for j in 1..n {
            op.add_term(PauliString::parse(&format!("X{} X{}", j, j + 1), n).unwrap(), 0.5);
            op.add_term(PauliString::parse(&format!("Y{} Y{}", j, j + 1), n).unwrap(), 0.5);
        }
        op.add_term(PauliString::parse("Z1 Z3", n).unwrap(), 0.3);
        op.add_term(PauliString::parse("Z2", n).unwrap(), -0.7);
        let basis = Arc::new(SectorBasis::zero_magnetization(n).unwrap());
        let sparse = SectorOperator::new(&op, basis.clone()).unwrap();
        assert!(sparse.is_real());
        let dense = op.to_dense();
        let m = sparse.to_dense_real();
        for (i, &ci) in basis.states().iter().enumerate() {
            for (j, &cj) in basis.states().iter().enumerate() {
                let d = dense[(ci as usize, cj as usize)];
                assert!((m[(i, j)] - d.re).abs() < 1e-14 && d.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn leakage_is_detected() {
        let op = PauliSum::from_string(PauliString::parse("X1", 2).unwrap(), 1.0);
        let basis = Arc::new(SectorBasis::zero_magnetization(2).unwrap());
        assert!(matches!(SectorOperator::new(&op, basis), Err(VqsError::SectorLeakage)));
    }
}
