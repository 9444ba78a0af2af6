//! Fixed-magnetization computational bases and state vectors over them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
use crate::pauli::PauliString;

/// Ordered list of computational configurations spanning either one
/// magnetization sector or the full `2^N` space.
///
/// Configurations are stored in ascending numeric order, so the position of
/// a configuration is its colexicographic rank among strings with the same
/// popcount.
#[derive(Debug, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_down: Option<usize>,
    states: Vec<u64>,
    binom: Vec<Vec<u64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectorLabel {
    /// Total `σ^z` eigenvalue.
    Magnetization(i64),
    Full,
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; n + 2]; n + 2];
    for i in 0..=n + 1 {
        t[i][0] = 1;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j <= i - 1 { t[i - 1][j] } else { 0 };
        }
    }
    t
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

impl SectorBasis {
    /// Sector with total magnetization `σ^z_tot = magnetization`.
    pub fn with_magnetization(n_sites: usize, magnetization: i64) -> Result<Self> {
        if n_sites == 0 || n_sites > 32 {
            return Err(VqsError::InvalidParameter(format!("sector bases support 1..=32 sites, got {n_sites}")));
        }
        let n = n_sites as i64;
        if magnetization.abs() > n || (n - magnetization) % 2 != 0 {
            return Err(VqsError::EmptySector);
        }
        let n_down = ((n - magnetization) / 2) as usize;
        let mut states = Vec::with_capacity(binomial(n_sites, n_down) as usize);
        if n_down == 0 {
            states.push(0);
        } else {
            // Gosper's hack: next larger integer with the same popcount.
            let mut v: u64 = (1u64 << n_down) - 1;
            let limit = 1u64 << n_sites;
            while v < limit {
                states.push(v);
                let t = v | (v - 1);
                v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
            }
        }
        Ok(SectorBasis { n_sites, n_down: Some(n_down), states, binom: binomial_table(n_sites) })
    }

    pub fn zero_magnetization(n_sites: usize) -> Result<Self> {
        if n_sites % 2 != 0 {
            return Err(VqsError::InvalidParameter("zero magnetization needs an even number of sites".into()));
        }
        SectorBasis::with_magnetization(n_sites, 0)
    }

    pub fn full(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > 24 {
            return Err(VqsError::InvalidParameter(format!("full space supports 1..=24 sites, got {n_sites}")));
        }
        Ok(SectorBasis { n_sites, n_down: None, states: (0..1u64 << n_sites).collect(), binom: Vec::new() })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn label(&self) -> SectorLabel {
        match self.n_down {
            Some(k) => SectorLabel::Magnetization(self.n_sites as i64 - 2 * k as i64),
            None => SectorLabel::Full,
        }
    }

    pub fn is_full(&self) -> bool {
        self.n_down.is_none()
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn config(&self, index: usize) -> u64 {
        self.states[index]
    }

    /// Position of a configuration, or `None` if it lies outside the basis.
    #[inline]
    pub fn index(&self, config: u64) -> Option<usize> {
        match self.n_down {
            None => ((config >> self.n_sites) == 0).then_some(config as usize),
            Some(k) => {
                if config.count_ones() as usize != k || (config >> self.n_sites) != 0 {
                    return None;
                }
                let mut rank = 0u64;
                let mut rest = config;
                let mut i = 1;
                while rest != 0 {
                    let pos = rest.trailing_zeros() as usize;
                    rank += self.binom[pos][i];
                    rest &= rest - 1;
                    i += 1;
                }
                Some(rank as usize)
            }
        }
    }
}

/// Total `σ^z` of a configuration (bit set = spin down).
pub fn magnetization_of(config: u64, n_sites: usize) -> i64 {
    n_sites as i64 - 2 * config.count_ones() as i64
}

/// Complex amplitudes over a [`SectorBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amps: Vec<Complex64>,
}

pub const NORM_TOLERANCE: f64 = 1e-10;

impl StateVector {
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(VqsError::SizeMismatch { expected: basis.dim(), actual: amps.len() });
        }
        Ok(StateVector { basis, amps })
    }

    /// Normalized computational basis state.
    pub fn basis_state(basis: Arc<SectorBasis>, config: u64) -> Result<Self> {
        let idx = basis.index(config).ok_or(VqsError::SectorLeakage)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(StateVector { basis, amps })
    }

    pub fn from_real(basis: Arc<SectorBasis>, amps: &[f64]) -> Result<Self> {
        StateVector::new(basis, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, config: u64) -> Complex64 {
        self.basis.index(config).map(|i| self.amps[i]).unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(VqsError::Unnormalized(n));
        }
        Ok(())
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(VqsError::Unnormalized(0.0));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    fn same_space(&self, other: &StateVector) -> Result<()> {
        if !Arc::ptr_eq(&self.basis, &other.basis) && *self.basis != *other.basis {
            return Err(VqsError::SizeMismatch { expected: self.basis.dim(), actual: other.basis.dim() });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.same_space(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Squared overlap `|⟨a|b⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Same state expressed over the full `2^N` space.
    pub fn to_full(&self) -> Result<StateVector> {
        if self.basis.is_full() {
            return Ok(self.clone());
        }
        let full = Arc::new(SectorBasis::full(self.n_sites())?);
        let mut amps = vec![Complex64::new(0.0, 0.0); full.dim()];
        for (i, &c) in self.basis.states().iter().enumerate() {
            amps[c as usize] = self.amps[i];
        }
        Ok(StateVector { basis: full, amps })
    }

    /// Restricts to `basis`, dropping amplitude outside it. Returns the state
    /// and the discarded probability weight.
    pub fn project_onto(&self, basis: Arc<SectorBasis>) -> Result<(StateVector, f64)> {
        if basis.n_sites() != self.n_sites() {
            return Err(VqsError::SizeMismatch { expected: basis.n_sites(), actual: self.n_sites() });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        let mut lost = 0.0;
        for (i, &c) in self.basis.states().iter().enumerate() {
            match basis.index(c) {
                Some(j) => amps[j] = self.amps[i],
                None => lost += self.amps[i].norm_sqr(),
            }
        }
        Ok((StateVector { basis, amps }, lost))
    }

    /// Born probabilities in basis order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `P|ψ⟩` for a single Pauli string; fails if the result leaves the basis.
    pub fn apply_string(&self, s: &PauliString) -> Result<StateVector> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &c) in self.basis.states().iter().enumerate() {
            if self.amps[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (amp, c2) = s.apply(c);
            let j = self.basis.index(c2).ok_or(VqsError::SectorLeakage)?;
            out[j] += amp * self.amps[i];
        }
        Ok(StateVector { basis: self.basis.clone(), amps: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_dimensions() {
        assert_eq!(SectorBasis::zero_magnetization(8).unwrap().dim(), 70);
        assert_eq!(SectorBasis::zero_magnetization(20).unwrap().dim(), 184_756);
        assert_eq!(SectorBasis::full(4).unwrap().dim(), 16);
        assert!(SectorBasis::zero_magnetization(3).is_err());
        assert!(matches!(SectorBasis::with_magnetization(4, 1), Err(VqsError::EmptySector)));
    }

    #[test]
    fn ranking_matches_enumeration() {
        let b = SectorBasis::zero_magnetization(10).unwrap();
        for (i, &c) in b.states().iter().enumerate() {
            assert_eq!(b.index(c), Some(i));
        }
        assert_eq!(b.index(0b1), None);
        let full = SectorBasis::full(5).unwrap();
        assert_eq!(full.index(31), Some(31));
        assert_eq!(full.index(32), None);
    }

    #[test]
    fn fidelity_examples() {
        let b = Arc::new(SectorBasis::zero_magnetization(4).unwrap());
        let a = StateVector::basis_state(b.clone(), 0b1010).unwrap();
        let c = StateVector::basis_state(b.clone(), 0b0101).unwrap();
        assert_eq!(a.fidelity(&a).unwrap(), 1.0);
        assert_eq!(a.fidelity(&c).unwrap(), 0.0);
        let other = Arc::new(SectorBasis::full(4).unwrap());
        let d = StateVector::basis_state(other, 0b0101).unwrap();
        assert!(a.fidelity(&d).is_err());
    }
}
