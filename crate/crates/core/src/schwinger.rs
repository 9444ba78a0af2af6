//! The gauge-eliminated lattice Schwinger Hamiltonian in spin form, its
//! measurement decomposition, the CP involution and physical observables.
//!
//! Sites are 1-based and staggered with `(-1)^j`, so site 1 is odd. The bare
//! vacuum is `|↑↓↑↓…⟩`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
use crate::operator;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::sector::StateVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchwingerParams {
    pub n_sites: usize,
    /// Pair-creation coupling (energy unit).
    #[serde(default = "one")]
    pub w: f64,
    /// Bare mass.
    pub m: f64,
    /// Electric-field coupling.
    #[serde(default = "one")]
    pub gbar: f64,
    /// Background field.
    #[serde(default)]
    pub eps0: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SchwingerParams {
    fn default() -> Self {
        SchwingerParams { n_sites: 8, w: 1.0, m: 0.1, gbar: 1.0, eps0: 0.0 }
    }
}

impl SchwingerParams {
    pub fn new(n_sites: usize, m: f64) -> Self {
        SchwingerParams { n_sites, m, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites % 2 != 0 {
            return Err(VqsError::InvalidParameter(format!(
                "number of sites must be even and positive, got {}",
                self.n_sites
            )));
        }
        if self.n_sites > 32 {
            return Err(VqsError::InvalidParameter(format!("at most 32 sites supported, got {}", self.n_sites)));
        }
        for (name, v) in [("w", self.w), ("m", self.m), ("gbar", self.gbar), ("eps0", self.eps0)] {
            if !v.is_finite() {
                return Err(VqsError::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.gbar < 0.0 {
            return Err(VqsError::InvalidParameter("gbar must be non-negative".into()));
        }
        Ok(())
    }
}

/// `(-1)^j` for a 1-based site.
pub fn stagger(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn z(n: usize, j: usize) -> PauliString {
    PauliString::identity(n).with(j, Pauli::Z)
}

fn pair(n: usize, j: usize, k: usize, p: Pauli) -> PauliString {
    PauliString::identity(n).with(j, p).with(k, p)
}

/// Eliminated electric field `L_j = ε₀ − ½ Σ_{ℓ≤j} (σ^z_ℓ + (−1)^ℓ)` as a
/// diagonal Pauli sum, for `1 ≤ j ≤ N−1`.
pub fn gauge_field(j: usize, p: &SchwingerParams) -> Result<PauliSum> {
    p.validate()?;
    let n = p.n_sites;
    if j == 0 || j >= n {
        return Err(VqsError::OutOfRange { index: j, lo: 1, hi: n - 1 });
    }
    let mut l = PauliSum::zero(n);
    let offset: f64 = (1..=j).map(stagger).sum();
    l.add_term(PauliString::identity(n), p.eps0 - 0.5 * offset);
    for site in 1..=j {
        l.add_term(z(n, site), -0.5);
    }
    Ok(l)
}

/// The flip-flop (pair creation) part `(w/2) Σ (X_j X_{j+1} + Y_j Y_{j+1})`.
pub fn hopping_term(p: &SchwingerParams) -> PauliSum {
    let n = p.n_sites;
    let mut h = PauliSum::zero(n);
    for j in 1..n {
        h.add_term(pair(n, j, j + 1, Pauli::X), p.w / 2.0);
        h.add_term(pair(n, j, j + 1, Pauli::Y), p.w / 2.0);
    }
    h
}

/// The staggered mass term `(m/2) Σ (−1)^j σ^z_j`.
pub fn mass_term(p: &SchwingerParams) -> PauliSum {
    let n = p.n_sites;
    let mut h = PauliSum::zero(n);
    for j in 1..=n {
        h.add_term(z(n, j), 0.5 * p.m * stagger(j));
    }
    h
}

/// The field energy `ḡ Σ_{j=1}^{N−1} L_j²`, expanded.
pub fn field_term(p: &SchwingerParams) -> Result<PauliSum> {
    let n = p.n_sites;
    let mut h = PauliSum::zero(n);
    for j in 1..n {
        let l = gauge_field(j, p)?;
        h = h.plus(&l.multiply(&l)?.scaled(p.gbar))?;
    }
    Ok(h)
}

/// Target Hamiltonian, fully expanded into XX, YY, Z, ZZ and scalar terms.
pub fn build_hamiltonian(p: &SchwingerParams) -> Result<PauliSum> {
    p.validate()?;
    hopping_term(p).plus(&mass_term(p))?.plus(&field_term(p)?)
}

/// Split of the Hamiltonian into parts measurable in a single product basis.
#[derive(Clone, Debug)]
pub struct LambdaDecomposition {
    pub lambda_x: PauliSum,
    pub lambda_y: PauliSum,
    /// Diagonal part, including the scalar offset.
    pub lambda_z: PauliSum,
    /// Single-site `σ^z_j` coefficients `d_j`, index `j − 1`.
    pub d: Vec<f64>,
    /// `σ^z_j σ^z_{j'}` coefficients for `j < j'` (1-based keys).
    pub c: BTreeMap<(usize, usize), f64>,
    /// Identity coefficient.
    pub offset: f64,
}

impl LambdaDecomposition {
    pub fn recompose(&self) -> Result<PauliSum> {
        self.lambda_x.plus(&self.lambda_y)?.plus(&self.lambda_z)
    }
}

pub fn lambda_decompose(h: &PauliSum, p: &SchwingerParams) -> Result<LambdaDecomposition> {
    p.validate()?;
    let n = p.n_sites;
    if h.n_sites() != n {
        return Err(VqsError::SizeMismatch { expected: n, actual: h.n_sites() });
    }
    let mut lx = PauliSum::zero(n);
    let mut ly = PauliSum::zero(n);
    let mut lz = PauliSum::zero(n);
    let mut d = vec![0.0; n];
    let mut c = BTreeMap::new();
    let mut offset = 0.0;
    for (s, coeff) in h.real_terms()? {
        let support = s.support_mask();
        let adjacent_pair = s.weight() == 2 && {
            let lo = support.trailing_zeros();
            support == 0b11 << lo
        };
        if s.is_diagonal() {
            lz.add_term(s, coeff);
            let sites: Vec<usize> = (1..=n).filter(|&j| s.op(j) == Pauli::Z).collect();
            match sites.as_slice() {
                [] => offset += coeff,
                [j] => d[j - 1] += coeff,
                [j, k] => {
                    c.insert((*j, *k), coeff);
                }
                _ => return Err(VqsError::Structural(format!("unexpected diagonal term {s}"))),
            }
        } else if adjacent_pair && s.x_mask() == support && s.z_mask() == 0 {
            lx.add_term(s, coeff);
        } else if adjacent_pair && s.x_mask() == support && s.z_mask() == support {
            ly.add_term(s, coeff);
        } else {
            return Err(VqsError::Structural(format!("term {s} fits none of the X, Y, Z components")));
        }
    }
    Ok(LambdaDecomposition { lambda_x: lx, lambda_y: ly, lambda_z: lz, d, c, offset })
}

/// `σ^z_tot = Σ_j σ^z_j`.
pub fn total_magnetization(n: usize) -> PauliSum {
    let mut s = PauliSum::zero(n);
    for j in 1..=n {
        s.add_term(z(n, j), 1.0);
    }
    s
}

/// Combined charge conjugation and reflection: site reversal followed by a
/// global spin flip. A pure permutation of computational configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpOperator {
    n_sites: usize,
}

impl CpOperator {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites % 2 != 0 || n_sites > 64 {
            return Err(VqsError::InvalidParameter(format!("CP needs an even chain, got {n_sites} sites")));
        }
        Ok(CpOperator { n_sites })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Image of a configuration: reverse site order, then flip every bit.
    pub fn apply_config(&self, config: u64) -> u64 {
        let n = self.n_sites as u32;
        let reversed = config.reverse_bits() >> (64 - n);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        !reversed & mask
    }

    /// `(CP) s (CP)† = sign · s'`: site `j` moves to `N+1−j`; Y and Z change sign.
    pub fn conjugate_string(&self, s: &PauliString) -> (f64, PauliString) {
        let n = self.n_sites;
        let mut out = PauliString::identity(n);
        let mut sign = 1.0;
        for j in 1..=n {
            let p = s.op(j);
            if matches!(p, Pauli::Y | Pauli::Z) {
                sign = -sign;
            }
            out = out.with(n + 1 - j, p);
        }
        (sign, out)
    }

    pub fn conjugate(&self, op: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero(op.n_sites());
        for (s, c) in op.iter() {
            let (sign, s2) = self.conjugate_string(s);
            out.add_term(s2, *c * sign);
        }
        out
    }

    /// Dense permutation matrix on the full space (small-N reference).
    pub fn to_dense(&self) -> nalgebra::DMatrix<num_complex::Complex64> {
        assert!(self.n_sites <= 14);
        let dim = 1usize << self.n_sites;
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            m[(self.apply_config(b) as usize, b as usize)] = num_complex::Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `⟨ψ|CP|ψ⟩`; ±1 for CP eigenstates.
    pub fn parity(&self, state: &StateVector) -> Result<f64> {
        if state.n_sites() != self.n_sites {
            return Err(VqsError::SizeMismatch { expected: self.n_sites, actual: state.n_sites() });
        }
        let basis = state.basis();
        let amps = state.amplitudes();
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (i, &c) in basis.states().iter().enumerate() {
            if let Some(j) = basis.index(self.apply_config(c)) {
                acc += amps[j].conj() * amps[i];
            }
        }
        Ok(acc.re)
    }
}

/// Order parameter `(1/(2N(N−1))) Σ_{i<j} (1+(−1)^i σ^z_i)(1+(−1)^j σ^z_j)`.
pub fn order_parameter(n: usize) -> Result<PauliSum> {
    if n < 2 {
        return Err(VqsError::InvalidParameter("order parameter needs at least 2 sites".into()));
    }
    let norm = 1.0 / (2.0 * n as f64 * (n as f64 - 1.0));
    let factor = |i: usize| {
        let mut f = PauliSum::identity(n, 1.0);
        f.add_term(z(n, i), stagger(i));
        f
    };
    let mut o = PauliSum::zero(n);
    for i in 1..=n {
        for j in i + 1..=n {
            o = o.plus(&factor(i).multiply(&factor(j))?.scaled(norm))?;
        }
    }
    Ok(o)
}

/// Particle density `n̂_j = ½(1 + (−1)^j σ^z_j)`.
pub fn particle_density(j: usize, n: usize) -> Result<PauliSum> {
    if j == 0 || j > n {
        return Err(VqsError::OutOfRange { index: j, lo: 1, hi: n });
    }
    let mut d = PauliSum::identity(n, 0.5);
    d.add_term(z(n, j), 0.5 * stagger(j));
    Ok(d)
}

/// Site-resolved particle densities of a state.
pub fn particle_densities(state: &StateVector) -> Result<Vec<f64>> {
    let n = state.n_sites();
    (1..=n).map(|j| operator::expectation(state, &particle_density(j, n)?)).collect()
}

/// Dense reference construction of the Hamiltonian directly from the field
/// operators (small-N test oracle, independent of the Pauli expansion).
pub fn dense_reference_hamiltonian(p: &SchwingerParams) -> nalgebra::DMatrix<f64> {
    let n = p.n_sites;
    assert!(n <= 12);
    let dim = 1usize << n;
    let mut h = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let spin = |b: u64, j: usize| if b >> (j - 1) & 1 == 0 { 1.0 } else { -1.0 };
    for b in 0..dim as u64 {
        let mut diag = 0.0;
        let mut field = p.eps0;
        for j in 1..=n {
            let sz = spin(b, j);
            diag += 0.5 * p.m * stagger(j) * sz;
            field -= 0.5 * (sz + stagger(j));
            if j < n {
                diag += p.gbar * field * field;
            }
        }
        h[(b as usize, b as usize)] = diag;
        // σ⁺_j σ⁻_{j+1} + h.c. swaps antiparallel neighbours with amplitude w.
        for j in 1..n {
            if spin(b, j) != spin(b, j + 1) {
                let b2 = b ^ (0b11 << (j - 1));
                h[(b2 as usize, b as usize)] += p.w;
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::SectorBasis;
    use std::sync::Arc;

    fn vacuum_config(n: usize) -> u64 {
        // Even sites (bit index odd) are spin down.
        (0..n).filter(|k| k % 2 == 1).fold(0u64, |acc, k| acc | 1 << k)
    }

    #[test]
    fn odd_chain_rejected() {
        assert!(build_hamiltonian(&SchwingerParams::new(3, 0.1)).is_err());
    }

    #[test]
    fn expansion_matches_dense_reference() {
        for n in [2, 4, 6] {
            let p = SchwingerParams { n_sites: n, w: 0.8, m: 0.37, gbar: 1.3, eps0: 0.2 };
            let h = build_hamiltonian(&p).unwrap().to_dense();
            let r = dense_reference_hamiltonian(&p);
            let err = h.iter().zip(r.iter()).map(|(a, b)| (a.re - b).abs() + a.im.abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    #[test]
    fn vacuum_energy() {
        for n in [2, 4, 8] {
            let p = SchwingerParams::new(n, 0.3);
            let h = build_hamiltonian(&p).unwrap();
            let basis = Arc::new(SectorBasis::zero_magnetization(n).unwrap());
            let vac = StateVector::basis_state(basis, vacuum_config(n)).unwrap();
            let e = operator::expectation(&vac, &h).unwrap();
            assert!((e + 0.3 * n as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_field_values() {
        let p = SchwingerParams::new(2, 0.1);
        assert!(gauge_field(0, &p).is_err());
        assert!(gauge_field(2, &p).is_err());
        let basis = Arc::new(SectorBasis::zero_magnetization(2).unwrap());
        // |↓↑⟩: site 1 down.
        let st = StateVector::basis_state(basis.clone(), 0b01).unwrap();
        let l = gauge_field(1, &p).unwrap();
        assert!((operator::expectation(&st, &l).unwrap() - 1.0).abs() < 1e-14);
        let vac = StateVector::basis_state(basis, 0b10).unwrap();
        assert!(operator::expectation(&vac, &l).unwrap().abs() < 1e-14);
    }

    #[test]
    fn lambda_components() {
        let p = SchwingerParams::new(2, 0.1);
        let h = build_hamiltonian(&p).unwrap();
        let d = lambda_decompose(&h, &p).unwrap();
        assert_eq!(d.lambda_x.len(), 1);
        assert_eq!(d.lambda_x.coefficient(&PauliString::parse("X1 X2", 2).unwrap()).re, 0.5);
        for n in [2, 4, 8] {
            let p = SchwingerParams::new(n, -0.4);
            let h = build_hamiltonian(&p).unwrap();
            let d = lambda_decompose(&h, &p).unwrap();
            assert!(d.recompose().unwrap().approx_eq(&h, 0.0));
        }
    }

    #[test]
    fn lambda_rejects_foreign_terms() {
        let p = SchwingerParams::new(4, 0.1);
        let mut h = build_hamiltonian(&p).unwrap();
        h.add_term(PauliString::parse("X1 X3", 4).unwrap(), 1.0);
        assert!(matches!(lambda_decompose(&h, &p), Err(VqsError::Structural(_))));
    }

    #[test]
    fn hamiltonian_conserves_charge() {
        for (n, m, g) in [(4, 0.1, 1.0), (6, -0.7, 0.5), (8, 2.0, 1.7)] {
            let p = SchwingerParams { n_sites: n, w: 1.0, m, gbar: g, eps0: 0.1 };
            let h = build_hamiltonian(&p).unwrap();
            assert!(h.commutator(&total_magnetization(n)).unwrap().is_empty());
        }
    }

    #[test]
    fn cp_basics() {
        let cp = CpOperator::new(8).unwrap();
        let vac = vacuum_config(8);
        assert_eq!(cp.apply_config(vac), vac);
        for c in 0..256u64 {
            assert_eq!(cp.apply_config(cp.apply_config(c)), c);
        }
        assert!(CpOperator::new(5).is_err());
    }

    #[test]
    fn cp_conjugation_of_strings_matches_dense() {
        let cp = CpOperator::new(4).unwrap();
        let u = cp.to_dense();
        for text in ["X1", "Y2", "Z3 X4", "Y1 Y2 Z4"] {
            let s = PauliString::parse(text, 4).unwrap();
            let (sign, s2) = cp.conjugate_string(&s);
            let lhs = &u * s.to_dense() * u.adjoint();
            let rhs = s2.to_dense() * num_complex::Complex64::new(sign, 0.0);
            assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-14), "{text}");
        }
    }

    #[test]
    fn order_parameter_and_density_limits() {
        let n = 6;
        let basis = Arc::new(SectorBasis::zero_magnetization(n).unwrap());
        let vac = StateVector::basis_state(basis.clone(), vacuum_config(n)).unwrap();
        let anti = StateVector::basis_state(basis, vacuum_config(n) ^ 0b111111).unwrap();
        let o = order_parameter(n).unwrap();
        assert!(operator::expectation(&vac, &o).unwrap().abs() < 1e-12);
        assert!((operator::expectation(&anti, &o).unwrap() - 1.0).abs() < 1e-12);
        assert!(particle_densities(&vac).unwrap().iter().all(|d| d.abs() < 1e-14));
        assert!(particle_densities(&anti).unwrap().iter().all(|d| (d - 1.0).abs() < 1e-14));
        assert!(particle_density(0, n).is_err());
    }
}
