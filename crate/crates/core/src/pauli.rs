//! Pauli strings and real-weighted sums of Pauli strings.
//!
//! A string over `n_sites` qubits is stored as two bitmasks: bit `k` of the
//! X-part (resp. Z-part) is set when site `k + 1` carries an X or Y (resp. a
//! Z or Y). Sites are 1-indexed in the text form (`"X1 X2 Z5"`), 0-indexed in
//! the masks.
//!
//! Computational basis convention shared by the whole crate: bit `k` of a
//! configuration is `0` for spin up (`σ^z = +1`) and `1` for spin down.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};

/// Maximum number of sites a string can address.
pub const MAX_SITES: usize = 64;

/// Coefficients with magnitude below this are dropped after simplification.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Phase exponent `k` (power of `i`) of the single-site product `a·b`.
    fn product_phase(a: Pauli, b: Pauli) -> u8 {
        use Pauli::*;
        match (a, b) {
            (X, Y) | (Y, Z) | (Z, X) => 1,
            (Y, X) | (Z, Y) | (X, Z) => 3,
            _ => 0,
        }
    }
}

/// One of `{+1, +i, -1, -i}`, stored as the exponent of `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u8) -> Self {
        Phase(k & 3)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(self.0 + other.0)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_sites: usize,
    x: u64,
    z: u64,
}

fn site_mask(n_sites: usize) -> u64 {
    if n_sites == 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(VqsError::InvalidParameter(format!(
            "number of sites must be in 1..={MAX_SITES}, got {n_sites}"
        )));
    }
    Ok(())
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        assert!(n_sites > 0 && n_sites <= MAX_SITES, "unsupported size {n_sites}");
        PauliString { n_sites, x: 0, z: 0 }
    }

    pub fn from_masks(n_sites: usize, x: u64, z: u64) -> Result<Self> {
        check_sites(n_sites)?;
        let m = site_mask(n_sites);
        if x & !m != 0 || z & !m != 0 {
            return Err(VqsError::InvalidParameter("mask addresses sites beyond n_sites".into()));
        }
        Ok(PauliString { n_sites, x, z })
    }

    pub fn from_ops(ops: &[Pauli]) -> Result<Self> {
        check_sites(ops.len())?;
        let mut s = PauliString::identity(ops.len());
        for (k, &p) in ops.iter().enumerate() {
            s = s.with(k + 1, p);
        }
        Ok(s)
    }

    /// Builds a string from `(site, label)` pairs with 1-based sites.
    pub fn from_sites(n_sites: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        check_sites(n_sites)?;
        let mut s = PauliString::identity(n_sites);
        for &(site, p) in ops {
            if site == 0 || site > n_sites {
                return Err(VqsError::OutOfRange { index: site, lo: 1, hi: n_sites });
            }
            s = s.with(site, p);
        }
        Ok(s)
    }

    /// Copy with `site` (1-based) replaced by `p`.
    pub fn with(mut self, site: usize, p: Pauli) -> Self {
        assert!(site >= 1 && site <= self.n_sites, "site {site} out of range");
        let bit = 1u64 << (site - 1);
        let (xb, zb) = p.bits();
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    /// Label at a 1-based site.
    pub fn op(&self, site: usize) -> Pauli {
        let bit = 1u64 << (site - 1);
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn ops(&self) -> Vec<Pauli> {
        (1..=self.n_sites).map(|s| self.op(s)).collect()
    }

    pub fn weight(&self) -> u32 {
        self.support_mask().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    fn check_same_size(&self, other: &PauliString) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(VqsError::SizeMismatch { expected: self.n_sites, actual: other.n_sites });
        }
        Ok(())
    }

    /// Sitewise product: returns `(phase, c)` with `self · other = phase · c`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        self.check_same_size(other)?;
        let mut k = 0u8;
        let mut overlap = self.support_mask() & other.support_mask();
        while overlap != 0 {
            let site = overlap.trailing_zeros() as usize + 1;
            k += Pauli::product_phase(self.op(site), other.op(site));
            overlap &= overlap - 1;
        }
        let c = PauliString { n_sites: self.n_sites, x: self.x ^ other.x, z: self.z ^ other.z };
        Ok((Phase::from_exponent(k), c))
    }

    /// True when the two strings commute: the number of sites where both
    /// act non-trivially with different labels is even.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_same_size(other)?;
        Ok(self.anticommuting_sites(other) % 2 == 0)
    }

    fn anticommuting_sites(&self, other: &PauliString) -> u32 {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones()
    }

    /// Action on a computational basis configuration:
    /// `P|b⟩ = amplitude · |b'⟩`.
    #[inline]
    pub fn apply(&self, config: u64) -> (Complex64, u64) {
        let ny = (self.x & self.z).count_ones() as u8;
        let sign = (config & self.z).count_ones() % 2;
        let phase = Phase::from_exponent(ny + 2 * sign as u8);
        (phase.to_complex(), config ^ self.x)
    }

    /// Dense `2^N × 2^N` matrix in the crate's basis convention. Small-N
    /// reference only.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        assert!(self.n_sites <= 14, "dense export limited to 14 sites");
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (amp, out) = self.apply(b);
            m[(out as usize, b as usize)] = amp;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for site in 1..=self.n_sites {
            let p = self.op(site);
            if p != Pauli::I {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}{}", p.letter(), site)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl PauliString {
    /// Parses the canonical text form (`"X1 X2 Z5"`, or `"I"`) for a chain
    /// of `n_sites`.
    pub fn parse(text: &str, n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let text = text.trim();
        let mut s = PauliString::identity(n_sites);
        if text == "I" || text.is_empty() {
            return Ok(s);
        }
        for tok in text.split_whitespace() {
            let mut chars = tok.chars();
            let p = match chars.next() {
                Some('X') => Pauli::X,
                Some('Y') => Pauli::Y,
                Some('Z') => Pauli::Z,
                _ => return Err(VqsError::Parse(format!("bad Pauli token {tok:?}"))),
            };
            let site: usize = chars
                .as_str()
                .parse()
                .map_err(|_| VqsError::Parse(format!("bad site in token {tok:?}")))?;
            if site == 0 || site > n_sites {
                return Err(VqsError::OutOfRange { index: site, lo: 1, hi: n_sites });
            }
            if s.op(site) != Pauli::I {
                return Err(VqsError::Parse(format!("site {site} given twice")));
            }
            s = s.with(site, p);
        }
        Ok(s)
    }
}

/// A weighted sum of Pauli strings over a fixed number of sites.
///
/// Coefficients are stored as complex numbers so that products stay exact;
/// a sum is Hermitian iff all its coefficients are real.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_sites: usize) -> Self {
        assert!(n_sites > 0 && n_sites <= MAX_SITES, "unsupported size {n_sites}");
        PauliSum { n_sites, terms: BTreeMap::new() }
    }

    pub fn identity(n_sites: usize, coeff: f64) -> Self {
        let mut s = PauliSum::zero(n_sites);
        s.add_term(PauliString::identity(n_sites), coeff);
        s
    }

    pub fn from_string(s: PauliString, coeff: f64) -> Self {
        let mut out = PauliSum::zero(s.n_sites());
        out.add_term(s, coeff);
        out
    }

    pub fn from_terms<I, C>(n_sites: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, C)>,
        C: Into<Complex64>,
    {
        let mut out = PauliSum::zero(n_sites);
        for (s, c) in terms {
            if s.n_sites() != n_sites {
                return Err(VqsError::SizeMismatch { expected: n_sites, actual: s.n_sites() });
            }
            out.add_term(s, c);
        }
        Ok(out)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff · s`, removing the key if the result falls below the
    /// pruning threshold.
    pub fn add_term(&mut self, s: PauliString, coeff: impl Into<Complex64>) {
        assert_eq!(s.n_sites(), self.n_sites, "term size mismatch");
        let c = coeff.into();
        let entry = self.terms.entry(s).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() < PRUNE_THRESHOLD {
            self.terms.remove(&s);
        }
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }

    /// Largest imaginary part over all coefficients.
    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.max_imaginary() <= PRUNE_THRESHOLD
    }

    /// Real coefficients in key order; fails if the sum is not Hermitian.
    pub fn real_terms(&self) -> Result<Vec<(PauliString, f64)>> {
        if !self.is_hermitian() {
            return Err(VqsError::NonHermitian(self.max_imaginary()));
        }
        Ok(self.terms.iter().map(|(s, c)| (*s, c.re)).collect())
    }

    fn check_same_size(&self, other: &PauliSum) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(VqsError::SizeMismatch { expected: self.n_sites, actual: other.n_sites });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: impl Into<Complex64>) -> PauliSum {
        let f = factor.into();
        let mut out = PauliSum::zero(self.n_sites);
        for (s, c) in &self.terms {
            out.add_term(*s, *c * f);
        }
        out
    }

    pub fn plus(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        Ok(out)
    }

    pub fn minus(&self, other: &PauliSum) -> Result<PauliSum> {
        self.plus(&other.scaled(-1.0))
    }

    /// Fully expanded product `self · other`.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (phase, c) = a.multiply(b)?;
                *acc.entry(c).or_default() += ca * cb * phase.to_complex();
            }
        }
        let out = PauliSum::from_map(self.n_sites, acc);
        if self == other && self.is_hermitian() && !out.is_hermitian() {
            return Err(VqsError::Structural(format!(
                "square of a Hermitian sum has imaginary coefficient {:e}",
                out.max_imaginary()
            )));
        }
        Ok(out)
    }

    fn from_map(n_sites: usize, map: BTreeMap<PauliString, Complex64>) -> PauliSum {
        let terms = map.into_iter().filter(|(_, c)| c.norm() >= PRUNE_THRESHOLD).collect();
        PauliSum { n_sites, terms }
    }

    /// `self·other + other·self`. Anticommuting string pairs cancel exactly
    /// and are never materialized.
    pub fn anticommutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if !a.commutes(b)? {
                    continue;
                }
                let (phase, c) = a.multiply(b)?;
                *acc.entry(c).or_default() += 2.0 * ca * cb * phase.to_complex();
            }
        }
        Ok(PauliSum::from_map(self.n_sites, acc))
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.commutes(b)? {
                    continue;
                }
                let (phase, c) = a.multiply(b)?;
                *acc.entry(c).or_default() += 2.0 * ca * cb * phase.to_complex();
            }
        }
        Ok(PauliSum::from_map(self.n_sites, acc))
    }

    /// Termwise equality up to `tol` on every coefficient.
    pub fn approx_eq(&self, other: &PauliSum, tol: f64) -> bool {
        if self.n_sites != other.n_sites {
            return false;
        }
        let keys: std::collections::BTreeSet<_> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|k| (self.coefficient(k) - other.coefficient(k)).norm() <= tol)
    }

    /// Dense matrix of the sum (small-N reference).
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        assert!(self.n_sites <= 14, "dense export limited to 14 sites");
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for (s, c) in &self.terms {
            for b in 0..dim as u64 {
                let (amp, out) = s.apply(b);
                m[(out as usize, b as usize)] += amp * c;
            }
        }
        m
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im.abs() <= PRUNE_THRESHOLD {
                write!(f, "{}·[{}]", c.re, s)?;
            } else {
                write!(f, "({})·[{}]", c, s)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Pauli {
    type Err = VqsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            _ => Err(VqsError::Parse(format!("unknown Pauli label {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(text: &str, n: usize) -> PauliString {
        PauliString::parse(text, n).unwrap()
    }

    fn dense_close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn single_site_products() {
        let (p, c) = s("X1", 1).multiply(&s("X1", 1)).unwrap();
        assert_eq!(p, Phase::ONE);
        assert!(c.is_identity());

        let (p, c) = s("X1", 1).multiply(&s("Y1", 1)).unwrap();
        assert_eq!(p, Phase::I);
        assert_eq!(c, s("Z1", 1));
    }

    #[test]
    fn two_site_product_matches_dense() {
        let a = s("X1 X2", 2);
        let b = s("Z1 Z2", 2);
        let (p, c) = a.multiply(&b).unwrap();
        assert_eq!(c, s("Y1 Y2", 2));
        // (-i)(-i) = -1
        assert_eq!(p, Phase::MINUS_ONE);
        let lhs = a.to_dense() * b.to_dense();
        let rhs = c.to_dense() * p.to_complex();
        assert!(dense_close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let err = s("X1", 1).multiply(&s("X1", 2)).unwrap_err();
        assert!(matches!(err, VqsError::SizeMismatch { .. }));
        assert!(s("X1", 1).commutes(&s("Z2", 2)).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(s("X1", 2).commutes(&s("X1 X2", 2)).unwrap());
        assert!(!s("X1", 1).commutes(&s("Z1", 1)).unwrap());
        let a = s("X1 Y2", 2);
        let b = s("Z1 Z2", 2);
        assert!(a.commutes(&b).unwrap());
        let comm = a.to_dense() * b.to_dense() - b.to_dense() * a.to_dense();
        assert!(comm.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn text_form_round_trip() {
        let p = s("X1 X2 Z5", 6);
        assert_eq!(p.to_string(), "X1 X2 Z5");
        assert_eq!(PauliString::identity(3).to_string(), "I");
        assert!(PauliString::parse("X0", 3).is_err());
        assert!(PauliString::parse("X1 Z1", 3).is_err());
        assert!(PauliString::parse("Q2", 3).is_err());
    }

    #[test]
    fn sum_products() {
        let x = PauliSum::from_string(s("X1", 1), 1.0);
        let sq = x.multiply(&x).unwrap();
        assert_eq!(sq.len(), 1);
        assert_eq!(sq.coefficient(&PauliString::identity(1)), Complex64::new(1.0, 0.0));

        let z = PauliSum::from_terms(2, [(s("Z1", 2), 1.0), (s("Z2", 2), 1.0)]).unwrap();
        let sq = z.multiply(&z).unwrap();
        let expected =
            PauliSum::from_terms(2, [(PauliString::identity(2), 2.0), (s("Z1 Z2", 2), 2.0)]).unwrap();
        assert!(sq.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn anticommutator_examples() {
        let x = PauliSum::from_string(s("X1", 1), 1.0);
        let z = PauliSum::from_string(s("Z1", 1), 1.0);
        assert!(x.anticommutator(&z).unwrap().is_empty());

        let xx = PauliSum::from_string(s("X1 X2", 3), 1.0);
        let z3 = PauliSum::from_string(s("Z3", 3), 1.0);
        let ac = xx.anticommutator(&z3).unwrap();
        assert_eq!(ac.len(), 1);
        assert_eq!(ac.coefficient(&s("X1 X2 Z3", 3)), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn zero_terms_are_pruned() {
        let mut sum = PauliSum::zero(2);
        sum.add_term(s("X1", 2), 0.5);
        sum.add_term(s("X1", 2), -0.5);
        assert!(sum.is_empty());
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(0u8..4, n).prop_map(move |v| {
            let ops: Vec<Pauli> =
                v.into_iter().map(|k| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][k as usize]).collect();
            PauliString::from_ops(&ops).unwrap()
        })
    }

    fn arb_sum(n: usize) -> impl Strategy<Value = PauliSum> {
        proptest::collection::vec((arb_string(n), -2.0f64..2.0), 1..6)
            .prop_map(move |terms| PauliSum::from_terms(n, terms).unwrap())
    }

    proptest! {
        #[test]
        fn product_phase_matches_dense(a in arb_string(3), b in arb_string(3)) {
            let (p, c) = a.multiply(&b).unwrap();
            let lhs = a.to_dense() * b.to_dense();
            let rhs = c.to_dense() * p.to_complex();
            prop_assert!(dense_close(&lhs, &rhs, 1e-13));
            let (p1, c1) = a.multiply(&PauliString::identity(3)).unwrap();
            prop_assert_eq!(p1, Phase::ONE);
            prop_assert_eq!(c1, a);
        }

        #[test]
        fn commutes_matches_dense(a in arb_string(3), b in arb_string(3)) {
            let comm = a.to_dense() * b.to_dense() - b.to_dense() * a.to_dense();
            let vanishes = comm.iter().all(|z| z.norm() < 1e-13);
            prop_assert_eq!(a.commutes(&b).unwrap(), vanishes);
        }

        #[test]
        fn anticommutator_matches_products(a in arb_sum(4), b in arb_sum(4)) {
            let ac = a.anticommutator(&b).unwrap();
            let direct = a.multiply(&b).unwrap().plus(&b.multiply(&a).unwrap()).unwrap();
            prop_assert!(ac.approx_eq(&direct, 1e-12));
            let dense = a.to_dense() * b.to_dense() + b.to_dense() * a.to_dense();
            prop_assert!(dense_close(&ac.to_dense(), &dense, 1e-11));
        }

        #[test]
        fn hermitian_square_is_real(a in arb_sum(4)) {
            let sq = a.multiply(&a).unwrap();
            prop_assert!(sq.is_hermitian());
        }
    }
}
