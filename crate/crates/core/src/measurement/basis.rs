//! Product measurement bases and the shot records taken in them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};
use crate::pauli::{Pauli, PauliString};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    fn matches(self, p: Pauli) -> bool {
        matches!((self, p), (_, Pauli::I) | (Axis::X, Pauli::X) | (Axis::Y, Pauli::Y) | (Axis::Z, Pauli::Z))
    }
}

/// Per-site readout axes. The descriptor (one letter per site, e.g.
/// `"xxzz"`) is the canonical identity; the tag is for people.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementBasis {
    axes: Vec<Axis>,
    tag: String,
}

impl MeasurementBasis {
    pub fn new(axes: Vec<Axis>, tag: impl Into<String>) -> Self {
        MeasurementBasis { axes, tag: tag.into() }
    }

    pub fn uniform(n: usize, axis: Axis) -> Self {
        let tag = match axis {
            Axis::X => "allX",
            Axis::Y => "allY",
            Axis::Z => "allZ",
        };
        MeasurementBasis::new(vec![axis; n], tag)
    }

    /// `pair` on sites `j, j+1` (1-based), `rest` elsewhere.
    pub fn pair(n: usize, j: usize, pair: Axis, rest: Axis) -> Self {
        let mut axes = vec![rest; n];
        axes[j - 1] = pair;
        axes[j] = pair;
        let tag = format!("{}{}@{}", pair.letter(), rest.letter(), j);
        MeasurementBasis::new(axes, tag)
    }

    /// Parses a descriptor string such as `"xxzz"`.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let axes = descriptor
            .chars()
            .map(|c| match c.to_ascii_lowercase() {
                'x' => Ok(Axis::X),
                'y' => Ok(Axis::Y),
                'z' => Ok(Axis::Z),
                _ => Err(VqsError::Parse(format!("invalid basis descriptor {descriptor:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(VqsError::Parse("empty basis descriptor".into()));
        }
        let tag = descriptor.to_ascii_lowercase();
        Ok(MeasurementBasis { axes, tag })
    }

    pub fn n_sites(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn descriptor(&self) -> String {
        self.axes.iter().map(|a| a.letter()).collect()
    }

    pub fn is_all_z(&self) -> bool {
        self.axes.iter().all(|&a| a == Axis::Z)
    }

    /// Bitmask of sites read out along `axis`.
    pub fn mask(&self, axis: Axis) -> u64 {
        self.axes.iter().enumerate().filter(|(_, &a)| a == axis).fold(0, |m, (k, _)| m | 1 << k)
    }

    pub fn evaluates(&self, s: &PauliString) -> bool {
        s.n_sites() == self.n_sites() && (0..self.n_sites()).all(|k| self.axes[k].matches(s.op(k + 1)))
    }

    /// Eigenvalue of `s` for a recorded outcome `bits` in this basis.
    ///
    /// Readout after the basis rotation measures `+X` on x-sites and `−Y` on
    /// y-sites, so each y-site in the support flips the sign once more.
    #[inline]
    pub fn outcome_sign(s: &PauliString, y_mask: u64, bits: u64) -> f64 {
        let support = s.support_mask();
        let parity = (bits & support).count_ones() + (y_mask & support).count_ones();
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.tag, self.descriptor())
    }
}

/// The three uniform bases measuring `⟨H⟩`.
pub fn energy_bases(n: usize) -> Vec<MeasurementBasis> {
    vec![
        MeasurementBasis::uniform(n, Axis::X),
        MeasurementBasis::uniform(n, Axis::Y),
        MeasurementBasis::uniform(n, Axis::Z),
    ]
}

/// The `3N` bases measuring `⟨H²⟩`: the energy bases, then per bond `j` the
/// `xz@j`, `yz@j` and `xy@j` bases.
pub fn variance_bases(n: usize) -> Vec<MeasurementBasis> {
    let mut out = energy_bases(n);
    for j in 1..n {
        out.push(MeasurementBasis::pair(n, j, Axis::X, Axis::Z));
    }
    for j in 1..n {
        out.push(MeasurementBasis::pair(n, j, Axis::Y, Axis::Z));
    }
    for j in 1..n {
        out.push(MeasurementBasis::pair(n, j, Axis::X, Axis::Y));
    }
    out
}

/// Choice between the full scheme and the reduced one that relies on
/// magnetization conservation to infer y-type strings from x-type data.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisScheme {
    #[default]
    Full,
    Reduced,
}

impl BasisScheme {
    pub fn energy_bases(self, n: usize) -> Vec<MeasurementBasis> {
        match self {
            BasisScheme::Full => energy_bases(n),
            BasisScheme::Reduced => energy_bases(n).into_iter().filter(|b| b.tag() != "allY").collect(),
        }
    }

    pub fn variance_bases(self, n: usize) -> Vec<MeasurementBasis> {
        match self {
            BasisScheme::Full => variance_bases(n),
            BasisScheme::Reduced => variance_bases(n)
                .into_iter()
                .filter(|b| b.tag() != "allY" && !b.tag().starts_with("yz@"))
                .collect(),
        }
    }
}

/// Image of `s` under the global rotation about z by π/2 (`X → Y`, `Y → −X`)
/// applied in reverse: returns `(sign, s')` with `⟨s⟩ = sign·⟨s'⟩` on any
/// state of fixed magnetization.
pub fn u1_partner(s: &PauliString) -> (f64, PauliString) {
    let x = s.x_mask();
    let z = s.z_mask();
    let xs = x & !z;
    // X ↔ Y on the flipped sites, Z untouched.
    let z2 = (z & !x) | xs;
    let sign = if xs.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    (sign, PauliString::from_masks(s.n_sites(), x, z2).expect("same size"))
}

/// Bitstring samples of one prepared state in one basis.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ShotBatch {
    pub theta: Vec<f64>,
    /// Basis descriptor, one axis letter per site.
    pub basis: String,
    pub seed: u64,
    pub shots: usize,
    #[serde(deserialize_with = "bit_rows::deserialize")]
    pub bits: Vec<u64>,
    #[serde(skip)]
    pub n_sites: usize,
}

impl ShotBatch {
    pub fn measurement_basis(&self) -> Result<MeasurementBasis> {
        MeasurementBasis::parse(&self.basis)
    }

    /// Restores `n_sites` after deserialization.
    pub fn fix_sites(&mut self) {
        self.n_sites = self.basis.len();
    }
}

mod bit_rows {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        let rows: Vec<Vec<u8>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|row| {
                if row.len() > 64 {
                    return Err(D::Error::custom("bitstring longer than 64 sites"));
                }
                row.iter().enumerate().try_fold(0u64, |acc, (k, &b)| match b {
                    0 => Ok(acc),
                    1 => Ok(acc | 1 << k),
                    _ => Err(D::Error::custom("bit values must be 0 or 1")),
                })
            })
            .collect()
    }
}

impl ShotBatch {
    /// One JSON object in the record-file format, bits as 0/1 arrays.
    pub fn to_json_line(&self) -> Result<String> {
        let rows: Vec<Vec<u8>> =
            self.bits.iter().map(|&b| (0..self.n_sites).map(|k| ((b >> k) & 1) as u8).collect()).collect();
        let v = serde_json::json!({
            "theta": self.theta,
            "basis": self.basis,
            "seed": self.seed,
            "shots": self.shots,
            "bits": rows,
        });
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let mut b: ShotBatch = serde_json::from_str(line)?;
        b.fix_sites();
        if b.bits.len() != b.shots {
            return Err(VqsError::Parse(format!("record declares {} shots but holds {}", b.shots, b.bits.len())));
        }
        if b.bits.iter().any(|&x| b.n_sites < 64 && x >> b.n_sites != 0) {
            return Err(VqsError::Parse("bitstring longer than the basis descriptor".into()));
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_sizes() {
        assert_eq!(energy_bases(8).len(), 3);
        assert_eq!(variance_bases(8).len(), 24);
        assert_eq!(BasisScheme::Reduced.energy_bases(8).len(), 2);
        assert_eq!(BasisScheme::Reduced.variance_bases(8).len(), 16);
    }

    #[test]
    fn evaluability_by_axis_match() {
        let b = MeasurementBasis::pair(8, 3, Axis::X, Axis::Z);
        assert_eq!(b.tag(), "xz@3");
        assert!(b.evaluates(&PauliString::parse("X3 X4 Z6 Z7", 8).unwrap()));
        assert!(!b.evaluates(&PauliString::parse("X2 X3", 8).unwrap()));
        let xy = MeasurementBasis::pair(8, 1, Axis::X, Axis::Y);
        assert_eq!(xy.descriptor(), "xxyyyyyy");
    }

    #[test]
    fn partner_rotation() {
        let s = PauliString::parse("Y1 Y2 Z4", 4).unwrap();
        let (sign, t) = u1_partner(&s);
        assert_eq!(sign, 1.0);
        assert_eq!(t, PauliString::parse("X1 X2 Z4", 4).unwrap());
        let s = PauliString::parse("X1 Y2", 4).unwrap();
        let (sign, t) = u1_partner(&s);
        assert_eq!((sign, t), (-1.0, PauliString::parse("Y1 X2", 4).unwrap()));
    }

    #[test]
    fn record_round_trip() {
        let b = ShotBatch {
            theta: vec![0.1, -2.0],
            basis: "xyz".into(),
            seed: 7,
            shots: 2,
            bits: vec![0b101, 0b010],
            n_sites: 3,
        };
        let line = b.to_json_line().unwrap();
        assert!(line.contains("[1,0,1]"));
        assert_eq!(ShotBatch::from_json_line(&line).unwrap(), b);
    }
}
