//! Layered, symmetry-constrained circuit ansatz.
//!
//! Layers alternate entangling/local starting with an entangling layer. Each
//! entangling layer owns one free angle. Local layers carry one z-rotation
//! angle per site, tied together by the CP link `θ_j = −θ_{N+1−j}` and, inside
//! an optional bulk interval, by `θ_j = θ_{j+2}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VqsError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub n_sites: usize,
    pub n_layers: usize,
    /// Inclusive 1-based site interval where bulk ties apply.
    #[serde(default)]
    pub bulk: Option<(usize, usize)>,
    #[serde(default = "yes")]
    pub cp_link: bool,
    #[serde(default = "yes")]
    pub bulk_tie: bool,
    /// Upper bound of entangling angles; the lower bound is 0.
    #[serde(default = "default_entangling_max")]
    pub entangling_max: f64,
}

fn yes() -> bool {
    true
}

fn default_entangling_max() -> f64 {
    PI
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Entangling,
    Local,
}

/// Search-domain description for one free parameter.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBound {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    pub kind: LayerKind,
}

/// Physical angles for one layer after constraint expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Entangling(f64),
    Local(Vec<f64>),
}

/// Free-parameter vector in ansatz order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub theta: Vec<f64>,
}

impl ParamPoint {
    pub fn new(theta: Vec<f64>) -> Self {
        ParamPoint { theta }
    }

    pub fn zeros(n: usize) -> Self {
        ParamPoint { theta: vec![0.0; n] }
    }
}

/// Site-to-parameter map of one local layer: `angle_j = sign_j · θ[slot_j]`
/// or `0` when the site is pinned.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMap {
    pub n_free: usize,
    pub sites: Vec<Option<(usize, f64)>>,
}

impl LocalMap {
    fn new(spec: &AnsatzSpec) -> Self {
        let n = spec.n_sites;
        let mut uf = SignedUnionFind::new(n);
        if spec.cp_link {
            for j in 0..n / 2 {
                uf.union(j, n - 1 - j, -1.0);
            }
        }
        if spec.bulk_tie {
            if let Some((a, b)) = spec.bulk {
                for j in a..=b {
                    if j + 2 <= b {
                        uf.union(j - 1, j + 1, 1.0);
                    }
                }
            }
        }
        let mut slot_of_root: Vec<Option<usize>> = vec![None; n];
        let mut n_free = 0;
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let (root, sign) = uf.find(j);
            if uf.conflict[root] {
                sites.push(None);
                continue;
            }
            let slot = *slot_of_root[root].get_or_insert_with(|| {
                n_free += 1;
                n_free - 1
            });
            sites.push(Some((slot, sign)));
        }
        LocalMap { n_free, sites }
    }

    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        self.sites.iter().map(|s| s.map_or(0.0, |(k, sign)| sign * free[k])).collect()
    }
}

struct SignedUnionFind {
    parent: Vec<usize>,
    /// Sign of a node relative to its parent.
    sign: Vec<f64>,
    conflict: Vec<bool>,
}

impl SignedUnionFind {
    fn new(n: usize) -> Self {
        SignedUnionFind { parent: (0..n).collect(), sign: vec![1.0; n], conflict: vec![false; n] }
    }

    fn find(&mut self, i: usize) -> (usize, f64) {
        if self.parent[i] == i {
            return (i, 1.0);
        }
        let (root, s) = self.find(self.parent[i]);
        self.parent[i] = root;
        self.sign[i] *= s;
        (root, self.sign[i])
    }

    /// Imposes `x_a = rel · x_b`.
    fn union(&mut self, a: usize, b: usize, rel: f64) {
        let (ra, sa) = self.find(a);
        let (rb, sb) = self.find(b);
        if ra == rb {
            if sa != rel * sb {
                self.conflict[ra] = true;
            }
            return;
        }
        // x_a = sa·x_ra, x_b = sb·x_rb, so x_ra = sa·rel·sb·x_rb.
        self.parent[ra] = rb;
        self.sign[ra] = sa * rel * sb;
        self.conflict[rb] |= self.conflict[ra];
    }
}

/// Resolved parameter layout of an [`AnsatzSpec`].
#[derive(Clone, Debug)]
pub struct Layout {
    pub layers: Vec<LayerKind>,
    pub local: LocalMap,
    /// Offset of each layer's first free parameter.
    pub offsets: Vec<usize>,
    pub n_params: usize,
}

impl AnsatzSpec {
    pub fn new(n_sites: usize, n_layers: usize) -> Self {
        AnsatzSpec { n_sites, n_layers, bulk: None, cp_link: true, bulk_tie: true, entangling_max: PI }
    }

    pub fn with_bulk(mut self, first: usize, last: usize) -> Self {
        self.bulk = Some((first, last));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return Err(VqsError::InvalidParameter(format!("ansatz needs an even site count, got {}", self.n_sites)));
        }
        if self.n_layers == 0 {
            return Err(VqsError::InvalidParameter("ansatz needs at least one layer".into()));
        }
        if let Some((a, b)) = self.bulk {
            if a == 0 || b > self.n_sites || a > b {
                return Err(VqsError::InvalidParameter(format!("bulk interval {a}..{b} outside 1..{}", self.n_sites)));
            }
        }
        if !(self.entangling_max > 0.0 && self.entangling_max.is_finite()) {
            return Err(VqsError::InvalidParameter("entangling_max must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<Layout> {
        self.validate()?;
        let local = LocalMap::new(self);
        let mut layers = Vec::with_capacity(self.n_layers);
        let mut offsets = Vec::with_capacity(self.n_layers);
        let mut n = 0;
        for l in 0..self.n_layers {
            offsets.push(n);
            if l % 2 == 0 {
                layers.push(LayerKind::Entangling);
                n += 1;
            } else {
                layers.push(LayerKind::Local);
                n += local.n_free;
            }
        }
        Ok(Layout { layers, local, offsets, n_params: n })
    }

    pub fn n_params(&self) -> Result<usize> {
        Ok(self.layout()?.n_params)
    }

    pub fn bounds(&self) -> Result<Vec<ParamBound>> {
        let layout = self.layout()?;
        let mut out = Vec::with_capacity(layout.n_params);
        for kind in &layout.layers {
            match kind {
                LayerKind::Entangling => out.push(ParamBound {
                    lo: 0.0,
                    hi: self.entangling_max,
                    periodic: false,
                    kind: LayerKind::Entangling,
                }),
                LayerKind::Local => {
                    for _ in 0..layout.local.n_free {
                        out.push(ParamBound { lo: -PI, hi: PI, periodic: true, kind: LayerKind::Local });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Expands free parameters into per-layer physical angles.
    pub fn expand(&self, p: &ParamPoint) -> Result<Vec<Layer>> {
        let layout = self.layout()?;
        if p.theta.len() != layout.n_params {
            return Err(VqsError::SizeMismatch { expected: layout.n_params, actual: p.theta.len() });
        }
        Ok(layout
            .layers
            .iter()
            .zip(&layout.offsets)
            .map(|(kind, &off)| match kind {
                LayerKind::Entangling => Layer::Entangling(p.theta[off]),
                LayerKind::Local => Layer::Local(layout.local.expand(&p.theta[off..off + layout.local.n_free])),
            })
            .collect())
    }

    /// Checks entangling angles against their bounds.
    pub fn check_bounds(&self, p: &ParamPoint) -> Result<()> {
        let bounds = self.bounds()?;
        if p.theta.len() != bounds.len() {
            return Err(VqsError::SizeMismatch { expected: bounds.len(), actual: p.theta.len() });
        }
        for (i, (b, &t)) in bounds.iter().zip(&p.theta).enumerate() {
            if !t.is_finite() || (!b.periodic && (t < b.lo - 1e-12 || t > b.hi + 1e-12)) {
                return Err(VqsError::OutOfBounds { index: i, lo: b.lo, hi: b.hi });
            }
        }
        Ok(())
    }
}
