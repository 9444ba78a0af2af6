//! Hypercell bookkeeping for the dividing-rectangles search.

use serde::{Deserialize, Serialize};

/// Hypercell of the unit box. Side `d` has length `3^{-levels[d]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub center: Vec<f64>,
    pub levels: Vec<u32>,
    /// Evaluation point representing this cell.
    pub point: usize,
    pub generation: u32,
}

impl Cell {
    pub fn root(d: usize, point: usize) -> Self {
        Cell { center: vec![0.5; d], levels: vec![0; d], point, generation: 0 }
    }

    pub fn side(&self, d: usize) -> f64 {
        3f64.powi(-(self.levels[d] as i32))
    }

    /// Longest side length.
    pub fn size(&self) -> f64 {
        3f64.powi(-(*self.levels.iter().min().expect("non-empty") as i32))
    }

    /// Integer size class: cells with equal keys have equal size.
    pub fn size_key(&self) -> u32 {
        *self.levels.iter().min().expect("non-empty")
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.center.len()).map(|d| (self.center[d] - self.side(d) / 2.0, self.center[d] + self.side(d) / 2.0)).collect()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.bounds().iter().zip(u).all(|(&(lo, hi), &x)| x >= lo - 1e-12 && x <= hi + 1e-12)
    }

    /// Dimension that is split next: the longest side, lowest index on ties.
    pub fn split_dim(&self) -> usize {
        let m = self.size_key();
        self.levels.iter().position(|&l| l == m).expect("non-empty")
    }

    /// Trisects along [`split_dim`](Self::split_dim). Returns the lower,
    /// middle and upper children; the middle keeps the parent's point.
    /// Outer children get `usize::MAX` as a placeholder point.
    pub fn trisect(&self) -> [Cell; 3] {
        let d = self.split_dim();
        let third = self.side(d) / 3.0;
        let mut levels = self.levels.clone();
        levels[d] += 1;
        let make = |offset: f64, point: usize| {
            let mut c = self.center.clone();
            c[d] += offset;
            Cell { center: c, levels: levels.clone(), point, generation: self.generation + 1 }
        };
        [make(-third, usize::MAX), make(0.0, self.point), make(third, usize::MAX)]
    }
}

/// Size and value of a cell as seen by the selection rule.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HullPoint {
    pub size: f64,
    pub value: f64,
}

/// Indices of potentially optimal cells: those for which some rate constant
/// `K > 0` makes `value − K·size` minimal over all cells and improves on the
/// best value by at least `eps·|f_min|`. Within a size class only the
/// lowest-value cell can qualify (lowest index on ties). The minimum of the
/// largest size class is always included.
pub fn potentially_optimal(points: &[HullPoint], eps: f64) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let f_min = points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    // Best cell per distinct size, sizes ascending.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].size.total_cmp(&points[b].size).then(points[a].value.total_cmp(&points[b].value)).then(a.cmp(&b)));
    let mut reps: Vec<usize> = Vec::new();
    for &i in &order {
        match reps.last() {
            Some(&r) if points[r].size == points[i].size => {}
            _ => reps.push(i),
        }
    }
    let mut out = Vec::new();
    for (k, &j) in reps.iter().enumerate() {
        let (dj, fj) = (points[j].size, points[j].value);
        let mut k_low: f64 = 0.0;
        for &i in &reps[..k] {
            k_low = k_low.max((fj - points[i].value) / (dj - points[i].size));
        }
        let mut k_high = f64::INFINITY;
        for &i in &reps[k + 1..] {
            k_high = k_high.min((points[i].value - fj) / (points[i].size - dj));
        }
        if k_low > k_high || k_high <= 0.0 {
            continue;
        }
        let ok = if k_high.is_infinite() {
            true
        } else if f_min != 0.0 {
            (f_min - fj) / f_min.abs() + dj * k_high / f_min.abs() >= eps
        } else {
            fj <= dj * k_high
        };
        if ok {
            out.push(j);
        }
    }
    out
}
