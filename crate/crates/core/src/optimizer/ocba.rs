//! Optimal computing budget allocation for picking the lowest mean.

/// One competing design: current mean estimate and per-shot standard
/// deviation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Candidate {
    pub mean: f64,
    pub sigma: f64,
}

/// Gaps below this are treated as this value so tied designs still get a
/// finite share.
pub const MIN_GAP: f64 = 1e-9;

/// Smallest usable per-shot deviation.
pub const MIN_SIGMA: f64 = 1e-12;

/// Unnormalized OCBA weights. For non-best designs `w_i = (σ_i/δ_i)²` with
/// `δ_i` the gap to the best mean; the best gets
/// `w_b = σ_b·sqrt(Σ_{i≠b} w_i²/σ_i²)`. Ties for best go to the lower index.
pub fn ocba_weights(c: &[Candidate]) -> Vec<f64> {
    if c.is_empty() {
        return Vec::new();
    }
    if c.len() == 1 {
        return vec![1.0];
    }
    let best = (0..c.len()).fold(0, |b, i| if c[i].mean < c[b].mean { i } else { b });
    let mut w = vec![0.0; c.len()];
    let mut acc = 0.0;
    for (i, ci) in c.iter().enumerate() {
        if i == best {
            continue;
        }
        let s = ci.sigma.max(MIN_SIGMA);
        let d = (ci.mean - c[best].mean).max(MIN_GAP);
        w[i] = (s / d).powi(2);
        acc += w[i] * w[i] / (s * s);
    }
    w[best] = c[best].sigma.max(MIN_SIGMA) * acc.sqrt();
    w
}

/// Splits `extra` shots in proportion to the OCBA weights, rounding by
/// largest remainder (ties to the lower index) so the parts sum to `extra`.
pub fn ocba_allocate(c: &[Candidate], extra: u64) -> Vec<u64> {
    let w = ocba_weights(c);
    let total: f64 = w.iter().sum();
    if w.is_empty() || !(total > 0.0) || !total.is_finite() {
        let n = c.len().max(1) as u64;
        return (0..c.len() as u64).map(|i| extra / n + u64::from(i < extra % n)).collect();
    }
    let exact: Vec<f64> = w.iter().map(|x| x / total * extra as f64).collect();
    let mut alloc: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut rest = extra - alloc.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        alloc[i] += 1;
        rest -= 1;
    }
    alloc
}
