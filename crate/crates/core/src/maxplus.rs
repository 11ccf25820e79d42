//! Max-plus (tropical) linear algebra on small dense matrices.
//!
//! Entry `(u, v)` of a [`MaxPlusMatrix`] is the weight of the arc `u -> v`;
//! [`MaxPlus::Bottom`] means "no arc" and plays the role of `-inf`.

use std::fmt;

use thiserror::Error;

use crate::scc::strongly_connected_components;
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaxPlusError {
    #[error("matrix has no cycle")]
    NoCycle,
    #[error("cycle of positive weight {excess:e} through vertex {vertex}; Kleene star diverges")]
    PositiveCycle { vertex: usize, excess: f64 },
}

/// A real number or bottom (`-inf`). The derived order puts `Bottom` below
/// every finite value, so `max` is max-plus addition.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum MaxPlus<W> {
    Bottom,
    Finite(W),
}

impl<W: Weight> MaxPlus<W> {
    pub fn zero() -> Self {
        MaxPlus::Finite(W::zero())
    }

    pub fn finite(&self) -> Option<&W> {
        match self {
            MaxPlus::Finite(w) => Some(w),
            MaxPlus::Bottom => None,
        }
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, MaxPlus::Bottom)
    }

    /// `max(self, rhs)`
    pub fn oplus(&self, rhs: &Self) -> Self {
        if rhs > self {
            rhs.clone()
        } else {
            self.clone()
        }
    }

    /// `self + rhs`, absorbing bottom.
    pub fn otimes(&self, rhs: &Self) -> Self {
        match (self, rhs) {
            (MaxPlus::Finite(a), MaxPlus::Finite(b)) => MaxPlus::Finite(a.add(b)),
            _ => MaxPlus::Bottom,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            MaxPlus::Finite(w) => w.to_f64(),
            MaxPlus::Bottom => f64::NEG_INFINITY,
        }
    }

    pub fn map<U>(&self, f: impl FnOnce(&W) -> U) -> MaxPlus<U> {
        match self {
            MaxPlus::Finite(w) => MaxPlus::Finite(f(w)),
            MaxPlus::Bottom => MaxPlus::Bottom,
        }
    }
}

impl<W: fmt::Display> fmt::Display for MaxPlus<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxPlus::Finite(w) => w.fmt(f),
            MaxPlus::Bottom => f.write_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPlusMatrix<W> {
    n: usize,
    entries: Vec<MaxPlus<W>>,
}

impl<W: Weight> MaxPlusMatrix<W> {
    /// All-bottom matrix.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: vec![MaxPlus::Bottom; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> MaxPlus<W>) -> Self {
        let entries = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Self { n, entries }
    }

    /// Rows of optional weights, `None` meaning bottom.
    pub fn from_rows(rows: &[Vec<Option<W>>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "max-plus matrix must be square");
        Self::from_fn(n, |u, v| match &rows[u][v] {
            Some(w) => MaxPlus::Finite(w.clone()),
            None => MaxPlus::Bottom,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> &MaxPlus<W> {
        &self.entries[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: MaxPlus<W>) {
        self.entries[u * self.n + v] = value;
    }

    /// Raise `(u, v)` to `max(current, value)`.
    pub fn raise(&mut self, u: usize, v: usize, value: MaxPlus<W>) {
        let slot = &mut self.entries[u * self.n + v];
        if value > *slot {
            *slot = value;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |u, v| self.get(v, u).clone())
    }

    /// Subtract `shift` from every finite entry.
    pub fn shifted(&self, shift: &W) -> Self {
        Self::from_fn(self.n, |u, v| self.get(u, v).map(|w| w.sub(shift)))
    }

    /// Restrict to the given indices (in the given order).
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]).clone())
    }

    /// Max-plus product `self ⊗ rhs`.
    pub fn otimes(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self::from_fn(self.n, |u, v| {
            (0..self.n).fold(MaxPlus::Bottom, |acc, x| {
                acc.oplus(&self.get(u, x).otimes(rhs.get(x, v)))
            })
        })
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|u| (0..self.n).filter(|&v| !self.get(u, v).is_bottom()).collect())
            .collect()
    }
}

/// Maximum cycle mean together with one simple cycle attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMean<W> {
    pub value: W,
    /// Vertices `c_0, ..., c_{L-1}` of the cycle `c_0 -> c_1 -> ... -> c_0`.
    pub cycle: Vec<usize>,
}

/// Karp's algorithm on every strongly connected component.
pub fn max_cycle_mean<W: Weight>(matrix: &MaxPlusMatrix<W>) -> Result<CycleMean<W>, MaxPlusError> {
    let mut best: Option<CycleMean<W>> = None;
    for comp in strongly_connected_components(&matrix.successors()) {
        let sub = matrix.submatrix(&comp);
        let has_arc = (0..comp.len()).any(|u| (0..comp.len()).any(|v| !sub.get(u, v).is_bottom()));
        if !has_arc {
            continue;
        }
        let local = karp_strongly_connected(&sub);
        let candidate = CycleMean {
            value: local.value,
            cycle: local.cycle.iter().map(|&i| comp[i]).collect(),
        };
        if best.as_ref().is_none_or(|b| candidate.value > b.value) {
            best = Some(candidate);
        }
    }
    best.ok_or(MaxPlusError::NoCycle)
}

/// Karp on a strongly connected matrix with at least one arc.
fn karp_strongly_connected<W: Weight>(m: &MaxPlusMatrix<W>) -> CycleMean<W> {
    let n = m.dim();
    // walk[k][v]: heaviest walk of exactly k arcs from vertex 0 to v
    let mut walk: Vec<Vec<MaxPlus<W>>> = vec![vec![MaxPlus::Bottom; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    walk[0][0] = MaxPlus::zero();
    for k in 1..=n {
        for v in 0..n {
            for u in 0..n {
                let cand = walk[k - 1][u].otimes(m.get(u, v));
                if cand > walk[k][v] {
                    walk[k][v] = cand;
                    pred[k][v] = u;
                }
            }
        }
    }

    let mut best: Option<(W, usize)> = None;
    for v in 0..n {
        let MaxPlus::Finite(full) = &walk[n][v] else {
            continue;
        };
        let mut worst: Option<W> = None;
        for (k, row) in walk.iter().enumerate().take(n) {
            if let MaxPlus::Finite(part) = &row[v] {
                let ratio = full.sub(part).div_count(n - k);
                if worst.as_ref().is_none_or(|w| ratio < *w) {
                    worst = Some(ratio);
                }
            }
        }
        if let Some(w) = worst {
            if best.as_ref().is_none_or(|(b, _)| w > *b) {
                best = Some((w, v));
            }
        }
    }
    let (value, end) = best.expect("strongly connected matrix with an arc has a cycle");

    // The optimal n-walk into `end` splits into a path plus cycles, each of
    // which has mean `value`; pick the best one found while peeling.
    let mut path = vec![end];
    let mut v = end;
    for k in (1..=n).rev() {
        v = pred[k][v];
        path.push(v);
    }
    path.reverse();
    let mut stack: Vec<usize> = Vec::new();
    let mut position = vec![usize::MAX; n];
    let mut best_cycle: Option<(W, Vec<usize>)> = None;
    for &v in &path {
        if position[v] != usize::MAX {
            let start = position[v];
            let cycle: Vec<usize> = stack[start..].to_vec();
            let mean = cycle_weight(m, &cycle)
                .expect("walk arcs are finite")
                .div_count(cycle.len());
            if best_cycle.as_ref().is_none_or(|(b, _)| mean > *b) {
                best_cycle = Some((mean, cycle));
            }
            for &u in &stack[start..] {
                position[u] = usize::MAX;
            }
            stack.truncate(start);
        }
        position[v] = stack.len();
        stack.push(v);
    }
    let (_, cycle) = best_cycle.expect("walk of n arcs on n vertices repeats a vertex");
    CycleMean { value, cycle }
}

/// Total weight of the closed walk `c_0 -> ... -> c_{L-1} -> c_0`.
pub fn cycle_weight<W: Weight>(m: &MaxPlusMatrix<W>, cycle: &[usize]) -> Option<W> {
    let mut total = W::zero();
    for (i, &u) in cycle.iter().enumerate() {
        let v = cycle[(i + 1) % cycle.len()];
        total = total.add(m.get(u, v).finite()?);
    }
    Some(total)
}

/// Heaviest walks of length at least 1 (Floyd–Warshall). Requires every cycle
/// to have weight `<= tol`.
pub fn kleene_plus<W: Weight>(m: &MaxPlusMatrix<W>, tol: f64) -> Result<MaxPlusMatrix<W>, MaxPlusError> {
    let n = m.dim();
    let mut d = m.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = d.get(i, k).clone();
            if dik.is_bottom() {
                continue;
            }
            for j in 0..n {
                let cand = dik.otimes(d.get(k, j));
                d.raise(i, j, cand);
            }
        }
    }
    for i in 0..n {
        if let MaxPlus::Finite(w) = d.get(i, i) {
            if !w.le_tol(&W::zero(), tol) {
                return Err(MaxPlusError::PositiveCycle {
                    vertex: i,
                    excess: w.to_f64(),
                });
            }
        }
    }
    Ok(d)
}

/// Heaviest walks of length at least 0: `kleene_plus` with the diagonal set
/// to 0 (the empty walk dominates once every cycle is non-positive).
pub fn kleene_star<W: Weight>(m: &MaxPlusMatrix<W>, tol: f64) -> Result<MaxPlusMatrix<W>, MaxPlusError> {
    let mut d = kleene_plus(m, tol)?;
    for i in 0..m.dim() {
        d.set(i, i, MaxPlus::zero());
    }
    Ok(d)
}

/// Arcs lying on a cycle of mean `lambda`.
pub fn critical_edges<W: Weight>(
    m: &MaxPlusMatrix<W>,
    lambda: &W,
    tol: f64,
) -> Result<Vec<(usize, usize)>, MaxPlusError> {
    let shifted = m.shifted(lambda);
    let star = kleene_star(&shifted, tol)?;
    let n = m.dim();
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if let MaxPlus::Finite(w) = shifted.get(u, v) {
                if let MaxPlus::Finite(back) = star.get(v, u) {
                    if w.add(back).is_zero_tol(tol) {
                        out.push((u, v));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Vertices on some critical arc.
pub fn critical_vertices<W: Weight>(m: &MaxPlusMatrix<W>, lambda: &W, tol: f64) -> Result<Vec<usize>, MaxPlusError> {
    let mut seen = vec![false; m.dim()];
    for (u, v) in critical_edges(m, lambda, tol)? {
        seen[u] = true;
        seen[v] = true;
    }
    Ok((0..m.dim()).filter(|&v| seen[v]).collect())
}

/// Canonical eigenvector `V(v) = max_c star(c, v)` over critical vertices `c`
/// of `M - lambda`. It satisfies `V(v) = max_u V(u) + M(u, v) - lambda`.
pub fn principal_eigenvector<W: Weight>(m: &MaxPlusMatrix<W>, tol: f64) -> Result<Vec<MaxPlus<W>>, MaxPlusError> {
    let lambda = max_cycle_mean(m)?.value;
    let shifted = m.shifted(&lambda);
    let star = kleene_star(&shifted, tol)?;
    let critical = critical_vertices(m, &lambda, tol)?;
    Ok((0..m.dim())
        .map(|v| {
            critical
                .iter()
                .fold(MaxPlus::Bottom, |acc, &c| acc.oplus(star.get(c, v)))
        })
        .collect())
}
