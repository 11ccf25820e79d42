//! The Aubry set of a normalized potential, its irreducible components and
//! the Mañé potential between vertices.
//!
//! For a locally constant potential the Aubry set is the sub-SFT of infinite
//! paths through the critical subgraph (edges on zero-weight cycles of the
//! normalized weights). Two points are equivalent iff their vertices are
//! joined by zero-weight walks both ways, so irreducible components are the
//! non-trivial strongly connected components of the critical subgraph.
//!
//! The Mañé potential `S(x, y)` is the supremum of Birkhoff sums over orbit
//! segments that start arbitrarily close to `x` and land exactly on `y`. In
//! the recoded graph it only depends on the vertices of `x` and `y` once `x`
//! lies in the Aubry set (travel inside a component costs nothing), which is
//! what [`ManeData::component_rows`] stores.

use thiserror::Error;

use crate::maxplus::{kleene_star, MaxPlus, MaxPlusError, MaxPlusMatrix};
use crate::potential::edge_matrix;
use crate::scc::strongly_connected_components;
use crate::sft::{topological_entropy, EventuallyPeriodicPoint, SftError, WeightedEdgeGraph};
use crate::weight::Weight;
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AubryError {
    #[error("critical subgraph is empty; the potential is not normalized")]
    EmptyAubrySet,
    #[error("critical edge {label} has normalized weight {weight:e}, expected 0")]
    NonZeroCriticalEdge { label: String, weight: f64 },
    #[error("subaction is not constant on component {id} (spread {spread:e})")]
    SubactionNotConstant { id: usize, spread: f64 },
    #[error("subaction has {got} entries, graph has {expected} vertices")]
    SubactionLength { expected: usize, got: usize },
    #[error("word {0} is not an edge of the recoded graph")]
    NotAdmissible(String),
    #[error(transparent)]
    MaxPlus(#[from] MaxPlusError),
    #[error(transparent)]
    Sft(#[from] SftError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AubryComponent<W> {
    /// 1-based label used in reports (`Ω_id`).
    pub id: usize,
    pub vertices: Vec<usize>,
    /// Critical edges with both ends in `vertices`.
    pub edges: Vec<usize>,
    pub entropy: f64,
    /// Value of the supplied calibrated subaction on the component.
    pub subaction_value: W,
}

impl<W> AubryComponent<W> {
    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AubryDecomposition<W> {
    pub components: Vec<AubryComponent<W>>,
    pub critical_edges: Vec<usize>,
    /// Maximal entropy over components.
    pub h: f64,
    /// Indices (0-based) of components whose entropy is within `tol.entropy` of `h`.
    pub max_entropy: Vec<usize>,
}

impl<W> AubryDecomposition<W> {
    /// Index of the component containing vertex `v`.
    pub fn component_of_vertex(&self, v: usize) -> Option<usize> {
        self.components.iter().position(|c| c.contains_vertex(v))
    }

    /// Index of the component containing edge `e`.
    pub fn component_of_edge(&self, e: usize) -> Option<usize> {
        self.components.iter().position(|c| c.edges.binary_search(&e).is_ok())
    }
}

/// Edges on zero-weight cycles of the normalized graph.
pub fn critical_subgraph<W: Weight>(normalized: &WeightedEdgeGraph<W>, tol: f64) -> Result<Vec<usize>, AubryError> {
    let star = kleene_star(&edge_matrix(normalized), tol)?;
    let critical: Vec<usize> = normalized
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| match star.get(e.head, e.tail) {
            MaxPlus::Finite(back) => e.weight.add(back).is_zero_tol(tol),
            MaxPlus::Bottom => false,
        })
        .map(|(i, _)| i)
        .collect();
    if critical.is_empty() {
        return Err(AubryError::EmptyAubrySet);
    }
    Ok(critical)
}

/// Non-trivial strongly connected components of the critical subgraph.
///
/// `subaction` must be calibrated for the normalized potential; it is checked
/// to be constant on each component.
pub fn irreducible_components<W: Weight>(
    normalized: &WeightedEdgeGraph<W>,
    critical: &[usize],
    subaction: &[W],
    tol: &Tolerances,
) -> Result<Vec<AubryComponent<W>>, AubryError> {
    let n = normalized.vertex_count();
    if subaction.len() != n {
        return Err(AubryError::SubactionLength {
            expected: n,
            got: subaction.len(),
        });
    }
    let mut succ = vec![Vec::new(); n];
    for &i in critical {
        let e = &normalized.edges()[i];
        if !e.weight.is_zero_tol(tol.zero) {
            return Err(AubryError::NonZeroCriticalEdge {
                label: e.label.to_string(),
                weight: e.weight.to_f64(),
            });
        }
        succ[e.tail].push(e.head);
    }
    let mut components = Vec::new();
    for vertices in strongly_connected_components(&succ) {
        let mut edges: Vec<usize> = critical
            .iter()
            .copied()
            .filter(|&i| {
                let e = &normalized.edges()[i];
                vertices.binary_search(&e.tail).is_ok() && vertices.binary_search(&e.head).is_ok()
            })
            .collect();
        if edges.is_empty() {
            continue;
        }
        edges.sort_unstable();
        let counts = normalized.count_matrix(edges.iter().copied());
        let sub: Vec<Vec<u32>> = vertices
            .iter()
            .map(|&u| vertices.iter().map(|&v| counts[u][v]).collect())
            .collect();
        let entropy = topological_entropy(&sub)?;
        let id = components.len() + 1;
        let subaction_value = constant_value(subaction, &vertices, id, tol.zero)?;
        components.push(AubryComponent {
            id,
            vertices,
            edges,
            entropy,
            subaction_value,
        });
    }
    Ok(components)
}

/// The common value of `values` on `vertices`, if the spread is within `tol`.
pub fn constant_value<W: Weight>(values: &[W], vertices: &[usize], id: usize, tol: f64) -> Result<W, AubryError> {
    let first = values[vertices[0]].clone();
    let mut spread = 0.0f64;
    for &v in &vertices[1..] {
        if !values[v].near(&first, tol) {
            return Err(AubryError::SubactionNotConstant {
                id,
                spread: values[v].sub(&first).to_f64().abs(),
            });
        }
        spread = spread.max(values[v].sub(&first).to_f64().abs());
    }
    debug_assert!(spread <= tol || W::EXACT);
    Ok(first)
}

/// Critical subgraph, components, `h` and the maximal-entropy components.
pub fn decompose<W: Weight>(
    normalized: &WeightedEdgeGraph<W>,
    subaction: &[W],
    tol: &Tolerances,
) -> Result<AubryDecomposition<W>, AubryError> {
    let critical_edges = critical_subgraph(normalized, tol.zero)?;
    let components = irreducible_components(normalized, &critical_edges, subaction, tol)?;
    let h = components
        .iter()
        .map(|c| c.entropy)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let max_entropy = components
        .iter()
        .enumerate()
        .filter(|(_, c)| c.entropy >= h - tol.entropy)
        .map(|(i, _)| i)
        .collect();
    Ok(AubryDecomposition {
        components,
        critical_edges,
        h,
        max_entropy,
    })
}

/// Mañé potential at vertex granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeData<W> {
    /// `star(u, v)`: heaviest walk of length >= 1 from `u` to `v`, raised to
    /// 0 on pairs inside one component.
    pub star: MaxPlusMatrix<W>,
    /// `component_rows[j][v] = max_{u in V_j} star(u, v)`, i.e. `S(Ω_j, ·)`.
    pub component_rows: Vec<Vec<MaxPlus<W>>>,
}

impl<W: Weight> ManeData<W> {
    /// Heaviest walk of length >= 0 (empty walk allowed).
    pub fn star_reflexive(&self, u: usize, v: usize) -> MaxPlus<W> {
        let s = self.star.get(u, v).clone();
        if u == v {
            s.oplus(&MaxPlus::zero())
        } else {
            s
        }
    }
}

pub fn mane_matrix<W: Weight>(
    normalized: &WeightedEdgeGraph<W>,
    decomposition: &AubryDecomposition<W>,
    tol: f64,
) -> Result<ManeData<W>, AubryError> {
    let w = edge_matrix(normalized);
    let mut star = w.otimes(&kleene_star(&w, tol)?);
    for comp in &decomposition.components {
        for &u in &comp.vertices {
            for &v in &comp.vertices {
                star.raise(u, v, MaxPlus::zero());
            }
        }
    }
    let n = normalized.vertex_count();
    let component_rows = decomposition
        .components
        .iter()
        .map(|comp| {
            (0..n)
                .map(|v| {
                    comp.vertices
                        .iter()
                        .fold(MaxPlus::Bottom, |acc, &u| acc.oplus(star.get(u, v)))
                })
                .collect()
        })
        .collect();
    Ok(ManeData { star, component_rows })
}

/// `max_j [values_j + S(Ω_j, v)]` for every vertex `v`; for a calibrated
/// subaction of the normalized potential this reproduces the subaction.
pub fn mane_representation<W: Weight>(component_values: &[W], mane: &ManeData<W>) -> Vec<MaxPlus<W>> {
    let n = mane.star.dim();
    (0..n)
        .map(|v| {
            component_values
                .iter()
                .zip(&mane.component_rows)
                .fold(MaxPlus::Bottom, |acc, (value, row)| {
                    acc.oplus(&MaxPlus::Finite(value.clone()).otimes(&row[v]))
                })
        })
        .collect()
}

/// Index of the component containing the eventually periodic point, if the
/// point lies in the Aubry set (`S(x, x) = 0`).
///
/// For `x = u c^inf`, orbit segments starting near `x` follow `x` through the
/// preperiod and many turns of the cycle, then walk back to the start vertex
/// of `x`. The cycle must have zero weight, and the preperiod plus the best
/// return walk must also sum to zero.
pub fn aubry_membership<W: Weight>(
    point: &EventuallyPeriodicPoint,
    normalized: &WeightedEdgeGraph<W>,
    decomposition: &AubryDecomposition<W>,
    mane: &ManeData<W>,
    tol: f64,
) -> Result<Option<usize>, AubryError> {
    let k = normalized.range();
    let pre = point.preperiod.len();
    let period = point.cycle.len();
    let symbols = point.prefix(pre + period + k);
    let mut edges = Vec::with_capacity(pre + period);
    for i in 0..pre + period {
        let window = &symbols[i..i + k];
        let e = normalized
            .edge_by_label(window)
            .ok_or_else(|| AubryError::NotAdmissible(crate::sft::format_word(window)))?;
        edges.push(e);
    }
    let weight = |e: usize| normalized.edges()[e].weight.clone();

    let cycle_sum = edges[pre..].iter().fold(W::zero(), |acc, &e| acc.add(&weight(e)));
    if !cycle_sum.is_zero_tol(tol) {
        return Ok(None);
    }
    let pre_sum = edges[..pre].iter().fold(W::zero(), |acc, &e| acc.add(&weight(e)));
    let start = normalized.edges()[edges[0]].tail;
    let mut partial = W::zero();
    let mut back = MaxPlus::Bottom;
    for t in 0..period {
        let at = normalized.edges()[edges[pre + t]].tail;
        let candidate = MaxPlus::Finite(partial.clone()).otimes(&mane.star_reflexive(at, start));
        back = back.oplus(&candidate);
        partial = partial.add(&weight(edges[pre + t]));
    }
    let total = MaxPlus::Finite(pre_sum).otimes(&back);
    match total {
        MaxPlus::Finite(s) if s.is_zero_tol(tol) => {
            let cycle_vertex = normalized.edges()[edges[pre]].tail;
            Ok(decomposition.component_of_vertex(cycle_vertex))
        }
        _ => Ok(None),
    }
}
