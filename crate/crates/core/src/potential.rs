//! Locally constant potentials, maximal ergodic averages, calibrated
//! subactions and the normalized potential `A + V - V∘σ - m(A) <= 0`.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::maxplus::{self, MaxPlus, MaxPlusError, MaxPlusMatrix};
use crate::sft::{enumerate_words, format_word, FiniteWord, Symbol, SymbolicSystem, WeightedEdgeGraph};
use crate::weight::{Rational, Weight};
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("potential range must be at least 1")]
    ZeroRange,
    #[error("cylinder {word} has length {len}, expected range {range}")]
    WrongCylinderLength { word: String, len: usize, range: usize },
    #[error("potential range {potential} does not match graph range {graph}")]
    RangeMismatch { graph: usize, potential: usize },
    #[error("missing potential values for cylinders: {}", .0.join(", "))]
    MissingCylinderValue(Vec<String>),
    #[error("potential given on inadmissible cylinders: {}", .0.join(", "))]
    InadmissibleCylinder(Vec<String>),
    #[error("word of length {len} is shorter than the range {range}")]
    WordTooShort { len: usize, range: usize },
    #[error("normalization failed: {0}")]
    NormalizationFailure(String),
    #[error(transparent)]
    MaxPlus(#[from] MaxPlusError),
}

/// A potential depending on the first `range` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct LocallyConstantPotential {
    range: usize,
    values: BTreeMap<Vec<Symbol>, Rational>,
}

impl LocallyConstantPotential {
    pub fn new(range: usize, values: BTreeMap<Vec<Symbol>, Rational>) -> Result<Self, PotentialError> {
        if range == 0 {
            return Err(PotentialError::ZeroRange);
        }
        if let Some(word) = values.keys().find(|w| w.len() != range) {
            return Err(PotentialError::WrongCylinderLength {
                word: format_word(word),
                len: word.len(),
                range,
            });
        }
        Ok(Self { range, values })
    }

    /// Potential with value `f(word)` on every admissible `range`-word.
    pub fn from_fn(
        system: &SymbolicSystem,
        range: usize,
        mut f: impl FnMut(&[Symbol]) -> Rational,
    ) -> Result<Self, PotentialError> {
        let values = enumerate_words(system, range)
            .into_iter()
            .map(|w| {
                let v = f(w.symbols());
                (w.symbols().to_vec(), v)
            })
            .collect();
        Self::new(range, values)
    }

    /// Read the weights of a graph back as a potential on its edge labels.
    pub fn from_graph(graph: &WeightedEdgeGraph<Rational>) -> Self {
        let values = graph
            .edges()
            .iter()
            .map(|e| (e.label.symbols().to_vec(), e.weight.clone()))
            .collect();
        Self {
            range: graph.range(),
            values,
        }
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn value(&self, word: &[Symbol]) -> Option<&Rational> {
        self.values.get(word)
    }

    pub fn values(&self) -> &BTreeMap<Vec<Symbol>, Rational> {
        &self.values
    }

    /// Every admissible `range`-word has a value and no value sits on an
    /// inadmissible word. Reports all offending words at once.
    pub fn check_against(&self, system: &SymbolicSystem) -> Result<(), PotentialError> {
        let missing: Vec<String> = enumerate_words(system, self.range)
            .iter()
            .filter(|w| !self.values.contains_key(w.symbols()))
            .map(ToString::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(PotentialError::MissingCylinderValue(missing));
        }
        let extra: Vec<String> = self
            .values
            .keys()
            .filter(|w| !system.is_admissible(w))
            .map(|w| format_word(w))
            .collect();
        if !extra.is_empty() {
            return Err(PotentialError::InadmissibleCylinder(extra));
        }
        Ok(())
    }
}

/// Set each edge weight to the potential value on its label.
pub fn attach_potential<U, W: Weight>(
    graph: &WeightedEdgeGraph<U>,
    potential: &LocallyConstantPotential,
) -> Result<WeightedEdgeGraph<W>, PotentialError> {
    if graph.range() != potential.range() {
        return Err(PotentialError::RangeMismatch {
            graph: graph.range(),
            potential: potential.range(),
        });
    }
    let missing: Vec<String> = graph
        .edges()
        .iter()
        .filter(|e| potential.value(e.label.symbols()).is_none())
        .map(|e| e.label.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PotentialError::MissingCylinderValue(missing));
    }
    Ok(graph.map_weights(|_, e| W::from_rational(&potential.values[e.label.symbols()])))
}

/// Birkhoff sum of the potential along every `range`-window of `word`.
pub fn birkhoff_sum(potential: &LocallyConstantPotential, word: &[Symbol]) -> Result<Rational, PotentialError> {
    let k = potential.range();
    if word.len() < k {
        return Err(PotentialError::WordTooShort {
            len: word.len(),
            range: k,
        });
    }
    let mut total = <Rational as Zero>::zero();
    let mut missing = Vec::new();
    for window in word.windows(k) {
        match potential.value(window) {
            Some(v) => total += v,
            None => missing.push(format_word(window)),
        }
    }
    if missing.is_empty() {
        Ok(total)
    } else {
        Err(PotentialError::MissingCylinderValue(missing))
    }
}

/// Max-plus matrix of edge weights, parallel edges collapsed by `max`.
pub fn edge_matrix<W: Weight>(graph: &WeightedEdgeGraph<W>) -> MaxPlusMatrix<W> {
    let mut m = MaxPlusMatrix::new(graph.vertex_count());
    for e in graph.edges() {
        m.raise(e.tail, e.head, MaxPlus::Finite(e.weight.clone()));
    }
    m
}

/// `m(A)`: the maximum cycle mean of the recoded graph.
pub fn maximal_average<W: Weight>(graph: &WeightedEdgeGraph<W>) -> Result<W, PotentialError> {
    Ok(maxplus::max_cycle_mean(&edge_matrix(graph))?.value)
}

/// A periodic word `c` whose orbit `c^inf` carries a maximizing measure.
pub fn maximizing_cycle<W: Weight>(graph: &WeightedEdgeGraph<W>) -> Result<FiniteWord, PotentialError> {
    let cm = maxplus::max_cycle_mean(&edge_matrix(graph))?;
    let edges = cycle_edges(graph, &cm.cycle);
    Ok(FiniteWord::from_trusted(
        edges.iter().map(|&i| graph.edges()[i].label.symbols()[0]).collect(),
    ))
}

/// For a vertex cycle, the heaviest edge realizing each step.
pub fn cycle_edges<W: Weight>(graph: &WeightedEdgeGraph<W>, cycle: &[usize]) -> Vec<usize> {
    (0..cycle.len())
        .map(|i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.tail == u && e.head == v)
                .max_by(|a, b| a.1.weight.partial_cmp(&b.1.weight).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(i, _)| i)
                .expect("cycle arcs come from graph edges")
        })
        .collect()
}

/// Calibrated subaction: `V(head) = max over incoming e of w(e) - m + V(tail)`.
///
/// Canonical choice `V(v) = max_c star(c, v)` over critical vertices of the
/// `(w - m)`-graph, so `max_c V(c) >= 0` with `V(c) = 0` whenever the critical
/// graph is a single class.
pub fn calibrated_subaction<W: Weight>(graph: &WeightedEdgeGraph<W>, tol: f64) -> Result<Vec<W>, PotentialError> {
    maxplus::principal_eigenvector(&edge_matrix(graph), tol)?
        .into_iter()
        .enumerate()
        .map(|(v, value)| match value {
            MaxPlus::Finite(w) => Ok(w),
            MaxPlus::Bottom => Err(PotentialError::NormalizationFailure(format!(
                "vertex {v} is unreachable from the critical graph"
            ))),
        })
        .collect()
}

/// `m(A)`, a calibrated subaction and the normalized edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationData<W> {
    pub m: W,
    pub subaction: Vec<W>,
    pub normalized_weights: Vec<W>,
}

impl<W: Weight> NormalizationData<W> {
    /// The input graph carrying the normalized weights.
    pub fn normalized_graph<U>(&self, graph: &WeightedEdgeGraph<U>) -> WeightedEdgeGraph<W> {
        graph.with_weights(&self.normalized_weights)
    }
}

pub fn normalize<W: Weight>(
    graph: &WeightedEdgeGraph<W>,
    tol: &Tolerances,
) -> Result<NormalizationData<W>, PotentialError> {
    let m = maximal_average(graph)?;
    let subaction = calibrated_subaction(graph, tol.zero)?;
    let normalized_weights: Vec<W> = graph
        .edges()
        .iter()
        .map(|e| e.weight.sub(&m).add(&subaction[e.tail]).sub(&subaction[e.head]))
        .collect();
    let data = NormalizationData {
        m,
        subaction,
        normalized_weights,
    };
    check_normalized(graph, &data.normalized_weights, tol)?;
    Ok(data)
}

/// Non-positivity, calibration at every vertex and zero maximal average.
pub fn check_normalized<U, W: Weight>(
    graph: &WeightedEdgeGraph<U>,
    normalized: &[W],
    tol: &Tolerances,
) -> Result<(), PotentialError> {
    let scale = normalized.iter().map(|w| w.to_f64().abs()).fold(1.0, f64::max);
    for (i, w) in normalized.iter().enumerate() {
        if !w.le_tol(&W::zero(), tol.nonpositive * scale) {
            return Err(PotentialError::NormalizationFailure(format!(
                "edge {} has normalized weight {w} > 0",
                graph.edges()[i].label
            )));
        }
    }
    for (v, incoming) in graph.incoming().iter().enumerate() {
        let best = incoming
            .iter()
            .map(|&i| &normalized[i])
            .fold(None::<&W>, |acc, w| match acc {
                Some(a) if a >= w => Some(a),
                _ => Some(w),
            });
        match best {
            Some(b) if b.is_zero_tol(tol.zero) => {}
            other => {
                return Err(PotentialError::NormalizationFailure(format!(
                    "calibration fails at vertex {}: max incoming normalized weight {:?}",
                    graph.vertices()[v],
                    other.map(|w| w.to_f64())
                )))
            }
        }
    }
    let normalized_graph = graph.with_weights(normalized);
    let mcm = maximal_average(&normalized_graph)?;
    if !mcm.is_zero_tol(tol.zero) {
        return Err(PotentialError::NormalizationFailure(format!(
            "normalized maximal average is {mcm}, expected 0"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::recode;
    use num_bigint::BigInt;

    fn r(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn pot(k: usize, entries: &[(&str, i64)]) -> LocallyConstantPotential {
        let values = entries
            .iter()
            .map(|(w, v)| (crate::sft::parse_word(w).unwrap(), r(*v)))
            .collect();
        LocallyConstantPotential::new(k, values).unwrap()
    }

    fn graph(k: usize, entries: &[(&str, i64)]) -> WeightedEdgeGraph<f64> {
        let full = SymbolicSystem::full_shift(2).unwrap();
        attach_potential(&recode(&full, k).unwrap(), &pot(k, entries)).unwrap()
    }

    const E3: [(&str, i64); 4] = [("00", 0), ("01", -1), ("10", -2), ("11", 0)];
    const E2: [(&str, i64); 2] = [("0", 0), ("1", -1)];

    #[test]
    fn attach_examples() {
        let g = graph(1, &E2);
        assert_eq!(g.weights().copied().collect::<Vec<_>>(), vec![0.0, -1.0]);
        let g = graph(2, &E3);
        assert_eq!(g.weights().copied().collect::<Vec<_>>(), vec![0.0, -1.0, -2.0, 0.0]);
        let golden = SymbolicSystem::new(2, &[vec![1, 1], vec![1, 0]]).unwrap();
        let p = pot(2, &[("00", 0), ("01", -1)]);
        let err = attach_potential::<_, f64>(&recode(&golden, 2).unwrap(), &p).unwrap_err();
        assert_eq!(err, PotentialError::MissingCylinderValue(vec!["10".into()]));
        let full = SymbolicSystem::full_shift(2).unwrap();
        assert!(matches!(
            attach_potential::<_, f64>(&recode(&full, 1).unwrap(), &pot(2, &E3)),
            Err(PotentialError::RangeMismatch { graph: 1, potential: 2 })
        ));
    }

    #[test]
    fn birkhoff_examples() {
        assert_eq!(birkhoff_sum(&pot(2, &E3), &[0, 0, 1, 1]).unwrap(), r(-1));
        assert_eq!(birkhoff_sum(&pot(2, &E3), &[1, 0]).unwrap(), r(-2));
        assert_eq!(birkhoff_sum(&pot(1, &E2), &[0, 1, 1, 0]).unwrap(), r(-2));
        assert_eq!(
            birkhoff_sum(&pot(2, &E3), &[1]),
            Err(PotentialError::WordTooShort { len: 1, range: 2 })
        );
    }

    #[test]
    fn maximal_average_examples() {
        assert_eq!(maximal_average(&graph(1, &E2)).unwrap(), 0.0);
        assert_eq!(maximal_average(&graph(2, &E3)).unwrap(), 0.0);
        let c = graph(2, &[("00", 3), ("01", 3), ("10", 3), ("11", 3)]);
        assert_eq!(maximal_average(&c).unwrap(), 3.0);
    }

    #[test]
    fn maximizing_cycle_examples() {
        assert_eq!(maximizing_cycle(&graph(1, &E2)).unwrap().to_string(), "0");
        let w = maximizing_cycle(&graph(2, &E3)).unwrap().to_string();
        assert!(w == "0" || w == "1", "{w}");
        let c = graph(2, &[("00", 3), ("01", 3), ("10", 3), ("11", 3)]);
        assert!(!maximizing_cycle(&c).unwrap().is_empty());
    }

    #[test]
    fn subaction_examples() {
        assert_eq!(calibrated_subaction(&graph(2, &E3), 1e-9).unwrap(), vec![0.0, 0.0]);
        assert_eq!(calibrated_subaction(&graph(1, &E2), 1e-9).unwrap(), vec![0.0]);
        let g = graph(2, &[("00", 0), ("01", -1), ("10", -5), ("11", -3)]);
        assert_eq!(calibrated_subaction(&g, 1e-9).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn normalize_examples() {
        let tol = Tolerances::default();
        let n = normalize(&graph(1, &E2), &tol).unwrap();
        assert_eq!(
            (n.m, n.subaction.clone(), n.normalized_weights.clone()),
            (0.0, vec![0.0], vec![0.0, -1.0])
        );
        let n = normalize(&graph(2, &E3), &tol).unwrap();
        assert_eq!(n.normalized_weights, vec![0.0, -1.0, -2.0, 0.0]);
        let c = graph(2, &[("00", 3), ("01", 3), ("10", 3), ("11", 3)]);
        let n = normalize(&c, &tol).unwrap();
        assert_eq!(n.m, 3.0);
        assert!(n.normalized_weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn normalize_exact_matches_double() {
        let tol = Tolerances::default();
        let full = SymbolicSystem::full_shift(2).unwrap();
        let p = pot(2, &[("00", 0), ("01", 1), ("10", -5), ("11", -3)]);
        let g = recode(&full, 2).unwrap();
        let exact = normalize(&attach_potential::<_, Rational>(&g, &p).unwrap(), &tol).unwrap();
        let double = normalize(&attach_potential::<_, f64>(&g, &p).unwrap(), &tol).unwrap();
        for (a, b) in exact.normalized_weights.iter().zip(&double.normalized_weights) {
            assert!((a.to_f64() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn check_against_reports_all_problems() {
        let golden = SymbolicSystem::new(2, &[vec![1, 1], vec![1, 0]]).unwrap();
        let p = pot(2, &[("00", 0)]);
        assert_eq!(
            p.check_against(&golden),
            Err(PotentialError::MissingCylinderValue(vec!["01".into(), "10".into()]))
        );
        let p = pot(2, &[("00", 0), ("01", 0), ("10", 0), ("11", 0)]);
        assert_eq!(
            p.check_against(&golden),
            Err(PotentialError::InadmissibleCylinder(vec!["11".into()]))
        );
    }
}
