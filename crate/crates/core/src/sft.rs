//! Subshifts of finite type and their higher-block edge-shift recoding.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::perron::perron_root;
use crate::scc::strongly_connected_components;

pub type Symbol = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SftError {
    #[error("alphabet must have at least 2 symbols, got {0}")]
    AlphabetTooSmall(usize),
    #[error("transition table must be {expected}x{expected} with 0/1 entries: {detail}")]
    MalformedTable { expected: usize, detail: String },
    #[error("symbol {symbol} has an empty {axis}")]
    StrandedSymbol { symbol: Symbol, axis: &'static str },
    #[error("transition matrix is not primitive (no all-positive power up to exponent {bound})")]
    NonPrimitive { bound: usize },
    #[error("range k=1 requires the full shift; use k >= 2 for this transition table")]
    RangeTooSmall,
    #[error("symbol {symbol} is outside the alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: Symbol, alphabet_size: usize },
    #[error("word {word} is not admissible")]
    NotAdmissible { word: String },
    #[error("periodic part of a point must be non-empty")]
    EmptyCycle,
    #[error("adjacency matrix has no cycle")]
    NoCycle,
}

/// A one-sided subshift of finite type given by a primitive 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicSystem {
    alphabet_size: usize,
    transitions: Vec<bool>,
}

impl SymbolicSystem {
    /// Validate a transition table. Entry `(a, b)` is 1 iff the word `ab` is
    /// allowed.
    pub fn new(alphabet_size: usize, transitions: &[Vec<u8>]) -> Result<Self, SftError> {
        if alphabet_size < 2 {
            return Err(SftError::AlphabetTooSmall(alphabet_size));
        }
        if transitions.len() != alphabet_size {
            return Err(SftError::MalformedTable {
                expected: alphabet_size,
                detail: format!("{} rows", transitions.len()),
            });
        }
        let mut flat = Vec::with_capacity(alphabet_size * alphabet_size);
        for (a, row) in transitions.iter().enumerate() {
            if row.len() != alphabet_size {
                return Err(SftError::MalformedTable {
                    expected: alphabet_size,
                    detail: format!("row {a} has {} entries", row.len()),
                });
            }
            for (b, &entry) in row.iter().enumerate() {
                match entry {
                    0 => flat.push(false),
                    1 => flat.push(true),
                    other => {
                        return Err(SftError::MalformedTable {
                            expected: alphabet_size,
                            detail: format!("entry ({a},{b}) = {other}"),
                        })
                    }
                }
            }
        }
        let system = Self {
            alphabet_size,
            transitions: flat,
        };
        for s in 0..alphabet_size {
            if !(0..alphabet_size).any(|b| system.allows(s, b)) {
                return Err(SftError::StrandedSymbol { symbol: s, axis: "row" });
            }
            if !(0..alphabet_size).any(|a| system.allows(a, s)) {
                return Err(SftError::StrandedSymbol {
                    symbol: s,
                    axis: "column",
                });
            }
        }
        system.check_primitive()?;
        Ok(system)
    }

    /// Full shift on `alphabet_size` symbols.
    pub fn full_shift(alphabet_size: usize) -> Result<Self, SftError> {
        let table = vec![vec![1u8; alphabet_size]; alphabet_size];
        Self::new(alphabet_size, &table)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        self.transitions[a * self.alphabet_size + b]
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().all(|&t| t)
    }

    /// The table as 0/1 rows.
    pub fn transition_rows(&self) -> Vec<Vec<u8>> {
        (0..self.alphabet_size)
            .map(|a| (0..self.alphabet_size).map(|b| u8::from(self.allows(a, b))).collect())
            .collect()
    }

    pub fn is_admissible(&self, symbols: &[Symbol]) -> bool {
        symbols.iter().all(|&s| s < self.alphabet_size) && symbols.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    /// Wielandt: a primitive `D x D` matrix has an all-positive power with
    /// exponent at most `D^2 - 2D + 2`.
    fn check_primitive(&self) -> Result<(), SftError> {
        let d = self.alphabet_size;
        let bound = d * d - 2 * d + 2;
        let mut power = self.transitions.clone();
        for _ in 1..=bound {
            if power.iter().all(|&p| p) {
                return Ok(());
            }
            power = bool_product(&power, &self.transitions, d);
        }
        if power.iter().all(|&p| p) {
            return Ok(());
        }
        Err(SftError::NonPrimitive { bound })
    }
}

fn bool_product(a: &[bool], b: &[bool], d: usize) -> Vec<bool> {
    let mut out = vec![false; d * d];
    for i in 0..d {
        for k in 0..d {
            if a[i * d + k] {
                for j in 0..d {
                    out[i * d + j] |= b[k * d + j];
                }
            }
        }
    }
    out
}

/// Build a validated system (alias of [`SymbolicSystem::new`]).
pub fn build_system(alphabet_size: usize, transitions: &[Vec<u8>]) -> Result<SymbolicSystem, SftError> {
    SymbolicSystem::new(alphabet_size, transitions)
}

/// An admissible finite word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteWord(Vec<Symbol>);

impl FiniteWord {
    pub fn new(system: &SymbolicSystem, symbols: Vec<Symbol>) -> Result<Self, SftError> {
        if let Some(&s) = symbols.iter().find(|&&s| s >= system.alphabet_size()) {
            return Err(SftError::SymbolOutOfRange {
                symbol: s,
                alphabet_size: system.alphabet_size(),
            });
        }
        if !system.is_admissible(&symbols) {
            return Err(SftError::NotAdmissible {
                word: format_word(&symbols),
            });
        }
        Ok(Self(symbols))
    }

    /// Wrap symbols that are already known to be admissible.
    pub(crate) fn from_trusted(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_word(&self.0))
    }
}

/// Words over alphabets of size at most 10 are written as digit strings
/// (`"0110"`); larger alphabets use comma-separated symbols (`"3,11,0"`).
pub fn format_word(symbols: &[Symbol]) -> String {
    if symbols.iter().all(|&s| s < 10) {
        symbols.iter().map(|s| char::from(b'0' + *s as u8)).collect()
    } else {
        symbols.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Inverse of [`format_word`]. Digit strings are read one symbol per character.
pub fn parse_word(text: &str) -> Option<Vec<Symbol>> {
    let text = text.trim();
    if text.contains(',') {
        text.split(',').map(|t| t.trim().parse().ok()).collect()
    } else {
        text.chars().map(|c| c.to_digit(10).map(|d| d as Symbol)).collect()
    }
}

/// A point `preperiod . cycle^inf` of the shift space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventuallyPeriodicPoint {
    pub preperiod: FiniteWord,
    pub cycle: FiniteWord,
}

impl EventuallyPeriodicPoint {
    pub fn new(system: &SymbolicSystem, preperiod: Vec<Symbol>, cycle: Vec<Symbol>) -> Result<Self, SftError> {
        if cycle.is_empty() {
            return Err(SftError::EmptyCycle);
        }
        let joined: Vec<Symbol> = preperiod.iter().chain(&cycle).chain(&cycle).copied().collect();
        FiniteWord::new(system, joined)?;
        Ok(Self {
            preperiod: FiniteWord(preperiod),
            cycle: FiniteWord(cycle),
        })
    }

    /// First `n` symbols of the point.
    pub fn prefix(&self, n: usize) -> Vec<Symbol> {
        let pre = self.preperiod.symbols();
        let cyc = self.cycle.symbols();
        (0..n)
            .map(|i| {
                if i < pre.len() {
                    pre[i]
                } else {
                    cyc[(i - pre.len()) % cyc.len()]
                }
            })
            .collect()
    }
}

impl fmt::Display for EventuallyPeriodicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", self.preperiod, self.cycle)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<W> {
    pub tail: usize,
    pub head: usize,
    /// The k-word this edge stands for.
    pub label: FiniteWord,
    pub weight: W,
}

/// Higher-block presentation: vertices are admissible (k-1)-words, edges are
/// admissible k-words from their prefix to their suffix. For `k = 1` there is
/// a single vertex (the empty word) carrying one loop per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEdgeGraph<W> {
    k: usize,
    vertices: Vec<FiniteWord>,
    edges: Vec<Edge<W>>,
    label_index: HashMap<Vec<Symbol>, usize>,
}

impl<W> WeightedEdgeGraph<W> {
    pub fn range(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> &[FiniteWord] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    /// Index of the edge labelled by this k-word.
    pub fn edge_by_label(&self, label: &[Symbol]) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    /// Vertex of a point or word starting with these symbols.
    pub fn vertex_of(&self, prefix: &[Symbol]) -> Option<usize> {
        if self.k == 1 {
            return Some(0);
        }
        let word = prefix.get(..self.k - 1)?;
        self.vertices.iter().position(|v| v.symbols() == word)
    }

    pub fn weights(&self) -> impl Iterator<Item = &W> {
        self.edges.iter().map(|e| &e.weight)
    }

    /// Same graph with every edge weight replaced.
    pub fn map_weights<U>(&self, mut f: impl FnMut(usize, &Edge<W>) -> U) -> WeightedEdgeGraph<U> {
        WeightedEdgeGraph {
            k: self.k,
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| Edge {
                    tail: e.tail,
                    head: e.head,
                    label: e.label.clone(),
                    weight: f(i, e),
                })
                .collect(),
            label_index: self.label_index.clone(),
        }
    }

    /// Same graph with weights taken from a slice indexed by edge.
    pub fn with_weights<U: Clone>(&self, weights: &[U]) -> WeightedEdgeGraph<U> {
        assert_eq!(weights.len(), self.edges.len(), "one weight per edge");
        self.map_weights(|i, _| weights[i].clone())
    }

    /// Edge indices grouped by head vertex.
    pub fn incoming(&self) -> Vec<Vec<usize>> {
        let mut incoming = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            incoming[e.head].push(i);
        }
        incoming
    }

    /// Edge-count matrix restricted to a subset of edges (`counts[tail][head]`).
    pub fn count_matrix(&self, edge_subset: impl IntoIterator<Item = usize>) -> Vec<Vec<u32>> {
        let n = self.vertices.len();
        let mut counts = vec![vec![0u32; n]; n];
        for i in edge_subset {
            let e = &self.edges[i];
            counts[e.tail][e.head] += 1;
        }
        counts
    }
}

/// Recode `system` as a 1-step edge shift on k-blocks with zero weights.
pub fn recode(system: &SymbolicSystem, k: usize) -> Result<WeightedEdgeGraph<()>, SftError> {
    if k == 0 {
        return Err(SftError::RangeTooSmall);
    }
    if k == 1 {
        if !system.is_full_shift() {
            return Err(SftError::RangeTooSmall);
        }
        let edges: Vec<Edge<()>> = (0..system.alphabet_size())
            .map(|s| Edge {
                tail: 0,
                head: 0,
                label: FiniteWord(vec![s]),
                weight: (),
            })
            .collect();
        let label_index = edges.iter().enumerate().map(|(i, e)| (e.label.0.clone(), i)).collect();
        return Ok(WeightedEdgeGraph {
            k,
            vertices: vec![FiniteWord(Vec::new())],
            edges,
            label_index,
        });
    }
    let vertices = enumerate_words(system, k - 1);
    let vertex_index: HashMap<&[Symbol], usize> = vertices.iter().enumerate().map(|(i, v)| (v.symbols(), i)).collect();
    let edges: Vec<Edge<()>> = enumerate_words(system, k)
        .into_iter()
        .map(|label| {
            let s = label.symbols();
            Edge {
                tail: vertex_index[&s[..k - 1]],
                head: vertex_index[&s[1..]],
                label,
                weight: (),
            }
        })
        .collect();
    let label_index = edges.iter().enumerate().map(|(i, e)| (e.label.0.clone(), i)).collect();
    Ok(WeightedEdgeGraph {
        k,
        vertices,
        edges,
        label_index,
    })
}

/// All admissible words of length `n` in lexicographic order.
pub fn enumerate_words(system: &SymbolicSystem, n: usize) -> Vec<FiniteWord> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(FiniteWord(Vec::new()));
        return out;
    }
    let mut word = Vec::with_capacity(n);
    extend_words(system, n, &mut word, &mut out);
    out
}

fn extend_words(system: &SymbolicSystem, n: usize, word: &mut Vec<Symbol>, out: &mut Vec<FiniteWord>) {
    if word.len() == n {
        out.push(FiniteWord(word.clone()));
        return;
    }
    for s in 0..system.alphabet_size() {
        if word.last().is_none_or(|&last| system.allows(last, s)) {
            word.push(s);
            extend_words(system, n, word, out);
            word.pop();
        }
    }
}

/// Natural log of the Perron root of a nonnegative integer matrix (entry
/// `(i, j)` counts edges `i -> j`).
///
/// Reducible matrices are split into strongly connected components and the
/// largest root wins. A component that is a single cycle has entropy exactly 0.
pub fn topological_entropy(adjacency: &[Vec<u32>]) -> Result<f64, SftError> {
    let n = adjacency.len();
    let succ: Vec<Vec<usize>> = adjacency
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] > 0).collect())
        .collect();
    let mut best: Option<f64> = None;
    for comp in strongly_connected_components(&succ) {
        let sub: Vec<Vec<f64>> = comp
            .iter()
            .map(|&i| comp.iter().map(|&j| f64::from(adjacency[i][j])).collect())
            .collect();
        let edge_total: f64 = sub.iter().flatten().sum();
        if edge_total == 0.0 {
            continue;
        }
        let entropy = if edge_total as usize == comp.len() {
            // strongly connected with one edge per vertex: a single cycle
            0.0
        } else {
            let root = perron_root(&sub, &1e-13, 10_000).map_err(|_| SftError::NoCycle)?;
            root.value().ln().max(0.0)
        };
        best = Some(best.map_or(entropy, |b: f64| b.max(entropy)));
    }
    best.ok_or(SftError::NoCycle)
}

/// 0/1 table as a count matrix.
pub fn adjacency_counts(rows: &[Vec<u8>]) -> Vec<Vec<u32>> {
    rows.iter()
        .map(|row| row.iter().map(|&b| u32::from(b)).collect())
        .collect()
}
