//! Brute-force references for small instances.
//!
//! Each oracle recomputes a quantity by a method that shares no code with
//! the optimized path: explicit simple-cycle enumeration instead of Karp,
//! layer-by-layer walk maximization instead of Floyd–Warshall, word
//! enumeration instead of transfer operators.

use std::collections::HashMap;

use num_bigint::BigInt;
use rand::Rng;
use thiserror::Error;

use crate::aubry::AubryDecomposition;
use crate::examples::Instance;
use crate::maxplus::MaxPlus;
use crate::pipeline::Analysis;
use crate::potential::LocallyConstantPotential;
use crate::pressure::{pressure, scaled_log_sum_exp, PrecisionConfig, PressureError};
use crate::sft::{enumerate_words, recode, Symbol, SymbolicSystem, WeightedEdgeGraph};
use crate::weight::{Rational, Weight};

/// Vertex limit for cycle and walk enumeration.
pub const MAX_ORACLE_VERTICES: usize = 12;
/// Word-count limit for partition-function enumeration.
pub const MAX_ORACLE_WORDS: usize = 50_000_000;
/// Largest accepted discrepancy between optimized and oracle values.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {0}")]
    TooLarge(String),
    #[error("walk maxima did not stabilize within {max_len} steps")]
    NotStabilized { max_len: usize },
    #[error(transparent)]
    Pressure(#[from] PressureError),
}

fn check_size<W>(graph: &WeightedEdgeGraph<W>) -> Result<(), OracleError> {
    if graph.vertex_count() > MAX_ORACLE_VERTICES {
        return Err(OracleError::TooLarge(format!(
            "{} vertices (limit {MAX_ORACLE_VERTICES})",
            graph.vertex_count()
        )));
    }
    Ok(())
}

/// Maximal cycle mean by enumerating every simple cycle of the multigraph.
pub fn oracle_max_cycle_mean<W: Weight>(graph: &WeightedEdgeGraph<W>) -> Result<W, OracleError> {
    check_size(graph)?;
    let n = graph.vertex_count();
    let mut out_edges = vec![Vec::new(); n];
    for (i, e) in graph.edges().iter().enumerate() {
        out_edges[e.tail].push(i);
    }
    let mut best: Option<W> = None;
    // Each simple cycle is found once, from its smallest vertex.
    for start in 0..n {
        let mut on_stack = vec![false; n];
        on_stack[start] = true;
        let mut found = |total: &W, len: usize| {
            let mean = total.div_count(len);
            if best.as_ref().is_none_or(|b| mean > *b) {
                best = Some(mean);
            }
        };
        cycle_dfs(graph, &out_edges, start, start, W::zero(), 0, &mut on_stack, &mut found);
    }
    best.ok_or_else(|| OracleError::TooLarge("graph has no cycle".into()))
}

#[allow(clippy::too_many_arguments)]
fn cycle_dfs<W: Weight>(
    graph: &WeightedEdgeGraph<W>,
    out_edges: &[Vec<usize>],
    start: usize,
    at: usize,
    total: W,
    len: usize,
    on_stack: &mut [bool],
    found: &mut impl FnMut(&W, usize),
) {
    for &i in &out_edges[at] {
        let e = &graph.edges()[i];
        let next_total = total.add(&e.weight);
        if e.head == start {
            found(&next_total, len + 1);
        } else if e.head > start && !on_stack[e.head] {
            on_stack[e.head] = true;
            cycle_dfs(graph, out_edges, start, e.head, next_total, len + 1, on_stack, found);
            on_stack[e.head] = false;
        }
    }
}

/// Heaviest walk of length `1..=max_len` from `u` to every vertex, by
/// extending all walks one edge at a time. Requires the maxima to be stable
/// over the last `|V|` lengths (no positive cycle and `max_len` long enough).
pub fn oracle_mane_row<W: Weight>(
    graph: &WeightedEdgeGraph<W>,
    u: usize,
    max_len: usize,
) -> Result<Vec<MaxPlus<W>>, OracleError> {
    check_size(graph)?;
    let n = graph.vertex_count();
    if max_len < n {
        return Err(OracleError::NotStabilized { max_len });
    }
    let mut layer = vec![MaxPlus::Bottom; n];
    layer[u] = MaxPlus::zero();
    let mut best = vec![MaxPlus::Bottom; n];
    let mut last_change = 0;
    for len in 1..=max_len {
        let mut next = vec![MaxPlus::Bottom; n];
        for e in graph.edges() {
            let cand = layer[e.tail].otimes(&MaxPlus::Finite(e.weight.clone()));
            next[e.head] = next[e.head].oplus(&cand);
        }
        for v in 0..n {
            if next[v] > best[v] {
                best[v] = next[v].clone();
                last_change = len;
            }
        }
        layer = next;
    }
    if last_change + n > max_len {
        return Err(OracleError::NotStabilized { max_len });
    }
    Ok(best)
}

pub fn oracle_mane<W: Weight>(
    graph: &WeightedEdgeGraph<W>,
    u: usize,
    v: usize,
    max_len: usize,
) -> Result<MaxPlus<W>, OracleError> {
    Ok(oracle_mane_row(graph, u, max_len)?.swap_remove(v))
}

/// `(1/n) log sum over admissible n-words of e^(beta S(word))`, where
/// `S` sums the potential over the `n - k + 1` windows of the word.
pub fn oracle_pressure_words(
    system: &SymbolicSystem,
    potential: &LocallyConstantPotential,
    beta: f64,
    n: usize,
) -> Result<f64, OracleError> {
    let k = potential.range();
    let d = system.alphabet_size();
    if n < k {
        return Err(OracleError::TooLarge(format!("word length {n} is below the range {k}")));
    }
    if (d as f64).powi(n as i32) > MAX_ORACLE_WORDS as f64 {
        return Err(OracleError::TooLarge(format!("{d}^{n} words")));
    }
    let sums = birkhoff_sum_counts(system, potential, n);
    let terms: Vec<(f64, f64)> = sums
        .iter()
        .map(|(sum, count)| (beta * f64::from_bits(*sum) / n as f64, (*count as f64).ln() / n as f64))
        .collect();
    Ok(scaled_log_sum_exp(&terms, n as f64)?)
}

/// Number of admissible n-words per Birkhoff sum (keyed by the bits of the
/// double-precision sum). Windows are tracked as base-`D` integer codes.
fn birkhoff_sum_counts(system: &SymbolicSystem, potential: &LocallyConstantPotential, n: usize) -> HashMap<u64, u64> {
    struct Walk<'a> {
        system: &'a SymbolicSystem,
        /// value of the k-word with code `c`, indexed by `c`
        values: Vec<f64>,
        modulus: usize,
        k: usize,
        n: usize,
        counts: HashMap<u64, u64>,
    }
    impl Walk<'_> {
        fn go(&mut self, len: usize, last: Option<Symbol>, code: usize, sum: f64) {
            if len == self.n {
                *self.counts.entry((sum + 0.0).to_bits()).or_insert(0) += 1;
                return;
            }
            let d = self.system.alphabet_size();
            for s in 0..d {
                if last.is_some_and(|l| !self.system.allows(l, s)) {
                    continue;
                }
                let code = (code * d + s) % self.modulus;
                let add = if len + 1 >= self.k { self.values[code] } else { 0.0 };
                self.go(len + 1, Some(s), code, sum + add);
            }
        }
    }
    let d = system.alphabet_size();
    let k = potential.range();
    let modulus = d.pow(k as u32);
    let mut values = vec![f64::NAN; modulus];
    for (word, value) in potential.values() {
        let code = word.iter().fold(0, |acc, &s| acc * d + s);
        values[code] = value.to_f64();
    }
    let mut walk = Walk {
        system,
        values,
        modulus,
        k,
        n,
        counts: HashMap::new(),
    };
    walk.go(0, None, 0, 0.0);
    walk.counts
}

/// `(k beta max|A| + log D) / n`: allowed distance between the word sum and `P(beta)`.
pub fn pressure_words_envelope(
    system: &SymbolicSystem,
    potential: &LocallyConstantPotential,
    beta: f64,
    n: usize,
) -> f64 {
    let max_abs = potential
        .values()
        .values()
        .map(|v| v.to_f64().abs())
        .fold(0.0, f64::max);
    (potential.range() as f64 * beta * max_abs + (system.alphabet_size() as f64).ln()) / n as f64
}

/// `S^ext(j, i)` recomputed from walk maxima of the normalized graph.
pub fn oracle_s_ext<W: Weight>(
    decomposition: &AubryDecomposition<W>,
    normalized: &WeightedEdgeGraph<W>,
    j: usize,
    i: usize,
    max_len: usize,
) -> Result<MaxPlus<W>, OracleError> {
    let source = &decomposition.components[j];
    let target = &decomposition.components[i];
    let n = normalized.vertex_count();
    let mut from_source = vec![MaxPlus::Bottom; n];
    for &u in &source.vertices {
        let row = oracle_mane_row(normalized, u, max_len)?;
        for v in 0..n {
            from_source[v] = from_source[v].oplus(&row[v]);
        }
        from_source[u] = from_source[u].oplus(&MaxPlus::zero());
    }
    for &v in &source.vertices {
        from_source[v] = from_source[v].oplus(&MaxPlus::zero());
    }
    let mut best: Option<MaxPlus<W>> = None;
    for &v in &target.vertices {
        let entering: Vec<MaxPlus<W>> = normalized
            .edges()
            .iter()
            .enumerate()
            .filter(|(idx, e)| e.head == v && !target.edges.contains(idx))
            .map(|(_, e)| from_source[e.tail].otimes(&MaxPlus::Finite(e.weight.clone())))
            .collect();
        let Some(inner) = entering.into_iter().reduce(|a, b| a.oplus(&b)) else {
            continue;
        };
        best = Some(match best {
            Some(b) if b <= inner => b,
            _ => inner,
        });
    }
    Ok(best.unwrap_or(MaxPlus::Bottom))
}

/// One optimized-versus-oracle comparison. The discrepancy is kept even
/// when the check passes.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub optimized: f64,
    pub oracle: f64,
    pub discrepancy: f64,
    /// Allowed discrepancy.
    pub tolerance: f64,
    pub instance: String,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, optimized: f64, oracle: f64, tolerance: f64, instance: &str) -> Self {
        let discrepancy = if optimized == oracle {
            0.0
        } else {
            (optimized - oracle).abs()
        };
        Self {
            quantity: quantity.into(),
            optimized,
            oracle,
            discrepancy,
            tolerance,
            instance: instance.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.discrepancy <= self.tolerance
    }
}

fn mp_f64<W: Weight>(x: &MaxPlus<W>) -> f64 {
    x.finite().map_or(f64::NEG_INFINITY, Weight::to_f64)
}

/// Settings for [`check_analysis`].
#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Walk length for Mañé and barrier oracles; `None` picks `2 |V| + 2`.
    pub max_len: Option<usize>,
    /// `(beta, n)` pairs for the partition-function check.
    pub pressure_checks: Vec<(f64, usize)>,
    pub precision: PrecisionConfig,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_len: None,
            pressure_checks: vec![(1.0, 14), (5.0, 14)],
            precision: PrecisionConfig::default(),
        }
    }
}

/// Run every oracle that fits the instance. Oracles that refuse the size are
/// returned as errors next to the reports of those that ran.
pub fn check_analysis(
    analysis: &Analysis,
    label: &str,
    options: &OracleOptions,
) -> (Vec<OracleReport>, Vec<(String, OracleError)>) {
    let mut reports = Vec::new();
    let mut refused = Vec::new();
    let stage = &analysis.exact;
    let graph = &analysis.graph;
    let normalized = &stage.normalized;
    let n = normalized.vertex_count();
    let max_len = options.max_len.unwrap_or(2 * n + 2);

    match oracle_max_cycle_mean(graph) {
        Ok(m) => reports.push(OracleReport::new(
            "m(A)",
            analysis.m().to_f64(),
            m.to_f64(),
            ORACLE_TOLERANCE,
            label,
        )),
        Err(e) => refused.push(("m(A)".to_string(), e)),
    }
    match oracle_max_cycle_mean(normalized) {
        Ok(m) => reports.push(OracleReport::new(
            "m(normalized)",
            0.0,
            m.to_f64(),
            ORACLE_TOLERANCE,
            label,
        )),
        Err(e) => refused.push(("m(normalized)".to_string(), e)),
    }

    let mut star_error = None;
    for u in 0..n {
        match oracle_mane_row(normalized, u, max_len) {
            Ok(row) => {
                for (v, value) in row.iter().enumerate() {
                    // The optimized matrix raises same-component pairs to 0.
                    let same = stage
                        .decomposition
                        .component_of_vertex(u)
                        .is_some_and(|c| stage.decomposition.components[c].contains_vertex(v));
                    let oracle = if same {
                        value.oplus(&MaxPlus::zero())
                    } else {
                        value.clone()
                    };
                    reports.push(OracleReport::new(
                        format!("star({u},{v})"),
                        mp_f64(stage.mane.star.get(u, v)),
                        mp_f64(&oracle),
                        ORACLE_TOLERANCE,
                        label,
                    ));
                }
            }
            Err(e) => {
                star_error = Some(e);
                break;
            }
        }
    }
    if let Some(e) = star_error {
        refused.push(("star".to_string(), e));
    }

    let c = stage.decomposition.components.len();
    'outer: for j in 0..c {
        for i in 0..c {
            match oracle_s_ext(&stage.decomposition, normalized, j, i, max_len) {
                Ok(value) => reports.push(OracleReport::new(
                    format!("S^ext({},{})", j + 1, i + 1),
                    mp_f64(stage.ext.get(j, i)),
                    mp_f64(&value),
                    ORACLE_TOLERANCE,
                    label,
                )),
                Err(e) => {
                    refused.push(("S^ext".to_string(), e));
                    break 'outer;
                }
            }
        }
    }

    if let Some(lambda) = oracle_rate_bound(&stage.ext.entries, &stage.bound.restricted) {
        reports.push(OracleReport::new(
            "lambda",
            mp_f64(&stage.bound.lambda),
            lambda,
            ORACLE_TOLERANCE,
            label,
        ));
    } else {
        refused.push((
            "lambda".to_string(),
            OracleError::TooLarge(format!("{} maximal components", stage.bound.restricted.len())),
        ));
    }

    let system = &analysis.instance.system;
    let potential = &analysis.instance.potential;
    for &(beta, words) in &options.pressure_checks {
        let name = format!("P({beta}) words n={words}");
        let oracle = match oracle_pressure_words(system, potential, beta, words) {
            Ok(v) => v,
            Err(e) => {
                refused.push((name, e));
                continue;
            }
        };
        match pressure(normalized, beta, &options.precision) {
            Ok(p) => {
                let optimized = p.value.to_f64() + beta * analysis.m().to_f64();
                let envelope = pressure_words_envelope(system, potential, beta, words);
                reports.push(OracleReport::new(name, optimized, oracle, envelope, label));
            }
            Err(e) => refused.push((name, e.into())),
        }
    }
    (reports, refused)
}

/// Largest mean over cycles of distinct components (families of size up to
/// 6), by explicit enumeration of index sequences.
pub fn oracle_rate_bound<W: Weight>(entries: &crate::maxplus::MaxPlusMatrix<W>, restricted: &[usize]) -> Option<f64> {
    if restricted.len() > 6 {
        return None;
    }
    let mut best = f64::NEG_INFINITY;
    let mut seq = Vec::new();
    fn extend<W: Weight>(
        entries: &crate::maxplus::MaxPlusMatrix<W>,
        restricted: &[usize],
        seq: &mut Vec<usize>,
        best: &mut f64,
    ) {
        if let Some(&first) = seq.first() {
            // close the cycle back to its first component
            let mut total = 0.0;
            let mut ok = true;
            for (t, &a) in seq.iter().enumerate() {
                let b = if t + 1 < seq.len() { seq[t + 1] } else { first };
                match entries.get(a, b).finite() {
                    Some(w) => total += w.to_f64(),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                *best = best.max(total / seq.len() as f64);
            }
        }
        for &c in restricted {
            if !seq.contains(&c) {
                seq.push(c);
                extend(entries, restricted, seq, best);
                seq.pop();
            }
        }
    }
    extend(entries, restricted, &mut seq, &mut best);
    Some(best)
}

/// Random primitive system with a planted zero-weight cycle.
///
/// Alphabet 2 or 3, range 1 to 3 (range 1 only on full shifts), integer
/// cylinder values in `[-5, 0]`, and every edge of one random simple cycle of
/// the recoded graph set to 0, so `m(A) = 0` and the Aubry set contains it.
pub fn random_planted_instance(rng: &mut impl Rng, max_alphabet: usize, max_range: usize) -> Instance {
    let d = rng.gen_range(2..=max_alphabet.max(2));
    let system = loop {
        if rng.gen_bool(0.3) {
            break SymbolicSystem::full_shift(d).expect("d >= 2");
        }
        let table: Vec<Vec<u8>> = (0..d)
            .map(|_| (0..d).map(|_| u8::from(rng.gen_bool(0.7))).collect())
            .collect();
        if let Ok(system) = SymbolicSystem::new(d, &table) {
            break system;
        }
    };
    let min_range = if system.is_full_shift() { 1 } else { 2 };
    let k = rng.gen_range(min_range..=max_range.max(min_range));
    let graph = recode(&system, k).expect("range is valid for the system");

    // random walk until a vertex repeats; the loop closed there is simple
    let n = graph.vertex_count();
    let mut out_edges = vec![Vec::new(); n];
    for (i, e) in graph.edges().iter().enumerate() {
        out_edges[e.tail].push(i);
    }
    let mut position = vec![usize::MAX; n];
    let mut path: Vec<usize> = Vec::new();
    let mut v = rng.gen_range(0..n);
    let planted: Vec<usize> = loop {
        position[v] = path.len();
        let e = out_edges[v][rng.gen_range(0..out_edges[v].len())];
        path.push(e);
        v = graph.edges()[e].head;
        if position[v] != usize::MAX {
            break path[position[v]..].to_vec();
        }
    };

    let values = enumerate_words(&system, k)
        .into_iter()
        .map(|w| {
            let e = graph.edge_by_label(w.symbols()).expect("admissible word is an edge");
            let value = if planted.contains(&e) {
                0
            } else {
                -rng.gen_range(0..=5i64)
            };
            (w.symbols().to_vec(), Rational::from_integer(BigInt::from(value)))
        })
        .collect();
    Instance {
        system,
        potential: LocallyConstantPotential::new(k, values).expect("range >= 1"),
    }
}
