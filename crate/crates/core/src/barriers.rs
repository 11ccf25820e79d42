//! Peierls barriers between irreducible components and the max-plus rate
//! bound `lambda` they define.
//!
//! `S^ext(j, i)` is the cheapest way, measured in the normalized potential,
//! of reaching component `i` from component `j` through a last step that is
//! not itself inside `i`: the minimum over vertices `v` of `i` of the best
//! `S(Ω_j, tail(e)) + w̄(e)` over edges `e` entering `v` from outside `i`.
//!
//! The convergence rate bound is the largest mean weight of a cycle of such
//! barriers among the components of maximal entropy.

use thiserror::Error;

use crate::aubry::{AubryDecomposition, ManeData};
use crate::maxplus::{max_cycle_mean, MaxPlus, MaxPlusError, MaxPlusMatrix};
use crate::sft::WeightedEdgeGraph;
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarrierError {
    #[error("barrier S^ext({id},{id}) = {value:e} is not negative")]
    DiagonalNotNegative { id: usize, value: f64 },
    #[error("barrier S^ext({from},{to}) = {value:e} is positive")]
    PositiveEntry { from: usize, to: usize, value: f64 },
    #[error("no component of maximal entropy")]
    NoMaximalComponent,
}

/// Barrier matrix with `entries.get(j, i) = S^ext(j, i)` (row = source component).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtCostMatrix<W> {
    pub entries: MaxPlusMatrix<W>,
    /// `skipped[j][i]`: vertices of component `i` without any incoming edge
    /// from outside `i`; they are left out of the minimum.
    pub skipped: Vec<Vec<Vec<usize>>>,
}

impl<W: Weight> ExtCostMatrix<W> {
    pub fn n(&self) -> usize {
        self.entries.dim()
    }

    pub fn get(&self, from: usize, to: usize) -> &MaxPlus<W> {
        self.entries.get(from, to)
    }
}

/// `S^ext(j, i)` together with the skipped vertices of component `i`.
pub fn s_ext<W: Weight>(
    j: usize,
    i: usize,
    mane: &ManeData<W>,
    decomposition: &AubryDecomposition<W>,
    graph: &WeightedEdgeGraph<W>,
) -> (MaxPlus<W>, Vec<usize>) {
    let target = &decomposition.components[i];
    let row = &mane.component_rows[j];
    let incoming = graph.incoming();
    let mut skipped = Vec::new();
    let mut best: Option<MaxPlus<W>> = None;
    for &v in &target.vertices {
        let mut inner: Option<MaxPlus<W>> = None;
        for &e in &incoming[v] {
            if target.edges.binary_search(&e).is_ok() {
                continue;
            }
            let edge = &graph.edges()[e];
            let candidate = row[edge.tail].otimes(&MaxPlus::Finite(edge.weight.clone()));
            inner = Some(match inner {
                Some(acc) => acc.oplus(&candidate),
                None => candidate,
            });
        }
        match inner {
            None => skipped.push(v),
            Some(value) => {
                best = Some(match best {
                    Some(acc) if acc <= value => acc,
                    _ => value,
                })
            }
        }
    }
    (best.unwrap_or(MaxPlus::Bottom), skipped)
}

/// All barriers, with the sign invariants checked (`tol` is the zero test).
pub fn ext_cost_matrix<W: Weight>(
    decomposition: &AubryDecomposition<W>,
    mane: &ManeData<W>,
    graph: &WeightedEdgeGraph<W>,
    tol: f64,
) -> Result<ExtCostMatrix<W>, BarrierError> {
    let n = decomposition.components.len();
    let mut entries = MaxPlusMatrix::new(n);
    let mut skipped = vec![vec![Vec::new(); n]; n];
    for j in 0..n {
        for i in 0..n {
            let (value, skip) = s_ext(j, i, mane, decomposition, graph);
            if let MaxPlus::Finite(w) = &value {
                let negative = if W::EXACT { *w < W::zero() } else { w.to_f64() < -tol };
                if i == j && !negative {
                    return Err(BarrierError::DiagonalNotNegative {
                        id: decomposition.components[i].id,
                        value: w.to_f64(),
                    });
                }
                if !w.le_tol(&W::zero(), tol) {
                    return Err(BarrierError::PositiveEntry {
                        from: decomposition.components[j].id,
                        to: decomposition.components[i].id,
                        value: w.to_f64(),
                    });
                }
            }
            entries.set(j, i, value);
            skipped[j][i] = skip;
        }
    }
    Ok(ExtCostMatrix { entries, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateBound<W> {
    /// Maximal cycle mean of the restricted barrier matrix; `Bottom` when it
    /// has no cycle of finite barriers.
    pub lambda: MaxPlus<W>,
    /// Component indices `c_0, ..., c_{L-1}` with barriers `c_0 -> c_1 -> ... -> c_0`.
    pub witness_cycle: Vec<usize>,
    /// Indices of the maximal-entropy components the bound ranges over.
    pub restricted: Vec<usize>,
}

impl<W: Weight> RateBound<W> {
    pub fn no_finite_cycle(&self) -> bool {
        self.lambda.is_bottom()
    }
}

/// Max-plus eigenvalue of the barrier matrix restricted to the components of
/// maximal entropy.
pub fn rate_bound<W: Weight>(
    ext: &ExtCostMatrix<W>,
    decomposition: &AubryDecomposition<W>,
) -> Result<RateBound<W>, BarrierError> {
    let restricted = decomposition.max_entropy.clone();
    if restricted.is_empty() {
        return Err(BarrierError::NoMaximalComponent);
    }
    let sub = ext.entries.submatrix(&restricted);
    match max_cycle_mean(&sub) {
        Ok(mean) => Ok(RateBound {
            lambda: MaxPlus::Finite(mean.value),
            witness_cycle: mean.cycle.iter().map(|&c| restricted[c]).collect(),
            restricted,
        }),
        Err(MaxPlusError::NoCycle) => Ok(RateBound {
            lambda: MaxPlus::Bottom,
            witness_cycle: Vec::new(),
            restricted,
        }),
        Err(MaxPlusError::PositiveCycle { .. }) => unreachable!("cycle means never report positive cycles"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aubry::{decompose, mane_matrix};
    use crate::examples::{self, Instance};
    use crate::potential::{attach_potential, normalize};
    use crate::sft::recode;
    use crate::weight::Rational;
    use crate::Tolerances;
    use num_bigint::BigInt;

    fn run(
        instance: &Instance,
    ) -> (
        ExtCostMatrix<Rational>,
        RateBound<Rational>,
        AubryDecomposition<Rational>,
    ) {
        let tol = Tolerances::default();
        let k = instance.potential.range();
        let g: WeightedEdgeGraph<Rational> =
            attach_potential(&recode(&instance.system, k).unwrap(), &instance.potential).unwrap();
        let norm = normalize(&g, &tol).unwrap();
        let graph = norm.normalized_graph(&g);
        let zero = vec![Rational::from_integer(BigInt::from(0)); graph.vertex_count()];
        let dec = decompose(&graph, &zero, &tol).unwrap();
        let mane = mane_matrix(&graph, &dec, tol.zero).unwrap();
        let ext = ext_cost_matrix(&dec, &mane, &graph, tol.zero).unwrap();
        let bound = rate_bound(&ext, &dec).unwrap();
        (ext, bound, dec)
    }

    fn q(n: i64, d: i64) -> MaxPlus<Rational> {
        MaxPlus::Finite(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    #[test]
    fn two_fixed_points_barriers() {
        let (ext, bound, _) = run(&examples::two_fixed_points());
        assert_eq!(ext.get(0, 0), &q(-3, 1));
        assert_eq!(ext.get(0, 1), &q(-1, 1));
        assert_eq!(ext.get(1, 0), &q(-2, 1));
        assert_eq!(ext.get(1, 1), &q(-3, 1));
        assert_eq!(bound.lambda, q(-3, 2));
        let mut witness = bound.witness_cycle.clone();
        witness.sort_unstable();
        assert_eq!(witness, vec![0, 1]);
    }

    #[test]
    fn single_fixed_point_barrier() {
        let (ext, bound, _) = run(&examples::single_fixed_point());
        assert_eq!(ext.n(), 1);
        assert_eq!(ext.get(0, 0), &q(-1, 1));
        assert_eq!(bound.lambda, q(-1, 1));
        assert_eq!(bound.witness_cycle, vec![0]);
    }

    #[test]
    fn entropy_zero_component_is_excluded() {
        let (ext, bound, dec) = run(&examples::full_shift_and_fixed_point());
        assert_eq!(dec.components.len(), 2);
        assert_eq!(dec.max_entropy, vec![0]);
        assert_eq!(ext.get(0, 0), &q(-2, 1));
        assert_eq!(bound.restricted, vec![0]);
        assert_eq!(bound.lambda, q(-2, 1));
    }

    #[test]
    fn whole_shift_has_no_barrier() {
        let (ext, bound, _) = run(&examples::zero_potential());
        assert_eq!(ext.n(), 1);
        assert!(ext.get(0, 0).is_bottom());
        assert_eq!(ext.skipped[0][0], vec![0, 1]);
        assert!(bound.no_finite_cycle());
    }
}
