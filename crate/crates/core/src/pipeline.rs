//! End-to-end analysis: recoding, normalization, Aubry decomposition,
//! barriers, and the pressure sweep with its verdict.
//!
//! The zero-temperature objects are computed twice, once in exact rational
//! arithmetic and once in double precision. The exact results are the ones
//! reported and fed to the extended-precision transfer operator; the double
//! results must agree with them and exercise the tolerance-based path.

use thiserror::Error;

use crate::aubry::{decompose, mane_matrix, AubryDecomposition, AubryError, ManeData};
use crate::barriers::{ext_cost_matrix, rate_bound, BarrierError, ExtCostMatrix, RateBound};
use crate::examples::Instance;
use crate::maxplus::MaxPlus;
use crate::potential::{attach_potential, normalize, NormalizationData, PotentialError};
use crate::pressure::{
    eigenfunction, empirical_rate, extended_entropy, pressure_sweep, verify_rate_bound, LogRoot, PrecisionConfig,
    PressureError, RateReport, Trust,
};
use crate::sft::{recode, SftError, WeightedEdgeGraph};
use crate::weight::{Rational, Weight};
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Aubry(#[from] AubryError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error("exact and double-precision results disagree on {0}")]
    Disagreement(String),
    #[error("beta grid is empty")]
    EmptyGrid,
}

/// Everything derived from one weight type.
#[derive(Debug, Clone)]
pub struct Stage<W> {
    pub normalization: NormalizationData<W>,
    /// Recoded graph carrying the normalized weights.
    pub normalized: WeightedEdgeGraph<W>,
    pub decomposition: AubryDecomposition<W>,
    pub mane: ManeData<W>,
    pub ext: ExtCostMatrix<W>,
    pub bound: RateBound<W>,
}

impl<W: Weight> Stage<W> {
    pub fn run(graph: &WeightedEdgeGraph<W>, tol: &Tolerances) -> Result<Self, AnalysisError> {
        let normalization = normalize(graph, tol)?;
        let normalized = normalization.normalized_graph(graph);
        // Calibrated subaction of the normalized potential (canonical choice);
        // it is the one whose values on components are reported.
        let frame = vec![W::zero(); normalized.vertex_count()];
        let decomposition = decompose(&normalized, &frame, tol)?;
        let mane = mane_matrix(&normalized, &decomposition, tol.zero)?;
        let ext = ext_cost_matrix(&decomposition, &mane, &normalized, tol.zero)?;
        let bound = rate_bound(&ext, &decomposition)?;
        Ok(Self {
            normalization,
            normalized,
            decomposition,
            mane,
            ext,
            bound,
        })
    }

    /// `lambda` as a double, `None` when no finite barrier cycle exists.
    pub fn lambda(&self) -> Option<f64> {
        self.bound.lambda.finite().map(Weight::to_f64)
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub instance: Instance,
    pub tol: Tolerances,
    /// Recoded graph with the original potential.
    pub graph: WeightedEdgeGraph<Rational>,
    pub exact: Stage<Rational>,
    pub approx: Stage<f64>,
}

impl Analysis {
    pub fn run(instance: &Instance, tol: &Tolerances) -> Result<Self, AnalysisError> {
        instance.potential.check_against(&instance.system)?;
        let skeleton = recode(&instance.system, instance.potential.range())?;
        let graph: WeightedEdgeGraph<Rational> = attach_potential(&skeleton, &instance.potential)?;
        let graph_f64: WeightedEdgeGraph<f64> = attach_potential(&skeleton, &instance.potential)?;
        let exact = Stage::run(&graph, tol)?;
        let approx = Stage::run(&graph_f64, tol)?;
        let analysis = Self {
            instance: instance.clone(),
            tol: *tol,
            graph,
            exact,
            approx,
        };
        analysis.cross_check()?;
        Ok(analysis)
    }

    /// The double-precision path must reproduce the exact one.
    fn cross_check(&self) -> Result<(), AnalysisError> {
        let (e, a) = (&self.exact, &self.approx);
        let close = |x: &Rational, y: &f64| (x.to_f64() - y).abs() <= 1e-9 * (1.0 + y.abs());
        let close_mp = |x: &MaxPlus<Rational>, y: &MaxPlus<f64>| match (x, y) {
            (MaxPlus::Finite(x), MaxPlus::Finite(y)) => close(x, y),
            (MaxPlus::Bottom, MaxPlus::Bottom) => true,
            _ => false,
        };
        if !close(&e.normalization.m, &a.normalization.m) {
            return Err(AnalysisError::Disagreement("m(A)".into()));
        }
        if e.decomposition.critical_edges != a.decomposition.critical_edges {
            return Err(AnalysisError::Disagreement("critical edges".into()));
        }
        let n = e.ext.n();
        for j in 0..n {
            for i in 0..n {
                if !close_mp(e.ext.get(j, i), a.ext.get(j, i)) {
                    return Err(AnalysisError::Disagreement(format!("S^ext({},{})", j + 1, i + 1)));
                }
            }
        }
        if !close_mp(&e.bound.lambda, &a.bound.lambda) {
            return Err(AnalysisError::Disagreement("lambda".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> &Rational {
        &self.exact.normalization.m
    }

    pub fn h(&self) -> f64 {
        self.exact.decomposition.h
    }

    pub fn lambda(&self) -> Option<f64> {
        self.exact.lambda()
    }

    /// Components excluded from the rate bound (entropy below `h`).
    pub fn excluded_components(&self) -> Vec<usize> {
        (0..self.exact.decomposition.components.len())
            .filter(|c| !self.exact.bound.restricted.contains(c))
            .collect()
    }

    /// Count matrix of component `c` restricted to its vertices.
    pub fn component_counts(&self, c: usize) -> Vec<Vec<u32>> {
        let comp = &self.exact.decomposition.components[c];
        let counts = self.exact.normalized.count_matrix(comp.edges.iter().copied());
        comp.vertices
            .iter()
            .map(|&u| comp.vertices.iter().map(|&v| counts[u][v]).collect())
            .collect()
    }

    /// `h` recomputed in extended precision: the largest root among the
    /// maximal-entropy components.
    pub fn extended_h(&self, config: &PrecisionConfig) -> Result<LogRoot, AnalysisError> {
        let mut best: Option<LogRoot> = None;
        for &c in &self.exact.decomposition.max_entropy {
            let root = extended_entropy(&self.component_counts(c), config)?;
            if best.as_ref().is_none_or(|b| root.value > b.value) {
                best = Some(root);
            }
        }
        Ok(best.expect("decomposition has a maximal-entropy component"))
    }

    /// Pressure sweep on `betas`, rate estimate and verdict.
    pub fn rate_report(
        &self,
        betas: &[f64],
        config: &PrecisionConfig,
        tol_verify: f64,
    ) -> Result<RateReport, AnalysisError> {
        let beta_max = betas.iter().copied().reduce(f64::max).ok_or(AnalysisError::EmptyGrid)?;
        config.check_range(self.lambda(), beta_max)?;
        let h = self.extended_h(config)?;
        let points = pressure_sweep(&self.exact.normalized, betas, &h, config)?;
        let estimate = empirical_rate(&points)?;
        let limit_beta = points
            .iter()
            .filter(|p| p.trust == Trust::Trusted)
            .map(|p| p.beta)
            .reduce(f64::max)
            .unwrap_or(beta_max);
        let subaction = self.component_subaction_limit(limit_beta, config)?;
        let verdict = verify_rate_bound(&estimate, &self.exact.bound, &self.exact.ext, &subaction, tol_verify);
        Ok(RateReport {
            points,
            estimate,
            verdict,
        })
    }

    /// Per-component values of `(1/beta) log H_beta`, the transfer-operator
    /// approximation of a calibrated subaction of the normalized potential.
    pub fn component_subaction_limit(&self, beta: f64, config: &PrecisionConfig) -> Result<Vec<f64>, AnalysisError> {
        let f = eigenfunction(&self.exact.normalized, beta, config)?;
        Ok(self
            .exact
            .decomposition
            .components
            .iter()
            .map(|c| {
                c.vertices
                    .iter()
                    .map(|&v| f.log_scaled[v])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect())
    }
}

/// `beta_min, ..., beta_max` in `steps` equal increments (`steps + 1` points
/// when `steps > 0`).
pub fn linear_grid(beta_min: f64, beta_max: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![beta_min];
    }
    (0..=steps)
        .map(|t| beta_min + (beta_max - beta_min) * t as f64 / steps as f64)
        .collect()
}

/// `points` equally spaced values of `beta` on `[beta_max / 2, beta_max]`,
/// where `beta_max` is capped at 50 and chosen so the expected residual
/// `e^(lambda beta_max)` uses at most half of the usable mantissa.
pub fn safe_grid(lambda: Option<f64>, config: &PrecisionConfig, points: usize) -> Vec<f64> {
    let budget = 0.5 * config.usable_bits() as f64 * std::f64::consts::LN_2;
    let beta_max = match lambda {
        Some(l) if l < 0.0 => (budget / -l).min(SAFE_BETA_CAP),
        _ => SAFE_BETA_CAP,
    };
    linear_grid(beta_max / 2.0, beta_max, points.max(2) - 1)
}

/// Largest `beta` [`safe_grid`] ever uses.
pub const SAFE_BETA_CAP: f64 = 50.0;

/// `base` with the mantissa widened (in steps of 64 bits) until
/// [`safe_grid`] reaches [`SAFE_BETA_CAP`]. Steep barriers need this: on a
/// short grid the subleading terms of `D(beta)` bias the slope below `lambda`.
pub fn precision_for(lambda: Option<f64>, base: &PrecisionConfig) -> PrecisionConfig {
    let Some(l) = lambda.filter(|l| *l < 0.0) else {
        return *base;
    };
    let usable = (2.0 * -l * SAFE_BETA_CAP / std::f64::consts::LN_2).ceil() as usize;
    let bits = (usable + 32).div_ceil(64) * 64;
    PrecisionConfig {
        mantissa_bits: base.mantissa_bits.max(bits),
        ..*base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn exact_and_double_agree_on_examples() {
        for instance in [
            examples::single_fixed_point(),
            examples::two_fixed_points(),
            examples::full_shift_and_fixed_point(),
            examples::zero_potential(),
        ] {
            Analysis::run(&instance, &Tolerances::default()).unwrap();
        }
    }

    #[test]
    fn verdicts_on_examples() {
        let config = PrecisionConfig::default();
        let tol = Tolerances::default();
        for (instance, lambda) in [
            (examples::single_fixed_point(), -1.0),
            (examples::two_fixed_points(), -1.5),
            (examples::full_shift_and_fixed_point(), -2.0),
        ] {
            let a = Analysis::run(&instance, &tol).unwrap();
            assert_eq!(a.lambda(), Some(lambda));
            let report = a
                .rate_report(&linear_grid(10.0, 30.0, 10), &config, tol.verify)
                .unwrap();
            assert!(report.verdict.pass);
            assert!(
                (report.estimate.gamma - lambda).abs() < 1e-4,
                "{}",
                report.estimate.gamma
            );
            assert!(report.verdict.diagnostics.iter().all(|d| d.holds));
        }
    }

    #[test]
    fn zero_potential_verdict_is_trivial() {
        let a = Analysis::run(&examples::zero_potential(), &Tolerances::default()).unwrap();
        let report = a
            .rate_report(&[1.0, 2.0, 3.0], &PrecisionConfig::default(), 1e-3)
            .unwrap();
        assert!(report.estimate.exact_zero);
        assert!(report.verdict.pass && report.verdict.lambda.is_none());
    }

    #[test]
    fn widened_precision_reaches_the_cap() {
        let base = PrecisionConfig::default();
        assert_eq!(precision_for(Some(-1.0), &base), base);
        assert_eq!(precision_for(None, &base), base);
        for lambda in [-1.5, -2.6, -15.0, -40.0] {
            let config = precision_for(Some(lambda), &base);
            assert_eq!(config.mantissa_bits % 64, 0);
            assert_eq!(*safe_grid(Some(lambda), &config, 4).last().unwrap(), SAFE_BETA_CAP);
        }
    }

    #[test]
    fn safe_grid_respects_precision() {
        let config = PrecisionConfig::default();
        for lambda in [Some(-0.1), Some(-1.5), Some(-40.0), None] {
            let grid = safe_grid(lambda, &config, 6);
            assert_eq!(grid.len(), 6);
            let top = *grid.last().unwrap();
            assert!(config.check_range(lambda, top).is_ok());
            assert!(top <= 50.0);
        }
    }

    #[test]
    fn grid() {
        assert_eq!(linear_grid(1.0, 3.0, 2), vec![1.0, 2.0, 3.0]);
        assert_eq!(linear_grid(5.0, 9.0, 0), vec![5.0]);
    }
}
