//! Extended-precision pressure of the normalized potential and the decay
//! rate of `D(beta) = P(beta) - h`.
//!
//! `D(beta)` behaves like `C e^(gamma beta)` with `gamma <= 0`, so it leaves
//! the double-precision range long before the asymptotics are visible. All
//! transfer-operator work is therefore done with binary floats of a
//! configurable mantissa (256 bits by default), and the Perron root comes
//! from the bracketing iteration in [`crate::perron`], which stays reliable
//! when the spectral gap collapses at large `beta`.

use std::cmp::Ordering;
use std::fmt;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::Sign;
use rayon::prelude::*;
use thiserror::Error;

use crate::barriers::{ExtCostMatrix, RateBound};
use crate::maxplus::MaxPlus;
use crate::perron::{perron_root, PerronError, Real};
use crate::sft::WeightedEdgeGraph;
use crate::weight::{Rational, Weight};

type Float = FBig<HalfEven, 2>;
type Decimal = FBig<HalfEven, 10>;

/// Significant digits used when printing extended-precision values.
pub const PRINT_DIGITS: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PressureError {
    #[error("mantissa of {bits} bits is too small; use at least 64")]
    MantissaTooSmall { bits: usize },
    #[error(
        "a {bits}-bit mantissa cannot resolve the residual at beta = {beta}: it is expected \
         near e^({exponent:.3}) = 2^-{needed_bits_raw:.0}, below the 2^-{usable} resolution. \
         Rerun with --precision-bits {suggested_bits} or lower --beta-max to {max_beta:.3}"
    )]
    InsufficientPrecision {
        bits: usize,
        beta: f64,
        exponent: f64,
        needed_bits_raw: f64,
        usable: usize,
        suggested_bits: usize,
        max_beta: f64,
    },
    #[error("pressure iteration did not converge at beta = {beta} after {iterations} iterations (relative bracket {width:e})")]
    NoConvergence { beta: f64, iterations: usize, width: f64 },
    #[error("residual at beta = {beta} is negative ({value:e}); P(beta) < h")]
    NegativeResidual { beta: f64, value: f64 },
    #[error("need at least 3 trusted sweep points, got {trusted}")]
    InsufficientPoints { trusted: usize },
    #[error("log-sum-exp of an empty term list")]
    EmptyTermList,
    #[error("beta must be finite and nonnegative, got {0}")]
    InvalidBeta(f64),
    #[error("transfer matrix is empty")]
    EmptyGraph,
    #[error("vector has {got} entries, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Binary floating-point number with a fixed mantissa width.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct ExtReal(Float);

impl ExtReal {
    pub fn from_f64(value: f64, bits: usize) -> Self {
        let f = Float::try_from(value).expect("finite f64");
        ExtReal(f.with_precision(bits).value())
    }

    pub fn from_i64(value: i64, bits: usize) -> Self {
        ExtReal(Float::from(value).with_precision(bits).value())
    }

    pub fn from_rational(value: &Rational, bits: usize) -> Self {
        let num = Float::from(to_ibig(value.numer())).with_precision(bits).value();
        let den = Float::from(to_ibig(value.denom())).with_precision(bits).value();
        ExtReal(num / den)
    }

    pub fn zero(bits: usize) -> Self {
        ExtReal(Float::ZERO.with_precision(bits).value())
    }

    pub fn one(bits: usize) -> Self {
        ExtReal(Float::ONE.with_precision(bits).value())
    }

    pub fn bits(&self) -> usize {
        self.0.precision()
    }

    /// `2^exponent` at the given precision.
    pub fn pow2(exponent: i64, bits: usize) -> Self {
        let two = Float::from(2).with_precision(bits).value();
        ExtReal(two.powi(IBig::from(exponent)))
    }

    pub fn exp(&self) -> Self {
        ExtReal(self.0.exp())
    }

    /// Natural log; `-inf` is returned as `None`.
    pub fn ln(&self) -> Option<Self> {
        if self.0 <= Float::ZERO {
            None
        } else {
            Some(ExtReal(self.0.ln()))
        }
    }

    pub fn neg(&self) -> Self {
        ExtReal(-self.0.clone())
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Float::ZERO
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// Scientific notation with `digits` significant decimal digits.
    pub fn to_sci(&self, digits: usize) -> String {
        if self.0 == Float::ZERO {
            return "0".to_string();
        }
        let d: Decimal = self.0.clone().with_base_and_precision::<10>(digits).value();
        format!("{d:e}")
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(PRINT_DIGITS))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(PRINT_DIGITS))
    }
}

fn to_ibig(value: &num_bigint::BigInt) -> IBig {
    let (sign, bytes) = value.to_bytes_le();
    let magnitude = IBig::from(UBig::from_le_bytes(&bytes));
    if sign == Sign::Minus {
        -magnitude
    } else {
        magnitude
    }
}

impl Real for ExtReal {
    fn zero_like(&self) -> Self {
        ExtReal::zero(self.bits())
    }
    fn one_like(&self) -> Self {
        ExtReal::one(self.bits())
    }
    fn add(&self, rhs: &Self) -> Self {
        ExtReal(&self.0 + &rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        ExtReal(&self.0 - &rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        ExtReal(&self.0 * &rhs.0)
    }
    fn div(&self, rhs: &Self) -> Self {
        ExtReal(&self.0 / &rhs.0)
    }
    fn abs(&self) -> Self {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }
    fn is_zero(&self) -> bool {
        self.0 == Float::ZERO
    }
    fn to_f64(&self) -> f64 {
        ExtReal::to_f64(self)
    }
}

/// Edge weights that can be lifted to extended precision.
pub trait ExtWeight: Weight {
    fn to_ext(&self, bits: usize) -> ExtReal;
}

impl ExtWeight for f64 {
    fn to_ext(&self, bits: usize) -> ExtReal {
        ExtReal::from_f64(*self, bits)
    }
}

impl ExtWeight for Rational {
    fn to_ext(&self, bits: usize) -> ExtReal {
        ExtReal::from_rational(self, bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionConfig {
    pub mantissa_bits: usize,
    /// Largest relative Perron bracket accepted for a pressure value.
    pub power_iter_rel_tol: f64,
    pub max_iters: usize,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            mantissa_bits: 256,
            power_iter_rel_tol: 1e-40,
            max_iters: 100_000,
        }
    }
}

impl PrecisionConfig {
    pub fn with_bits(mantissa_bits: usize) -> Self {
        Self {
            mantissa_bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PressureError> {
        if self.mantissa_bits < 64 {
            return Err(PressureError::MantissaTooSmall {
                bits: self.mantissa_bits,
            });
        }
        Ok(())
    }

    /// Widest accepted Perron bracket: the configured tolerance, relaxed to
    /// what the mantissa can actually deliver.
    pub fn accepted_width(&self) -> f64 {
        self.power_iter_rel_tol.max(2f64.powi(24 - self.mantissa_bits as i32))
    }

    /// Bits a residual may occupy: 32 guard bits cover the Perron bracket
    /// (resolved to `2^-(bits - 16)`) and the 64x margin the sweep demands
    /// before trusting a residual.
    pub fn usable_bits(&self) -> usize {
        self.mantissa_bits - 32
    }

    /// Reject `beta_max` when the residual `~ e^(lambda beta)` would fall
    /// below `2^-(bits - 32)`. `lambda = None` (no finite barrier cycle)
    /// gives no estimate and always passes.
    pub fn check_range(&self, lambda: Option<f64>, beta_max: f64) -> Result<(), PressureError> {
        self.validate()?;
        let Some(lambda) = lambda.filter(|l| *l < 0.0) else {
            return Ok(());
        };
        let exponent = lambda * beta_max;
        let needed = -exponent / std::f64::consts::LN_2;
        let usable = self.usable_bits();
        if needed > usable as f64 {
            let suggested = (needed.ceil() as usize + 32).div_ceil(64) * 64 + 64;
            return Err(PressureError::InsufficientPrecision {
                bits: self.mantissa_bits,
                beta: beta_max,
                exponent,
                needed_bits_raw: needed,
                usable,
                suggested_bits: suggested,
                max_beta: usable as f64 * std::f64::consts::LN_2 / -lambda,
            });
        }
        Ok(())
    }
}

/// Edges lifted to extended precision, ready to build transfer matrices.
#[derive(Debug, Clone)]
pub struct TransferModel {
    vertex_count: usize,
    /// `(tail, head, weight)`
    edges: Vec<(usize, usize, ExtReal)>,
    bits: usize,
    all_zero: bool,
}

impl TransferModel {
    pub fn new<W: ExtWeight>(graph: &WeightedEdgeGraph<W>, bits: usize) -> Self {
        let edges = graph
            .edges()
            .iter()
            .map(|e| (e.tail, e.head, e.weight.to_ext(bits)))
            .collect();
        Self {
            vertex_count: graph.vertex_count(),
            edges,
            bits,
            all_zero: graph.weights().all(|w| *w == W::zero()),
        }
    }

    /// Whether every weight is exactly zero, in which case `P(beta) = h` for all `beta`.
    pub fn is_identically_zero(&self) -> bool {
        self.all_zero
    }

    /// `M[head][tail] = sum of e^(beta w(e))`, so that `out = M in`.
    pub fn matrix(&self, beta: f64) -> Vec<Vec<ExtReal>> {
        let b = ExtReal::from_f64(beta, self.bits);
        let zero = ExtReal::zero(self.bits);
        let mut m = vec![vec![zero; self.vertex_count]; self.vertex_count];
        for (tail, head, w) in &self.edges {
            let term = b.mul(w).exp();
            m[*head][*tail] = m[*head][*tail].add(&term);
        }
        m
    }
}

fn check_beta(beta: f64) -> Result<(), PressureError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(PressureError::InvalidBeta(beta))
    }
}

/// `out(v) = sum over edges e into v of e^(beta w(e)) in(tail(e))`.
pub fn transfer_apply<W: ExtWeight>(
    graph: &WeightedEdgeGraph<W>,
    beta: f64,
    vector: &[ExtReal],
    config: &PrecisionConfig,
) -> Result<Vec<ExtReal>, PressureError> {
    check_beta(beta)?;
    if vector.len() != graph.vertex_count() {
        return Err(PressureError::DimensionMismatch {
            expected: graph.vertex_count(),
            got: vector.len(),
        });
    }
    let bits = config.mantissa_bits;
    let b = ExtReal::from_f64(beta, bits);
    let mut out = vec![ExtReal::zero(bits); graph.vertex_count()];
    for e in graph.edges() {
        let term = b.mul(&e.weight.to_ext(bits)).exp().mul(&vector[e.tail]);
        out[e.head] = out[e.head].add(&term);
    }
    Ok(out)
}

/// A Perron root logarithm with the relative width of its bracket.
#[derive(Debug, Clone)]
pub struct LogRoot {
    pub value: ExtReal,
    /// `(upper - lower) / upper` of the root bracket.
    pub rel_width: f64,
    pub iterations: usize,
    /// Right Perron vector, sup-norm 1.
    pub vector: Vec<ExtReal>,
}

fn log_perron(matrix: &[Vec<ExtReal>], beta: f64, config: &PrecisionConfig) -> Result<LogRoot, PressureError> {
    let bits = config.mantissa_bits;
    let target = ExtReal::pow2(16 - bits as i64, bits);
    let root = perron_root(matrix, &target, config.max_iters).map_err(|err| match err {
        PerronError::NoConvergence { iterations, width } => PressureError::NoConvergence {
            beta,
            iterations,
            width,
        },
        PerronError::Empty | PerronError::NotSquare => PressureError::EmptyGraph,
    })?;
    let rel_width = root.upper.sub(&root.lower).div(&root.upper).to_f64();
    if rel_width > config.accepted_width() {
        return Err(PressureError::NoConvergence {
            beta,
            iterations: root.iterations,
            width: rel_width,
        });
    }
    let value = root.value().ln().ok_or(PressureError::EmptyGraph)?;
    Ok(LogRoot {
        value,
        rel_width,
        iterations: root.iterations,
        vector: root.vector,
    })
}

/// `P(beta)` of the potential carried by `graph` (normally the normalized
/// one; the original pressure is `P + beta m`).
pub fn pressure<W: ExtWeight>(
    graph: &WeightedEdgeGraph<W>,
    beta: f64,
    config: &PrecisionConfig,
) -> Result<LogRoot, PressureError> {
    config.validate()?;
    check_beta(beta)?;
    let model = TransferModel::new(graph, config.mantissa_bits);
    log_perron(&model.matrix(beta), beta, config)
}

/// Topological entropy of an irreducible count matrix in extended precision.
/// A single cycle has entropy exactly 0.
pub fn extended_entropy(counts: &[Vec<u32>], config: &PrecisionConfig) -> Result<LogRoot, PressureError> {
    config.validate()?;
    let bits = config.mantissa_bits;
    let n = counts.len();
    if n == 0 {
        return Err(PressureError::EmptyGraph);
    }
    let total: u64 = counts.iter().flatten().map(|&c| u64::from(c)).sum();
    if total == n as u64 {
        return Ok(LogRoot {
            value: ExtReal::zero(bits),
            rel_width: 0.0,
            iterations: 0,
            vector: vec![ExtReal::one(bits); n],
        });
    }
    let matrix: Vec<Vec<ExtReal>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| ExtReal::from_i64(i64::from(c), bits)).collect())
        .collect();
    log_perron(&matrix, 0.0, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trust {
    Trusted,
    /// Residual too close to the arithmetic resolution to be used.
    Untrusted,
    /// `P = h` holds exactly (the normalized potential vanishes identically).
    ExactZero,
}

impl fmt::Display for Trust {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trust::Trusted => "true",
            Trust::Untrusted => "false",
            Trust::ExactZero => "exact-zero",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PressurePoint {
    pub beta: f64,
    pub pressure: ExtReal,
    pub residual: ExtReal,
    /// `log D(beta)`; `-inf` when the residual is zero.
    pub log_residual: f64,
    pub log_residual_ext: Option<ExtReal>,
    pub trust: Trust,
    pub rel_width: f64,
}

/// `P(beta)` and `D(beta) = P(beta) - h` on a grid, evaluated in parallel.
pub fn pressure_sweep<W: ExtWeight>(
    graph: &WeightedEdgeGraph<W>,
    betas: &[f64],
    h: &LogRoot,
    config: &PrecisionConfig,
) -> Result<Vec<PressurePoint>, PressureError> {
    config.validate()?;
    let bits = config.mantissa_bits;
    let model = TransferModel::new(graph, bits);
    let floor = ExtReal::pow2(-(config.mantissa_bits as i64 - 8), bits);
    betas
        .par_iter()
        .map(|&beta| {
            check_beta(beta)?;
            if model.is_identically_zero() {
                return Ok(PressurePoint {
                    beta,
                    pressure: h.value.clone(),
                    residual: ExtReal::zero(bits),
                    log_residual: f64::NEG_INFINITY,
                    log_residual_ext: None,
                    trust: Trust::ExactZero,
                    rel_width: h.rel_width,
                });
            }
            let p = log_perron(&model.matrix(beta), beta, config)?;
            let residual = p.value.sub(&h.value);
            let uncertainty = ExtReal::from_f64(64.0 * (p.rel_width + h.rel_width), bits);
            let threshold = if uncertainty > floor {
                uncertainty
            } else {
                floor.clone()
            };
            if residual.is_negative() && residual.abs() > threshold {
                return Err(PressureError::NegativeResidual {
                    beta,
                    value: residual.to_f64(),
                });
            }
            let trust = if residual >= threshold {
                Trust::Trusted
            } else {
                Trust::Untrusted
            };
            let log_residual_ext = residual.ln();
            Ok(PressurePoint {
                beta,
                pressure: p.value,
                log_residual: log_residual_ext.as_ref().map_or(f64::NEG_INFINITY, ExtReal::to_f64),
                log_residual_ext,
                residual,
                trust,
                rel_width: p.rel_width,
            })
        })
        .collect()
}

/// Slopes of `log D` against `beta` and the resulting rate estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Per point: slope from the previous trusted point, if both are trusted.
    pub slopes: Vec<Option<f64>>,
    /// Slope between the two largest trusted `beta`; `-inf` when `P = h` exactly.
    pub gamma: f64,
    pub gamma_betas: Option<(f64, f64)>,
    /// `(1/beta) log D(beta)` at the largest trusted `beta` (biased by `log C / beta`).
    pub scaled_log: Option<f64>,
    pub exact_zero: bool,
}

pub fn empirical_rate(points: &[PressurePoint]) -> Result<RateEstimate, PressureError> {
    if !points.is_empty() && points.iter().all(|p| p.trust == Trust::ExactZero) {
        return Ok(RateEstimate {
            slopes: vec![None; points.len()],
            gamma: f64::NEG_INFINITY,
            gamma_betas: None,
            scaled_log: None,
            exact_zero: true,
        });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].beta.partial_cmp(&points[b].beta).unwrap_or(Ordering::Equal));
    let trusted: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| points[i].trust == Trust::Trusted)
        .collect();
    let slope = |a: usize, b: usize| -> f64 {
        let (pa, pb) = (&points[a], &points[b]);
        let la = pa.log_residual_ext.as_ref().expect("trusted residuals are positive");
        let lb = pb.log_residual_ext.as_ref().expect("trusted residuals are positive");
        lb.sub(la).to_f64() / (pb.beta - pa.beta)
    };
    let mut slopes = vec![None; points.len()];
    for pair in trusted.windows(2) {
        if points[pair[1]].beta > points[pair[0]].beta {
            slopes[pair[1]] = Some(slope(pair[0], pair[1]));
        }
    }
    if trusted.len() < 3 {
        return Err(PressureError::InsufficientPoints { trusted: trusted.len() });
    }
    let (a, b) = (trusted[trusted.len() - 2], trusted[trusted.len() - 1]);
    let last = &points[b];
    Ok(RateEstimate {
        slopes,
        gamma: slope(a, b),
        gamma_betas: Some((points[a].beta, last.beta)),
        scaled_log: (last.beta > 0.0).then(|| last.log_residual / last.beta),
        exact_zero: false,
    })
}

/// One inequality `gamma + U(Ω_i) >= S^ext(j, i) + U(Ω_j)` for a pair of
/// maximal-entropy components, evaluated with the subaction `U` read off the
/// transfer-operator eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDiagnostic {
    pub from: usize,
    pub to: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub tol: f64,
    pub diagnostics: Vec<PairDiagnostic>,
}

/// Caveat printed next to the per-pair diagnostic.
pub const DIAGNOSTIC_CAVEAT: &str = "per-pair inequalities use the subaction obtained as a limit of \
     (1/beta) log H_beta along the sweep; they are informative only and never decide the verdict";

/// PASS iff `gamma >= lambda - tol`. Without a finite barrier cycle the bound
/// is `-inf` and the check passes trivially.
pub fn verify_rate_bound<W: Weight>(
    rate: &RateEstimate,
    bound: &RateBound<W>,
    ext: &ExtCostMatrix<W>,
    component_subaction: &[f64],
    tol: f64,
) -> Verdict {
    let lambda = bound.lambda.finite().map(Weight::to_f64);
    let pass = match lambda {
        None => true,
        Some(l) => rate.gamma >= l - tol,
    };
    let mut diagnostics = Vec::new();
    if rate.gamma.is_finite() {
        for &j in &bound.restricted {
            for &i in &bound.restricted {
                if let MaxPlus::Finite(s) = ext.get(j, i) {
                    let lhs = rate.gamma + component_subaction[i];
                    let rhs = s.to_f64() + component_subaction[j];
                    diagnostics.push(PairDiagnostic {
                        from: j,
                        to: i,
                        lhs,
                        rhs,
                        holds: lhs >= rhs - tol,
                    });
                }
            }
        }
    }
    Verdict {
        pass,
        gamma: rate.gamma,
        lambda,
        tol,
        diagnostics,
    }
}

/// Sweep, rate estimate and verdict together.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub points: Vec<PressurePoint>,
    pub estimate: RateEstimate,
    pub verdict: Verdict,
}

/// Dominant eigenfunction `H_beta` of the transfer operator.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    /// Positive, sup-norm 1.
    pub vector: Vec<ExtReal>,
    /// `(1/beta) log H_beta` per vertex (all zero at `beta = 0`).
    pub log_scaled: Vec<f64>,
}

pub fn eigenfunction<W: ExtWeight>(
    graph: &WeightedEdgeGraph<W>,
    beta: f64,
    config: &PrecisionConfig,
) -> Result<Eigenfunction, PressureError> {
    let root = pressure(graph, beta, config)?;
    let log_scaled = root
        .vector
        .iter()
        .map(|h| {
            if beta > 0.0 {
                h.ln().map_or(f64::NEG_INFINITY, |l| l.to_f64() / beta)
            } else {
                0.0
            }
        })
        .collect();
    Ok(Eigenfunction {
        vector: root.vector,
        log_scaled,
    })
}

/// `max_v |V(v) - max over edges e into v of (w(e) + V(tail e))|`.
pub fn calibration_defect<W: Weight>(graph: &WeightedEdgeGraph<W>, values: &[f64]) -> f64 {
    graph
        .incoming()
        .iter()
        .enumerate()
        .map(|(v, incoming)| {
            let best = incoming
                .iter()
                .map(|&e| {
                    let edge = &graph.edges()[e];
                    edge.weight.to_f64() + values[edge.tail]
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (values[v] - best).abs()
        })
        .fold(0.0, f64::max)
}

/// `(1/n) log sum_i e^(n (phi_i + psi_i))`, evaluated by subtracting the
/// largest exponent. Lies in `[max, max + log(count)/n]`.
pub fn scaled_log_sum_exp(terms: &[(f64, f64)], n: f64) -> Result<f64, PressureError> {
    let top = terms
        .iter()
        .map(|(phi, psi)| phi + psi)
        .fold(f64::NEG_INFINITY, f64::max);
    if terms.is_empty() {
        return Err(PressureError::EmptyTermList);
    }
    if top == f64::NEG_INFINITY {
        return Ok(top);
    }
    let sum: f64 = terms.iter().map(|(phi, psi)| (n * (phi + psi - top)).exp()).sum();
    Ok(top + sum.ln() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::potential::{attach_potential, normalize};
    use crate::sft::recode;
    use crate::Tolerances;

    fn normalized(instance: &examples::Instance) -> WeightedEdgeGraph<Rational> {
        let g: WeightedEdgeGraph<Rational> = attach_potential(
            &recode(&instance.system, instance.potential.range()).unwrap(),
            &instance.potential,
        )
        .unwrap();
        normalize(&g, &Tolerances::default()).unwrap().normalized_graph(&g)
    }

    fn ext(x: f64) -> ExtReal {
        ExtReal::from_f64(x, 256)
    }

    /// `log(1 + e^(-c beta))` in extended precision.
    fn closed_form(c: f64, beta: f64) -> ExtReal {
        let one = ExtReal::one(256);
        one.add(&ext(-c * beta).exp()).ln().unwrap()
    }

    #[test]
    fn transfer_apply_examples() {
        let g = normalized(&examples::two_fixed_points());
        let config = PrecisionConfig::default();
        let out = transfer_apply(&g, 1.0, &[ext(1.0), ext(1.0)], &config).unwrap();
        assert!((out[0].to_f64() - (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!((out[1].to_f64() - (1.0 + (-1f64).exp())).abs() < 1e-15);
        let g = normalized(&examples::zero_potential());
        let out = transfer_apply(&g, 1.0, &[ext(1.0), ext(1.0)], &config).unwrap();
        assert_eq!((out[0].to_f64(), out[1].to_f64()), (2.0, 2.0));
    }

    #[test]
    fn pressure_closed_forms() {
        let config = PrecisionConfig::default();
        let tiny = ExtReal::pow2(-(256 - 12), 256);
        let e2 = normalized(&examples::single_fixed_point());
        let e3 = normalized(&examples::two_fixed_points());
        for beta in [0.0, 1.0, 10.0, 30.0, 50.0] {
            let p = pressure(&e2, beta, &config).unwrap().value;
            assert!(p.sub(&closed_form(1.0, beta)).abs() <= tiny, "beta {beta}");
            let p = pressure(&e3, beta, &config).unwrap().value;
            assert!(p.sub(&closed_form(1.5, beta)).abs() <= tiny, "beta {beta}");
        }
        let p = pressure(&e2, 1.0, &config).unwrap().value.to_f64();
        assert!((p - 0.313_261_687_518_222_8).abs() < 1e-15);
    }

    #[test]
    fn pressure_at_zero_is_entropy() {
        let g = normalized(&examples::full_shift_and_fixed_point());
        let p = pressure(&g, 0.0, &PrecisionConfig::default()).unwrap().value;
        assert!((p.to_f64() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn extended_entropy_values() {
        let config = PrecisionConfig::default();
        let h = extended_entropy(&[vec![1, 1], vec![1, 1]], &config).unwrap();
        let ln2 = ExtReal::from_i64(2, 256).ln().unwrap();
        assert!(h.value.sub(&ln2).abs() <= ExtReal::pow2(-240, 256));
        let h = extended_entropy(&[vec![0, 1], vec![1, 0]], &config).unwrap();
        assert!(h.value.is_zero());
    }

    #[test]
    fn sweep_residuals_and_slopes() {
        let config = PrecisionConfig::default();
        let g = normalized(&examples::single_fixed_point());
        let h = extended_entropy(&[vec![1]], &config).unwrap();
        let points = pressure_sweep(&g, &[10.0, 20.0, 30.0, 40.0], &h, &config).unwrap();
        assert!((points[0].residual.to_f64() / 4.5398899e-5 - 1.0).abs() < 1e-6);
        assert!((points[1].residual.to_f64() / 2.0611536e-9 - 1.0).abs() < 1e-6);
        let rate = empirical_rate(&points).unwrap();
        assert!((rate.gamma + 1.0).abs() < 1e-12);
        assert_eq!(rate.slopes[0], None);

        let g = normalized(&examples::two_fixed_points());
        let points = pressure_sweep(&g, &[20.0, 30.0, 40.0], &h, &config).unwrap();
        assert!((points[0].residual.to_f64() / 9.357623e-14 - 1.0).abs() < 1e-6);
        let rate = empirical_rate(&points).unwrap();
        assert!((rate.gamma + 1.5).abs() < 1e-12);
    }

    #[test]
    fn identically_zero_potential_gives_exact_zero_residuals() {
        let config = PrecisionConfig::default();
        let g = normalized(&examples::zero_potential());
        let h = extended_entropy(&[vec![1, 1], vec![1, 1]], &config).unwrap();
        let points = pressure_sweep(&g, &[1.0, 2.0, 3.0], &h, &config).unwrap();
        assert!(points
            .iter()
            .all(|p| p.trust == Trust::ExactZero && p.residual.is_zero()));
        let rate = empirical_rate(&points).unwrap();
        assert!(rate.exact_zero && rate.gamma == f64::NEG_INFINITY);
    }

    #[test]
    fn tiny_residuals_are_untrusted() {
        let config = PrecisionConfig::with_bits(64);
        let g = normalized(&examples::single_fixed_point());
        let h = extended_entropy(&[vec![1]], &config).unwrap();
        let points = pressure_sweep(&g, &[10.0, 60.0], &h, &config).unwrap();
        assert_eq!(points[0].trust, Trust::Trusted);
        assert_eq!(points[1].trust, Trust::Untrusted);
        assert!(matches!(
            empirical_rate(&points),
            Err(PressureError::InsufficientPoints { trusted: 1 })
        ));
    }

    #[test]
    fn precision_check_is_actionable() {
        let config = PrecisionConfig::default();
        assert!(config.check_range(Some(-1.5), 50.0).is_ok());
        let err = config.check_range(Some(-2.0), 200.0).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("--precision-bits"), "{message}");
        assert!(message.contains("--beta-max"), "{message}");
        let PressureError::InsufficientPrecision {
            suggested_bits,
            max_beta,
            ..
        } = err
        else {
            panic!()
        };
        assert!(PrecisionConfig::with_bits(suggested_bits)
            .check_range(Some(-2.0), 200.0)
            .is_ok());
        assert!(config.check_range(Some(-2.0), max_beta).is_ok());
        assert!(config.check_range(None, 1e6).is_ok());
        assert!(PrecisionConfig::with_bits(32).validate().is_err());
    }

    #[test]
    fn eigenfunction_approaches_a_calibrated_subaction() {
        let config = PrecisionConfig::default();
        let g = normalized(&examples::two_fixed_points());
        let f = eigenfunction(&g, 50.0, &config).unwrap();
        assert!((f.log_scaled[0] + 0.5).abs() < 0.1);
        assert!(f.log_scaled[1].abs() < 1e-12);
        let gf: WeightedEdgeGraph<f64> = g.map_weights(|_, e| e.weight.to_f64());
        assert!(calibration_defect(&gf, &f.log_scaled) <= 2f64.ln() / 50.0);
        let g = normalized(&examples::single_fixed_point());
        assert_eq!(eigenfunction(&g, 5.0, &config).unwrap().log_scaled, vec![0.0]);
    }

    #[test]
    fn log_sum_exp_examples() {
        let v = scaled_log_sum_exp(&[(0.0, 0.0), (-1.0, 0.0)], 10.0).unwrap();
        assert!((v - (1.0 + (-10f64).exp()).ln() / 10.0).abs() < 1e-15);
        assert_eq!(scaled_log_sum_exp(&[(0.7, 0.0)], 3.0).unwrap(), 0.7);
        let v = scaled_log_sum_exp(&[(-1.0, 0.0); 3], 5.0).unwrap();
        assert!((v - (-1.0 + 3f64.ln() / 5.0)).abs() < 1e-15);
        assert_eq!(scaled_log_sum_exp(&[], 1.0), Err(PressureError::EmptyTermList));
    }

    #[test]
    fn printing_uses_25_digits() {
        let p = closed_form(1.0, 1.0);
        assert_eq!(p.to_sci(PRINT_DIGITS), "3.132616875182228340489955e-1");
        assert_eq!(ExtReal::zero(256).to_sci(PRINT_DIGITS), "0");
    }
}
