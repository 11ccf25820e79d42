//! Zero-temperature ergodic optimization for locally constant potentials on
//! one-sided subshifts of finite type.
//!
//! The pipeline recodes the shift as a weighted edge graph, normalizes the
//! potential with max-plus spectral theory, decomposes the Aubry set into
//! irreducible components, evaluates the Peierls-barrier cost matrix between
//! them and its max-plus eigenvalue `lambda`, and measures the decay rate of
//! `P(beta) - h` with extended-precision transfer operators.

pub mod aubry;
pub mod barriers;
pub mod examples;
pub mod maxplus;
pub mod oracle;
pub mod perron;
pub mod pipeline;
pub mod potential;
pub mod pressure;
mod scc;
pub mod sft;
pub mod weight;

pub use pipeline::{Analysis, AnalysisError};
pub use weight::{Rational, Weight};

/// Zero tests and thresholds shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Zero test for normalized weights, calibration and critical edges.
    pub zero: f64,
    /// Slack for `normalized weight <= 0`, relative to the largest weight.
    pub nonpositive: f64,
    /// Entropies within this of the maximum count as maximal.
    pub entropy: f64,
    /// Slack in `gamma >= lambda - tol`.
    pub verify: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: 1e-9,
            nonpositive: 1e-12,
            entropy: 1e-9,
            verify: 1e-3,
        }
    }
}
