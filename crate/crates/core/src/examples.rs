//! Small systems with closed-form answers, used by tests and demos.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::potential::LocallyConstantPotential;
use crate::sft::{parse_word, SymbolicSystem};
use crate::weight::Rational;

/// A symbolic system together with a potential on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub system: SymbolicSystem,
    pub potential: LocallyConstantPotential,
}

impl Instance {
    /// Build from integer cylinder values given as `(word, value)` pairs.
    pub fn from_integers(system: SymbolicSystem, range: usize, values: &[(&str, i64)]) -> Self {
        let values: BTreeMap<_, _> = values
            .iter()
            .map(|(w, v)| {
                (
                    parse_word(w).expect("example words are digit strings"),
                    Rational::from_integer(BigInt::from(*v)),
                )
            })
            .collect();
        let potential = LocallyConstantPotential::new(range, values).expect("example range is positive");
        potential
            .check_against(&system)
            .expect("example potentials cover every admissible word");
        Self { system, potential }
    }
}

fn full_shift(d: usize) -> SymbolicSystem {
    SymbolicSystem::full_shift(d).expect("alphabet size >= 2")
}

/// Full 2-shift, range 1, `A = {0: 0, 1: -1}`. `P(beta) = log(1 + e^-beta)`,
/// one component `{0^inf}`, `lambda = -1`.
pub fn single_fixed_point() -> Instance {
    Instance::from_integers(full_shift(2), 1, &[("0", 0), ("1", -1)])
}

/// Full 2-shift, range 2, `A = {00: 0, 01: -1, 10: -2, 11: 0}`. Two fixed
/// points with barriers `-1` and `-2`; `P(beta) = log(1 + e^(-1.5 beta))`,
/// `lambda = -1.5`.
pub fn two_fixed_points() -> Instance {
    Instance::from_integers(full_shift(2), 2, &[("00", 0), ("01", -1), ("10", -2), ("11", 0)])
}

/// Full 3-shift, range 2, `A = 0` on `{00, 01, 10, 11, 22}` and `-1` on the
/// pairs mixing `{0, 1}` with `2`. The Aubry set is the full `{0,1}`-shift
/// (entropy `log 2`) plus the fixed point `2^inf` (entropy 0); `lambda = -2`.
pub fn full_shift_and_fixed_point() -> Instance {
    Instance::from_integers(
        full_shift(3),
        2,
        &[
            ("00", 0),
            ("01", 0),
            ("10", 0),
            ("11", 0),
            ("22", 0),
            ("02", -1),
            ("12", -1),
            ("20", -1),
            ("21", -1),
        ],
    )
}

/// Full 2-shift with the zero potential at range 2: the Aubry set is the
/// whole shift and no barrier is defined.
pub fn zero_potential() -> Instance {
    Instance::from_integers(full_shift(2), 2, &[("00", 0), ("01", 0), ("10", 0), ("11", 0)])
}
