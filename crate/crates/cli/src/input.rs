//! System description files: a subshift, a potential on its `k`-words and
//! optional run settings, stored as JSON.
//!
//! ```json
//! {
//!   "alphabet": 2,
//!   "transitions": [[1, 1], [1, 1]],
//!   "potential": { "range": 2, "values": { "00": 0, "01": -1, "10": "-2", "11": "0/1" } },
//!   "options": { "precision_bits": 256, "beta_min": 25, "beta_max": 50, "beta_steps": 10 }
//! }
//! ```
//!
//! Potential values are JSON numbers or strings holding a decimal or an exact
//! rational `"p/q"`; both are read exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ergopt::examples::Instance;
use ergopt::potential::{LocallyConstantPotential, PotentialError};
use ergopt::pressure::PrecisionConfig;
use ergopt::sft::{format_word, parse_word, recode, SymbolicSystem};
use ergopt::weight::{format_rational, parse_rational};
use ergopt::{Rational, Tolerances};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field {field}: {message}")]
    Field { field: String, message: String },
    #[error("missing potential values for {}", .0.join(", "))]
    MissingWords(Vec<String>),
    #[error("invalid system: {0}")]
    Invalid(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    alphabet: usize,
    transitions: Vec<Vec<u8>>,
    potential: PotentialFile,
    #[serde(default, skip_serializing_if = "RunOptions::is_empty")]
    options: RunOptions,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    range: usize,
    values: BTreeMap<String, Value>,
}

/// Settings a file may carry; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_verify: Option<f64>,
}

impl RunOptions {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn tolerances(&self) -> Tolerances {
        let defaults = Tolerances::default();
        Tolerances {
            zero: self.tol_zero.unwrap_or(defaults.zero),
            entropy: self.tol_h.unwrap_or(defaults.entropy),
            verify: self.tol_verify.unwrap_or(defaults.verify),
            ..defaults
        }
    }

    pub fn precision(&self) -> PrecisionConfig {
        self.precision_bits
            .map_or_else(PrecisionConfig::default, PrecisionConfig::with_bits)
    }
}

/// A validated system description.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub instance: Instance,
    pub options: RunOptions,
}

impl SystemSpec {
    pub fn new(instance: Instance, options: RunOptions) -> Self {
        Self { instance, options }
    }

    /// JSON text that [`parse_system_str`] reads back to the same spec.
    /// Integer values are written as numbers, others as `"p/q"` strings.
    pub fn to_json(&self) -> String {
        let system = &self.instance.system;
        let potential = &self.instance.potential;
        let values = potential
            .values()
            .iter()
            .map(|(word, value)| {
                let text = format_rational(value);
                let json = match text.parse::<i64>() {
                    Ok(n) => Value::from(n),
                    Err(_) => Value::String(text),
                };
                (format_word(word), json)
            })
            .collect();
        let file = SystemFile {
            alphabet: system.alphabet_size(),
            transitions: system.transition_rows(),
            potential: PotentialFile {
                range: potential.range(),
                values,
            },
            options: self.options.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("system files serialize");
        text.push('\n');
        text
    }
}

pub fn parse_system_file(path: &Path) -> Result<SystemSpec, SpecError> {
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_system_str(&text)
}

pub fn parse_system_str(text: &str) -> Result<SystemSpec, SpecError> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let system =
        SymbolicSystem::new(file.alphabet, &file.transitions).map_err(|e| SpecError::Invalid(e.to_string()))?;

    let mut values = BTreeMap::new();
    for (key, raw) in &file.potential.values {
        let field = format!("potential.values.\"{key}\"");
        let word = parse_word(key).ok_or_else(|| SpecError::Field {
            field: field.clone(),
            message: "cylinder words are digit strings or comma-separated symbols".into(),
        })?;
        if let Some(&s) = word.iter().find(|&&s| s >= file.alphabet) {
            return Err(SpecError::Field {
                field,
                message: format!("symbol {s} is outside the alphabet of size {}", file.alphabet),
            });
        }
        values.insert(word, parse_value(raw, &field)?);
    }
    let potential = LocallyConstantPotential::new(file.potential.range, values).map_err(|e| match e {
        PotentialError::WrongCylinderLength { ref word, .. } => SpecError::Field {
            field: format!("potential.values.\"{word}\""),
            message: e.to_string(),
        },
        e => SpecError::Field {
            field: "potential.range".into(),
            message: e.to_string(),
        },
    })?;
    potential.check_against(&system).map_err(|e| match e {
        PotentialError::MissingCylinderValue(words) => SpecError::MissingWords(words),
        e => SpecError::Invalid(e.to_string()),
    })?;
    recode(&system, potential.range()).map_err(|e| SpecError::Invalid(e.to_string()))?;

    let options = file.options;
    if let Some(bits) = options.precision_bits {
        options.precision().validate().map_err(|e| SpecError::Field {
            field: "options.precision_bits".into(),
            message: format!("{bits}: {e}"),
        })?;
    }
    Ok(SystemSpec::new(Instance { system, potential }, options))
}

fn parse_value(raw: &Value, field: &str) -> Result<Rational, SpecError> {
    let text = match raw {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => {
            return Err(SpecError::Field {
                field: field.to_string(),
                message: format!("expected a number or a \"p/q\" string, found {other}"),
            })
        }
    };
    parse_rational(&text).ok_or_else(|| SpecError::Field {
        field: field.to_string(),
        message: format!("cannot read {text:?} as a number"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E3: &str = r#"{
        "alphabet": 2,
        "transitions": [[1, 1], [1, 1]],
        "potential": { "range": 2, "values": { "00": 0, "01": -1, "10": -2, "11": 0 } }
    }"#;

    #[test]
    fn reads_four_cylinder_values() {
        let spec = parse_system_str(E3).unwrap();
        assert_eq!(spec.instance.potential.values().len(), 4);
        assert_eq!(spec.instance, ergopt::examples::two_fixed_points());
    }

    #[test]
    fn lists_every_missing_word() {
        let text = E3.replace(r#""10": -2, "#, "").replace(r#", "11": 0"#, "");
        let err = parse_system_str(&text).unwrap_err();
        let SpecError::MissingWords(words) = &err else {
            panic!("{err}");
        };
        assert_eq!(words, &["10", "11"]);
        assert!(err.to_string().contains("10, 11"));
    }

    #[test]
    fn rational_strings_are_exact() {
        let text = E3
            .replace(r#""01": -1"#, "\"01\": \"\u{2212}3/2\"")
            .replace(r#""10": -2"#, r#""10": 0.1"#);
        let spec = parse_system_str(&text).unwrap();
        let p = &spec.instance.potential;
        assert_eq!(p.value(&[0, 1]).unwrap(), &parse_rational("-3/2").unwrap());
        assert_eq!(p.value(&[1, 0]).unwrap(), &parse_rational("1/10").unwrap());
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = parse_system_str("{\n  \"alphabet\": 2,\n  \"transitions\": [[1, 1], [1 1]]\n}").unwrap_err();
        let SpecError::Parse { line, .. } = err else {
            panic!("{err}");
        };
        assert_eq!(line, 3);
    }

    #[test]
    fn bad_values_name_their_field() {
        let text = E3.replace(r#""11": 0"#, r#""11": "one""#);
        let err = parse_system_str(&text).unwrap_err();
        assert!(err.to_string().contains("potential.values.\"11\""), "{err}");
        let text = E3.replace(r#""11": 0"#, r#""12": 0"#);
        assert!(matches!(parse_system_str(&text), Err(SpecError::Field { .. })));
    }

    #[test]
    fn range_one_needs_the_full_shift() {
        let text = r#"{"alphabet": 2, "transitions": [[1, 1], [1, 0]],
            "potential": {"range": 1, "values": {"0": 0, "1": -1}}}"#;
        assert!(matches!(parse_system_str(text), Err(SpecError::Invalid(_))));
    }

    #[test]
    fn serialization_round_trips() {
        let mut spec = parse_system_str(&E3.replace(r#""01": -1"#, r#""01": "-7/3""#)).unwrap();
        spec.options.beta_max = Some(40.0);
        spec.options.precision_bits = Some(320);
        let again = parse_system_str(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.to_json(), spec.to_json());
    }
}
