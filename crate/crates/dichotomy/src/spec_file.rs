//! JSON spec files.
//!
//! ```json
//! {
//!   "alphabet": ["a", "b"],
//!   "sided": "one",
//!   "pi0": [0.5, 0.5],
//!   "step0": [[0.5, 0.5], [0.5, 0.5]],
//!   "transitions": {
//!     "prefix": [[[0.9, 0.1], [0.2, 0.8]]],
//!     "tail": { "kind": "power_perturbation", "P": [[0.5, 0.5], [0.5, 0.5]],
//!               "Delta": [[1, -1], [-1, 1]], "c": 0.24, "alpha": 1.0 }
//!   }
//! }
//! ```
//!
//! Two-sided specs index the working state `(a, b)` as `a·|S| + b`. The
//! optional tail field `offset` shifts the power law to `(n + offset)^{-α}`;
//! it only appears in files written for shifted chains.

use std::fs;
use std::path::Path;

use dichotomy_core::matrix::{Matrix, StochasticMatrix};
use dichotomy_core::model::PowerTail;
use dichotomy_core::{Alphabet, MarkovMeasureSpec, Sidedness, TailRule, TransitionSequence};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid spec: {0}")]
    Invalid(#[from] dichotomy_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum RawSided {
    #[serde(rename = "one")]
    One,
    #[serde(rename = "two")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Constant,
    PowerPerturbation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    kind: RawKind,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "Delta", default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransitions {
    #[serde(default)]
    prefix: Vec<Vec<Vec<f64>>>,
    tail: RawTail,
}

/// The file format as plain data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    alphabet: Vec<String>,
    sided: RawSided,
    pi0: Vec<f64>,
    step0: Vec<Vec<f64>>,
    transitions: RawTransitions,
}

fn missing(field: &str) -> SpecError {
    SpecError::Invalid(dichotomy_core::Error::InvalidTail(format!(
        "power_perturbation tail needs `{field}`"
    )))
}

impl RawSpec {
    pub fn into_spec(self) -> Result<MarkovMeasureSpec, SpecError> {
        let alphabet = Alphabet::new(self.alphabet)?;
        let sidedness = match self.sided {
            RawSided::One => Sidedness::OneSided,
            RawSided::Two => Sidedness::TwoSided,
        };
        let states = sidedness.state_count(alphabet.len());
        let prefix = self
            .transitions
            .prefix
            .iter()
            .enumerate()
            .map(|(i, rows)| StochasticMatrix::from_rows(&format!("transitions.prefix[{i}]"), rows))
            .collect::<Result<Vec<_>, _>>()?;
        let tail = self.transitions.tail;
        let base = StochasticMatrix::from_rows("transitions.tail.P", &tail.p)?;
        let tail = match tail.kind {
            RawKind::Constant => {
                if tail.delta.is_some() || tail.c.is_some() || tail.alpha.is_some() || tail.offset.is_some() {
                    return Err(SpecError::Invalid(dichotomy_core::Error::InvalidTail(
                        "constant tail takes only `P`".into(),
                    )));
                }
                TailRule::Constant(base)
            }
            RawKind::PowerPerturbation => {
                let delta = tail.delta.ok_or_else(|| missing("Delta"))?;
                TailRule::PowerPerturbation(PowerTail {
                    delta: Matrix::from_rows("transitions.tail.Delta", &delta, base.dim())?,
                    base,
                    c: tail.c.ok_or_else(|| missing("c"))?,
                    alpha: tail.alpha.ok_or_else(|| missing("alpha"))?,
                    offset: tail.offset.unwrap_or(0),
                })
            }
        };
        let step0 = Matrix::from_rows("step0", &self.step0, self.step0.first().map_or(states, Vec::len))?;
        let transitions = TransitionSequence::new(prefix, tail)?;
        Ok(MarkovMeasureSpec::new(alphabet, sidedness, self.pi0, step0, transitions)?)
    }

    pub fn from_spec(spec: &MarkovMeasureSpec) -> Self {
        let transitions = spec.transitions();
        let tail = match transitions.tail() {
            TailRule::Constant(p) => RawTail {
                kind: RawKind::Constant,
                p: p.as_matrix().to_rows(),
                delta: None,
                c: None,
                alpha: None,
                offset: None,
            },
            TailRule::PowerPerturbation(t) => RawTail {
                kind: RawKind::PowerPerturbation,
                p: t.base.as_matrix().to_rows(),
                delta: Some(t.delta.to_rows()),
                c: Some(t.c),
                alpha: Some(t.alpha),
                offset: (t.offset != 0).then_some(t.offset),
            },
        };
        RawSpec {
            alphabet: spec.alphabet().symbols().to_vec(),
            sided: match spec.sidedness() {
                Sidedness::OneSided => RawSided::One,
                Sidedness::TwoSided => RawSided::Two,
            },
            pi0: spec.pi0().to_vec(),
            step0: spec.step0().to_rows(),
            transitions: RawTransitions {
                prefix: transitions.prefix().iter().map(|p| p.as_matrix().to_rows()).collect(),
                tail,
            },
        }
    }
}

pub fn parse_spec(text: &str) -> Result<MarkovMeasureSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        // serde_json appends " at line L column C"; the variant fields carry it.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        if e.is_data() {
            SpecError::Schema { line, column, message }
        } else {
            SpecError::Syntax { line, column, message }
        }
    })?;
    raw.into_spec()
}

pub fn read_spec(path: &Path) -> Result<MarkovMeasureSpec, SpecError> {
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

pub fn spec_to_json(spec: &MarkovMeasureSpec) -> String {
    serde_json::to_string_pretty(&RawSpec::from_spec(spec)).expect("spec data is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "alphabet": ["a", "b"], "sided": "one", "pi0": [0.3, 0.7],
        "step0": [[0.5, 0.5], [0.2, 0.8]],
        "transitions": {"tail": {"kind": "constant", "P": [[0.9, 0.1], [0.4, 0.6]]}}
    }"#;

    #[test]
    fn minimal_document() {
        let spec = parse_spec(MINIMAL).unwrap();
        assert_eq!(spec.state_count(), 2);
        let lambda1 = spec.canonicalize().lambda1().to_vec();
        assert!((lambda1[0] - 0.29).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_exact() {
        let spec = parse_spec(MINIMAL).unwrap();
        let again = parse_spec(&spec_to_json(&spec)).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn row_sum_error_names_row() {
        let text = MINIMAL.replace("[0.9, 0.1]", "[0.88, 0.1]");
        let err = parse_spec(&text).unwrap_err().to_string();
        assert!(err.contains("transitions.tail.P") && err.contains("row 0"), "{err}");
    }

    #[test]
    fn malformed_number_has_position() {
        let text = MINIMAL.replace("0.3,", "0.3.1,");
        match parse_spec(&text).unwrap_err() {
            SpecError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 60)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_field_is_schema_error() {
        let text = MINIMAL.replace(r#""pi0": [0.3, 0.7],"#, "");
        let err = parse_spec(&text).unwrap_err();
        assert!(matches!(err, SpecError::Schema { .. }));
        assert!(err.to_string().contains("pi0"));
    }

    #[test]
    fn two_sided_state_space() {
        let text = r#"{
            "alphabet": ["a", "b"], "sided": "two", "pi0": [0.5, 0.5],
            "step0": [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]],
            "transitions": {"tail": {"kind": "constant",
              "P": [[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]]}}
        }"#;
        assert_eq!(parse_spec(text).unwrap().state_count(), 4);
    }
}
