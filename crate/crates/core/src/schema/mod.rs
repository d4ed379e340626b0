//! Rubric and scoring documents plus the verifier call grammar.

mod call;
mod pairing;
mod rubric;
mod scoring;

use alloc::format;
use alloc::string::{String, ToString};

use serde_json::{Map, Value};

pub use call::{
    looks_like_call, parse_call, parse_literal, ArgSpec, ArgType, CallErrorKind, CallParseError, Literal, Side,
    VerifierCall, VerifierName,
};
pub use pairing::{call_name_prefix, check_slot, predict_call_complete, validate_pairing, PairingReport, SlotCheck};
pub use rubric::{parse_rubric, rubric_from_value, Criterion, CriterionType, Reference, Rubric, Weight};
pub use scoring::{
    parse_scoring, parse_scoring_lenient, Credit, CriterionRecord, DiscreteCredit, InvalidCall, ScoringOutput,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("call parse error at {path}: {error}")]
    Call { path: String, error: CallParseError },
    #[error("credit at {path} must be 0, 0.5 or 1, got {value}")]
    CreditDomain { path: String, value: f64 },
}

impl SchemaError {
    pub(crate) fn violation(path: &str, message: &str) -> Self {
        SchemaError::SchemaViolation { path: path.to_string(), message: message.to_string() }
    }
}

fn string_field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a str, SchemaError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(SchemaError::violation(&format!("{path}.{key}"), "expected a string")),
        None => Err(SchemaError::violation(&format!("{path}.{key}"), "missing field")),
    }
}
