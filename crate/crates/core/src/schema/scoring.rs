use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::call::{looks_like_call, parse_call, CallParseError, VerifierCall};
use super::SchemaError;

/// Judge credit: no, partial or full credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiscreteCredit {
    Zero,
    Half,
    Full,
}

impl DiscreteCredit {
    pub fn value(self) -> f64 {
        match self {
            DiscreteCredit::Zero => 0.0,
            DiscreteCredit::Half => 0.5,
            DiscreteCredit::Full => 1.0,
        }
    }

    /// Exact match against 0, 0.5 and 1 (0.0 and 1.0 included).
    pub fn from_value(v: f64) -> Option<Self> {
        if v == 0.0 {
            Some(DiscreteCredit::Zero)
        } else if v == 0.5 {
            Some(DiscreteCredit::Half)
        } else if v == 1.0 {
            Some(DiscreteCredit::Full)
        } else {
            None
        }
    }

    /// Thresholds a continuous score: below 0.5 fails, [0.5, 1) is partial.
    pub fn discretize(score: f64) -> Self {
        if score >= 1.0 {
            DiscreteCredit::Full
        } else if score >= 0.5 {
            DiscreteCredit::Half
        } else {
            DiscreteCredit::Zero
        }
    }

    fn to_json(self) -> Value {
        match self {
            DiscreteCredit::Zero => Value::from(0),
            DiscreteCredit::Half => Value::from(0.5),
            DiscreteCredit::Full => Value::from(1),
        }
    }
}

impl serde::Serialize for DiscreteCredit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for DiscreteCredit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        DiscreteCredit::from_value(v).ok_or_else(|| serde::de::Error::custom("credit must be 0, 0.5 or 1"))
    }
}

/// A predict-side call string that failed the call grammar. Only produced by
/// [`parse_scoring_lenient`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidCall {
    pub raw: String,
    pub error: CallParseError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Credit {
    Discrete(DiscreteCredit),
    Call(VerifierCall),
    InvalidCall(InvalidCall),
}

impl Credit {
    pub fn call(&self) -> Option<&VerifierCall> {
        match self {
            Credit::Call(c) => Some(c),
            _ => None,
        }
    }

    pub fn discrete(&self) -> Option<DiscreteCredit> {
        match self {
            Credit::Discrete(d) => Some(*d),
            _ => None,
        }
    }

    /// Whether the record chose the verifier route (valid call or not).
    pub fn routes_to_verifier(&self) -> bool {
        !matches!(self, Credit::Discrete(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionRecord {
    pub criterion: String,
    pub rationale: String,
    pub credit: Credit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringOutput {
    pub thought: String,
    pub essential: Vec<CriterionRecord>,
    pub additional: Vec<CriterionRecord>,
}

impl ScoringOutput {
    pub fn records(&self) -> impl Iterator<Item = &CriterionRecord> {
        self.essential.iter().chain(self.additional.iter())
    }

    pub fn to_json(&self) -> Value {
        let section = |list: &[CriterionRecord]| {
            Value::Array(
                list.iter()
                    .map(|r| {
                        let mut m = Map::new();
                        m.insert("criterion".into(), Value::String(r.criterion.clone()));
                        m.insert("rationale".into(), Value::String(r.rationale.clone()));
                        let credit = match &r.credit {
                            Credit::Discrete(d) => d.to_json(),
                            Credit::Call(c) => Value::String(c.to_string()),
                            Credit::InvalidCall(c) => Value::String(c.raw.clone()),
                        };
                        m.insert("credit".into(), credit);
                        Value::Object(m)
                    })
                    .collect(),
            )
        };
        let mut m = Map::new();
        m.insert("thought".into(), Value::String(self.thought.clone()));
        m.insert("essential".into(), section(&self.essential));
        m.insert("additional".into(), section(&self.additional));
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

/// Strict parse: any malformed call string fails the whole document.
pub fn parse_scoring(raw: &str) -> Result<ScoringOutput, SchemaError> {
    parse(raw, true)
}

/// Like [`parse_scoring`] but keeps malformed call strings as
/// [`Credit::InvalidCall`] so per-slot validity can be reported.
pub fn parse_scoring_lenient(raw: &str) -> Result<ScoringOutput, SchemaError> {
    parse(raw, false)
}

fn parse(raw: &str, strict: bool) -> Result<ScoringOutput, SchemaError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| SchemaError::violation("$", "expected an object"))?;
    let thought = super::string_field(obj, "$", "thought")?.to_string();
    let essential = section(obj, "essential", true, strict)?;
    let additional = section(obj, "additional", false, strict)?;
    Ok(ScoringOutput { thought, essential, additional })
}

fn section(
    obj: &Map<String, Value>,
    key: &str,
    required: bool,
    strict: bool,
) -> Result<Vec<CriterionRecord>, SchemaError> {
    let items = match obj.get(key) {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(SchemaError::violation(key, "expected an array")),
        None if required => return Err(SchemaError::violation(key, "missing field")),
        None => return Ok(Vec::new()),
    };
    items.iter().enumerate().map(|(i, item)| record(item, &format!("{key}[{i}]"), strict)).collect()
}

fn record(item: &Value, path: &str, strict: bool) -> Result<CriterionRecord, SchemaError> {
    let obj = item.as_object().ok_or_else(|| SchemaError::violation(path, "expected an object"))?;
    let criterion = super::string_field(obj, path, "criterion")?.to_string();
    let rationale = super::string_field(obj, path, "rationale")?.to_string();
    let credit_path = format!("{path}.credit");
    let credit = match obj.get("credit") {
        None => return Err(SchemaError::violation(&credit_path, "missing field")),
        Some(Value::Number(n)) => {
            let v = n.as_f64().unwrap_or(f64::NAN);
            Credit::Discrete(
                DiscreteCredit::from_value(v).ok_or(SchemaError::CreditDomain { path: credit_path, value: v })?,
            )
        }
        Some(Value::String(s)) if looks_like_call(s) => match parse_call(s) {
            Ok(call) => {
                if call.has_target_args() {
                    return Err(SchemaError::violation(
                        &credit_path,
                        "scoring-side call must not carry target arguments",
                    ));
                }
                Credit::Call(call)
            }
            Err(error) if strict => return Err(SchemaError::Call { path: credit_path, error }),
            Err(error) => Credit::InvalidCall(InvalidCall { raw: s.clone(), error }),
        },
        Some(_) => {
            return Err(SchemaError::violation(&credit_path, "expected 0, 0.5, 1 or a verifier call string"));
        }
    };
    Ok(CriterionRecord { criterion, rationale, credit })
}
