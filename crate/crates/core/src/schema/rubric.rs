use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::call::{looks_like_call, parse_call, VerifierCall, VerifierName};
use super::SchemaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionType {
    Essential,
    Additional,
}

impl CriterionType {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionType::Essential => "essential",
            CriterionType::Additional => "additional",
        }
    }
}

/// Importance level: 1 auxiliary, 2 important, 3 key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(u8);

impl Weight {
    pub fn new(w: u8) -> Option<Self> {
        (1..=3).contains(&w).then_some(Self(w))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reference {
    /// Textual ground truth, executed by the judge.
    GroundTruth(String),
    /// Rubric-side verifier call carrying target arguments only.
    Verifier(VerifierCall),
}

impl Reference {
    pub fn call(&self) -> Option<&VerifierCall> {
        match self {
            Reference::Verifier(c) => Some(c),
            Reference::GroundTruth(_) => None,
        }
    }

    pub fn is_verifiable(&self) -> bool {
        matches!(self, Reference::Verifier(_))
    }

    pub fn verifier(&self) -> Option<VerifierName> {
        self.call().map(|c| c.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criterion {
    pub description: String,
    pub ctype: CriterionType,
    pub weight: Weight,
    pub reference: Reference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rubric {
    pub essential: Vec<Criterion>,
    pub additional: Vec<Criterion>,
}

impl Rubric {
    /// Criteria in scoring order: essential first, then additional.
    pub fn criteria(&self) -> impl Iterator<Item = &Criterion> + Clone {
        self.essential.iter().chain(self.additional.iter())
    }

    pub fn len(&self) -> usize {
        self.essential.len() + self.additional.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the rubric-level invariants on an already constructed value.
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.essential.is_empty() {
            return Err(SchemaError::violation("essential", "must contain at least one criterion"));
        }
        let mut seen = BTreeSet::new();
        for (section, list, ctype) in [
            ("essential", &self.essential, CriterionType::Essential),
            ("additional", &self.additional, CriterionType::Additional),
        ] {
            for (i, c) in list.iter().enumerate() {
                let path = format!("{section}[{i}]");
                if c.ctype != ctype {
                    return Err(SchemaError::violation(&path, "criterion type does not match its array"));
                }
                if c.description.trim().is_empty() {
                    return Err(SchemaError::violation(&format!("{path}.criterion"), "must be non-empty"));
                }
                if !seen.insert(c.description.trim()) {
                    return Err(SchemaError::violation(&format!("{path}.criterion"), "duplicate criterion"));
                }
                if let Reference::Verifier(call) = &c.reference {
                    if call.has_predict_args() {
                        return Err(SchemaError::violation(
                            &format!("{path}.reference"),
                            "rubric-side call must not carry predict arguments",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let section = |list: &[Criterion]| {
            Value::Array(
                list.iter()
                    .map(|c| {
                        let mut m = Map::new();
                        m.insert("criterion".into(), Value::String(c.description.clone()));
                        let reference = match &c.reference {
                            Reference::GroundTruth(t) => t.clone(),
                            Reference::Verifier(call) => call.to_string(),
                        };
                        m.insert("reference".into(), Value::String(reference));
                        m.insert("weight".into(), Value::from(c.weight.get()));
                        Value::Object(m)
                    })
                    .collect(),
            )
        };
        let mut m = Map::new();
        m.insert("essential".into(), section(&self.essential));
        m.insert("additional".into(), section(&self.additional));
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

pub fn parse_rubric(raw: &str) -> Result<Rubric, SchemaError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    rubric_from_value(&value)
}

pub fn rubric_from_value(value: &Value) -> Result<Rubric, SchemaError> {
    let obj = value.as_object().ok_or_else(|| SchemaError::violation("$", "expected an object"))?;
    let essential = section(obj, "essential", CriterionType::Essential, true)?;
    let additional = section(obj, "additional", CriterionType::Additional, false)?;
    let rubric = Rubric { essential, additional };
    rubric.validate()?;
    Ok(rubric)
}

fn section(
    obj: &Map<String, Value>,
    key: &str,
    ctype: CriterionType,
    required: bool,
) -> Result<Vec<Criterion>, SchemaError> {
    let items = match obj.get(key) {
        Some(Value::Array(items)) => items,
        Some(_) => return Err(SchemaError::violation(key, "expected an array")),
        None if required => return Err(SchemaError::violation(key, "missing field")),
        None => return Ok(Vec::new()),
    };
    items.iter().enumerate().map(|(i, item)| criterion(item, &format!("{key}[{i}]"), ctype)).collect()
}

fn criterion(item: &Value, path: &str, ctype: CriterionType) -> Result<Criterion, SchemaError> {
    let obj = item.as_object().ok_or_else(|| SchemaError::violation(path, "expected an object"))?;
    let description = super::string_field(obj, path, "criterion")?;
    let reference_text = super::string_field(obj, path, "reference")?;
    let weight = match obj.get("weight") {
        None => return Err(SchemaError::violation(&format!("{path}.weight"), "missing field")),
        Some(v) => v
            .as_u64()
            .and_then(|w| u8::try_from(w).ok())
            .and_then(Weight::new)
            .ok_or_else(|| SchemaError::violation(&format!("{path}.weight"), "must be an integer in {1, 2, 3}"))?,
    };
    let reference = if looks_like_call(reference_text) {
        let call = parse_call(reference_text)
            .map_err(|error| SchemaError::Call { path: format!("{path}.reference"), error })?;
        Reference::Verifier(call)
    } else {
        Reference::GroundTruth(reference_text.to_string())
    };
    Ok(Criterion { description: description.to_string(), ctype, weight, reference })
}
