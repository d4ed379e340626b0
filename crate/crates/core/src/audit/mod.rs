//! Reliability metrics for a scoring model over labelled audit records, and
//! false-positive rates on abnormal responses.

mod builder;
mod report;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::execution::{score_response, ScoringMode};
use crate::genrm::{criterion_correct, CriterionLabel, GenRmConfig};
use crate::schema::{
    check_slot, parse_scoring_lenient, rubric_from_value, validate_pairing, CriterionType, DiscreteCredit, Rubric,
    SchemaError,
};

pub use builder::*;
pub use report::*;

/// Engine score at or above which a fail-labelled criterion counts as a false positive.
pub const DEFAULT_FP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditCategory {
    Regular,
    NoFinalAnswer,
    Irrelevant,
    WrongButPlausible,
    Adversarial,
}

impl AuditCategory {
    pub const ABNORMAL: [AuditCategory; 4] = [
        AuditCategory::NoFinalAnswer,
        AuditCategory::Irrelevant,
        AuditCategory::WrongButPlausible,
        AuditCategory::Adversarial,
    ];

    pub fn is_abnormal(self) -> bool {
        self != AuditCategory::Regular
    }

    /// Serialized name.
    pub fn key(self) -> &'static str {
        match self {
            AuditCategory::Regular => "regular",
            AuditCategory::NoFinalAnswer => "no_final_answer",
            AuditCategory::Irrelevant => "irrelevant",
            AuditCategory::WrongButPlausible => "wrong_but_plausible",
            AuditCategory::Adversarial => "adversarial",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AuditCategory::Regular => "Regular",
            AuditCategory::NoFinalAnswer => "No final answer",
            AuditCategory::Irrelevant => "Irrelevant",
            AuditCategory::WrongButPlausible => "Wrong but plausible",
            AuditCategory::Adversarial => "Adversarial",
        }
    }
}

/// One scored response with reference labels, one label per rubric criterion
/// (essential first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAuditRecord", into = "RawAuditRecord")]
pub struct AuditRecord {
    pub id: String,
    pub rubric: Rubric,
    pub response: String,
    pub category: AuditCategory,
    pub labels: Vec<CriterionLabel>,
    /// The scoring model's output, verbatim.
    pub genrm_raw_output: String,
}

#[derive(Serialize, Deserialize)]
struct RawAuditRecord {
    id: String,
    rubric: Value,
    response: String,
    category: AuditCategory,
    labels: Vec<CriterionLabel>,
    genrm_raw_output: String,
}

impl TryFrom<RawAuditRecord> for AuditRecord {
    type Error = SchemaError;

    fn try_from(raw: RawAuditRecord) -> Result<Self, SchemaError> {
        let rubric = rubric_from_value(&raw.rubric)?;
        Ok(AuditRecord {
            id: raw.id,
            rubric,
            response: raw.response,
            category: raw.category,
            labels: raw.labels,
            genrm_raw_output: raw.genrm_raw_output,
        })
    }
}

impl From<AuditRecord> for RawAuditRecord {
    fn from(r: AuditRecord) -> Self {
        RawAuditRecord {
            id: r.id,
            rubric: r.rubric.to_json(),
            response: r.response,
            category: r.category,
            labels: r.labels,
            genrm_raw_output: r.genrm_raw_output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("audit set is empty")]
    EmptyAuditSet,
    #[error("category {0:?} has no fail-labelled criteria")]
    EmptyCategory(AuditCategory),
    #[error("record {id}: {found} labels for {expected} criteria")]
    LabelCount { id: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub genrm: GenRmConfig,
    pub fp_threshold: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { genrm: GenRmConfig::default(), fp_threshold: DEFAULT_FP_THRESHOLD }
    }
}

/// Hit count over a denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rate {
    pub hits: usize,
    pub total: usize,
}

impl Rate {
    fn add(&mut self, hit: bool) {
        self.hits += usize::from(hit);
        self.total += 1;
    }

    /// Percentage, or `None` without data.
    pub fn percent(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.hits as f64 / self.total as f64)
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Rate", 3)?;
        st.serialize_field("percent", &self.percent())?;
        st.serialize_field("hits", &self.hits)?;
        st.serialize_field("total", &self.total)?;
        st.end()
    }
}

/// Per-criterion outcome of one audit record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionEval {
    pub ctype: CriterionType,
    pub verifiable: bool,
    pub label: DiscreteCredit,
    /// Right execution path, right verifier, well-formed call.
    pub execution_ok: bool,
    /// Slot matched and the credit or extraction agrees with the label.
    pub correct: bool,
    /// Score the engine derives from the scoring output (0 for unusable slots).
    pub engine_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordEval {
    pub schema_ok: bool,
    pub slots_ok: bool,
    pub criteria: Vec<CriterionEval>,
}

impl RecordEval {
    pub fn all_correct(&self) -> bool {
        self.criteria.iter().all(|c| c.correct)
    }
}

/// Scores one record against its labels. An unparseable output leaves every
/// criterion incorrect with engine score 0.
pub fn evaluate_record(record: &AuditRecord, cfg: &AuditConfig) -> Result<RecordEval, AuditError> {
    let rubric = &record.rubric;
    if record.labels.len() != rubric.len() {
        return Err(AuditError::LabelCount {
            id: record.id.clone(),
            expected: rubric.len(),
            found: record.labels.len(),
        });
    }
    let scoring = parse_scoring_lenient(&record.genrm_raw_output).ok();
    let engine: Vec<f64> = match &scoring {
        Some(s) => score_response(rubric, s, ScoringMode::Lenient, &cfg.genrm.verifier)
            .map(|scores| scores.iter().map(|c| c.raw).collect())
            .unwrap_or_default(),
        None => Vec::new(),
    };
    let slots_ok = scoring.as_ref().is_some_and(|s| validate_pairing(rubric, s).all_slot_match());
    let local = rubric.essential.iter().enumerate().chain(rubric.additional.iter().enumerate());
    let criteria = local
        .zip(&record.labels)
        .enumerate()
        .map(|(flat, ((i, c), label))| {
            let rec = scoring.as_ref().and_then(|s| match c.ctype {
                CriterionType::Essential => s.essential.get(i),
                CriterionType::Additional => s.additional.get(i),
            });
            let check = check_slot(c, i, rec);
            CriterionEval {
                ctype: c.ctype,
                verifiable: c.reference.is_verifiable(),
                label: label.credit,
                execution_ok: check.execution_match && check.call_valid,
                correct: check.slot_match && criterion_correct(c, rec, label, &cfg.genrm),
                engine_score: engine.get(flat).copied().unwrap_or(0.0),
            }
        })
        .collect();
    Ok(RecordEval { schema_ok: scoring.is_some(), slots_ok, criteria })
}

/// Reliability metrics of the scoring model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AuditMetrics {
    pub records: usize,
    /// Records whose output parses as a scoring document.
    pub schema_acc: Rate,
    /// Records whose criterion slots all match the rubric verbatim.
    pub criterion_acc: Rate,
    /// Criteria routed to the right path and verifier with a well-formed call.
    pub execution_acc: Rate,
    /// Records where every criterion satisfies `execution_acc`.
    pub execution_record_acc: Rate,
    /// Verifiable criteria whose extraction agrees with the label.
    pub argument_acc: Rate,
    /// Fuzzy criteria whose credit equals the label.
    pub credit_acc: Rate,
    pub criterion_level_acc: Rate,
    pub sample_level_acc: Rate,
}

pub fn evaluate_genrm(records: &[AuditRecord], cfg: &AuditConfig) -> Result<AuditMetrics, AuditError> {
    if records.is_empty() {
        return Err(AuditError::EmptyAuditSet);
    }
    let mut m = AuditMetrics { records: records.len(), ..Default::default() };
    for r in records {
        let e = evaluate_record(r, cfg)?;
        m.schema_acc.add(e.schema_ok);
        m.criterion_acc.add(e.slots_ok);
        m.execution_record_acc.add(e.criteria.iter().all(|c| c.execution_ok));
        m.sample_level_acc.add(e.all_correct());
        for c in &e.criteria {
            m.execution_acc.add(c.execution_ok);
            m.criterion_level_acc.add(c.correct);
            if c.verifiable {
                m.argument_acc.add(c.correct);
            } else {
                m.credit_acc.add(c.correct);
            }
        }
    }
    Ok(m)
}

/// False-positive rates over fail-labelled criteria of one category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FprEntry {
    /// Micro-average over all fail-labelled criteria.
    pub average: Rate,
    pub arguments: Rate,
    pub credit: Rate,
}

/// Per abnormal category: a criterion labelled 0 whose engine score reaches
/// the threshold is a false positive. Regular records are ignored.
pub fn false_positive_rate(
    records: &[AuditRecord],
    cfg: &AuditConfig,
) -> Result<BTreeMap<AuditCategory, FprEntry>, AuditError> {
    let mut out: BTreeMap<AuditCategory, FprEntry> = BTreeMap::new();
    for r in records.iter().filter(|r| r.category.is_abnormal()) {
        let e = evaluate_record(r, cfg)?;
        let entry = out.entry(r.category).or_default();
        for c in e.criteria.iter().filter(|c| c.label == DiscreteCredit::Zero) {
            let fp = c.engine_score >= cfg.fp_threshold;
            entry.average.add(fp);
            if c.verifiable {
                entry.arguments.add(fp);
            } else {
                entry.credit.add(fp);
            }
        }
    }
    if out.is_empty() {
        return Err(AuditError::EmptyAuditSet);
    }
    if let Some((cat, _)) = out.iter().find(|(_, e)| e.average.total == 0) {
        return Err(AuditError::EmptyCategory(*cat));
    }
    Ok(out)
}
