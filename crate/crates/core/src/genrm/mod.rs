//! Labels and verifiable rewards for training the scoring model itself:
//! multi-teacher median labels, a format reward and a content reward.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::execution::execute_criterion;
use crate::schema::{
    check_slot, parse_scoring, validate_pairing, Credit, Criterion, CriterionRecord, DiscreteCredit, Literal,
    Reference, Rubric, ScoringOutput, VerifierCall,
};
use crate::verifiers::{run_verifier, VerifierConfig};

pub const DEFAULT_SIMILARITY_PASS: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct GenRmConfig {
    /// Pass bar for similarity-valued verifiers (text, list, bbox, point).
    pub similarity_pass: f64,
    pub verifier: VerifierConfig,
}

impl Default for GenRmConfig {
    fn default() -> Self {
        Self { similarity_pass: DEFAULT_SIMILARITY_PASS, verifier: VerifierConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeacherScoring {
    pub teacher_id: String,
    pub scoring: ScoringOutput,
}

/// Reference label for one criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionLabel {
    pub credit: DiscreteCredit,
    /// Predict-side call holding the agreed extraction; verifiable criteria only.
    #[serde(default)]
    pub extracted_value: Option<VerifierCall>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenRmError {
    #[error("no teacher scorings given")]
    NoTeachers,
    #[error("criterion {index}: no teacher produced a usable record")]
    NoValidTeacher { index: usize },
    #[error("criterion {index}: no teacher credit equals the median")]
    NoMatchingTeacher { index: usize },
    #[error("expected {expected} labels, found {found}")]
    LabelCount { expected: usize, found: usize },
}

/// A teacher record left out of a criterion's median.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub teacher_id: String,
    pub criterion_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<CriterionLabel>,
    pub excluded: Vec<Exclusion>,
}

/// Lower median: for an even count the smaller middle value.
pub fn lower_median(values: &[DiscreteCredit]) -> Option<DiscreteCredit> {
    let mut sorted = values.to_vec();
    sorted.sort();
    sorted.get(sorted.len().checked_sub(1)? / 2).copied()
}

fn record_at<'a>(
    scoring: &'a ScoringOutput,
    criterion: &Criterion,
    index_in_group: usize,
) -> Option<&'a CriterionRecord> {
    let group = match criterion.ctype {
        crate::schema::CriterionType::Essential => &scoring.essential,
        crate::schema::CriterionType::Additional => &scoring.additional,
    };
    group.get(index_in_group)
}

/// Criteria paired with their index inside their own group.
fn indexed(rubric: &Rubric) -> impl Iterator<Item = (usize, &Criterion)> {
    rubric.essential.iter().enumerate().chain(rubric.additional.iter().enumerate())
}

/// Per criterion: median of the teachers' effective credits, and for
/// verifiable criteria the first (in teacher order) extraction whose credit
/// equals that median. Teacher records that fail pairing or execution are
/// excluded from that criterion and reported.
pub fn aggregate_teacher_labels(
    teachers: &[TeacherScoring],
    rubric: &Rubric,
    cfg: &VerifierConfig,
) -> Result<LabelSet, GenRmError> {
    if teachers.is_empty() {
        return Err(GenRmError::NoTeachers);
    }
    let mut labels = Vec::with_capacity(rubric.len());
    let mut excluded = Vec::new();
    for (flat, (local, criterion)) in indexed(rubric).enumerate() {
        let mut votes: Vec<(DiscreteCredit, Option<&VerifierCall>)> = Vec::new();
        for t in teachers {
            let record = record_at(&t.scoring, criterion, local);
            let usable = check_slot(criterion, local, record).ok();
            let vote = record.filter(|_| usable).and_then(|r| {
                let score = execute_criterion(criterion, r, cfg).ok()?;
                Some((DiscreteCredit::discretize(score.raw), r.credit.call()))
            });
            match vote {
                Some(v) => votes.push(v),
                None => excluded.push(Exclusion { teacher_id: t.teacher_id.clone(), criterion_index: flat }),
            }
        }
        let credits: Vec<DiscreteCredit> = votes.iter().map(|v| v.0).collect();
        let median = lower_median(&credits).ok_or(GenRmError::NoValidTeacher { index: flat })?;
        let chosen = votes.iter().find(|v| v.0 == median).ok_or(GenRmError::NoMatchingTeacher { index: flat })?;
        let extracted_value = if criterion.reference.is_verifiable() { chosen.1.cloned() } else { None };
        labels.push(CriterionLabel { credit: median, extracted_value });
    }
    Ok(LabelSet { labels, excluded })
}

/// 1 iff `raw` parses as a scoring document and pairs with `rubric` on every
/// slot (position/text, execution path, call validity).
pub fn format_reward(raw: &str, rubric: &Rubric) -> u8 {
    match parse_scoring(raw) {
        Ok(scoring) => u8::from(validate_pairing(rubric, &scoring).is_valid()),
        Err(_) => 0,
    }
}

/// Turns a label's predict-side call into target-side arguments on top of
/// the rubric's own comparison flags.
fn label_as_target(reference: &VerifierCall, label: &VerifierCall) -> VerifierCall {
    let mut call = VerifierCall::new(reference.name);
    for (k, v) in &reference.args {
        if !matches!(k.as_str(), "target" | "candidates" | "tformat") {
            call.args.push((k.clone(), v.clone()));
        }
    }
    if let Some(v) = label.get("predict") {
        call.args.push(("target".into(), v.clone()));
    }
    if let Some(v) = label.get("pformat") {
        call.args.push(("tformat".into(), v.clone()));
    }
    call
}

fn is_empty_prediction(call: &VerifierCall) -> bool {
    call.get("predict").is_none_or(Literal::is_empty_value)
}

/// Whether a student's extraction agrees with the label's, judged by the
/// criterion's verifier: exactly 1 for binary verifiers, at least the pass
/// bar for similarity verifiers. Two empty extractions agree.
pub fn argument_correct(
    criterion: &Criterion,
    student: &VerifierCall,
    label: &VerifierCall,
    cfg: &GenRmConfig,
) -> bool {
    let Reference::Verifier(reference) = &criterion.reference else {
        return false;
    };
    if student.name != reference.name || label.name != reference.name {
        return false;
    }
    match (is_empty_prediction(label), is_empty_prediction(student)) {
        (true, true) => return true,
        (true, false) | (false, true) => return false,
        _ => {}
    }
    let mut merged = label_as_target(reference, label);
    merged.args.extend(student.predict_args().cloned());
    let Ok(score) = run_verifier(&merged, &cfg.verifier) else {
        return false;
    };
    if reference.name.is_binary() {
        score == 1.0
    } else {
        score >= cfg.similarity_pass
    }
}

/// Whether one student record matches its label.
pub fn criterion_correct(
    criterion: &Criterion,
    record: Option<&CriterionRecord>,
    label: &CriterionLabel,
    cfg: &GenRmConfig,
) -> bool {
    let Some(record) = record else {
        return false;
    };
    match (&criterion.reference, &record.credit) {
        (Reference::GroundTruth(_), Credit::Discrete(c)) => *c == label.credit,
        (Reference::Verifier(_), Credit::Call(student)) => {
            label.extracted_value.as_ref().is_some_and(|l| argument_correct(criterion, student, l, cfg))
        }
        _ => false,
    }
}

/// Mean per-criterion correctness against the labels.
pub fn content_reward(
    scoring: &ScoringOutput,
    labels: &[CriterionLabel],
    rubric: &Rubric,
    cfg: &GenRmConfig,
) -> Result<f64, GenRmError> {
    if labels.len() != rubric.len() {
        return Err(GenRmError::LabelCount { expected: rubric.len(), found: labels.len() });
    }
    let correct = indexed(rubric)
        .zip(labels)
        .filter(|((local, c), label)| criterion_correct(c, record_at(scoring, c, *local), label, cfg))
        .count();
    Ok(correct as f64 / rubric.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenRmReward {
    pub format: u8,
    pub content: f64,
    /// `format · content`.
    pub total: f64,
}

/// Format-gated training reward for one raw scoring output.
pub fn genrm_reward(
    raw: &str,
    labels: &[CriterionLabel],
    rubric: &Rubric,
    cfg: &GenRmConfig,
) -> Result<GenRmReward, GenRmError> {
    if labels.len() != rubric.len() {
        return Err(GenRmError::LabelCount { expected: rubric.len(), found: labels.len() });
    }
    let format = format_reward(raw, rubric);
    let content = match (format, parse_scoring(raw)) {
        (1, Ok(scoring)) => content_reward(&scoring, labels, rubric, cfg)?,
        _ => 0.0,
    };
    Ok(GenRmReward { format, content, total: f64::from(format) * content })
}
