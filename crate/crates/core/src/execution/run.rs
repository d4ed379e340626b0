//! Criterion execution: verifier path or judge pass-through.

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::{ExecutionError, SlotFault};
use crate::schema::{
    check_slot, parse_call, validate_pairing, CallParseError, Credit, Criterion, CriterionRecord, CriterionType,
    Reference, Rubric, ScoringOutput, VerifierCall,
};
use crate::verifiers::{run_verifier, VerifierConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionPath {
    Verifier,
    Judge,
}

/// Raw score of one criterion for one response.
///
/// `path` is always the path the rubric prescribes; `call` is present iff
/// that path is [`ExecutionPath::Verifier`]. A lenient-mode slot that could
/// not be executed carries a `fault` and scores 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionScore {
    pub raw: f64,
    pub path: ExecutionPath,
    pub rationale: String,
    #[serde(serialize_with = "ser_call")]
    pub call: Option<VerifierCall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<SlotFault>,
}

fn ser_call<S: serde::Serializer>(call: &Option<VerifierCall>, s: S) -> Result<S::Ok, S::Error> {
    match call {
        Some(c) => s.collect_str(c),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ScoringMode {
    /// Any pairing or execution failure aborts the response.
    Strict,
    /// Failed slots score 0 and record the fault.
    #[default]
    Lenient,
}

/// Joins target-side and predict-side arguments into one call.
pub fn merge_calls(target: &VerifierCall, predict: &VerifierCall) -> Result<VerifierCall, SlotFault> {
    if target.name != predict.name {
        return Err(SlotFault::NameMismatch { expected: target.name, found: predict.name });
    }
    let mut merged = target.clone();
    for (k, v) in &predict.args {
        if target.get(k).is_some() {
            return Err(SlotFault::MergeConflict(k.clone()));
        }
        merged.args.push((k.clone(), v.clone()));
    }
    Ok(merged)
}

/// Scores one criterion from its record: verifier criteria run the merged
/// call, fuzzy criteria pass the judge's discrete credit through.
pub fn execute_criterion(
    criterion: &Criterion,
    record: &CriterionRecord,
    cfg: &VerifierConfig,
) -> Result<CriterionScore, SlotFault> {
    match (&criterion.reference, &record.credit) {
        (Reference::Verifier(target), Credit::Call(predict)) => {
            let merged = merge_calls(target, predict)?;
            let raw = run_verifier(&merged, cfg).map_err(SlotFault::Verifier)?;
            Ok(CriterionScore {
                raw,
                path: ExecutionPath::Verifier,
                rationale: record.rationale.clone(),
                call: Some(merged),
                fault: None,
            })
        }
        (Reference::GroundTruth(_), Credit::Discrete(d)) => Ok(CriterionScore {
            raw: d.value(),
            path: ExecutionPath::Judge,
            rationale: record.rationale.clone(),
            call: None,
            fault: None,
        }),
        (Reference::Verifier(_), Credit::InvalidCall(_)) => Err(SlotFault::InvalidCall),
        (Reference::Verifier(_), Credit::Discrete(_)) => Err(SlotFault::CreditOnVerifierSlot),
        (Reference::GroundTruth(_), _) => Err(SlotFault::CallOnJudgeSlot),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyPairError {
    #[error("{which} call: {error}")]
    Parse { which: &'static str, error: CallParseError },
    #[error("{0}")]
    Mismatch(SlotFault),
}

/// Parses a target-side and a predict-side call string, merges them and runs
/// the verifier.
pub fn verify_pair(target: &str, predict: &str, cfg: &VerifierConfig) -> Result<f64, VerifyPairError> {
    let t = parse_call(target).map_err(|error| VerifyPairError::Parse { which: "target", error })?;
    let p = parse_call(predict).map_err(|error| VerifyPairError::Parse { which: "predict", error })?;
    let merged = merge_calls(&t, &p).map_err(VerifyPairError::Mismatch)?;
    run_verifier(&merged, cfg).map_err(|e| VerifyPairError::Mismatch(SlotFault::Verifier(e)))
}

fn failed(criterion: &Criterion, record: Option<&CriterionRecord>, fault: SlotFault) -> CriterionScore {
    let (path, call) = match &criterion.reference {
        Reference::Verifier(c) => (ExecutionPath::Verifier, Some(c.clone())),
        Reference::GroundTruth(_) => (ExecutionPath::Judge, None),
    };
    CriterionScore {
        raw: 0.0,
        path,
        rationale: record.map(|r| r.rationale.clone()).unwrap_or_default(),
        call,
        fault: Some(fault),
    }
}

/// One score per rubric criterion, essential first, in rubric order.
pub fn score_response(
    rubric: &Rubric,
    scoring: &ScoringOutput,
    mode: ScoringMode,
    cfg: &VerifierConfig,
) -> Result<Vec<CriterionScore>, ExecutionError> {
    if mode == ScoringMode::Strict {
        let report = validate_pairing(rubric, scoring);
        if !report.is_valid() {
            return Err(ExecutionError::Pairing(report));
        }
    }
    let mut out = Vec::with_capacity(rubric.len());
    for (ctype, criteria, records) in [
        (CriterionType::Essential, &rubric.essential, &scoring.essential),
        (CriterionType::Additional, &rubric.additional, &scoring.additional),
    ] {
        for (index, criterion) in criteria.iter().enumerate() {
            let record = records.get(index);
            let check = check_slot(criterion, index, record);
            let result = match record {
                None => Err(SlotFault::MissingRecord),
                Some(_) if !check.slot_match => Err(SlotFault::SlotMismatch),
                Some(r) => execute_criterion(criterion, r, cfg),
            };
            match (result, mode) {
                (Ok(score), _) => out.push(score),
                (Err(fault), ScoringMode::Lenient) => out.push(failed(criterion, record, fault)),
                (Err(fault), ScoringMode::Strict) => return Err(ExecutionError::Slot { ctype, index, fault }),
            }
        }
    }
    Ok(out)
}
