use alloc::vec::Vec;

use super::call::{VerifierCall, VerifierName};
use super::rubric::{Criterion, CriterionType, Rubric};
use super::scoring::{Credit, CriterionRecord, ScoringOutput};

/// Validation outcome for one rubric criterion slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SlotCheck {
    pub ctype: CriterionType,
    pub index: usize,
    /// Same array position and verbatim (trimmed) criterion text.
    pub slot_match: bool,
    /// Record takes the verifier route iff the rubric does, with the same verifier.
    pub execution_match: bool,
    /// Any predict-side call parsed and carries its required arguments.
    pub call_valid: bool,
}

impl SlotCheck {
    pub fn ok(&self) -> bool {
        self.slot_match && self.execution_match && self.call_valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PairingReport {
    /// One entry per rubric criterion, essential first.
    pub slots: Vec<SlotCheck>,
    /// Both arrays have exactly the rubric's lengths.
    pub lengths_match: bool,
}

impl PairingReport {
    pub fn all_slot_match(&self) -> bool {
        self.lengths_match && self.slots.iter().all(|s| s.slot_match)
    }

    pub fn all_execution_match(&self) -> bool {
        self.lengths_match && self.slots.iter().all(|s| s.execution_match)
    }

    pub fn all_call_valid(&self) -> bool {
        self.slots.iter().all(|s| s.call_valid)
    }

    pub fn is_valid(&self) -> bool {
        self.all_slot_match() && self.all_execution_match() && self.all_call_valid()
    }
}

/// Name of the verifier a (possibly malformed) call string starts with.
pub fn call_name_prefix(text: &str) -> Option<VerifierName> {
    let t = text.trim_start();
    VerifierName::ALL.into_iter().find(|n| t.starts_with(n.as_str()))
}

/// Whether a predict-side call supplies every argument the verifier needs.
pub fn predict_call_complete(call: &VerifierCall) -> bool {
    let needed: &[&str] = match call.name {
        VerifierName::Time => &["predict", "pformat"],
        _ => &["predict"],
    };
    needed.iter().all(|k| call.get(k).is_some())
}

pub fn check_slot(criterion: &Criterion, index: usize, record: Option<&CriterionRecord>) -> SlotCheck {
    let Some(record) = record else {
        return SlotCheck {
            ctype: criterion.ctype,
            index,
            slot_match: false,
            execution_match: false,
            call_valid: false,
        };
    };
    let slot_match = record.criterion.trim() == criterion.description.trim();
    let wanted = criterion.reference.verifier();
    let (execution_match, call_valid) = match (&record.credit, wanted) {
        (Credit::Discrete(_), None) => (true, true),
        (Credit::Discrete(_), Some(_)) => (false, true),
        (Credit::Call(call), want) => (want == Some(call.name), predict_call_complete(call)),
        (Credit::InvalidCall(bad), want) => (want.is_some() && call_name_prefix(&bad.raw) == want, false),
    };
    SlotCheck { ctype: criterion.ctype, index, slot_match, execution_match, call_valid }
}

pub fn validate_pairing(rubric: &Rubric, scoring: &ScoringOutput) -> PairingReport {
    let mut slots = Vec::with_capacity(rubric.len());
    for (criteria, records) in [(&rubric.essential, &scoring.essential), (&rubric.additional, &scoring.additional)] {
        for (i, c) in criteria.iter().enumerate() {
            slots.push(check_slot(c, i, records.get(i)));
        }
    }
    let lengths_match =
        rubric.essential.len() == scoring.essential.len() && rubric.additional.len() == scoring.additional.len();
    PairingReport { slots, lengths_match }
}
