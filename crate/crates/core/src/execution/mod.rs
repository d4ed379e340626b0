//! Routing criteria to the extractor+verifier or judge path, context
//! assembly under an exposure policy, and the generation-service contract.

mod context;
pub mod prompts;
mod run;
mod transport;

use alloc::string::String;

use serde::Serialize;

use crate::schema::{CriterionType, PairingReport, SchemaError, VerifierName};
use crate::verifiers::VerifierError;

pub use context::{
    assemble_context, assemble_scoring_request, exposure_leaks, request_key, target_literals, ExposureMode,
    ExposurePolicy, GenerationRequest, Role, Segment, SegmentKind, TaskInstance, SCORING_OUTPUT_SCHEMA,
};
pub use run::{
    execute_criterion, merge_calls, score_response, verify_pair, CriterionScore, ExecutionPath, ScoringMode,
    VerifyPairError,
};
pub use transport::{
    extract_json_object, request_scoring, DecodeParams, FinishReason, GenerationReply, GenerationTransport,
    RequestOptions, TransportError,
};

/// Why a single criterion slot could not be executed.
#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum SlotFault {
    #[error("no record for this criterion")]
    MissingRecord,
    #[error("record criterion text differs from the rubric")]
    SlotMismatch,
    #[error("discrete credit given where the rubric names a verifier")]
    CreditOnVerifierSlot,
    #[error("verifier call given where the rubric has a ground-truth reference")]
    CallOnJudgeSlot,
    #[error("credit call does not parse")]
    InvalidCall,
    #[error("rubric names {expected} but the record calls {found}")]
    NameMismatch {
        #[serde(serialize_with = "ser_name")]
        expected: VerifierName,
        #[serde(serialize_with = "ser_name")]
        found: VerifierName,
    },
    #[error("argument `{0}` supplied on both sides")]
    MergeConflict(String),
    #[error("verifier failed: {0}")]
    Verifier(#[serde(serialize_with = "ser_display")] VerifierError),
}

fn ser_name<S: serde::Serializer>(n: &VerifierName, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(n.as_str())
}

fn ser_display<S: serde::Serializer, T: core::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecutionError {
    #[error("{role:?} cannot execute a {} criterion", if *verifiable { "verifiable" } else { "fuzzy" })]
    RoleMismatch { role: Role, verifiable: bool },
    #[error("instance field `{0}` must be non-empty")]
    EmptyField(&'static str),
    #[error("scoring output does not pair with the rubric")]
    Pairing(PairingReport),
    #[error("{} criterion {index}: {fault}", ctype.as_str())]
    Slot { ctype: CriterionType, index: usize, fault: SlotFault },
    #[error("transport failed for instance {instance_id}: {error}")]
    Transport { instance_id: String, error: TransportError },
    #[error("no parseable reply for instance {instance_id} after {attempts} attempts: {last}")]
    ParseFailureAfterRetries { instance_id: String, attempts: u32, last: SchemaError },
}
