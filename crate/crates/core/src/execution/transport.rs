//! The generation-service contract and the retrying scoring request.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::context::{assemble_scoring_request, ExposurePolicy, GenerationRequest, TaskInstance};
use super::ExecutionError;
use crate::schema::{parse_scoring, parse_scoring_lenient, Rubric, ScoringOutput};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReply {
    pub text: String,
    pub finish_reason: FinishReason,
}

impl GenerationReply {
    pub fn stop(text: impl Into<String>) -> Self {
        Self { text: text.into(), finish_reason: FinishReason::Stop }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("service returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected reply: {0}")]
    Protocol(String),
    #[error("no recorded reply for request {0}")]
    NoReply(String),
    #[error("transport misconfigured: {0}")]
    Config(String),
}

/// A text-generation service. Implementations must tolerate concurrent calls.
pub trait GenerationTransport: Send + Sync {
    fn generate(&self, request: &GenerationRequest, params: &DecodeParams) -> Result<GenerationReply, TransportError>;
}

impl<T: GenerationTransport + ?Sized> GenerationTransport for &T {
    fn generate(&self, request: &GenerationRequest, params: &DecodeParams) -> Result<GenerationReply, TransportError> {
        (**self).generate(request, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestOptions {
    /// Extra attempts after a reply that fails to parse.
    pub retries: u32,
    pub params: DecodeParams,
    /// Keep malformed credit calls as invalid slots instead of rejecting the reply.
    pub lenient_calls: bool,
}

impl Default for RequestOptions {
    fn default() -> Self {
        Self { retries: 2, params: DecodeParams::default(), lenient_calls: false }
    }
}

/// The JSON object inside a reply, tolerating code fences and surrounding prose.
pub fn extract_json_object(text: &str) -> &str {
    let t = text.trim();
    match (t.find('{'), t.rfind('}')) {
        (Some(start), Some(end)) if start < end => &t[start..=end],
        _ => t,
    }
}

/// Sends one scoring request for the whole rubric and parses the reply,
/// re-sending the identical request when the reply does not parse.
pub fn request_scoring<T: GenerationTransport + ?Sized>(
    instance: &TaskInstance,
    rubric: &Rubric,
    transport: &T,
    policy: ExposurePolicy,
    options: &RequestOptions,
) -> Result<ScoringOutput, ExecutionError> {
    let request = assemble_scoring_request(instance, rubric, policy)?;
    let attempts = options.retries + 1;
    let mut last = None;
    for _ in 0..attempts {
        let reply = transport
            .generate(&request, &options.params)
            .map_err(|error| ExecutionError::Transport { instance_id: instance.id.clone(), error })?;
        let body = extract_json_object(&reply.text);
        let parsed = if options.lenient_calls { parse_scoring_lenient(body) } else { parse_scoring(body) };
        match parsed {
            Ok(scoring) => return Ok(scoring),
            Err(e) => last = Some(e),
        }
    }
    Err(ExecutionError::ParseFailureAfterRetries {
        instance_id: instance.id.clone(),
        attempts,
        last: last.expect("at least one attempt"),
    })
}
