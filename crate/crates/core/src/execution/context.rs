//! Request assembly under an exposure policy.
//!
//! Requests are built from labelled segments so that callers can audit what
//! the engine itself injected (criterion text, tool tags, references, image
//! tokens) separately from the caller's prompt and response.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::scoring_system_prompt;
use super::ExecutionError;
use crate::schema::{Criterion, CriterionType, Reference, Rubric};

/// One input to score: prompt text, opaque image id and the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub prompt_text: String,
    /// Carried through but never read or dereferenced by the engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    pub response: String,
    /// Token count supplied by the caller.
    #[serde(default)]
    pub response_length: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExposureMode {
    /// Targets hidden from the extractor, image hidden from both roles.
    #[default]
    Minimal,
    /// Targets visible to the extractor; audit use only.
    Unlimited,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExposurePolicy {
    mode: ExposureMode,
    judge_sees_image: bool,
}

impl ExposurePolicy {
    pub const MINIMAL: Self = Self { mode: ExposureMode::Minimal, judge_sees_image: false };
    pub const UNLIMITED: Self = Self { mode: ExposureMode::Unlimited, judge_sees_image: false };

    /// `judge_sees_image` is forced off under [`ExposureMode::Minimal`].
    pub fn new(mode: ExposureMode, judge_sees_image: bool) -> Self {
        Self { mode, judge_sees_image: judge_sees_image && mode == ExposureMode::Unlimited }
    }

    pub fn mode(&self) -> ExposureMode {
        self.mode
    }

    pub fn judge_sees_image(&self) -> bool {
        self.judge_sees_image
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Extractor,
    Judge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Fixed layout text.
    Template,
    /// The caller's prompt text.
    Prompt,
    /// The caller's response under evaluation.
    Response,
    /// A criterion description.
    Criterion,
    /// A verifier name with its scoring-side signature.
    VerifierTag,
    /// A ground-truth text or a full rubric-side call.
    Reference,
    /// Image placeholder token.
    Image,
}

impl SegmentKind {
    /// Segments whose content the engine chose to expose.
    pub fn is_engine_supplied(self) -> bool {
        matches!(self, SegmentKind::Criterion | SegmentKind::VerifierTag | SegmentKind::Reference | SegmentKind::Image)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

/// Shape of the reply the scoring prompt asks for.
pub const SCORING_OUTPUT_SCHEMA: &str = r#"{"thought": "string", "essential": [{"criterion": "string", "rationale": "string", "credit": "0 | 0.5 | 1 | <name>_verify(predict=...)"}], "additional": [...]}"#;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system: String,
    pub segments: Vec<Segment>,
    pub output_schema: String,
}

impl GenerationRequest {
    pub fn user(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Lowercase hex SHA-256 of `system`, a 0x1f separator and the user text.
    pub fn key(&self) -> String {
        request_key(&self.system, &self.user())
    }

    /// Text of engine-supplied segments only.
    pub fn engine_text(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter(|s| s.kind.is_engine_supplied()).map(|s| s.text.as_str())
    }

    pub fn has_segment(&self, kind: SegmentKind) -> bool {
        self.segments.iter().any(|s| s.kind == kind)
    }
}

pub fn request_key(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0x1f]);
    h.update(user.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        out.push(char::from_digit(u32::from(b >> 4), 16).unwrap_or('0'));
        out.push(char::from_digit(u32::from(b & 0xf), 16).unwrap_or('0'));
    }
    out
}

struct Builder {
    segments: Vec<Segment>,
}

impl Builder {
    fn push(&mut self, kind: SegmentKind, text: &str) {
        self.segments.push(Segment { kind, text: text.to_string() });
    }

    fn json_string(&mut self, kind: SegmentKind, text: &str) {
        let quoted = serde_json::to_string(text).unwrap_or_default();
        self.push(kind, &quoted);
    }

    fn criterion(&mut self, c: &Criterion, policy: ExposurePolicy, last: bool) {
        self.push(SegmentKind::Template, "    {\"criterion\": ");
        self.json_string(SegmentKind::Criterion, &c.description);
        self.push(SegmentKind::Template, ", \"reference\": ");
        match (&c.reference, policy.mode) {
            (Reference::GroundTruth(text), _) => self.json_string(SegmentKind::Reference, text),
            (Reference::Verifier(call), ExposureMode::Unlimited) => {
                self.json_string(SegmentKind::Reference, &call.to_string())
            }
            (Reference::Verifier(call), ExposureMode::Minimal) => {
                let tag = alloc::format!("scoring tool: {}", call.name.predict_signature());
                self.json_string(SegmentKind::VerifierTag, &tag)
            }
        }
        let tail = alloc::format!(", \"weight\": {}}}{}\n", c.weight.get(), if last { "" } else { "," });
        self.push(SegmentKind::Template, &tail);
    }

    fn group(&mut self, name: &str, criteria: &[&Criterion], policy: ExposurePolicy, last: bool) {
        self.push(SegmentKind::Template, &alloc::format!("  \"{name}\": [\n"));
        for (i, c) in criteria.iter().enumerate() {
            self.criterion(c, policy, i + 1 == criteria.len());
        }
        self.push(SegmentKind::Template, if last { "  ]\n" } else { "  ],\n" });
    }
}

fn build(
    instance: &TaskInstance,
    criteria: &[&Criterion],
    policy: ExposurePolicy,
    show_image: bool,
) -> Result<GenerationRequest, ExecutionError> {
    if instance.prompt_text.trim().is_empty() {
        return Err(ExecutionError::EmptyField("prompt_text"));
    }
    if instance.response.trim().is_empty() {
        return Err(ExecutionError::EmptyField("response"));
    }
    let mut b = Builder { segments: Vec::new() };
    b.push(SegmentKind::Template, "## Question\n");
    b.push(SegmentKind::Prompt, &instance.prompt_text);
    if let (true, Some(image)) = (show_image, &instance.image_ref) {
        b.push(SegmentKind::Template, "\n\n## Image\n");
        b.push(SegmentKind::Image, &alloc::format!("[image: {image}]"));
    }
    b.push(SegmentKind::Template, "\n\n## Checklist\n{\n");
    let pick = |t: CriterionType| criteria.iter().copied().filter(|c| c.ctype == t).collect::<Vec<_>>();
    b.group("essential", &pick(CriterionType::Essential), policy, false);
    b.group("additional", &pick(CriterionType::Additional), policy, true);
    b.push(SegmentKind::Template, "}\n\n## Response\n");
    b.push(SegmentKind::Response, &instance.response);
    b.push(SegmentKind::Template, "\n");
    Ok(GenerationRequest {
        system: scoring_system_prompt(),
        segments: b.segments,
        output_schema: SCORING_OUTPUT_SCHEMA.to_string(),
    })
}

/// Single-criterion request for one execution role.
///
/// The extractor sees the prompt, response, description and the verifier's
/// scoring-side signature; target arguments appear only under
/// [`ExposureMode::Unlimited`]. The judge additionally sees the ground-truth
/// text, and an image token only if the policy allows it.
pub fn assemble_context(
    instance: &TaskInstance,
    criterion: &Criterion,
    role: Role,
    policy: ExposurePolicy,
) -> Result<GenerationRequest, ExecutionError> {
    match (role, criterion.reference.is_verifiable()) {
        (Role::Extractor, true) => build(instance, &[criterion], policy, false),
        (Role::Judge, false) => build(instance, &[criterion], policy, policy.judge_sees_image()),
        _ => Err(ExecutionError::RoleMismatch { role, verifiable: criterion.reference.is_verifiable() }),
    }
}

/// One request covering the whole rubric, each criterion rendered for its role.
pub fn assemble_scoring_request(
    instance: &TaskInstance,
    rubric: &Rubric,
    policy: ExposurePolicy,
) -> Result<GenerationRequest, ExecutionError> {
    let criteria: Vec<&Criterion> = rubric.criteria().collect();
    let any_judge = criteria.iter().any(|c| !c.reference.is_verifiable());
    build(instance, &criteria, policy, policy.judge_sees_image() && any_judge)
}

/// Engine-supplied segments of `request` containing any of `needles`.
pub fn exposure_leaks<'a>(request: &'a GenerationRequest, needles: &'a [String]) -> Vec<&'a str> {
    needles
        .iter()
        .filter(|n| !n.is_empty() && request.engine_text().any(|t| t.contains(n.as_str())))
        .map(String::as_str)
        .collect()
}

/// Every string literal among a rubric's target-side arguments, plus the
/// decimal rendering of integer arguments.
pub fn target_literals(rubric: &Rubric) -> Vec<String> {
    use crate::schema::Literal;
    fn walk(lit: &Literal, out: &mut Vec<String>) {
        match lit {
            Literal::Str(s) => out.push(s.clone()),
            Literal::Int(i) => out.push(i.to_string()),
            Literal::Bool(_) => {}
            Literal::List(items) => items.iter().for_each(|l| walk(l, out)),
        }
    }
    let mut out = Vec::new();
    for c in rubric.criteria() {
        if let Some(call) = c.reference.call() {
            for (_, lit) in call.target_args() {
                walk(lit, &mut out);
            }
        }
    }
    out
}
