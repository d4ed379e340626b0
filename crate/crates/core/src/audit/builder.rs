//! Building abnormal-response audit records through a generation service:
//! one generator call, two independent reviewer calls, a deterministic
//! target-leak scan, then one scoring call for the model under audit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{AuditCategory, AuditRecord};
use crate::execution::prompts::{
    fill, ABNORMAL_RESPONSE, AUDIT_QUALITY_CHECK, FAILURE_ADVERSARIAL, FAILURE_IRRELEVANT, FAILURE_NO_FINAL_ANSWER,
    FAILURE_WRONG_BUT_PLAUSIBLE,
};
use crate::execution::{
    assemble_scoring_request, extract_json_object, DecodeParams, ExecutionError, ExposurePolicy, GenerationRequest,
    GenerationTransport, Segment, SegmentKind, TaskInstance, TransportError,
};
use crate::genrm::CriterionLabel;
use crate::schema::{
    looks_like_call, parse_call, DiscreteCredit, Literal, Reference, Rubric, VerifierCall, VerifierName,
};

const BUILDER_SYSTEM: &str = "You construct evaluation cases for a reward model and follow the output format exactly.";
const REVIEWER_SYSTEM: &str = "You are a strict reviewer of evaluation cases.";
const VERDICT_SCHEMA: &str = r#"{"accept": "boolean", "reason": "string"}"#;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("category {0:?} is not an abnormal category")]
    NotAbnormal(AuditCategory),
    #[error("generation failed: {0}")]
    Transport(#[from] TransportError),
    #[error("generator output: {0}")]
    Malformed(String),
    #[error("scoring request: {0}")]
    Request(#[from] ExecutionError),
}

pub fn failure_instruction(category: AuditCategory) -> Option<&'static str> {
    match category {
        AuditCategory::Regular => None,
        AuditCategory::NoFinalAnswer => Some(FAILURE_NO_FINAL_ANSWER),
        AuditCategory::Irrelevant => Some(FAILURE_IRRELEVANT),
        AuditCategory::WrongButPlausible => Some(FAILURE_WRONG_BUT_PLAUSIBLE),
        AuditCategory::Adversarial => Some(FAILURE_ADVERSARIAL),
    }
}

fn single_segment(system: &str, text: String, schema: &str) -> GenerationRequest {
    GenerationRequest {
        system: system.to_string(),
        segments: alloc::vec![Segment { kind: SegmentKind::Template, text }],
        output_schema: schema.to_string(),
    }
}

/// Request asking the generator to rewrite `instance.response` into the
/// given failure type and annotate it against the full rubric.
pub fn abnormal_generation_request(
    instance: &TaskInstance,
    rubric: &Rubric,
    category: AuditCategory,
) -> Result<GenerationRequest, BuildError> {
    let failure = failure_instruction(category).ok_or(BuildError::NotAbnormal(category))?;
    let checklist = rubric.to_json_string();
    let text = fill(
        ABNORMAL_RESPONSE,
        &[
            ("question", &instance.prompt_text),
            ("original_response", &instance.response),
            ("checklist", &checklist),
            ("failure_instruction", failure.trim()),
        ],
    );
    Ok(single_segment(BUILDER_SYSTEM, text, "<response>...</response><extractions>{...}</extractions>"))
}

/// A generated abnormal response with its per-criterion annotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbnormalDraft {
    pub response: String,
    /// One label per rubric criterion, essential first.
    pub labels: Vec<CriterionLabel>,
    pub rationales: Vec<String>,
}

fn tagged<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    let end = start + text[start..].find(&close)?;
    Some(text[start..end].trim())
}

fn literal_from_json(value: &Value) -> Option<Literal> {
    Some(match value {
        Value::Null => Literal::Str(String::new()),
        Value::String(s) => Literal::Str(s.clone()),
        Value::Bool(b) => Literal::Bool(*b),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Literal::Int(i),
            None => Literal::Str(n.to_string()),
        },
        Value::Array(items) => Literal::List(items.iter().map(literal_from_json).collect::<Option<_>>()?),
        Value::Object(_) => return None,
    })
}

/// Predict-side call for an annotated value. A call string is taken as is;
/// a bare time value borrows the rubric's target format.
fn extraction_call(reference: &VerifierCall, value: &Value) -> Result<VerifierCall, String> {
    if let Value::String(s) = value {
        if looks_like_call(s) {
            let call = parse_call(s).map_err(|e| e.to_string())?;
            if call.name != reference.name {
                return Err(format!("expected {}, found {}", reference.name, call.name));
            }
            return Ok(call);
        }
    }
    let predict = literal_from_json(value).ok_or_else(|| String::from("object is not a value"))?;
    let mut call = VerifierCall::new(reference.name);
    call.args.push(("predict".into(), predict));
    if reference.name == VerifierName::Time {
        if let Some(fmt) = reference.get("tformat") {
            call.args.push(("pformat".into(), fmt.clone()));
        }
    }
    Ok(call)
}

fn credit_from_json(value: Option<&Value>) -> Option<DiscreteCredit> {
    let v = match value? {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    DiscreteCredit::from_value(v)
}

/// Reads `<response>` and the `<extractions>` JSON object keyed by criterion
/// text; every rubric criterion must be annotated.
pub fn parse_abnormal_output(text: &str, rubric: &Rubric) -> Result<AbnormalDraft, BuildError> {
    let bad = |m: String| BuildError::Malformed(m);
    let response = tagged(text, "response").ok_or_else(|| bad("missing <response> block".into()))?;
    if response.is_empty() {
        return Err(bad("empty response".into()));
    }
    let raw = tagged(text, "extractions").ok_or_else(|| bad("missing <extractions> block".into()))?;
    let parsed: Value = serde_json::from_str(extract_json_object(raw)).map_err(|e| bad(e.to_string()))?;
    let map: &Map<String, Value> = parsed.as_object().ok_or_else(|| bad("extractions must be an object".into()))?;
    let find = |desc: &str| map.iter().find(|(k, _)| k.trim() == desc.trim()).map(|(_, v)| v);
    let mut labels = Vec::with_capacity(rubric.len());
    let mut rationales = Vec::with_capacity(rubric.len());
    for c in rubric.criteria() {
        let entry = find(&c.description).ok_or_else(|| bad(format!("no annotation for {:?}", c.description)))?;
        let credit =
            credit_from_json(entry.get("credit")).ok_or_else(|| bad(format!("bad credit for {:?}", c.description)))?;
        let extracted_value = match &c.reference {
            Reference::Verifier(reference) => {
                let value = entry.get("extracted_value").unwrap_or(&Value::Null);
                Some(extraction_call(reference, value).map_err(|e| bad(format!("{:?}: {e}", c.description)))?)
            }
            Reference::GroundTruth(_) => None,
        };
        labels.push(CriterionLabel { credit, extracted_value });
        rationales.push(entry.get("rationale").and_then(Value::as_str).unwrap_or_default().to_string());
    }
    Ok(AbnormalDraft { response: response.to_string(), labels, rationales })
}

/// Request asking a reviewer to accept or reject a draft.
pub fn quality_check_request(
    instance: &TaskInstance,
    rubric: &Rubric,
    category: AuditCategory,
    draft: &AbnormalDraft,
) -> Result<GenerationRequest, BuildError> {
    let failure = failure_instruction(category).ok_or(BuildError::NotAbnormal(category))?;
    let mut notes = Map::new();
    for ((c, label), rationale) in rubric.criteria().zip(&draft.labels).zip(&draft.rationales) {
        let mut e = Map::new();
        let value = label.extracted_value.as_ref().map_or(Value::Null, |v| Value::String(v.to_string()));
        e.insert("extracted_value".into(), value);
        e.insert("credit".into(), Value::from(label.credit.value()));
        e.insert("rationale".into(), Value::String(rationale.clone()));
        notes.insert(c.description.clone(), Value::Object(e));
    }
    let text = fill(
        AUDIT_QUALITY_CHECK,
        &[
            ("question", &instance.prompt_text),
            ("failure_instruction", failure.trim()),
            ("checklist", &rubric.to_json_string()),
            ("response", &draft.response),
            ("extractions", &Value::Object(notes).to_string()),
        ],
    );
    Ok(single_segment(REVIEWER_SYSTEM, text, VERDICT_SCHEMA))
}

/// `Ok(reason)` on acceptance, `Err(reason)` otherwise; an unreadable
/// verdict is a rejection.
pub fn parse_verdict(text: &str) -> Result<String, String> {
    let Ok(v) = serde_json::from_str::<Value>(extract_json_object(text)) else {
        return Err("unreadable verdict".into());
    };
    let reason = v.get("reason").and_then(Value::as_str).unwrap_or_default().to_string();
    match v.get("accept").and_then(Value::as_bool) {
        Some(true) => Ok(reason),
        Some(false) => Err(reason),
        None => Err("verdict without accept field".into()),
    }
}

fn contains_token(haystack: &str, needle: &str) -> bool {
    let bounded = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
    haystack
        .match_indices(needle)
        .any(|(i, m)| bounded(haystack[..i].chars().next_back()) && bounded(haystack[i + m.len()..].chars().next()))
}

/// Target strings of fail-labelled verifier criteria that still appear in
/// the draft response (case-insensitive, on token boundaries).
pub fn leaked_targets(draft: &AbnormalDraft, rubric: &Rubric) -> Vec<String> {
    let response = draft.response.to_lowercase();
    let mut out = Vec::new();
    for (c, label) in rubric.criteria().zip(&draft.labels) {
        let (Reference::Verifier(call), DiscreteCredit::Zero) = (&c.reference, label.credit) else {
            continue;
        };
        for (key, lit) in call.target_args() {
            if !matches!(key.as_str(), "target" | "candidates") {
                continue;
            }
            for s in lit.strings() {
                let needle = s.trim().to_lowercase();
                if !needle.is_empty() && contains_token(&response, &needle) && !out.contains(&s.to_string()) {
                    out.push(s.to_string());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rejection {
    Malformed { detail: String },
    Reviewer { reviewer: usize, reason: String },
    TargetLeak { targets: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildOutcome {
    Accepted(AuditRecord),
    Rejected(Rejection),
}

/// Services used to build one record.
pub struct BuildServices<'a> {
    pub generator: &'a dyn GenerationTransport,
    pub reviewers: [&'a dyn GenerationTransport; 2],
    /// The scoring model under audit.
    pub scorer: &'a dyn GenerationTransport,
    pub params: DecodeParams,
    pub policy: ExposurePolicy,
}

/// Generates, reviews and scores one abnormal record. Drafts that fail to
/// parse, are rejected by either reviewer, or leak a failed target are
/// rejected rather than returned as errors.
pub fn build_audit_record(
    instance: &TaskInstance,
    rubric: &Rubric,
    category: AuditCategory,
    services: &BuildServices<'_>,
) -> Result<BuildOutcome, BuildError> {
    let request = abnormal_generation_request(instance, rubric, category)?;
    let reply = services.generator.generate(&request, &services.params)?;
    let draft = match parse_abnormal_output(&reply.text, rubric) {
        Ok(d) => d,
        Err(BuildError::Malformed(detail)) => return Ok(BuildOutcome::Rejected(Rejection::Malformed { detail })),
        Err(e) => return Err(e),
    };
    let review = quality_check_request(instance, rubric, category, &draft)?;
    for (i, reviewer) in services.reviewers.iter().enumerate() {
        let verdict = reviewer.generate(&review, &services.params)?;
        if let Err(reason) = parse_verdict(&verdict.text) {
            return Ok(BuildOutcome::Rejected(Rejection::Reviewer { reviewer: i, reason }));
        }
    }
    let leaks = leaked_targets(&draft, rubric);
    if !leaks.is_empty() {
        return Ok(BuildOutcome::Rejected(Rejection::TargetLeak { targets: leaks }));
    }
    let abnormal = TaskInstance { response: draft.response.clone(), ..instance.clone() };
    let scoring = assemble_scoring_request(&abnormal, rubric, services.policy)?;
    let scored = services.scorer.generate(&scoring, &services.params)?;
    Ok(BuildOutcome::Accepted(AuditRecord {
        id: format!("{}:{}", instance.id, category.key()),
        rubric: rubric.clone(),
        response: draft.response,
        category,
        labels: draft.labels,
        genrm_raw_output: scored.text,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::GenerationReply;
    use crate::schema::parse_rubric;
    use std::sync::Mutex;

    const RUBRIC: &str = r#"{"essential":[
        {"criterion":"Gives the total.","reference":"expr_verify(target='42')","weight":3},
        {"criterion":"Gives the time.","reference":"time_verify(target='18:15', tformat='%H:%M')","weight":2}],
        "additional":[{"criterion":"Explains the method.","reference":"Adds both parts.","weight":1}]}"#;

    fn instance() -> TaskInstance {
        TaskInstance {
            id: "q7".into(),
            prompt_text: "What is the total, and when?".into(),
            image_ref: None,
            response: "The total is 42 at 18:15.".into(),
            response_length: 9,
        }
    }

    fn generator_reply(response: &str) -> String {
        format!(
            "<response>{response}</response>\n<extractions>{{\
             \"Gives the total.\": {{\"extracted_value\": \"\", \"credit\": 0, \"rationale\": \"no value\"}},\
             \"Gives the time.\": {{\"extracted_value\": \"6:15 PM\", \"credit\": 0, \"rationale\": \"none\"}},\
             \"Explains the method.\": {{\"extracted_value\": null, \"credit\": 0.5, \"rationale\": \"partly\"}}\
             }}</extractions>"
        )
    }

    struct Canned(Mutex<Vec<String>>);

    impl GenerationTransport for Canned {
        fn generate(&self, _: &GenerationRequest, _: &DecodeParams) -> Result<GenerationReply, TransportError> {
            let mut q = self.0.lock().unwrap();
            if q.is_empty() {
                return Err(TransportError::NoReply("exhausted".into()));
            }
            Ok(GenerationReply::stop(q.remove(0)))
        }
    }

    fn canned(items: &[&str]) -> Canned {
        Canned(Mutex::new(items.iter().map(|s| s.to_string()).collect()))
    }

    #[test]
    fn parses_draft_into_labels() {
        let r = parse_rubric(RUBRIC).unwrap();
        let d = parse_abnormal_output(&generator_reply("Let me set up the sum first."), &r).unwrap();
        assert_eq!(d.response, "Let me set up the sum first.");
        assert_eq!(d.labels[0].extracted_value.as_ref().unwrap().to_string(), "expr_verify(predict='')");
        assert_eq!(
            d.labels[1].extracted_value.as_ref().unwrap().to_string(),
            "time_verify(predict='6:15 PM', pformat='%H:%M')"
        );
        assert_eq!(d.labels[2], CriterionLabel { credit: DiscreteCredit::Half, extracted_value: None });
        assert!(parse_abnormal_output("<response>x</response>", &r).is_err());
    }

    #[test]
    fn leak_scan_respects_token_boundaries() {
        let r = parse_rubric(RUBRIC).unwrap();
        let d = parse_abnormal_output(&generator_reply("Roughly 420 items, maybe 4242."), &r).unwrap();
        assert!(leaked_targets(&d, &r).is_empty());
        let d = parse_abnormal_output(&generator_reply("It might be 42, or not."), &r).unwrap();
        assert_eq!(leaked_targets(&d, &r), ["42"]);
    }

    #[test]
    fn full_pipeline_accepts_and_scores() {
        let r = parse_rubric(RUBRIC).unwrap();
        let gen = canned(&[&generator_reply("First add the parts; the rest follows.")]);
        let a = canned(&[r#"{"accept": true, "reason": "ok"}"#]);
        let b = canned(&[r#"Sure. {"accept": true, "reason": "fine"}"#]);
        let scorer = canned(&["{\"thought\": \"\"}"]);
        let services = BuildServices {
            generator: &gen,
            reviewers: [&a, &b],
            scorer: &scorer,
            params: DecodeParams::default(),
            policy: ExposurePolicy::MINIMAL,
        };
        let BuildOutcome::Accepted(rec) =
            build_audit_record(&instance(), &r, AuditCategory::NoFinalAnswer, &services).unwrap()
        else {
            panic!("rejected");
        };
        assert_eq!(rec.id, "q7:no_final_answer");
        assert_eq!(rec.genrm_raw_output, "{\"thought\": \"\"}");
        assert_eq!(rec.labels.len(), 3);
    }

    #[test]
    fn second_reviewer_and_leaks_reject() {
        let r = parse_rubric(RUBRIC).unwrap();
        let scorer = canned(&[]);
        let gen = canned(&[&generator_reply("Hmm.")]);
        let yes = canned(&[r#"{"accept": true}"#]);
        let no = canned(&[r#"{"accept": false, "reason": "labels wrong"}"#]);
        let services = BuildServices {
            generator: &gen,
            reviewers: [&yes, &no],
            scorer: &scorer,
            params: DecodeParams::default(),
            policy: ExposurePolicy::MINIMAL,
        };
        let out = build_audit_record(&instance(), &r, AuditCategory::Irrelevant, &services).unwrap();
        assert_eq!(out, BuildOutcome::Rejected(Rejection::Reviewer { reviewer: 1, reason: "labels wrong".into() }));

        let gen = canned(&[&generator_reply("The answer is 42.")]);
        let yes2 = canned(&[r#"{"accept": true}"#, r#"{"accept": true}"#]);
        let services = BuildServices { generator: &gen, reviewers: [&yes2, &yes2], ..services };
        let out = build_audit_record(&instance(), &r, AuditCategory::Adversarial, &services).unwrap();
        assert_eq!(out, BuildOutcome::Rejected(Rejection::TargetLeak { targets: alloc::vec!["42".into()] }));
        assert!(matches!(
            abnormal_generation_request(&instance(), &r, AuditCategory::Regular),
            Err(BuildError::NotAbnormal(_))
        ));
    }
}
