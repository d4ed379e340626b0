//! Prompt template assets and placeholder filling.

use alloc::string::String;

use crate::schema::VerifierName;

pub const RUBRIC_GENERATION: &str = include_str!("../../assets/prompts/rubric_generation.txt");
pub const DUAL_VERIFICATION: &str = include_str!("../../assets/prompts/dual_verification.txt");
pub const RUBRIC_AGGREGATION: &str = include_str!("../../assets/prompts/rubric_aggregation.txt");
pub const RESPONSE_SCORING: &str = include_str!("../../assets/prompts/response_scoring.txt");
pub const ABNORMAL_RESPONSE: &str = include_str!("../../assets/prompts/abnormal_response.txt");
pub const FAILURE_NO_FINAL_ANSWER: &str = include_str!("../../assets/prompts/failure_no_final_answer.txt");
pub const FAILURE_IRRELEVANT: &str = include_str!("../../assets/prompts/failure_irrelevant.txt");
pub const FAILURE_WRONG_BUT_PLAUSIBLE: &str = include_str!("../../assets/prompts/failure_wrong_but_plausible.txt");
pub const FAILURE_ADVERSARIAL: &str = include_str!("../../assets/prompts/failure_adversarial.txt");
pub const AUDIT_QUALITY_CHECK: &str = include_str!("../../assets/prompts/audit_quality_check.txt");

fn usage(name: VerifierName) -> &'static str {
    match name {
        VerifierName::Text => {
            "similarity of OCR-style text or LaTeX transcriptions; with candidates the best match counts"
        }
        VerifierName::Expr => {
            "equivalence of option letters, numbers or LaTeX expressions; keep units out of the value"
        }
        VerifierName::Time => "equality of dates or times written with Python datetime format strings",
        VerifierName::List => "order-free matching of extracted text lists such as key fields",
        VerifierName::BBox => "overlap of [x1, y1, x2, y2] boxes on a 0-1000 grid",
        VerifierName::Point => "closeness of [x, y] points on a 0-1000 grid",
    }
}

/// Which side of the two-stage call interface a specification block describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecSide {
    /// Rubric authoring: target-side signatures.
    Rubric,
    /// Response scoring: predict-side signatures only.
    Scoring,
}

/// The verifier list inserted at `{verifier_specs}`.
pub fn verifier_specs(allowed: &[VerifierName], side: SpecSide) -> String {
    let mut out = String::new();
    for &name in allowed {
        let sig = match side {
            SpecSide::Rubric => name.target_signature(),
            SpecSide::Scoring => name.predict_signature(),
        };
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("- ");
        out.push_str(sig);
        out.push_str(": ");
        out.push_str(usage(name));
    }
    out
}

/// Replaces each `{key}` with its value; unknown placeholders are left alone.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::from(template);
    for (key, value) in values {
        let token = alloc::format!("{{{key}}}");
        out = out.replace(&token, value);
    }
    out
}

/// System text for response scoring, listing every verifier's predict side.
pub fn scoring_system_prompt() -> String {
    fill(RESPONSE_SCORING, &[("verifier_specs", &verifier_specs(&VerifierName::ALL, SpecSide::Scoring))])
}

/// System text for rubric drafting; `with_self_check` adds the reference-answer check.
pub fn rubric_generation_prompt(allowed: &[VerifierName], with_self_check: bool) -> String {
    let specs = verifier_specs(allowed, SpecSide::Rubric);
    let check = if with_self_check { DUAL_VERIFICATION } else { "" };
    fill(RUBRIC_GENERATION, &[("verifier_specs", &specs), ("dual_verification", check)])
}

pub fn rubric_aggregation_prompt(allowed: &[VerifierName]) -> String {
    fill(RUBRIC_AGGREGATION, &[("verifier_specs", &verifier_specs(allowed, SpecSide::Rubric))])
}
