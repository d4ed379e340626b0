use alloc::string::String;
use alloc::vec::Vec;

use super::{assignment_total, hungarian, text_similarity, TextFlags, VerifierConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum ListTarget {
    Single(Vec<String>),
    Candidates(Vec<Vec<String>>),
}

/// Matched similarity sum over `max(|target|, |predict|)`; 1 when both are empty.
fn match_score(target: &[String], predict: &[String], cfg: &VerifierConfig) -> f64 {
    let denom = target.len().max(predict.len());
    if denom == 0 {
        return 1.0;
    }
    if target.is_empty() || predict.is_empty() {
        return 0.0;
    }
    let sim: Vec<Vec<f64>> = target
        .iter()
        .map(|t| predict.iter().map(|p| text_similarity(t, p, TextFlags::default(), cfg)).collect())
        .collect();
    let total = assignment_total(&sim, &hungarian(&sim));
    (total / denom as f64).clamp(0.0, 1.0)
}

pub fn list_verify(target: &ListTarget, predict: &[String], cfg: &VerifierConfig) -> f64 {
    match target {
        ListTarget::Single(t) => match_score(t, predict, cfg),
        ListTarget::Candidates(cs) => cs.iter().map(|c| match_score(c, predict, cfg)).fold(0.0, f64::max),
    }
}
