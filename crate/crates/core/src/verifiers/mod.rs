//! The six deterministic verifiers and a dispatcher over merged calls.

mod expr;
mod geometry;
mod hungarian;
mod list;
mod text;
mod time;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::schema::{Literal, VerifierCall, VerifierName};

pub use expr::{expr_verify, parse_expr, ExprValue};
pub use geometry::{bbox_verify, iou, parse_boxes, parse_points, point_proximity, point_verify, BBox, Point};
pub use hungarian::{assignment_total, hungarian, Assignment};
pub use list::{list_verify, ListTarget};
pub use text::{
    canonical_latex, levenshtein, normalize, text_similarity, text_verify, TextFlags, TextTarget, DEFAULT_ST_MARKERS,
};
pub use time::{parse_time, time_verify, Hour, TimeFields, TimeFormatError};

/// Default point-proximity scale: 10% of the 0–1000 diagonal.
pub const DEFAULT_POINT_SCALE: f64 = 141.42;

/// Tunable verifier constants.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifierConfig {
    /// Distance at which point proximity reaches 0.
    pub point_scale: f64,
    /// Leading/trailing markers removed under `ignore_st`.
    pub st_markers: Vec<String>,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            point_scale: DEFAULT_POINT_SCALE,
            st_markers: DEFAULT_ST_MARKERS.iter().map(|m| m.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifierError {
    #[error("invalid arguments: {0}")]
    Argument(&'static str),
    #[error("target does not parse with its format: {0}")]
    Format(TimeFormatError),
}

fn str_arg<'a>(call: &'a VerifierCall, key: &str) -> Option<&'a str> {
    call.get(key).and_then(Literal::as_str)
}

fn flag(call: &VerifierCall, key: &str) -> bool {
    call.get(key).and_then(Literal::as_bool).unwrap_or(false)
}

fn owned_strings(lit: &Literal) -> Option<Vec<String>> {
    lit.as_list()?.iter().map(|l| l.as_str().map(String::from)).collect()
}

fn owned_string_lists(lit: &Literal) -> Option<Vec<Vec<String>>> {
    lit.as_list()?.iter().map(owned_strings).collect()
}

/// Runs a call carrying both target-side and predict-side arguments.
///
/// A missing `predict` is treated as the empty prediction, except for
/// `time_verify`, which also needs `pformat` and scores 0 without it.
pub fn run_verifier(call: &VerifierCall, cfg: &VerifierConfig) -> Result<f64, VerifierError> {
    let score = match call.name {
        VerifierName::Text => {
            let candidates = match call.get("candidates") {
                Some(l) => Some(owned_strings(l).ok_or(VerifierError::Argument("candidates must be List[str]"))?),
                None => None,
            };
            let target = TextTarget::from_parts(str_arg(call, "target").map(String::from), candidates)?;
            let flags = TextFlags {
                use_latex: flag(call, "use_latex"),
                ignore_space: flag(call, "ignore_space"),
                ignore_punc: flag(call, "ignore_punc"),
                ignore_case: flag(call, "ignore_case"),
                ignore_st: flag(call, "ignore_st"),
            };
            text_verify(&target, str_arg(call, "predict").unwrap_or(""), flags, cfg)
        }
        VerifierName::Expr => {
            let target = str_arg(call, "target").ok_or(VerifierError::Argument("expr_verify needs target"))?;
            expr_verify(target, str_arg(call, "predict").unwrap_or(""))
        }
        VerifierName::Time => {
            let target = str_arg(call, "target").ok_or(VerifierError::Argument("time_verify needs target"))?;
            let tformat = str_arg(call, "tformat").ok_or(VerifierError::Argument("time_verify needs tformat"))?;
            match (str_arg(call, "predict"), str_arg(call, "pformat")) {
                (Some(p), Some(pf)) => time_verify(target, tformat, p, pf)?,
                _ => {
                    // Still surface a broken target.
                    time_verify(target, tformat, "", tformat)?;
                    0.0
                }
            }
        }
        VerifierName::List => {
            let target = match (call.get("target"), call.get("candidates")) {
                (Some(t), None) => {
                    ListTarget::Single(owned_strings(t).ok_or(VerifierError::Argument("target must be List[str]"))?)
                }
                (None, Some(c)) => {
                    let c =
                        owned_string_lists(c).ok_or(VerifierError::Argument("candidates must be List[List[str]]"))?;
                    if c.is_empty() {
                        return Err(VerifierError::Argument("candidates must be non-empty"));
                    }
                    ListTarget::Candidates(c)
                }
                (Some(_), Some(_)) => return Err(VerifierError::Argument("give exactly one of target or candidates")),
                (None, None) => return Err(VerifierError::Argument("one of target or candidates is required")),
            };
            let predict = call.get("predict").and_then(owned_strings).unwrap_or_default();
            list_verify(&target, &predict, cfg)
        }
        VerifierName::BBox => {
            let target = call
                .get("target")
                .and_then(parse_boxes)
                .filter(|t| !t.is_empty())
                .ok_or(VerifierError::Argument("bbox_verify needs a non-empty List[List[int]] target"))?;
            let predict = call.get("predict").and_then(parse_boxes).unwrap_or_default();
            bbox_verify(&target, &predict)
        }
        VerifierName::Point => {
            let target = call
                .get("target")
                .and_then(parse_points)
                .filter(|t| !t.is_empty())
                .ok_or(VerifierError::Argument("point_verify needs a non-empty List[List[int]] target"))?;
            let predict = call.get("predict").and_then(parse_points).unwrap_or_default();
            point_verify(&target, &predict, cfg.point_scale)
        }
    };
    Ok(score)
}
