//! From raw criterion scores of a rollout group to gated rewards and
//! group-relative advantages; plus the offline instance filter.

mod format;
mod remap;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{CriterionType, Rubric};

pub use format::{
    foreign_fraction, format_mask, repetition_coverage, script_of, strip_exempt_spans, ExpectedScript, FormatRuleSet,
    LanguageRule, RepetitionRule, Script,
};
pub use remap::{remap_matrix, remap_row};

pub const DEFAULT_TAU: f64 = 0.5;
/// Floor on the group standard deviation used as the advantage divisor.
pub const ADVANTAGE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AggregationError {
    #[error("group needs at least one criterion and one rollout")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("score {value} at ({row}, {col}) is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("tau must lie in (0, 1), got {0}")]
    BadTau(f64),
    #[error("group advantages need at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("{what}: expected {expected}, found {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionMeta {
    pub ctype: CriterionType,
    pub weight: u8,
}

pub fn rubric_meta(rubric: &Rubric) -> Vec<CriterionMeta> {
    rubric.criteria().map(|c| CriterionMeta { ctype: c.ctype, weight: c.weight.get() }).collect()
}

/// Raw scores of K criteria (rows) over G rollouts (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScores {
    scores: Vec<Vec<f64>>,
    meta: Vec<CriterionMeta>,
    tau: f64,
}

impl GroupScores {
    pub fn new(scores: Vec<Vec<f64>>, meta: Vec<CriterionMeta>, tau: f64) -> Result<Self, AggregationError> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(AggregationError::BadTau(tau));
        }
        let g = scores.first().map_or(0, Vec::len);
        if scores.is_empty() || g == 0 {
            return Err(AggregationError::Empty);
        }
        if meta.len() != scores.len() {
            return Err(AggregationError::LengthMismatch {
                what: "criterion metadata",
                expected: scores.len(),
                found: meta.len(),
            });
        }
        for (row, r) in scores.iter().enumerate() {
            if r.len() != g {
                return Err(AggregationError::Ragged { row, expected: g, found: r.len() });
            }
            if let Some((col, &value)) = r.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(AggregationError::OutOfRange { row, col, value });
            }
        }
        Ok(Self { scores, meta, tau })
    }

    /// Builds the K×G matrix from one K-vector per rollout.
    pub fn from_rollouts(rollouts: &[Vec<f64>], meta: Vec<CriterionMeta>, tau: f64) -> Result<Self, AggregationError> {
        let k = meta.len();
        if let Some((col, r)) = rollouts.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(AggregationError::Ragged { row: col, expected: k, found: r.len() });
        }
        let scores = (0..k).map(|row| rollouts.iter().map(|r| r[row]).collect()).collect();
        Self::new(scores, meta, tau)
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn meta(&self) -> &[CriterionMeta] {
        &self.meta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn group_size(&self) -> usize {
        self.scores[0].len()
    }

    /// Scores of rollout `i`, one per criterion.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.scores.iter().map(|r| r[i]).collect()
    }
}

/// K×G remapped matrix.
pub fn remap_group(group: &GroupScores) -> Vec<Vec<f64>> {
    remap_matrix(&group.scores, group.tau)
}

/// 0 on any essential score below 0.5 or on two or more partial essentials
/// in `[0.5, 1)`; otherwise 1.
pub fn content_mask(essential: &[f64]) -> u8 {
    let failed = essential.iter().any(|&s| s < 0.5);
    let partial = essential.iter().filter(|&&s| (0.5..1.0).contains(&s)).count();
    u8::from(!failed && partial < 2)
}

/// Weighted mean `Σ s_k · w_k / Σ w`. A lone criterion yields its score
/// unchanged, without the rounding of `s · w / w`.
pub fn base_reward(meta: &[CriterionMeta], remapped: &[f64]) -> f64 {
    if let ([_], [s]) = (meta, remapped) {
        return *s;
    }
    let total: f64 = meta.iter().map(|m| f64::from(m.weight)).sum();
    if total == 0.0 {
        return 0.0;
    }
    let weighted: f64 = meta.iter().zip(remapped).map(|(m, &s)| s * f64::from(m.weight)).sum();
    (weighted / total).min(1.0)
}

pub fn final_reward(meta: &[CriterionMeta], remapped: &[f64], content: u8, format: u8) -> f64 {
    f64::from(content) * f64::from(format) * base_reward(meta, remapped)
}

/// Zero for responses strictly longer than `max_length`.
pub fn length_gate(reward: f64, response_length: u64, max_length: u64) -> f64 {
    if response_length > max_length {
        0.0
    } else {
        reward
    }
}

/// `(r_i - mean) / max(std, ε)` with population std; all zeros for a
/// constant group.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, AggregationError> {
    let g = rewards.len();
    if g < 2 {
        return Err(AggregationError::GroupTooSmall(g));
    }
    if rewards.iter().all(|&r| r == rewards[0]) {
        return Ok(alloc::vec![0.0; g]);
    }
    let n = g as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var).max(ADVANTAGE_EPS);
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Keep if some rollout scores 0 on any criterion.
    #[default]
    Any,
    /// Keep if some rollout scores 0 on an essential criterion.
    Essential,
}

/// Whether an instance with these rollouts (each a K-vector of raw scores)
/// still carries learning signal.
pub fn retains(ctypes: &[CriterionType], rollouts: &[Vec<f64>], mode: FilterMode) -> bool {
    rollouts.iter().any(|r| {
        r.iter().zip(ctypes).any(|(&s, &t)| s == 0.0 && (mode == FilterMode::Any || t == CriterionType::Essential))
    })
}

/// Ids of retained instances, in input order.
pub fn filter_instances<'a, I>(instances: I, mode: FilterMode) -> Vec<&'a str>
where
    I: IntoIterator<Item = (&'a str, &'a [CriterionType], &'a [Vec<f64>])>,
{
    instances.into_iter().filter(|(_, t, r)| retains(t, r, mode)).map(|(id, _, _)| id).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub tau: f64,
    /// Off reproduces plain weighted scoring (the RLVR special case).
    pub remap: bool,
    pub format: FormatRuleSet,
    pub max_length: Option<u64>,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, remap: true, format: FormatRuleSet::default(), max_length: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub raw: Vec<f64>,
    pub remapped: Vec<f64>,
    pub base: f64,
    pub content_mask: u8,
    pub format_mask: u8,
    /// `content_mask · format_mask · base`.
    pub final_reward: f64,
    pub over_length: bool,
    /// `final_reward` after the length gate; the value advantages see.
    pub reward: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub breakdowns: Vec<RewardBreakdown>,
    /// Every gated reward is equal, so every advantage is 0.
    pub saturated: bool,
}

/// One rollout of a group: raw K-vector plus what the format and length
/// rules need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout<'a> {
    pub raw: &'a [f64],
    pub response: Option<&'a str>,
    pub response_length: u64,
}

/// Remap, mask, weight, length-gate and normalize one rollout group.
pub fn score_group(
    meta: &[CriterionMeta],
    rollouts: &[Rollout<'_>],
    cfg: &AggregationConfig,
) -> Result<GroupResult, AggregationError> {
    if rollouts.len() < 2 {
        return Err(AggregationError::GroupTooSmall(rollouts.len()));
    }
    let raw: Vec<Vec<f64>> = rollouts.iter().map(|r| r.raw.to_vec()).collect();
    let group = GroupScores::from_rollouts(&raw, meta.to_vec(), cfg.tau)?;
    let remapped = if cfg.remap { remap_group(&group) } else { group.scores.clone() };
    let mut breakdowns: Vec<RewardBreakdown> = rollouts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let col: Vec<f64> = remapped.iter().map(|row| row[i]).collect();
            let essential: Vec<f64> =
                col.iter().zip(meta).filter(|(_, m)| m.ctype == CriterionType::Essential).map(|(s, _)| *s).collect();
            let cm = content_mask(&essential);
            let fm = r.response.map_or(1, |text| format_mask(text, &cfg.format));
            let base = base_reward(meta, &col);
            let fin = f64::from(cm) * f64::from(fm) * base;
            let over = cfg.max_length.is_some_and(|m| r.response_length > m);
            RewardBreakdown {
                raw: r.raw.to_vec(),
                remapped: col,
                base,
                content_mask: cm,
                format_mask: fm,
                final_reward: fin,
                over_length: over,
                reward: if over { 0.0 } else { fin },
                advantage: 0.0,
            }
        })
        .collect();
    let rewards: Vec<f64> = breakdowns.iter().map(|b| b.reward).collect();
    let advantages = group_advantages(&rewards)?;
    for (b, a) in breakdowns.iter_mut().zip(&advantages) {
        b.advantage = *a;
    }
    let saturated = rewards.iter().all(|&r| r == rewards[0]);
    Ok(GroupResult { breakdowns, saturated })
}
