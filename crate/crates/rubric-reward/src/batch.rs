//! Record formats and per-record processing shared by the command line and
//! in-process callers.

use rubric_reward_core::aggregation::{
    retains, rubric_meta, score_group, AggregationConfig, AggregationError, FilterMode, FormatRuleSet, RewardBreakdown,
    Rollout,
};
use rubric_reward_core::audit::{AuditCategory, AuditError};
use rubric_reward_core::execution::{
    request_scoring, score_response, CriterionScore, DecodeParams, ExecutionError, ExposurePolicy, GenerationTransport,
    RequestOptions, ScoringMode, TaskInstance, VerifyPairError,
};
use rubric_reward_core::schema::{
    parse_scoring, parse_scoring_lenient, rubric_from_value, CriterionType, Rubric, SchemaError, ScoringOutput,
};
use rubric_reward_core::verifiers::VerifierConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Failure class; doubles as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Io,
    Parse,
    Semantic,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Parse => 2,
            ErrorKind::Semantic => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct RecordError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RecordError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }
}

impl From<SchemaError> for RecordError {
    fn from(e: SchemaError) -> Self {
        RecordError::new(ErrorKind::Parse, e.to_string())
    }
}

impl From<ExecutionError> for RecordError {
    fn from(e: ExecutionError) -> Self {
        let kind = match &e {
            ExecutionError::Transport { .. } => ErrorKind::Io,
            ExecutionError::ParseFailureAfterRetries { .. } => ErrorKind::Parse,
            _ => ErrorKind::Semantic,
        };
        RecordError::new(kind, e.to_string())
    }
}

impl From<AggregationError> for RecordError {
    fn from(e: AggregationError) -> Self {
        RecordError::new(ErrorKind::Semantic, e.to_string())
    }
}

impl From<AuditError> for RecordError {
    fn from(e: AuditError) -> Self {
        RecordError::new(ErrorKind::Semantic, e.to_string())
    }
}

impl From<VerifyPairError> for RecordError {
    fn from(e: VerifyPairError) -> Self {
        let kind = match e {
            VerifyPairError::Parse { .. } => ErrorKind::Parse,
            VerifyPairError::Mismatch(_) => ErrorKind::Semantic,
        };
        RecordError::new(kind, e.to_string())
    }
}

/// Engine settings for one batch run; fixed once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub mode: ScoringMode,
    pub exposure: ExposurePolicy,
    pub aggregation: AggregationConfig,
    pub group_size: Option<usize>,
    pub filter_mode: FilterMode,
    pub verifier: VerifierConfig,
    pub retries: u32,
    pub params: DecodeParams,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            mode: ScoringMode::Lenient,
            exposure: ExposurePolicy::MINIMAL,
            aggregation: AggregationConfig::default(),
            group_size: None,
            filter_mode: FilterMode::Any,
            verifier: VerifierConfig::default(),
            retries: RequestOptions::default().retries,
            params: DecodeParams::default(),
        }
    }
}

/// A document field given either as JSON text or as an inline object.
pub fn document_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn rubric_of(v: &Value) -> Result<Rubric, RecordError> {
    match v {
        Value::String(s) => {
            let value: Value =
                serde_json::from_str(s).map_err(|e| RecordError::new(ErrorKind::Parse, e.to_string()))?;
            Ok(rubric_from_value(&value)?)
        }
        other => Ok(rubric_from_value(other)?),
    }
}

fn parse_for(mode: ScoringMode, raw: &str) -> Result<ScoringOutput, SchemaError> {
    match mode {
        ScoringMode::Strict => parse_scoring(raw),
        ScoringMode::Lenient => parse_scoring_lenient(raw),
    }
}

// ---- score ----

/// One rollout to score: either a recorded scoring output, or an instance
/// to send through the transport.
#[derive(Debug, Clone, Deserialize)]
pub struct ScoreInput {
    pub id: String,
    pub rubric: Value,
    #[serde(default)]
    pub scoring: Option<Value>,
    #[serde(default)]
    pub instance: Option<TaskInstance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreOutput {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<CriterionScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
}

pub fn score_record(
    input: &ScoreInput,
    settings: &Settings,
    transport: Option<&dyn GenerationTransport>,
) -> Result<Vec<CriterionScore>, RecordError> {
    let rubric = rubric_of(&input.rubric)?;
    let scoring = match (&input.scoring, &input.instance, transport) {
        (Some(doc), _, _) => parse_for(settings.mode, &document_text(doc))?,
        (None, Some(instance), Some(t)) => {
            let options = RequestOptions {
                retries: settings.retries,
                params: settings.params,
                lenient_calls: settings.mode == ScoringMode::Lenient,
            };
            request_scoring(instance, &rubric, t, settings.exposure, &options)?
        }
        (None, Some(_), None) => return Err(RecordError::new(ErrorKind::Io, "no transport configured")),
        (None, None, _) => return Err(RecordError::new(ErrorKind::Parse, "record has neither scoring nor instance")),
    };
    Ok(score_response(&rubric, &scoring, settings.mode, &settings.verifier)?)
}

// ---- aggregate ----

/// One rollout group: G scoring outputs against one rubric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateInput {
    pub id: String,
    pub rubric: Value,
    pub scorings: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_lengths: Option<Vec<u64>>,
    /// Response texts, needed for the format rules; without them the format mask is 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responses: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutOutput {
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
    pub criteria: Vec<CriterionScore>,
    /// The scoring output did not parse; every criterion scored 0.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub unparsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupOutput {
    pub saturated: bool,
    pub rollouts: Vec<RolloutOutput>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateOutput {
    pub id: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
}

/// Scores and aggregates one group. In lenient mode an unparseable scoring
/// output scores 0 on every criterion instead of failing the group.
pub fn aggregate_group(
    rubric: &Rubric,
    scorings: &[String],
    response_lengths: Option<&[u64]>,
    responses: Option<&[String]>,
    settings: &Settings,
) -> Result<GroupOutput, RecordError> {
    let g = scorings.len();
    if let Some(want) = settings.group_size {
        if want != g {
            return Err(RecordError::new(ErrorKind::Semantic, format!("group has {g} rollouts, expected {want}")));
        }
    }
    let check = |name: &str, n: Option<usize>| match n {
        Some(n) if n != g => Err(RecordError::new(ErrorKind::Semantic, format!("{n} {name} for {g} scorings"))),
        _ => Ok(()),
    };
    check("response lengths", response_lengths.map(<[u64]>::len))?;
    check("responses", responses.map(<[String]>::len))?;
    let mut criteria = Vec::with_capacity(g);
    let mut unparsed = Vec::with_capacity(g);
    for raw in scorings {
        let (scoring, failed) = match parse_for(settings.mode, raw) {
            Ok(s) => (s, false),
            Err(e) if settings.mode == ScoringMode::Strict => return Err(e.into()),
            Err(_) => (ScoringOutput { thought: String::new(), essential: Vec::new(), additional: Vec::new() }, true),
        };
        criteria.push(score_response(rubric, &scoring, settings.mode, &settings.verifier)?);
        unparsed.push(failed);
    }
    let raw: Vec<Vec<f64>> = criteria.iter().map(|c| c.iter().map(|s| s.raw).collect()).collect();
    let rollouts: Vec<Rollout<'_>> = (0..g)
        .map(|i| Rollout {
            raw: &raw[i],
            response: responses.map(|r| r[i].as_str()),
            response_length: response_lengths.map_or(0, |l| l[i]),
        })
        .collect();
    let result = score_group(&rubric_meta(rubric), &rollouts, &settings.aggregation)?;
    let rollouts = result
        .breakdowns
        .into_iter()
        .zip(criteria)
        .zip(unparsed)
        .map(|((breakdown, criteria), unparsed)| RolloutOutput { breakdown, criteria, unparsed })
        .collect();
    Ok(GroupOutput { saturated: result.saturated, rollouts })
}

pub fn aggregate_record(input: &AggregateInput, settings: &Settings) -> Result<GroupOutput, RecordError> {
    let rubric = rubric_of(&input.rubric)?;
    let scorings: Vec<String> = input.scorings.iter().map(document_text).collect();
    aggregate_group(&rubric, &scorings, input.response_lengths.as_deref(), input.responses.as_deref(), settings)
}

// ---- filter ----

/// Raw scores of one instance's rollouts, one K-vector per rollout. The
/// criterion types come from `rubric` or, without one, from `ctypes`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterInput {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rubric: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctypes: Option<Vec<CriterionType>>,
    pub raw_scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutput {
    pub mode: FilterMode,
    pub total: usize,
    pub retained: Vec<String>,
}

pub fn filter_record(input: &FilterInput, mode: FilterMode) -> Result<bool, RecordError> {
    let ctypes: Vec<CriterionType> = match (&input.rubric, &input.ctypes) {
        (Some(r), _) => rubric_meta(&rubric_of(r)?).iter().map(|m| m.ctype).collect(),
        (None, Some(t)) => t.clone(),
        (None, None) => return Err(RecordError::new(ErrorKind::Parse, "record needs a rubric or ctypes")),
    };
    if let Some(row) = input.raw_scores.iter().find(|r| r.len() != ctypes.len()) {
        return Err(RecordError::new(
            ErrorKind::Semantic,
            format!("rollout has {} scores for {} criteria", row.len(), ctypes.len()),
        ));
    }
    Ok(retains(&ctypes, &input.raw_scores, mode))
}

// ---- build-audit-set ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildInput {
    pub instance: TaskInstance,
    pub rubric: Value,
    pub category: AuditCategory,
}

// ---- ordered parallel map ----

/// Maps `f` over `items` on a pool of `parallelism` workers; results keep
/// input order.
pub fn par_map<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().map(&f).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => items.iter().map(&f).collect(),
    }
}

/// Format rules as configured for a run; exposed so callers can disable them.
pub fn format_rules(enabled: bool) -> FormatRuleSet {
    if enabled {
        FormatRuleSet::default()
    } else {
        FormatRuleSet::DISABLED
    }
}
