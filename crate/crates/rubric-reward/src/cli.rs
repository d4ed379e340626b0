//! Command-line front end. Exit codes: 0 success, 1 I/O, 2 parse, 3 semantic mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rubric_reward_core::aggregation::{AggregationConfig, FilterMode};
use rubric_reward_core::audit::{
    audit_report, build_audit_record, render_table, AuditConfig, AuditRecord, BuildOutcome, BuildServices,
};
use rubric_reward_core::execution::{verify_pair, DecodeParams, ExposurePolicy, GenerationTransport, ScoringMode};
use rubric_reward_core::genrm::GenRmConfig;
use rubric_reward_core::verifiers::VerifierConfig;
use serde::Serialize;

use crate::batch::{
    aggregate_record, filter_record, format_rules, par_map, rubric_of, score_record, AggregateInput, AggregateOutput,
    BuildInput, ErrorKind, FilterInput, FilterOutput, RecordError, ScoreInput, ScoreOutput, Settings,
};
use crate::io::{read_jsonl_lenient, IoError, Numbered};
use crate::transport::{HttpTransport, ReplayTransport};

#[derive(Debug, Parser)]
#[command(name = "rubric-reward", version, about = "Rubric-based reward scoring, aggregation and audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one verifier on a target-side and a predict-side call.
    Verify {
        target: String,
        predict: String,
        #[arg(long, default_value_t = rubric_reward_core::verifiers::DEFAULT_POINT_SCALE)]
        point_scale: f64,
    },
    /// Score rollouts: one CriterionScore list per input line.
    Score {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        transport: TransportArgs,
    },
    /// Score and aggregate rollout groups into rewards and advantages.
    Aggregate {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        /// Zero the reward of responses longer than this many tokens.
        #[arg(long)]
        max_length: Option<u64>,
        #[arg(long)]
        group_size: Option<usize>,
        /// Skip the group-wise remap (plain weighted scoring).
        #[arg(long)]
        no_remap: bool,
        /// Disable the repetition and script-mixing checks.
        #[arg(long)]
        no_format_rules: bool,
    },
    /// List instances whose rollouts still contain a zero score.
    Filter {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Any)]
        mode: ModeArg,
        #[arg(long)]
        strict: bool,
    },
    /// Reliability metrics and false-positive rates over audit records.
    Audit {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        strict: bool,
        /// Engine score counted as a false positive on a fail-labelled criterion.
        #[arg(long, default_value_t = rubric_reward_core::audit::DEFAULT_FP_THRESHOLD)]
        fp_threshold: f64,
        /// Pass bar for similarity verifiers when comparing extractions.
        #[arg(long, default_value_t = rubric_reward_core::genrm::DEFAULT_SIMILARITY_PASS)]
        similarity_pass: f64,
        /// Also write the plain-text table here (it always goes to standard error).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Generate abnormal-response audit records through a transport.
    BuildAuditSet {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        transport: TransportArgs,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Abort on the first bad record and reject unpaired scoring outputs.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_enum, default_value_t = ExposureArg::Minimal)]
    pub exposure: ExposureArg,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    #[arg(long, value_enum)]
    pub transport: Option<TransportArg>,
    /// Reply file for the replay transport.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Any,
    Essential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExposureArg {
    Minimal,
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Replay,
    Http,
}

impl From<ModeArg> for FilterMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Any => FilterMode::Any,
            ModeArg::Essential => FilterMode::Essential,
        }
    }
}

impl RunArgs {
    fn settings(&self) -> Settings {
        let mode = if self.strict { ScoringMode::Strict } else { ScoringMode::Lenient };
        let exposure = match self.exposure {
            ExposureArg::Minimal => ExposurePolicy::MINIMAL,
            ExposureArg::Unlimited => ExposurePolicy::UNLIMITED,
        };
        Settings { mode, exposure, ..Settings::default() }
    }
}

struct Fail(RecordError);

impl From<IoError> for Fail {
    fn from(e: IoError) -> Self {
        let kind = match e {
            IoError::File { .. } => ErrorKind::Io,
            IoError::Parse { .. } => ErrorKind::Parse,
        };
        Fail(RecordError::new(kind, e.to_string()))
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(RecordError::new(ErrorKind::Io, e.to_string()))
    }
}

impl From<RecordError> for Fail {
    fn from(e: RecordError) -> Self {
        Fail(e)
    }
}

impl TransportArgs {
    fn params(&self) -> DecodeParams {
        DecodeParams { temperature: self.temperature, max_tokens: self.max_tokens }
    }

    fn build(&self) -> Result<Option<Box<dyn GenerationTransport>>, Fail> {
        match self.transport {
            None => Ok(None),
            Some(TransportArg::Replay) => {
                let path = self
                    .replay
                    .as_ref()
                    .ok_or_else(|| Fail(RecordError::new(ErrorKind::Io, "--transport replay needs --replay <FILE>")))?;
                Ok(Some(Box::new(ReplayTransport::load(path)?)))
            }
            Some(TransportArg::Http) => HttpTransport::from_env(Duration::from_secs(self.timeout_secs))
                .map(|t| Some(Box::new(t) as Box<dyn GenerationTransport>))
                .map_err(|e| Fail(RecordError::new(ErrorKind::Io, e.to_string()))),
        }
    }
}

/// Per-run tallies for the summary line.
#[derive(Debug, Default)]
struct Tally {
    total: usize,
    parse: usize,
    semantic: usize,
    io: usize,
}

impl Tally {
    fn add(&mut self, err: Option<&RecordError>) {
        self.total += 1;
        match err.map(|e| e.kind) {
            Some(ErrorKind::Parse) => self.parse += 1,
            Some(ErrorKind::Semantic) => self.semantic += 1,
            Some(ErrorKind::Io) => self.io += 1,
            None => {}
        }
    }

    fn failed(&self) -> usize {
        self.parse + self.semantic + self.io
    }

    fn describe(&self) -> String {
        format!(
            "{} records, {} ok, {} failed (parse {}, semantic {}, io {})",
            self.total,
            self.total - self.failed(),
            self.failed(),
            self.parse,
            self.semantic,
            self.io
        )
    }
}

struct Ctx<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn write_output(&mut self, path: Option<&Path>, body: &[u8]) -> Result<(), Fail> {
        match path {
            Some(p) if p.as_os_str() != "-" => std::fs::write(p, body)
                .map_err(|e| Fail(RecordError::new(ErrorKind::Io, format!("{}: {e}", p.display())))),
            _ => Ok(self.stdout.write_all(body)?),
        }
    }

    fn log(&mut self, line: &str) {
        let _ = writeln!(self.stderr, "{line}");
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for item in items {
        // Serializing plain data structures cannot fail.
        serde_json::to_writer(&mut buf, item).expect("serializable record");
        buf.push(b'\n');
    }
    buf
}

/// Decodes input lines; bad lines become per-record parse errors.
fn decode<T: serde::de::DeserializeOwned>(
    path: &Path,
    strict: bool,
    ctx: &mut Ctx<'_>,
) -> Result<Vec<Numbered<T, RecordError>>, Fail> {
    let rows = read_jsonl_lenient::<T>(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let row = row.map_err(|m| RecordError::new(ErrorKind::Parse, format!("{}:{line}: {m}", path.display())));
        if let Err(e) = &row {
            if strict {
                return Err(Fail(e.clone()));
            }
            ctx.log(&format!("skipping line {line}: {e}"));
        }
        out.push((line, row));
    }
    Ok(out)
}

fn first_error<'a>(errors: impl IntoIterator<Item = Option<&'a RecordError>>) -> Option<RecordError> {
    errors.into_iter().flatten().next().cloned()
}

fn cmd_verify(target: &str, predict: &str, point_scale: f64, ctx: &mut Ctx<'_>) -> Result<(), Fail> {
    let cfg = VerifierConfig { point_scale, ..VerifierConfig::default() };
    let score = verify_pair(target, predict, &cfg).map_err(RecordError::from)?;
    writeln!(ctx.stdout, "{score:.4}")?;
    Ok(())
}

fn cmd_score(io: &IoArgs, run: &RunArgs, t: &TransportArgs, ctx: &mut Ctx<'_>) -> Result<(), Fail> {
    let mut settings = run.settings();
    settings.retries = t.retries;
    settings.params = t.params();
    let transport = t.build()?;
    let rows = decode::<ScoreInput>(&io.input, run.strict, ctx)?;
    let outputs: Vec<ScoreOutput> = par_map(&rows, io.parallelism, |(line, row)| match row {
        Ok(input) => match score_record(input, &settings, transport.as_deref()) {
            Ok(scores) => ScoreOutput { id: input.id.clone(), scores: Some(scores), error: None },
            Err(e) => ScoreOutput { id: input.id.clone(), scores: None, error: Some(e) },
        },
        Err(e) => ScoreOutput { id: format!("line {line}"), scores: None, error: Some(e.clone()) },
    });
    if run.strict {
        if let Some(e) = first_error(outputs.iter().map(|o| o.error.as_ref())) {
            return Err(Fail(e));
        }
    }
    let mut tally = Tally::default();
    for o in &outputs {
        tally.add(o.error.as_ref());
        if let Some(e) = &o.error {
            ctx.log(&format!("{}: {e}", o.id));
        }
    }
    ctx.write_output(io.output.as_deref(), &jsonl(&outputs))?;
    ctx.log(&format!("score: {}", tally.describe()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_aggregate(
    io: &IoArgs,
    run: &RunArgs,
    tau: f64,
    max_length: Option<u64>,
    group_size: Option<usize>,
    no_remap: bool,
    no_format_rules: bool,
    ctx: &mut Ctx<'_>,
) -> Result<(), Fail> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Fail(RecordError::new(ErrorKind::Semantic, format!("--tau must lie in (0, 1), got {tau}"))));
    }
    if group_size.is_some_and(|g| g < 2) {
        return Err(Fail(RecordError::new(ErrorKind::Semantic, "--group-size must be at least 2")));
    }
    let mut settings = run.settings();
    settings.group_size = group_size;
    settings.aggregation =
        AggregationConfig { tau, remap: !no_remap, format: format_rules(!no_format_rules), max_length };
    let rows = decode::<AggregateInput>(&io.input, run.strict, ctx)?;
    let outputs: Vec<AggregateOutput> = par_map(&rows, io.parallelism, |(line, row)| match row {
        Ok(input) => match aggregate_record(input, &settings) {
            Ok(group) => AggregateOutput { id: input.id.clone(), group: Some(group), error: None },
            Err(e) => AggregateOutput { id: input.id.clone(), group: None, error: Some(e) },
        },
        Err(e) => AggregateOutput { id: format!("line {line}"), group: None, error: Some(e.clone()) },
    });
    if run.strict {
        if let Some(e) = first_error(outputs.iter().map(|o| o.error.as_ref())) {
            return Err(Fail(e));
        }
    }
    let mut tally = Tally::default();
    let (mut saturated, mut unparsed, mut rewards) = (0usize, 0usize, Vec::new());
    for o in &outputs {
        tally.add(o.error.as_ref());
        if let Some(e) = &o.error {
            ctx.log(&format!("{}: {e}", o.id));
        }
        if let Some(g) = &o.group {
            saturated += usize::from(g.saturated);
            unparsed += g.rollouts.iter().filter(|r| r.unparsed).count();
            rewards.extend(g.rollouts.iter().map(|r| r.breakdown.reward));
        }
    }
    ctx.write_output(io.output.as_deref(), &jsonl(&outputs))?;
    let mean = if rewards.is_empty() { 0.0 } else { rewards.iter().sum::<f64>() / rewards.len() as f64 };
    ctx.log(&format!(
        "aggregate: {}; {saturated} saturated groups (all advantages 0); {unparsed} unparsed rollouts; mean reward {mean:.4}",
        tally.describe()
    ));
    Ok(())
}

fn cmd_filter(io: &IoArgs, mode: FilterMode, strict: bool, ctx: &mut Ctx<'_>) -> Result<(), Fail> {
    let rows = decode::<FilterInput>(&io.input, strict, ctx)?;
    let decisions: Vec<Result<bool, RecordError>> = par_map(&rows, io.parallelism, |(_, row)| match row {
        Ok(input) => filter_record(input, mode),
        Err(e) => Err(e.clone()),
    });
    let mut tally = Tally::default();
    let mut retained = Vec::new();
    for ((line, row), d) in rows.iter().zip(&decisions) {
        tally.add(d.as_ref().err());
        match (row, d) {
            (Ok(input), Ok(true)) => retained.push(input.id.clone()),
            (_, Err(e)) if strict => return Err(Fail(e.clone())),
            (_, Err(e)) => ctx.log(&format!("line {line}: {e}")),
            _ => {}
        }
    }
    let out = FilterOutput { mode, total: rows.len(), retained };
    let mut body = serde_json::to_vec(&out).expect("serializable report");
    body.push(b'\n');
    ctx.write_output(io.output.as_deref(), &body)?;
    let mode_name = match mode {
        FilterMode::Any => "any",
        FilterMode::Essential => "essential",
    };
    ctx.log(&format!("filter ({mode_name}): retained {} of {}; {}", out.retained.len(), out.total, tally.describe()));
    Ok(())
}

fn cmd_audit(
    io: &IoArgs,
    strict: bool,
    cfg: &AuditConfig,
    table: Option<&Path>,
    ctx: &mut Ctx<'_>,
) -> Result<(), Fail> {
    let rows = decode::<AuditRecord>(&io.input, strict, ctx)?;
    let records: Vec<AuditRecord> = rows.into_iter().filter_map(|(_, r)| r.ok()).collect();
    let report = audit_report(&records, cfg).map_err(RecordError::from)?;
    let mut body = serde_json::to_vec_pretty(&report).expect("serializable report");
    body.push(b'\n');
    ctx.write_output(io.output.as_deref(), &body)?;
    let text = render_table(&report);
    if let Some(p) = table {
        std::fs::write(p, &text).map_err(|e| Fail(RecordError::new(ErrorKind::Io, format!("{}: {e}", p.display()))))?;
    }
    let _ = ctx.stderr.write_all(text.as_bytes());
    ctx.log(&format!("audit: {} records", records.len()));
    Ok(())
}

fn cmd_build(io: &IoArgs, run: &RunArgs, t: &TransportArgs, ctx: &mut Ctx<'_>) -> Result<(), Fail> {
    let transport =
        t.build()?.ok_or_else(|| Fail(RecordError::new(ErrorKind::Io, "build-audit-set needs --transport")))?;
    let settings = run.settings();
    let services = BuildServices {
        generator: transport.as_ref(),
        reviewers: [transport.as_ref(), transport.as_ref()],
        scorer: transport.as_ref(),
        params: t.params(),
        policy: settings.exposure,
    };
    let rows = decode::<BuildInput>(&io.input, run.strict, ctx)?;
    let outcomes: Vec<Result<BuildOutcome, RecordError>> = par_map(&rows, io.parallelism, |(_, row)| {
        let input = row.as_ref().map_err(Clone::clone)?;
        let rubric = rubric_of(&input.rubric)?;
        build_audit_record(&input.instance, &rubric, input.category, &services)
            .map_err(|e| RecordError::new(ErrorKind::Io, e.to_string()))
    });
    let (mut accepted, mut rejected, mut tally) = (Vec::new(), 0usize, Tally::default());
    for ((line, _), o) in rows.iter().zip(outcomes) {
        tally.add(o.as_ref().err());
        match o {
            Ok(BuildOutcome::Accepted(rec)) => accepted.push(rec),
            Ok(BuildOutcome::Rejected(why)) => {
                rejected += 1;
                ctx.log(&format!("line {line}: rejected {}", serde_json::to_string(&why).unwrap_or_default()));
            }
            Err(e) if run.strict => return Err(Fail(e)),
            Err(e) => ctx.log(&format!("line {line}: {e}")),
        }
    }
    ctx.write_output(io.output.as_deref(), &jsonl(&accepted))?;
    ctx.log(&format!("build-audit-set: {}; {} accepted, {rejected} rejected", tally.describe(), accepted.len()));
    Ok(())
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { ErrorKind::Parse.exit_code() } else { 0 };
        }
    };
    let mut ctx = Ctx { stdout, stderr };
    let result = match &cli.command {
        Command::Verify { target, predict, point_scale } => cmd_verify(target, predict, *point_scale, &mut ctx),
        Command::Score { io, run, transport } => cmd_score(io, run, transport, &mut ctx),
        Command::Aggregate { io, run, tau, max_length, group_size, no_remap, no_format_rules } => {
            cmd_aggregate(io, run, *tau, *max_length, *group_size, *no_remap, *no_format_rules, &mut ctx)
        }
        Command::Filter { io, mode, strict } => cmd_filter(io, (*mode).into(), *strict, &mut ctx),
        Command::Audit { io, strict, fp_threshold, similarity_pass, table } => {
            let cfg = AuditConfig {
                genrm: GenRmConfig { similarity_pass: *similarity_pass, ..GenRmConfig::default() },
                fp_threshold: *fp_threshold,
            };
            cmd_audit(io, *strict, &cfg, table.as_deref(), &mut ctx)
        }
        Command::BuildAuditSet { io, run, transport } => cmd_build(io, run, transport, &mut ctx),
    };
    let _ = ctx.stdout.flush();
    match result {
        Ok(()) => 0,
        Err(Fail(e)) => {
            ctx.log(&format!("error: {e}"));
            e.kind.exit_code()
        }
    }
}
