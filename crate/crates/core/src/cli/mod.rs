//! Command-line front end: `generate`, `evaluate`, `submit`, `leaderboard`
//! and `serve`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 generation
//! failure, 4 algorithm failure, 5 I/O failure.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::adapter::{self, AdapterConfig, ServeOptions, DEFAULT_STARTUP_TIMEOUT};
use crate::algorithm::{builtin, Algorithm, AlgorithmError, AlgorithmHandle, AlgorithmKind};
use crate::bundle::{generate_bundle, read_bundle, write_bundle, BundleError};
use crate::evaluation::{
    compute_metrics, emit_report, read_summary, run_evaluation, FailedRun, MetricsReport,
    RunOptions, RunSummary,
};
use crate::leaderboard::{
    rank_entries, render_table, write_csv, Leaderboard, LeaderboardEntry, LeaderboardError,
    Submission,
};
use crate::stream::DriftType;

pub use config::{CliConfig, ScenarioConfig, CONFIG_FILE, SCENARIO_FILE_FORMAT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;
pub const EXIT_ALGORITHM: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Generation(String),
    #[error("{0}")]
    Algorithm(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Generation(_) => EXIT_GENERATION,
            CliError::Algorithm(_) => EXIT_ALGORITHM,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::Generation { .. } | BundleError::Stream(_) => {
                CliError::Generation(e.to_string())
            }
            BundleError::Format { .. } | BundleError::Io { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<LeaderboardError> for CliError {
    fn from(e: LeaderboardError) -> Self {
        match e {
            LeaderboardError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Benchmark streaming conformance checkers on synthetic event streams with concept drift"
)]
struct Cli {
    /// Workspace directory holding driftbench.toml, streams, reports and the leaderboard.
    #[arg(long, global = true, default_value = ".")]
    workspace: PathBuf,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate models, a warm-up stream and a labeled validation stream.
    Generate(GenerateArgs),
    /// Run an algorithm on a generated stream and write a report.
    Evaluate(EvaluateArgs),
    /// Record a report on the workspace leaderboard.
    Submit(SubmitArgs),
    /// Print the ranking for a scenario.
    Leaderboard(LeaderboardArgs),
    /// Serve a built-in algorithm over the external protocol on stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// sudden, gradual, incremental or recurring.
    #[arg(long)]
    drift: Option<DriftType>,
    /// Cases before and after the drift.
    #[arg(long)]
    cases: Option<usize>,
    /// Cases of the mixed segment (sudden) or of each intermediate model (incremental).
    #[arg(long)]
    transition_cases: Option<usize>,
    /// Cases in the warm-up stream.
    #[arg(long)]
    train_cases: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: <workspace>/streams/<scenario id>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Interleave up to N concurrently open cases instead of emitting cases one by one.
    #[arg(long, value_name = "N")]
    interleave: Option<usize>,
    /// Gradual drift: length of the transition window in cases.
    #[arg(long)]
    window: Option<usize>,
    /// Incremental drift: number of intermediate models.
    #[arg(long)]
    intermediate: Option<usize>,
    /// Number of activities of the base model.
    #[arg(long)]
    alphabet_size: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    scenario_id: Option<String>,
    /// TOML scenario file replacing the [scenario] section of driftbench.toml.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// frequency-baseline, constant:<v>, random[:<seed>], oracle, or an external command line.
    #[arg(long)]
    algorithm: String,
    /// Generated stream directory [default: <workspace>/streams/<scenario id>].
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Strip ground truth and origin from events before delivery.
    #[arg(long)]
    scored: bool,
    /// Report directory [default: <workspace>/reports/<scenario id>].
    #[arg(long)]
    report: Option<PathBuf>,
    /// Second algorithm whose predictions are overlaid in comparison.svg.
    #[arg(long)]
    compare: Option<String>,
    /// Per-event reply deadline for external algorithms.
    #[arg(long)]
    deadline_ms: Option<u64>,
    #[arg(long)]
    latency_budget_ms: Option<f64>,
}

#[derive(Debug, Args)]
struct SubmitArgs {
    #[arg(long)]
    team: String,
    #[arg(long)]
    email: String,
    /// Algorithm name shown on the leaderboard.
    #[arg(long)]
    name: String,
    #[arg(long)]
    description: String,
    /// Report directory written by evaluate.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct LeaderboardArgs {
    /// Scenario id [default: the configured scenario].
    #[arg(long)]
    scenario: Option<String>,
    /// Also export the ranking as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Built-in algorithm to serve.
    #[arg(long)]
    algorithm: String,
    /// Sleep this long before every conformance reply.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
}

/// Runs the CLI on the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with explicit arguments (including the program name) and
/// output sinks; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if cli.json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({"error": e.to_string(), "exit_code": e.exit_code()})
                );
            }
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Serve(args) = &cli.command {
        return serve(args, out);
    }
    let config = CliConfig::discover(&cli.workspace).map_err(CliError::Usage)?;
    match &cli.command {
        Command::Generate(args) => generate(&config, args, cli.json, out),
        Command::Evaluate(args) => evaluate(&config, args, cli.json, out),
        Command::Submit(args) => submit(&config, args, cli.json, out),
        Command::Leaderboard(args) => leaderboard(&config, args, cli.json, out),
        Command::Serve(_) => unreachable!("handled above"),
    }
}

fn print_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), CliError> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    )?;
    Ok(())
}

fn generate(
    config: &CliConfig,
    args: &GenerateArgs,
    as_json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut sc = match &args.scenario_file {
        Some(path) => ScenarioConfig::load(path).map_err(CliError::Usage)?,
        None => config.scenario.clone(),
    };
    if let Some(d) = args.drift {
        sc.drift_type = d;
    }
    let overrides = [
        (args.cases, &mut sc.cases),
        (args.transition_cases, &mut sc.transition_cases),
        (args.train_cases, &mut sc.train_cases),
        (args.window, &mut sc.transition_window),
        (args.intermediate, &mut sc.n_intermediate_models),
        (args.alphabet_size, &mut sc.generation.alphabet_size),
        (args.max_depth, &mut sc.generation.max_depth),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    if args.interleave.is_some() {
        sc.interleave = args.interleave;
    }
    if let Some(id) = &args.scenario_id {
        sc.scenario_id = Some(id.clone());
    }
    sc.validate().map_err(CliError::Usage)?;
    let spec = sc.bundle_spec();
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| default_stream_dir(&config.workspace, &spec.scenario_id));
    let bundle = generate_bundle(&spec)?;
    write_bundle(&bundle, &dir)?;
    let m = &bundle.manifest;
    if as_json {
        print_json(
            out,
            &json!({
                "out": dir,
                "scenario_id": m.scenario_id,
                "drift_type": m.drift_type,
                "seed": m.seed,
                "base_seed": m.base_seed,
                "train_events": m.train_events,
                "validation_cases": m.validation_cases,
                "validation_events": m.validation_events,
                "gt_blocks": m.gt_blocks,
            }),
        )?;
    } else {
        let blocks: Vec<String> = m
            .gt_blocks
            .iter()
            .map(|b| format!("{}x{}", b.cases, b.gt))
            .collect();
        writeln!(
            out,
            "scenario {} ({}), seed {}",
            m.scenario_id, m.drift_type, m.seed
        )?;
        writeln!(out, "p: {}", bundle.p)?;
        writeln!(out, "k: {}", bundle.k)?;
        writeln!(
            out,
            "train: {} cases, {} events; validation: {} cases, {} events",
            m.train_cases, m.train_events, m.validation_cases, m.validation_events
        )?;
        if blocks.len() <= 12 {
            writeln!(out, "case gt blocks: {}", blocks.join(" "))?;
        } else {
            writeln!(out, "case gt blocks: {} runs", blocks.len())?;
        }
        writeln!(out, "wrote {}", dir.display())?;
    }
    Ok(())
}

/// Resolves a built-in name or launches an external command.
fn open_algorithm(
    spec: &str,
    deadline: Duration,
) -> Result<Result<AlgorithmHandle, AlgorithmError>, CliError> {
    if let Some(b) = builtin(spec) {
        return b.map(Ok).map_err(|e| CliError::Usage(e.to_string()));
    }
    let argv = shlex::split(spec)
        .ok_or_else(|| CliError::Usage(format!("cannot split command line {spec:?}")))?;
    if argv.is_empty() {
        return Err(CliError::Usage("empty --algorithm".into()));
    }
    let config = AdapterConfig {
        startup_timeout: DEFAULT_STARTUP_TIMEOUT,
        event_deadline: deadline,
    };
    Ok(adapter::spawn(&argv, &config)
        .map(|h| Box::new(h) as AlgorithmHandle)
        .map_err(AlgorithmError::from))
}

fn evaluate(
    config: &CliConfig,
    args: &EvaluateArgs,
    as_json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let stream_dir = args
        .stream
        .clone()
        .unwrap_or_else(|| default_stream_dir(&config.workspace, &config.scenario.scenario_id()));
    let bundle = read_bundle(&stream_dir)?;
    let scenario_id = bundle.manifest.scenario_id.clone();
    let report_dir = args
        .report
        .clone()
        .unwrap_or_else(|| config.workspace.join("reports").join(&scenario_id));
    let budget = match args.latency_budget_ms {
        Some(ms) if ms.is_finite() && ms > 0.0 => Duration::from_secs_f64(ms / 1e3),
        Some(ms) => {
            return Err(CliError::Usage(format!(
                "--latency-budget-ms must be positive, got {ms}"
            )))
        }
        None => config.latency_budget(),
    };
    let deadline = match args.deadline_ms.unwrap_or(config.event_deadline_ms) {
        0 => return Err(CliError::Usage("--deadline-ms must be at least 1".into())),
        ms => Duration::from_millis(ms),
    };
    let options = RunOptions {
        scored: args.scored || config.scored,
        stream_id: scenario_id,
        seed: Some(bundle.manifest.seed),
    };

    let outcome = match open_algorithm(&args.algorithm, deadline)? {
        Ok(mut alg) => {
            if options.scored && alg.requires_ground_truth() {
                return Err(CliError::Usage(format!(
                    "{} reads ground truth and is not allowed with --scored",
                    alg.name()
                )));
            }
            run_evaluation(alg.as_mut(), &bundle.train, &bundle.validation, &options)
        }
        Err(e) => Err(FailedRun::before_start(
            &args.algorithm,
            AlgorithmKind::External,
            &options,
            e,
        )),
    };

    let baseline = match &args.compare {
        None => None,
        Some(spec) => {
            let mut alg = open_algorithm(spec, deadline)?
                .map_err(|e| CliError::Algorithm(format!("comparison algorithm: {e}")))?;
            let trace = run_evaluation(alg.as_mut(), &bundle.train, &bundle.validation, &options)
                .map_err(|f| CliError::Algorithm(format!("comparison algorithm: {f}")))?;
            let metrics = compute_metrics(&trace, &config.weights, budget)
                .map_err(|e| CliError::Algorithm(e.to_string()))?;
            Some((trace, metrics))
        }
    };

    match outcome {
        Ok(trace) => {
            let metrics = compute_metrics(&trace, &config.weights, budget)
                .map_err(|e| CliError::Algorithm(format!("cannot score run: {e}")))?;
            let mut summary = RunSummary::completed(&trace, metrics.clone());
            if let Some((b, m)) = &baseline {
                summary = summary.with_baseline(b.meta.algorithm.clone(), m.clone());
            }
            emit_report(
                &report_dir,
                &summary,
                &trace,
                baseline.as_ref().map(|(t, _)| t),
            )
            .map_err(|e| CliError::Io(e.to_string()))?;
            if as_json {
                print_json(out, &json!({"report": report_dir, "summary": summary}))?;
            } else {
                print_metrics(out, &summary, &metrics)?;
                writeln!(out, "report written to {}", report_dir.display())?;
            }
            Ok(())
        }
        Err(failed) => {
            let summary = RunSummary::failed(&failed);
            emit_report(&report_dir, &summary, &failed.trace, None)
                .map_err(|e| CliError::Io(e.to_string()))?;
            if as_json {
                print_json(out, &json!({"report": report_dir, "summary": summary}))?;
            }
            if let Some(log) = &failed.trace.diagnostics.log {
                if !as_json {
                    writeln!(out, "algorithm error output:\n{log}")?;
                }
            }
            Err(CliError::Algorithm(format!(
                "run failed after {} events: {failed}; report written to {}",
                failed.trace.len(),
                report_dir.display()
            )))
        }
    }
}

fn print_metrics(
    out: &mut dyn Write,
    summary: &RunSummary,
    m: &MetricsReport,
) -> Result<(), CliError> {
    let meta = &summary.meta;
    let mode = if meta.scored { "scored" } else { "unscored" };
    writeln!(
        out,
        "{} on {}: {} events, {mode}",
        meta.algorithm, meta.stream_id, m.n_events
    )?;
    let rows = [
        ("score", m.score),
        ("accuracy", m.accuracy),
        ("mae", m.mae),
        ("rmse", m.rmse),
        ("latency", m.latency_score),
        ("robustness", m.robustness),
        ("e_global", m.e_global),
    ];
    for (name, v) in rows {
        writeln!(out, "  {name:<11}{v:.6}")?;
    }
    writeln!(
        out,
        "  avg latency {:.4} ms (budget {} ms)",
        m.avg_latency.as_secs_f64() * 1e3,
        m.latency_budget.as_secs_f64() * 1e3
    )?;
    let d = &summary.diagnostics;
    if d.clamped + d.non_finite > 0 {
        writeln!(
            out,
            "  repaired outputs: {} clamped, {} non-finite",
            d.clamped, d.non_finite
        )?;
    }
    if let Some(b) = &summary.baseline {
        writeln!(
            out,
            "  comparison {}: score {:.6}",
            b.algorithm, b.metrics.score
        )?;
    }
    Ok(())
}

fn submit(
    config: &CliConfig,
    args: &SubmitArgs,
    as_json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let summary = read_summary(&args.report)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.report.display())))?;
    if !summary.meta.scored {
        return Err(CliError::Usage(
            "only scored runs can be submitted; rerun evaluate with --scored".into(),
        ));
    }
    let entry = LeaderboardEntry::from_summary(
        Submission {
            team_name: args.team.clone(),
            contact: args.email.clone(),
            algorithm_name: args.name.clone(),
            description: args.description.clone(),
        },
        &summary,
        Utc::now(),
    );
    let store = Leaderboard::open(&config.workspace);
    let id = store.record(entry)?;
    if as_json {
        print_json(
            out,
            &json!({"id": id, "store": store.path(), "status": summary.status}),
        )?;
    } else {
        let score = summary
            .metrics
            .as_ref()
            .map(|m| format!("score {:.6}", m.score));
        writeln!(
            out,
            "recorded entry #{id} for {} on {} ({})",
            args.team,
            summary.meta.stream_id,
            score.unwrap_or_else(|| "failed run".into())
        )?;
    }
    Ok(())
}

fn leaderboard(
    config: &CliConfig,
    args: &LeaderboardArgs,
    as_json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let store = Leaderboard::open(&config.workspace);
    let entries = store.load()?;
    let scenario = args
        .scenario
        .clone()
        .unwrap_or_else(|| config.scenario.scenario_id());
    let ranking = rank_entries(entries, &scenario);
    if let Some(path) = &args.csv {
        let f = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_csv(&ranking, std::io::BufWriter::new(f))?;
    }
    if as_json {
        return print_json(out, &ranking);
    }
    if ranking.is_empty() {
        writeln!(out, "no submissions for scenario {scenario}")?;
    } else {
        write!(out, "{}", render_table(&ranking))?;
    }
    Ok(())
}

fn serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut alg = match builtin(&args.algorithm) {
        Some(b) => b.map_err(|e| CliError::Usage(e.to_string()))?,
        None => {
            return Err(CliError::Usage(format!(
                "serve only runs built-in algorithms, got {:?}",
                args.algorithm
            )))
        }
    };
    let options = ServeOptions {
        conformance_delay: Duration::from_millis(args.delay_ms),
    };
    let stdin = std::io::stdin();
    adapter::serve(alg.as_mut(), stdin.lock(), out, &options)?;
    Ok(())
}

/// Default location of generated streams for `scenario_id` inside `workspace`.
pub fn default_stream_dir(workspace: &Path, scenario_id: &str) -> PathBuf {
    workspace.join("streams").join(scenario_id)
}
