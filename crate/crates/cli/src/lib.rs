//! Command-line front end: validate, emit, list traces, check and look for
//! deadlocks.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use adsmv_core::conformance::{check_equivalence, ConformanceError};
use adsmv_core::fsm::Machine;
use adsmv_core::interp::ad_action_traces;
use adsmv_core::model::ActivityDiagram;
use adsmv_core::smv::{normalize, parse_smv_subset, print_smv};
use adsmv_core::text::parse_ad_with_spans;
use adsmv_core::trace::{ActionTrace, ExecError, Limits};
use adsmv_core::translate::{translate, TranslateError};
use adsmv_core::validate::validate;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Process exit codes. The mapping is stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// Success, or the check passed.
    Ok = 0,
    /// A check failed or the input has diagnostics.
    Failed = 1,
    /// Bad usage or an I/O problem.
    Usage = 2,
    /// The exploration bound was exceeded.
    Resource = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "adsmv", version, about = "Translate activity diagrams to SMV and cross-check their semantics")]
struct Cli {
    /// Upper bound on explored states, transitions and search nodes.
    #[arg(long, global = true, default_value_t = Limits::default().max_states)]
    max_states: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Semantics {
    Fsm,
    Ad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a diagram.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Translate a diagram into one SMV module.
    Emit {
        path: PathBuf,
        /// Write the module here instead of standard output.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Drop comments and sort independent sections.
        #[arg(long)]
        normalized: bool,
    },
    /// List the action traces of either semantics.
    Traces {
        path: PathBuf,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        #[arg(long, value_enum, default_value_t = Semantics::Fsm)]
        semantics: Semantics,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare the traces of the generated module with the diagram's.
    Check {
        path: PathBuf,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        /// Also require the emitted module to equal this one after normalization.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Report reachable states of the generated module without successors.
    Deadlocks {
        path: PathBuf,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
        depth: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Why a command stopped early.
enum Failure {
    Usage(String),
    Invalid(Vec<String>),
    Resource(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ExecError> for Failure {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::Resource { .. } => Failure::Resource(e.to_string()),
            other => Failure::Invalid(vec![other.to_string()]),
        }
    }
}

impl From<TranslateError> for Failure {
    fn from(e: TranslateError) -> Self {
        match e {
            TranslateError::Invalid(diags) => Failure::Invalid(diags.iter().map(|d| d.to_string()).collect()),
            other => Failure::Invalid(vec![other.to_string()]),
        }
    }
}

impl From<ConformanceError> for Failure {
    fn from(e: ConformanceError) -> Self {
        match e {
            ConformanceError::Translate(e) => e.into(),
            ConformanceError::Exec(e) => e.into(),
        }
    }
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Ok };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return status;
        }
    };
    let limits = Limits { max_states: cli.max_states };
    let result = match cli.command {
        Command::Validate { path, format } => cmd_validate(&path, format, out),
        Command::Emit { path, out: target, normalized } => cmd_emit(&path, target.as_deref(), normalized, out),
        Command::Traces { path, depth, semantics, format } => {
            cmd_traces(&path, depth as usize, semantics, format, limits, out)
        }
        Command::Check { path, depth, golden, format } => {
            cmd_check(&path, depth as usize, golden.as_deref(), format, limits, out)
        }
        Command::Deadlocks { path, depth, format } => cmd_deadlocks(&path, depth as usize, format, limits, out),
    };
    match result {
        Ok(status) => status,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            ExitStatus::Usage
        }
        Err(Failure::Invalid(lines)) => {
            for line in lines {
                let _ = writeln!(err, "{line}");
            }
            ExitStatus::Failed
        }
        Err(Failure::Resource(msg)) => {
            let _ = writeln!(err, "error: {msg}; raise --max-states or lower --depth");
            ExitStatus::Resource
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Parses and validates, turning every finding into a positioned message.
fn load(path: &Path) -> Result<ActivityDiagram, Failure> {
    let findings = findings(path, &read(path)?);
    match findings {
        Ok(ad) => Ok(ad),
        Err(found) => Err(Failure::Invalid(found.into_iter().map(|f| f.line).collect())),
    }
}

struct Finding {
    line: String,
    record: serde_json::Value,
}

fn findings(path: &Path, text: &str) -> Result<ActivityDiagram, Vec<Finding>> {
    let shown = path.display();
    let (ad, map) = parse_ad_with_spans(text).map_err(|errors| {
        errors
            .into_iter()
            .map(|e| Finding {
                line: format!("{shown}:{}: syntax: {}", e.span, e.message),
                record: json!({ "span": e.span, "rule": "syntax", "message": e.message }),
            })
            .collect::<Vec<_>>()
    })?;
    let diags = validate(&ad);
    if diags.is_empty() {
        return Ok(ad);
    }
    Err(diags
        .into_iter()
        .map(|d| {
            let span = map.span_of(&d.location);
            let at = span.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
            Finding {
                line: format!("{shown}:{at}: {d}"),
                record: json!({ "span": span, "rule": d.rule, "location": d.location, "message": d.message }),
            }
        })
        .collect())
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn cmd_validate(path: &Path, format: Format, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let text = read(path)?;
    let result = findings(path, &text);
    match format {
        Format::Text => match &result {
            Ok(ad) => {
                writeln!(out, "{}: ok ({} nodes, {} edges)", path.display(), ad.nodes.len(), ad.transitions.len())?
            }
            Err(found) => {
                for f in found {
                    writeln!(out, "{}", f.line)?;
                }
            }
        },
        Format::Structured => {
            let records: Vec<&serde_json::Value> =
                result.as_ref().err().into_iter().flatten().map(|f| &f.record).collect();
            print_json(
                out,
                &json!({ "path": path.display().to_string(), "valid": result.is_ok(), "diagnostics": records }),
            )?;
        }
    }
    Ok(if result.is_ok() { ExitStatus::Ok } else { ExitStatus::Failed })
}

fn emitted(path: &Path, normalized: bool) -> Result<String, Failure> {
    let module = translate(&load(path)?)?;
    Ok(print_smv(&if normalized { normalize(&module) } else { module }))
}

fn cmd_emit(path: &Path, target: Option<&Path>, normalized: bool, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let text = emitted(path, normalized)?;
    match target {
        Some(file) => fs::write(file, text).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(ExitStatus::Ok)
}

fn write_traces<'a>(
    out: &mut dyn Write,
    format: Format,
    traces: impl IntoIterator<Item = &'a ActionTrace>,
) -> Result<(), Failure> {
    let traces: Vec<&ActionTrace> = traces.into_iter().collect();
    match format {
        Format::Text => {
            for t in &traces {
                writeln!(out, "{t}")?;
            }
            let done = traces.iter().filter(|t| t.is_terminated()).count();
            writeln!(out, "{} traces, {done} terminated", traces.len())?;
        }
        Format::Structured => {
            print_json(out, &serde_json::to_value(&traces).map_err(|e| Failure::Usage(e.to_string()))?)?;
        }
    }
    Ok(())
}

fn cmd_traces(
    path: &Path,
    depth: usize,
    semantics: Semantics,
    format: Format,
    limits: Limits,
    out: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let ad = load(path)?;
    let traces = match semantics {
        Semantics::Fsm => Machine::with_limits(&translate(&ad)?, limits)?.action_traces(depth)?,
        Semantics::Ad => ad_action_traces(&ad, depth, limits)?,
    };
    write_traces(out, format, &traces)?;
    Ok(ExitStatus::Ok)
}

fn golden_matches(path: &Path, golden: &Path) -> Result<bool, Failure> {
    let ours = parse_smv_subset(&emitted(path, false)?).map_err(|e| Failure::Invalid(vec![e.to_string()]))?;
    let theirs =
        parse_smv_subset(&read(golden)?).map_err(|e| Failure::Invalid(vec![format!("{}: {e}", golden.display())]))?;
    Ok(print_smv(&normalize(&ours)) == print_smv(&normalize(&theirs)))
}

fn cmd_check(
    path: &Path,
    depth: usize,
    golden: Option<&Path>,
    format: Format,
    limits: Limits,
    out: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let ad = load(path)?;
    let golden_ok = golden.map(|g| golden_matches(path, g)).transpose()?;
    let report = check_equivalence(&ad, depth, limits)?;
    match format {
        Format::Text => {
            let s = &report.stats;
            let verdict = if report.is_equal() { "equal" } else { "differ" };
            writeln!(
                out,
                "{verdict} at depth {depth}: {} common traces ({} terminated), {} module states, {} diagram configurations",
                s.common_traces, s.terminated_traces, s.fsm_states, s.ad_configs
            )?;
            for t in &report.only_in_fsm {
                writeln!(out, "only in module: {t}")?;
            }
            for t in &report.only_in_ad {
                writeln!(out, "only in diagram: {t}")?;
            }
            match (golden, golden_ok) {
                (Some(g), Some(true)) => writeln!(out, "matches {}", g.display())?,
                (Some(g), Some(false)) => writeln!(out, "differs from {}", g.display())?,
                _ => {}
            }
        }
        Format::Structured => {
            let mut value = serde_json::to_value(&report).map_err(|e| Failure::Usage(e.to_string()))?;
            if let Some(ok) = golden_ok {
                value["goldenMatches"] = json!(ok);
            }
            print_json(out, &value)?;
        }
    }
    Ok(if report.is_equal() && golden_ok != Some(false) { ExitStatus::Ok } else { ExitStatus::Failed })
}

fn cmd_deadlocks(
    path: &Path,
    depth: usize,
    format: Format,
    limits: Limits,
    out: &mut dyn Write,
) -> Result<ExitStatus, Failure> {
    let ad = load(path)?;
    let m = Machine::with_limits(&translate(&ad)?, limits)?;
    let found = m.find_deadlocks(depth)?;
    match format {
        Format::Text => {
            for d in &found {
                let inputs: Vec<String> = m
                    .valuation(&d.state)
                    .into_iter()
                    .filter(|(name, _)| ad.var(name).is_some())
                    .map(|(name, v)| format!("{name}={v}"))
                    .collect();
                writeln!(out, "deadlock after {} [{}]", d.actions.join("·"), inputs.join(", "))?;
            }
            let noun = if found.len() == 1 { "deadlock" } else { "deadlocks" };
            writeln!(out, "{} {noun} within depth {depth}", found.len())?;
        }
        Format::Structured => {
            let records: Vec<serde_json::Value> = found
                .iter()
                .map(|d| {
                    let vars: serde_json::Map<String, serde_json::Value> = m
                        .valuation(&d.state)
                        .into_iter()
                        .filter(|(name, _)| ad.var(name).is_some())
                        .map(|(name, v)| (name, json!(v)))
                        .collect();
                    json!({ "actions": d.actions, "variables": vars, "length": d.path.len() })
                })
                .collect();
            print_json(out, &json!({ "depth": depth, "deadlocks": records }))?;
        }
    }
    Ok(if found.is_empty() { ExitStatus::Ok } else { ExitStatus::Failed })
}
