//! The `med` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::explorer::cbc::{cbc_check, max_universe_from_env, CbcError};
use crate::explorer::graph::{explore, ExploreOptions, Limits};
use crate::explorer::ltl::{ltl_check, parse_ltl, DeadlockMode, LtlResult};
use crate::explorer::report::{run_check, scope_json};
use crate::explorer::trace::{binding_json, state_json, validate, Trace, TraceKind};
use crate::explorer::{export_dot, CheckOutcome};
use crate::kernel::eval::Model;
use crate::kernel::types::{Scope, DEFAULT_MAX_INT};
use crate::lang::diag::diagnostics_json;
use crate::lang::{format_source, load, render_all};

/// Exit code for usage and validation errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "med",
    version,
    about = "Explicit-state checker for event-based models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Explore the state space: invariant, deadlocks and event coverage.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explore: ExploreArgs,
        /// Deadlock traces to print at most.
        #[arg(long, default_value_t = 5)]
        max_counterexamples: usize,
        /// Write the first counterexample trace as JSON to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Check an LTL formula on the explored graph.
    Ltl {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explore: ExploreArgs,
        #[arg(long)]
        formula: String,
        /// How deadlocked states are read by the formula.
        #[arg(long, value_enum, default_value_t = LtlDeadlock::Stutter)]
        ltl_deadlock: LtlDeadlock,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Fire every event from every invariant state, reachable or not.
    Cbc {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Print the explored graph in Graphviz format.
    Dot {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        explore: ExploreArgs,
    },
    /// Rewrite model files in canonical layout.
    Fmt {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Only report files that are not formatted.
        #[arg(long)]
        check: bool,
    },
    /// Replay a saved trace against a model.
    Trace {
        #[command(flatten)]
        model: ModelArgs,
        /// A trace JSON file, or a report holding `counterexamples`.
        trace: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    model: PathBuf,
    /// Carrier sizes, e.g. `NODE=2,RANGE=2,MSG=1`.
    #[arg(long, value_parser = parse_scope)]
    scope: Option<BTreeMap<String, u32>>,
    /// Integers range over 0..=N.
    #[arg(long, default_value_t = DEFAULT_MAX_INT)]
    max_int: i64,
    /// Override an integer constant, e.g. `maxHops=2`.
    #[arg(long = "const", value_parser = parse_const)]
    consts: Vec<(String, i64)>,
    #[arg(long)]
    json: bool,
    /// Include wall-clock timings in the output.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[arg(long, default_value_t = crate::explorer::graph::DEFAULT_MAX_STATES)]
    max_states: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Enumerate every fresh atom instead of the least one per carrier.
    #[arg(long)]
    no_canonical_fresh: bool,
}

impl ExploreArgs {
    fn options(&self) -> ExploreOptions {
        ExploreOptions {
            limits: Limits {
                max_states: self.max_states,
                max_depth: self.max_depth,
            },
            workers: self.workers.max(1),
            canonical_fresh: !self.no_canonical_fresh,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LtlDeadlock {
    Stutter,
    Reject,
    Both,
}

/// Parses `A=1,B=2` carrier assignments.
pub fn parse_scope(text: &str) -> Result<BTreeMap<String, u32>, String> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("`{item}` is not CARRIER=k"))?;
        let n: u32 = v
            .trim()
            .parse()
            .map_err(|_| format!("`{v}` is not a size"))?;
        if out.insert(k.trim().to_string(), n).is_some() {
            return Err(format!("carrier `{k}` given twice"));
        }
    }
    Ok(out)
}

fn parse_const(text: &str) -> Result<(String, i64), String> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| format!("`{text}` is not NAME=value"))?;
    let n = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not an integer"))?;
    Ok((k.trim().to_string(), n))
}

/// Outcome of a failed step, already printed.
struct Exit(i32);

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn usage(&mut self, msg: impl std::fmt::Display) -> Exit {
        let _ = writeln!(self.err, "error: {msg}");
        Exit(EXIT_USAGE)
    }
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    let res = match cli.command {
        Command::Check {
            model,
            explore,
            max_counterexamples,
            trace_out,
        } => cmd_check(
            &mut io,
            &model,
            &explore,
            max_counterexamples,
            trace_out.as_deref(),
        ),
        Command::Ltl {
            model,
            explore,
            formula,
            ltl_deadlock,
            trace_out,
        } => cmd_ltl(
            &mut io,
            &model,
            &explore,
            &formula,
            ltl_deadlock,
            trace_out.as_deref(),
        ),
        Command::Cbc { model } => cmd_cbc(&mut io, &model),
        Command::Dot { model, explore } => cmd_dot(&mut io, &model, &explore),
        Command::Fmt { files, check } => cmd_fmt(&mut io, &files, check),
        Command::Trace { model, trace } => cmd_trace(&mut io, &model, &trace),
    };
    match res {
        Ok(code) | Err(Exit(code)) => code,
    }
}

struct Loaded {
    name: String,
    model: Model,
}

fn read(io: &mut Io, path: &Path) -> Result<String, Exit> {
    std::fs::read_to_string(path)
        .map_err(|e| io.usage(format!("cannot read {}: {e}", path.display())))
}

fn load_model(io: &mut Io, args: &ModelArgs) -> Result<Loaded, Exit> {
    let text = read(io, &args.model)?;
    let file = args.model.display().to_string();
    let system = match load(&text) {
        Ok(s) => s,
        Err(diags) => {
            if args.json {
                let _ = writeln!(
                    io.out,
                    "{}",
                    pretty(&diagnostics_json(&diags, &file, &text))
                );
            } else {
                let _ = writeln!(io.err, "{}", render_all(&diags, &file, &text));
            }
            return Err(Exit(EXIT_USAGE));
        }
    };
    let mut scope = Scope::new(args.scope.clone().unwrap_or_default());
    scope.max_int = args.max_int;
    let overrides: BTreeMap<String, i64> = args.consts.iter().cloned().collect();
    let model = Model::new(Arc::new(system), scope, &overrides).map_err(|e| io.usage(e))?;
    let name = args
        .model
        .file_name()
        .map_or(file.clone(), |n| n.to_string_lossy().into_owned());
    Ok(Loaded { name, model })
}

fn pretty(j: &Json) -> String {
    serde_json::to_string_pretty(j).expect("json values serialize")
}

fn write_file(io: &mut Io, path: &Path, text: &str) -> Result<(), Exit> {
    std::fs::write(path, text)
        .map_err(|e| io.usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_check(
    io: &mut Io,
    args: &ModelArgs,
    ex: &ExploreArgs,
    max_cex: usize,
    trace_out: Option<&Path>,
) -> Result<i32, Exit> {
    let l = load_model(io, args)?;
    let outcome = run_check(&l.model, &ex.options(), max_cex).map_err(|e| io.usage(e))?;
    let verdict = outcome.verdict();
    if let Some(path) = trace_out {
        if let Some(t) = outcome.violation.iter().chain(&outcome.deadlocks).next() {
            write_file(io, path, &pretty(&t.to_json(&l.model)))?;
        }
    }
    if args.json {
        let j = outcome.to_json(&l.model, &l.name, args.timings);
        let _ = writeln!(io.out, "{}", pretty(&j));
    } else {
        write_check_text(io.out, &l, &outcome, args.timings);
    }
    Ok(verdict.exit_code())
}

fn scope_text(model: &Model) -> String {
    let parts: Vec<String> = model
        .scope
        .carriers
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    if parts.is_empty() {
        format!("max_int {}", model.scope.max_int)
    } else {
        format!("{} (max_int {})", parts.join(","), model.scope.max_int)
    }
}

fn write_check_text(out: &mut dyn Write, l: &Loaded, o: &CheckOutcome, timings: bool) {
    let c = &o.coverage;
    let _ = writeln!(out, "model: {}", l.name);
    let _ = writeln!(out, "scope: {}", scope_text(&l.model));
    let _ = writeln!(
        out,
        "states: {}  transitions: {}  deadlocked: {}  live: {}  violations: {}  truncated: {}",
        c.states, c.transitions, c.deadlocked, c.live, c.violations, o.graph.truncated
    );
    let _ = writeln!(out, "events:");
    for e in &c.events {
        let status = if e.covered() { "covered" } else { "UNCOVERED" };
        let _ = writeln!(out, "  {:<20} {status} ({})", e.name, e.count);
    }
    if let Some(t) = &o.violation {
        let _ = writeln!(out, "invariant violation:");
        write_trace(out, &l.model, t);
    }
    for t in &o.deadlocks {
        let _ = writeln!(out, "deadlock:");
        write_trace(out, &l.model, t);
    }
    if timings {
        let _ = writeln!(out, "explore: {} ms", o.explore_ms);
    }
    let _ = writeln!(out, "result: {}", o.verdict().as_str());
}

/// Prints a trace; after the first step only changed variables are shown.
pub fn write_trace(out: &mut dyn Write, model: &Model, t: &Trace) {
    let names: Vec<&str> = model.var_names().collect();
    for (i, st) in t.steps.iter().enumerate() {
        let args: Vec<String> = st.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let head = if args.is_empty() {
            st.event.clone()
        } else {
            format!("{}({})", st.event, args.join(", "))
        };
        let _ = writeln!(out, "  {i:>3}  {head}");
        for (j, v) in st.state.0.iter().enumerate() {
            if i == 0 || t.steps[i - 1].state.0[j] != *v {
                let _ = writeln!(out, "         {} = {v}", names[j]);
            }
        }
    }
    if let TraceKind::Lasso { loopback } = t.kind {
        let _ = writeln!(
            out,
            "       (state of step {loopback} again; the loop repeats)"
        );
    }
}

fn cmd_ltl(
    io: &mut Io,
    args: &ModelArgs,
    ex: &ExploreArgs,
    formula: &str,
    mode: LtlDeadlock,
    trace_out: Option<&Path>,
) -> Result<i32, Exit> {
    let l = load_model(io, args)?;
    let spec = match parse_ltl(formula, &l.model.system) {
        Ok(s) => s,
        Err(d) => {
            let _ = writeln!(io.err, "{}", d.render("<formula>", formula));
            return Err(Exit(EXIT_USAGE));
        }
    };
    let start = Instant::now();
    let g = explore(&l.model, &ex.options()).map_err(|e| io.usage(e))?;
    let modes = match mode {
        LtlDeadlock::Stutter => vec![DeadlockMode::Stutter],
        LtlDeadlock::Reject => vec![DeadlockMode::Reject],
        LtlDeadlock::Both => vec![DeadlockMode::Stutter, DeadlockMode::Reject],
    };
    let mut outcomes = Vec::new();
    for m in modes {
        outcomes.push(ltl_check(&l.model, &g, &spec, m).map_err(|e| io.usage(e))?);
    }
    let elapsed = start.elapsed().as_millis();
    let violated = outcomes
        .iter()
        .any(|o| matches!(o.result, LtlResult::Violated(_)));
    let inconclusive = outcomes
        .iter()
        .any(|o| matches!(o.result, LtlResult::Inconclusive));
    let (overall, code) = if violated {
        ("violated", 1)
    } else if inconclusive {
        ("inconclusive", 3)
    } else {
        ("holds", 0)
    };
    if let Some(path) = trace_out {
        let first = outcomes.iter().find_map(|o| match &o.result {
            LtlResult::Violated(t) => Some(t),
            _ => None,
        });
        if let Some(t) = first {
            write_file(io, path, &pretty(&t.to_json(&l.model)))?;
        }
    }
    if args.json {
        let results: Vec<Json> = outcomes
            .iter()
            .map(|o| {
                let mut r = json!({
                    "mode": o.mode.as_str(),
                    "result": o.result.as_str(),
                    "automaton_states": o.automaton_states,
                    "product_states": o.product_states,
                });
                if let LtlResult::Violated(t) = &o.result {
                    r["counterexample"] = t.to_json(&l.model);
                }
                r
            })
            .collect();
        let mut j = json!({
            "model": l.name,
            "scope": scope_json(&l.model),
            "max_int": l.model.scope.max_int,
            "formula": formula,
            "states": g.len(),
            "transitions": g.transitions.len(),
            "truncated": g.truncated,
            "results": results,
            "result": overall,
        });
        if args.timings {
            j["timings"] = json!({"total_ms": elapsed});
        }
        let _ = writeln!(io.out, "{}", pretty(&j));
    } else {
        let out = &mut *io.out;
        let _ = writeln!(out, "model: {}", l.name);
        let _ = writeln!(out, "scope: {}", scope_text(&l.model));
        let _ = writeln!(out, "formula: {formula}");
        let _ = writeln!(
            out,
            "states: {}  transitions: {}  truncated: {}",
            g.len(),
            g.transitions.len(),
            g.truncated
        );
        for o in &outcomes {
            let _ = writeln!(
                out,
                "{}: {} (automaton {} states, product {} states)",
                o.mode,
                o.result.as_str(),
                o.automaton_states,
                o.product_states
            );
            if let LtlResult::Violated(t) = &o.result {
                write_trace(out, &l.model, t);
            }
        }
        if args.timings {
            let _ = writeln!(out, "total: {elapsed} ms");
        }
        let _ = writeln!(out, "result: {overall}");
    }
    Ok(code)
}

fn cmd_cbc(io: &mut Io, args: &ModelArgs) -> Result<i32, Exit> {
    let l = load_model(io, args)?;
    let bound = max_universe_from_env();
    let report = match cbc_check(&l.model, bound) {
        Ok(r) => r,
        Err(CbcError::UniverseTooLarge { bound }) => {
            let _ = writeln!(
                io.err,
                "error: state universe exceeds {bound} candidates; raise MED_MAX_UNIVERSE or shrink the scope"
            );
            return Ok(3);
        }
        Err(e) => return Err(io.usage(e)),
    };
    let code = if report.entries.is_empty() { 0 } else { 1 };
    if args.json {
        let entries: Vec<Json> = report
            .entries
            .iter()
            .map(|e| {
                let mut j = json!({
                    "state": state_json(&l.model, &e.state),
                    "event": e.event,
                    "binding": binding_json(&e.binding),
                });
                if let Some(v) = &e.violated {
                    j["violated"] = json!(v);
                }
                if let Some(v) = &e.error {
                    j["error"] = json!(v);
                }
                j
            })
            .collect();
        let j = json!({
            "model": l.name,
            "scope": scope_json(&l.model),
            "max_int": l.model.scope.max_int,
            "states": report.states,
            "entries": entries,
            "result": if code == 0 { "pass" } else { "counterexample" },
        });
        let _ = writeln!(io.out, "{}", pretty(&j));
    } else {
        let names: Vec<&str> = l.model.var_names().collect();
        let out = &mut *io.out;
        let _ = writeln!(out, "model: {}", l.name);
        let _ = writeln!(out, "scope: {}", scope_text(&l.model));
        let _ = writeln!(out, "invariant states: {}", report.states);
        for e in &report.entries {
            let state: Vec<String> = names
                .iter()
                .zip(&e.state.0)
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            let args: Vec<String> = e.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let what = match (&e.violated, &e.error) {
                (Some(c), _) => format!("breaks `{c}`"),
                (_, Some(err)) => format!("fails: {err}"),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "  ({}) {}({}) {what}",
                state.join(", "),
                e.event,
                args.join(", ")
            );
        }
        let _ = writeln!(
            out,
            "result: {}",
            if code == 0 { "pass" } else { "counterexample" }
        );
    }
    Ok(code)
}

fn cmd_dot(io: &mut Io, args: &ModelArgs, ex: &ExploreArgs) -> Result<i32, Exit> {
    let l = load_model(io, args)?;
    let g = explore(&l.model, &ex.options()).map_err(|e| io.usage(e))?;
    let _ = write!(io.out, "{}", export_dot(&l.model, &g));
    Ok(0)
}

fn cmd_fmt(io: &mut Io, files: &[PathBuf], check: bool) -> Result<i32, Exit> {
    let mut unformatted = 0;
    for path in files {
        let text = read(io, path)?;
        let formatted = match format_source(&text) {
            Ok(f) => f,
            Err(d) => {
                let _ = writeln!(io.err, "{}", d.render(&path.display().to_string(), &text));
                return Err(Exit(EXIT_USAGE));
            }
        };
        if formatted == text {
            continue;
        }
        if check {
            unformatted += 1;
            let _ = writeln!(io.out, "{} is not formatted", path.display());
        } else {
            write_file(io, path, &formatted)?;
            let _ = writeln!(io.out, "formatted {}", path.display());
        }
    }
    Ok(if unformatted > 0 { 1 } else { 0 })
}

fn cmd_trace(io: &mut Io, args: &ModelArgs, path: &Path) -> Result<i32, Exit> {
    let l = load_model(io, args)?;
    let text = read(io, path)?;
    let j: Json =
        serde_json::from_str(&text).map_err(|e| io.usage(format!("{}: {e}", path.display())))?;
    let j = match j.get("counterexamples").and_then(Json::as_array) {
        Some(list) => list
            .first()
            .cloned()
            .ok_or_else(|| io.usage("report has no counterexamples"))?,
        None => j,
    };
    let trace = Trace::from_json(&l.model, &j).map_err(|e| io.usage(e))?;
    let res = validate(&l.model, &trace);
    if args.json {
        let mut out = json!({"valid": res.is_ok(), "trace": trace.to_json(&l.model)});
        if let Err(e) = &res {
            out["error"] = json!(e);
        }
        let _ = writeln!(io.out, "{}", pretty(&out));
    } else {
        write_trace(io.out, &l.model, &trace);
        match &res {
            Ok(()) => {
                let _ = writeln!(io.out, "trace replays: ok");
            }
            Err(e) => {
                let _ = writeln!(io.out, "trace does not replay: {e}");
            }
        }
    }
    Ok(if res.is_ok() { 0 } else { 1 })
}
