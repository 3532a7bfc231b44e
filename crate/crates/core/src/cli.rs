//! Command-line front end. `run` returns the exit code and everything that
//! would be printed, so the binary is a thin wrapper and tests can call it
//! directly.

use std::fmt::Write as _;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backends::DEFAULT_BUDGET;
use crate::fpstore::Store;
use crate::kernel::Expr;
use crate::mcheck::{check_inductive, check_invariant, CheckError, CheckOutcome, InductiveOutcome, Trace, DEFAULT_LIMIT};
use crate::pluscal::translate_source;
use crate::proofman::{check, BackendChoice, CheckOptions, Report, Target};
use crate::syntax::{parse_module, SpecModule, StepLabel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OMITTED: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_EXECUTION_ERROR: i32 = 4;
pub const EXIT_FAILED: i32 = 5;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(name = "petrel", version, about = "Translate, model check and prove specifications")]
struct Cli {
    /// Output style: `human` (with status colors on a terminal) or
    /// `machine` (tab-separated, one event per line).
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Color::Auto, global = true)]
    color: Color,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regenerate the translation region from the embedded algorithm.
    Translate {
        file: PathBuf,
        /// Print the translated module instead of rewriting the file.
        #[arg(long)]
        stdout: bool,
    },
    /// Explore the reachable states, checking invariants.
    Check {
        file: PathBuf,
        #[arg(long, value_name = "NAME")]
        invariant: Vec<String>,
        /// Check that the named predicate is preserved by every step.
        #[arg(long, value_name = "NAME")]
        inductive: Option<String>,
        #[arg(long, value_name = "N", default_value_t = DEFAULT_LIMIT)]
        limit: usize,
    },
    /// Prove obligations, reusing cached results.
    Prove(ProveArgs),
    /// Report cached statuses without proving anything.
    Status {
        file: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        store: StoreArgs,
    },
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Theorem name, or 1-based index among the module's theorems.
    #[arg(long, value_name = "NAME")]
    theorem: Option<String>,
    /// Step label such as `<2>3`.
    #[arg(long, value_name = "LABEL")]
    step: Option<String>,
}

#[derive(Args, Debug)]
struct StoreArgs {
    /// Fingerprint store location (default: FILE.fp).
    #[arg(long, value_name = "PATH", conflicts_with = "no_fp")]
    fp_store: Option<PathBuf>,
    /// Neither read nor write the fingerprint store.
    #[arg(long)]
    no_fp: bool,
}

#[derive(Args, Debug)]
struct ProveArgs {
    file: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    store: StoreArgs,
    /// Re-prove the target even when a result is cached.
    #[arg(long)]
    force: bool,
    /// Per-obligation time limit in seconds.
    #[arg(long, value_name = "SECS", default_value_t = 10)]
    timeout: u64,
    #[arg(long, value_enum, default_value_t = Backend::Ground)]
    backend: Backend,
    /// Solver command line; the script is piped to its standard input.
    #[arg(long, value_name = "CMD", env = "PETREL_SMT_CMD")]
    smt_cmd: Option<String>,
    #[arg(long, value_name = "N", default_value_t = DEFAULT_BUDGET)]
    enum_budget: u64,
    /// Reuse cached failures instead of retrying them.
    #[arg(long)]
    trust_failures: bool,
    /// Print failure reasons and failing obligations.
    #[arg(long)]
    detail: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Ground,
    Smtlib,
}

struct Out {
    text: String,
    format: Format,
    color: bool,
}

impl Out {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn machine(&self) -> bool {
        self.format == Format::Machine
    }

    /// A line in either style: the human text or the tab-joined fields.
    fn event(&mut self, human: impl AsRef<str>, fields: &[&str]) {
        if self.machine() {
            let l = fields.join("\t");
            self.line(l);
        } else {
            self.line(human);
        }
    }

    fn error(&mut self, msg: impl std::fmt::Display) {
        let m = msg.to_string();
        self.event(format!("error: {m}"), &["error", &m]);
    }
}

/// Parse `args` (including the program name) and execute. Returns the exit
/// code and the text to print.
pub fn run<I, S>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with_cancel(args, Arc::new(AtomicBool::new(false)))
}

/// As [`run`], with a flag that interrupts proving when set.
pub fn run_with_cancel<I, S>(args: I, cancel: Arc<AtomicBool>) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return (code, e.render().to_string());
        }
    };
    let color = match cli.color {
        Color::Always => true,
        Color::Never => false,
        Color::Auto => cli.format == Format::Human && std::io::stdout().is_terminal(),
    };
    let mut out = Out {
        text: String::new(),
        format: cli.format,
        color,
    };
    let code = match cli.command {
        Command::Translate { file, stdout } => translate_cmd(&file, stdout, &mut out),
        Command::Check {
            file,
            invariant,
            inductive,
            limit,
        } => check_cmd(&file, &invariant, inductive.as_deref(), limit, &mut out),
        Command::Prove(p) => {
            let opts = CheckOptions {
                backend: match p.backend {
                    Backend::Ground => BackendChoice::Ground,
                    Backend::Smtlib => BackendChoice::Smtlib,
                },
                timeout: Duration::from_secs(p.timeout),
                force: p.force,
                trust_failures: p.trust_failures,
                enum_budget: p.enum_budget,
                smt_cmd: p.smt_cmd,
                cancel,
                dry_run: false,
            };
            prove_cmd(&p.file, &p.target, &p.store, &opts, p.detail, &mut out)
        }
        Command::Status { file, target, store } => {
            let opts = CheckOptions {
                dry_run: true,
                cancel,
                ..Default::default()
            };
            prove_cmd(&file, &target, &store, &opts, false, &mut out)
        }
    };
    (code, out.text)
}

fn read(path: &Path, out: &mut Out) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        out.error(format!("{}: {e}", path.display()));
        if e.kind() == std::io::ErrorKind::NotFound {
            EXIT_NO_INPUT
        } else {
            EXIT_IO
        }
    })
}

fn load(path: &Path, out: &mut Out) -> Result<SpecModule, i32> {
    let text = read(path, out)?;
    parse_module(&text).map_err(|e| {
        out.error(format!("{}:{e}", path.display()));
        EXIT_DATA
    })
}

fn translate_cmd(path: &Path, stdout: bool, out: &mut Out) -> i32 {
    let text = match read(path, out) {
        Ok(t) => t,
        Err(c) => return c,
    };
    let (new, result) = match translate_source(&text) {
        Ok(r) => r,
        Err(e) => {
            out.error(format!("{}:{e}", path.display()));
            return EXIT_DATA;
        }
    };
    if stdout {
        out.text.push_str(&new);
    } else if new != text {
        if let Err(e) = std::fs::write(path, &new) {
            out.error(format!("{}: {e}", path.display()));
            return EXIT_IO;
        }
    }
    let (a, d) = (result.actions.to_string(), result.definitions.len().to_string());
    out.event(result.summary(), &["translated", &a, &d]);
    EXIT_OK
}

fn dump_trace(t: &Trace, first: &str, out: &mut Out) {
    if !out.machine() {
        let shown = t.to_string().replacen("<initial>", first, 1);
        out.text.push_str(&shown);
        return;
    }
    for (i, s) in t.states.iter().enumerate() {
        let how = if i == 0 { first } else { &t.actions[i - 1] };
        let n = (i + 1).to_string();
        for (k, v) in &s.0 {
            out.line(["trace", &n, how, k, &v.to_string()].join("\t"));
        }
    }
}

fn check_cmd(path: &Path, invariants: &[String], inductive: Option<&str>, limit: usize, out: &mut Out) -> i32 {
    let m = match load(path, out) {
        Ok(m) => m,
        Err(c) => return c,
    };
    for name in invariants.iter().map(String::as_str).chain(inductive) {
        if !m.definitions.iter().any(|d| d.name == name) {
            out.error(format!("no definition named {name}"));
            return EXIT_USAGE;
        }
    }
    for needed in ["Init", "Next"] {
        if !m.definitions.iter().any(|d| d.name == needed) {
            out.error(format!("module defines no {needed}; run `petrel translate` first"));
            return EXIT_DATA;
        }
    }
    let code = match inductive {
        Some(name) => inductive_cmd(&m, name, limit, out),
        None => EXIT_OK,
    };
    if code != EXIT_OK || (inductive.is_some() && invariants.is_empty()) {
        return code;
    }
    let inv = Expr::and(invariants.iter().map(|n| Expr::op(n)).collect());
    let outcome = check_invariant(&m, &m.variables, &Expr::op("Init"), &Expr::op("Next"), &inv, limit);
    match outcome {
        Err(e) => {
            out.error(&e);
            match e {
                CheckError::Eval(_) => EXIT_EXECUTION_ERROR,
                _ => EXIT_DATA,
            }
        }
        Ok(CheckOutcome::Ok { states }) => {
            let n = states.to_string();
            out.event(format!("states: {n}"), &["states", &n]);
            for i in invariants {
                out.event(format!("invariant {i}: OK"), &["invariant", i, "ok"]);
            }
            EXIT_OK
        }
        Ok(CheckOutcome::Violation { states, trace }) => {
            let n = states.to_string();
            out.event(format!("states: {n}"), &["states", &n]);
            let last = trace.states.last().cloned().unwrap_or_default();
            for i in invariants {
                let ok = crate::mcheck::eval(&Expr::op(i), &m, &last, None) == Ok(crate::kernel::Value::Bool(true));
                if !ok {
                    out.event(format!("invariant {i}: VIOLATED"), &["invariant", i, "violated"]);
                }
            }
            let len = trace.states.len().to_string();
            out.event(format!("trace ({len} states):"), &["trace-length", &len]);
            dump_trace(&trace, "<initial>", out);
            EXIT_VIOLATION
        }
        Ok(CheckOutcome::ExecutionError { error, trace }) => {
            out.error(&error);
            dump_trace(&trace, "<initial>", out);
            EXIT_EXECUTION_ERROR
        }
    }
}

fn inductive_cmd(m: &SpecModule, name: &str, limit: usize, out: &mut Out) -> i32 {
    let mut shown = name.to_string();
    let mut candidate = Expr::op(name);
    let mut result = check_inductive(m, &m.variables, &candidate, &Expr::op("Next"), limit);
    if let Err(CheckError::UnconstrainedVariable(v)) = &result {
        if name != "TypeOK" && m.definitions.iter().any(|d| d.name == "TypeOK") {
            let note = format!("{name} does not bound `{v}`; checking TypeOK /\\ {name}");
            out.event(format!("note: {note}"), &["note", &note]);
            shown = format!("TypeOK /\\ {name}");
            candidate = Expr::and(vec![Expr::op("TypeOK"), Expr::op(name)]);
            result = check_inductive(m, &m.variables, &candidate, &Expr::op("Next"), limit);
        }
    }
    match result {
        Err(e) => {
            out.error(&e);
            match e {
                CheckError::Eval(_) => EXIT_EXECUTION_ERROR,
                _ => EXIT_DATA,
            }
        }
        Ok(InductiveOutcome::Ok { candidates, .. }) => {
            let c = candidates.to_string();
            out.event(format!("candidates: {c}"), &["candidates", &c]);
            out.event(format!("inductive {shown}: OK"), &["inductive", &shown, "ok"]);
            EXIT_OK
        }
        Ok(InductiveOutcome::Cti {
            candidates,
            state,
            action,
            next,
        }) => {
            let c = candidates.to_string();
            out.event(format!("candidates: {c}"), &["candidates", &c]);
            out.event(format!("inductive {shown}: NOT INDUCTIVE"), &["inductive", &shown, "cti"]);
            let t = Trace {
                states: vec![state, next],
                actions: vec![action],
            };
            dump_trace(&t, "<candidate>", out);
            EXIT_VIOLATION
        }
        Ok(InductiveOutcome::ExecutionError { error, trace, .. }) => {
            out.error(&error);
            dump_trace(&trace, "<candidate>", out);
            EXIT_EXECUTION_ERROR
        }
    }
}

fn target_of(t: &TargetArgs, out: &mut Out) -> Result<Target, i32> {
    match (&t.theorem, &t.step) {
        (None, None) => Ok(Target::File),
        (Some(th), None) => Ok(Target::Theorem(th.clone())),
        (th, Some(s)) => match StepLabel::parse(s) {
            Some(l) => Ok(Target::Step(th.clone(), l)),
            None => {
                out.error(format!("`{s}` is not a step label"));
                Err(EXIT_USAGE)
            }
        },
    }
}

fn prove_cmd(path: &Path, target: &TargetArgs, sa: &StoreArgs, opts: &CheckOptions, detail: bool, out: &mut Out) -> i32 {
    let target = match target_of(target, out) {
        Ok(t) => t,
        Err(c) => return c,
    };
    let m = match load(path, out) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let store_path = sa.fp_store.clone().unwrap_or_else(|| Store::path_for(path));
    let mut store = if sa.no_fp {
        None
    } else {
        match Store::load(&store_path) {
            Ok((s, warnings)) => {
                for w in warnings {
                    log::warn!("{}: {w}", store_path.display());
                }
                Some(s)
            }
            Err(e) => {
                out.error(e);
                return EXIT_IO;
            }
        }
    };
    let report = match check(&m, &target, store.as_mut(), opts) {
        Ok(r) => r,
        Err(e) => {
            out.error(e);
            return EXIT_USAGE;
        }
    };
    if let Some(s) = &store {
        if !opts.dry_run {
            if let Err(e) = s.save(&store_path) {
                out.error(e);
                return EXIT_IO;
            }
        }
    }
    render(&report, detail, out);
    report.exit_code()
}

fn render(r: &Report, detail: bool, out: &mut Out) {
    if !out.machine() {
        let text = r.render(detail, out.color);
        out.text.push_str(&text);
        return;
    }
    for t in &r.theorems {
        for s in &t.steps {
            let fp = s.fp.map(|f| f.short()).unwrap_or_else(|| "-".into());
            let line = ["step", &s.label, s.status.as_str(), &s.backend, &s.ms.to_string(), &fp].join("\t");
            out.line(line);
        }
        out.line(["theorem", &t.name, t.status.as_str()].join("\t"));
    }
    let mut summary = String::from("summary");
    for n in [
        r.obligations().count(),
        r.count(crate::proofman::StepStatus::Proved),
        r.count(crate::proofman::StepStatus::Failed),
        r.count(crate::proofman::StepStatus::Canceled),
        r.count(crate::proofman::StepStatus::Omitted),
        r.count(crate::proofman::StepStatus::Pending),
        r.backend_calls,
        r.cache_hits,
    ] {
        let _ = write!(summary, "\t{n}");
    }
    out.line(summary);
}
