use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::elaborate::{elaborate_all, ElabError, Elaboration};
use super::obligation::{print_obligation, Obligation};
use crate::backends::{self, apply_temporal_rules, export_smtlib, run_solver, Limits, ProverResult};
use crate::fpstore::{fingerprint, Fingerprint, Status, StatusRecord, Store};
use crate::syntax::{SpecModule, StepLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    Ground,
    Smtlib,
}

impl BackendChoice {
    pub fn name(self) -> &'static str {
        match self {
            BackendChoice::Ground => "ground",
            BackendChoice::Smtlib => "smtlib",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub backend: BackendChoice,
    pub timeout: Duration,
    /// Ignore cached results.
    pub force: bool,
    /// Treat a cached failure like a cached proof.
    pub trust_failures: bool,
    pub enum_budget: u64,
    pub smt_cmd: Option<String>,
    pub cancel: Arc<AtomicBool>,
    /// Report from the store only; never call a back-end.
    pub dry_run: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            backend: BackendChoice::Ground,
            timeout: Duration::from_secs(10),
            force: false,
            trust_failures: false,
            enum_budget: backends::DEFAULT_BUDGET,
            smt_cmd: None,
            cancel: Arc::new(AtomicBool::new(false)),
            dry_run: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    File,
    Theorem(String),
    /// A step label, optionally restricted to one theorem.
    Step(Option<String>, StepLabel),
}

/// Ordered by aggregation precedence: a parent takes the smallest status
/// among its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepStatus {
    Pending,
    Omitted,
    Failed,
    Canceled,
    Proved,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Pending => "pending",
            StepStatus::Omitted => "omitted",
            StepStatus::Failed => "failed",
            StepStatus::Canceled => "canceled",
            StepStatus::Proved => "proved",
        }
    }

    fn stored(self) -> Option<Status> {
        Some(match self {
            StepStatus::Proved => Status::Proved,
            StepStatus::Failed => Status::Failed,
            StepStatus::Canceled => Status::Canceled,
            StepStatus::Omitted => Status::Omitted,
            StepStatus::Pending => return None,
        })
    }

    fn from_stored(s: Status) -> StepStatus {
        match s {
            Status::Proved => StepStatus::Proved,
            Status::Failed => StepStatus::Failed,
            Status::Canceled => StepStatus::Canceled,
            Status::Omitted => StepStatus::Omitted,
        }
    }
}

impl fmt::Display for StepStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObligationReport {
    pub id: String,
    pub status: StepStatus,
    pub backend: String,
    pub ms: u64,
    pub fp: Fingerprint,
    pub cached: bool,
    pub reason: Option<String>,
    /// The printed obligation, for failures.
    pub text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub label: String,
    pub depth: usize,
    pub status: StepStatus,
    pub backend: String,
    pub ms: u64,
    pub fp: Option<Fingerprint>,
    /// Indices into the theorem's obligation reports, own obligations only.
    pub obligations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremReport {
    pub name: String,
    pub status: StepStatus,
    pub steps: Vec<StepReport>,
    pub obligations: Vec<ObligationReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub theorems: Vec<TheoremReport>,
    pub backend_calls: usize,
    pub cache_hits: usize,
}

impl Report {
    pub fn obligations(&self) -> impl Iterator<Item = &ObligationReport> {
        self.theorems.iter().flat_map(|t| &t.obligations)
    }

    pub fn count(&self, s: StepStatus) -> usize {
        self.obligations().filter(|o| o.status == s).count()
    }

    pub fn step(&self, label: &str) -> Option<&StepReport> {
        self.theorems.iter().flat_map(|t| &t.steps).find(|s| s.label == label)
    }

    /// 5 if anything failed or was canceled, else 2 if anything was
    /// omitted, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.count(StepStatus::Failed) + self.count(StepStatus::Canceled) > 0 {
            5
        } else if self.count(StepStatus::Omitted) > 0 {
            2
        } else {
            0
        }
    }

    /// One line per step and theorem plus a summary. `detail` adds failure
    /// reasons and the failing obligations, indented; `color` highlights
    /// statuses with ANSI escapes.
    pub fn render(&self, detail: bool, color: bool) -> String {
        let paint = |s: StepStatus| {
            if !color {
                return s.to_string();
            }
            let code = match s {
                StepStatus::Proved => "32",
                StepStatus::Failed => "31",
                StepStatus::Canceled => "35",
                StepStatus::Omitted => "33",
                StepStatus::Pending => "36",
            };
            format!("\x1b[{code}m{s}\x1b[0m")
        };
        let mut out = String::new();
        for t in &self.theorems {
            for s in &t.steps {
                let fp = s.fp.map(|f| f.short()).unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "STEP {} {} backend={} time={}ms fp={fp}\n",
                    s.label,
                    paint(s.status),
                    s.backend,
                    s.ms
                ));
                if detail {
                    for &i in &s.obligations {
                        let o = &t.obligations[i];
                        if let Some(r) = &o.reason {
                            out.push_str(&format!("  {}: {r}\n", o.id));
                        }
                        if let Some(text) = &o.text {
                            for l in text.lines() {
                                out.push_str(&format!("    {l}\n"));
                            }
                        }
                    }
                }
            }
            out.push_str(&format!("THEOREM {} {}\n", t.name, paint(t.status)));
        }
        out.push_str(&format!(
            "obligations: {} proved: {} failed: {} canceled: {} omitted: {} pending: {} backend-calls: {} cache-hits: {}\n",
            self.obligations().count(),
            self.count(StepStatus::Proved),
            self.count(StepStatus::Failed),
            self.count(StepStatus::Canceled),
            self.count(StepStatus::Omitted),
            self.count(StepStatus::Pending),
            self.backend_calls,
            self.cache_hits
        ));
        out
    }
}

fn backend_for(ob: &Obligation, opts: &CheckOptions) -> &'static str {
    if ob.omitted {
        "none"
    } else if ob.is_temporal() {
        "temporal"
    } else {
        opts.backend.name()
    }
}

fn discharge(ob: &Obligation, opts: &CheckOptions) -> (StepStatus, Option<String>) {
    if opts.cancel.load(Ordering::Relaxed) {
        return (StepStatus::Canceled, Some("interrupted".into()));
    }
    let result = if ob.is_temporal() {
        match ob.expanded() {
            Ok((hyps, goal)) => apply_temporal_rules(&hyps, &goal, &*ob.env),
            Err(e) => ProverResult::Unsupported(e.to_string()),
        }
    } else {
        match opts.backend {
            BackendChoice::Ground => backends::prove_ground(
                ob,
                Limits {
                    budget: Some(opts.enum_budget),
                    deadline: Some(Instant::now() + opts.timeout),
                    cancel: Some(&opts.cancel),
                },
            ),
            BackendChoice::Smtlib => match (export_smtlib(ob), &opts.smt_cmd) {
                (Err(u), _) => ProverResult::Unsupported(u.0),
                (Ok(_), None) => ProverResult::Unsupported("no SMT solver command configured".into()),
                (Ok(script), Some(cmd)) => run_solver(cmd, &script, opts.timeout),
            },
        }
    };
    match result {
        ProverResult::Proved => (StepStatus::Proved, None),
        ProverResult::Canceled => (StepStatus::Canceled, Some("timeout or interrupt".into())),
        r @ (ProverResult::Failed(_) | ProverResult::Unsupported(_)) => {
            let why = r.to_string();
            (StepStatus::Failed, Some(why.strip_prefix("failed: ").unwrap_or(&why).to_string()))
        }
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Prove (or, with `dry_run`, look up) the obligations under `target`.
pub fn check(module: &SpecModule, target: &Target, mut store: Option<&mut Store>, opts: &CheckOptions) -> Result<Report, ElabError> {
    let elabs = elaborate_all(module)?;
    // (theorem, root node) pairs to report.
    let mut roots: Vec<(usize, usize)> = vec![];
    match target {
        Target::File => roots.extend((0..elabs.len()).map(|t| (t, 0))),
        Target::Theorem(name) => {
            let t = find_theorem(&elabs, name).ok_or_else(|| ElabError::NoSuchTheorem(name.clone()))?;
            roots.push((t, 0));
        }
        Target::Step(th, label) => {
            let candidates: Vec<usize> = match th {
                Some(n) => vec![find_theorem(&elabs, n).ok_or_else(|| ElabError::NoSuchTheorem(n.clone()))?],
                None => (0..elabs.len()).collect(),
            };
            let hit = candidates.into_iter().find_map(|t| elabs[t].find(label).map(|s| (t, s)));
            roots.push(hit.ok_or_else(|| ElabError::NoSuchStep(label.to_string()))?);
        }
    }

    let mut report = Report::default();
    for (t, root) in roots {
        let e = &elabs[t];
        let nodes = e.subtree(root);
        let obs: Vec<usize> = nodes.iter().flat_map(|&n| e.steps[n].obligations.iter().copied()).collect();
        let mut results: Vec<Option<ObligationReport>> = vec![None; e.obligations.len()];
        let mut todo = vec![];
        for &i in &obs {
            let ob = &e.obligations[i];
            let fp = fingerprint(ob);
            let backend = backend_for(ob, opts);
            let base = ObligationReport {
                id: ob.id.clone(),
                status: StepStatus::Pending,
                backend: backend.to_string(),
                ms: 0,
                fp,
                cached: false,
                reason: None,
                text: None,
            };
            if ob.omitted {
                results[i] = Some(ObligationReport {
                    status: StepStatus::Omitted,
                    ..base
                });
                continue;
            }
            let cached = store.as_deref().and_then(|s| s.get(&fp, backend)).filter(|r| {
                !opts.force && (r.status == Status::Proved || (opts.trust_failures && r.status == Status::Failed) || opts.dry_run)
            });
            if let Some(r) = cached {
                report.cache_hits += 1;
                results[i] = Some(ObligationReport {
                    status: StepStatus::from_stored(r.status),
                    ms: r.ms,
                    cached: true,
                    ..base
                });
            } else {
                results[i] = Some(base);
                if !opts.dry_run {
                    todo.push(i);
                }
            }
        }
        report.backend_calls += todo.len();
        let done: Vec<(usize, StepStatus, Option<String>, u64)> = todo
            .par_iter()
            .map(|&i| {
                let start = Instant::now();
                let (s, why) = discharge(&e.obligations[i], opts);
                (i, s, why, start.elapsed().as_millis() as u64)
            })
            .collect();
        for (i, status, reason, ms) in done {
            let r = results[i].as_mut().unwrap();
            r.status = status;
            r.ms = ms;
            if status == StepStatus::Failed {
                r.text = Some(print_obligation(&e.obligations[i]));
            }
            r.reason = reason;
            if let (Some(st), Some(stored)) = (store.as_deref_mut(), status.stored()) {
                st.record(StatusRecord {
                    fp: r.fp,
                    status: stored,
                    backend: r.backend.clone(),
                    ms,
                    created: now(),
                });
            }
        }
        for &i in &obs {
            let ob = &e.obligations[i];
            if ob.omitted {
                if let Some(st) = store.as_deref_mut() {
                    let r = results[i].as_ref().unwrap();
                    st.record(StatusRecord {
                        fp: r.fp,
                        status: Status::Omitted,
                        backend: r.backend.clone(),
                        ms: 0,
                        created: now(),
                    });
                }
            }
        }
        report.theorems.push(summarize(e, root, &nodes, results));
    }
    Ok(report)
}

fn find_theorem(elabs: &[Elaboration], name: &str) -> Option<usize> {
    elabs
        .iter()
        .position(|e| e.name == name)
        .or_else(|| name.parse::<usize>().ok().filter(|&n| n >= 1 && n <= elabs.len()).map(|n| n - 1))
}

fn summarize(e: &Elaboration, root: usize, nodes: &[usize], results: Vec<Option<ObligationReport>>) -> TheoremReport {
    let mut remap = vec![usize::MAX; results.len()];
    let mut obligations = vec![];
    for (i, r) in results.into_iter().enumerate() {
        if let Some(r) = r {
            remap[i] = obligations.len();
            obligations.push(r);
        }
    }
    // Post-order aggregation over the subtree.
    let mut status = vec![StepStatus::Proved; e.steps.len()];
    let mut ms = vec![0u64; e.steps.len()];
    for &n in nodes.iter().rev() {
        let node = &e.steps[n];
        let mut s = StepStatus::Proved;
        let mut t = 0;
        for &o in &node.obligations {
            let r = &obligations[remap[o]];
            s = s.min(r.status);
            t += r.ms;
        }
        for &c in &node.children {
            s = s.min(status[c]);
            t += ms[c];
        }
        status[n] = s;
        ms[n] = t;
    }
    let steps = nodes
        .iter()
        .filter(|&&n| e.steps[n].label.is_some())
        .map(|&n| {
            let node = &e.steps[n];
            let own: Vec<usize> = node.obligations.iter().map(|&o| remap[o]).collect();
            let main = own.last().map(|&o| &obligations[o]);
            StepReport {
                label: node.label.as_ref().unwrap().to_string(),
                depth: node.depth,
                status: status[n],
                backend: main.map(|m| m.backend.clone()).unwrap_or_else(|| "-".into()),
                ms: ms[n],
                fp: main.map(|m| m.fp),
                obligations: own,
            }
        })
        .collect();
    let name = if root == 0 {
        e.name.clone()
    } else {
        format!("{} (step {})", e.name, e.steps[root].label.as_ref().unwrap())
    };
    TheoremReport {
        name,
        status: status[root],
        steps,
        obligations,
    }
}
