//! Breadth-first reachability with invariant checking, and inductiveness
//! checking over all states satisfying a candidate invariant.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use super::eval::{Ctx, EvalError, ExecutionError, State};
use super::solve::{initial_states, successors, SolveError};
use crate::kernel::{DefEnv, Expr};

pub const DEFAULT_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("variable `{0}` is not constrained by the initial predicate")]
    UnconstrainedVariable(String),
    #[error("action {action} does not determine `{var}'`")]
    NotActionNormalForm { action: String, var: String },
    #[error("more than {0} states")]
    StateLimitExceeded(usize),
    #[error(transparent)]
    Eval(EvalError),
}

/// A behavior prefix: `actions[i]` leads from `states[i]` to `states[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<State>,
    pub actions: Vec<String>,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.states.iter().enumerate() {
            let how = if i == 0 { "<initial>" } else { &self.actions[i - 1] };
            writeln!(f, "state {}: {how}", i + 1)?;
            for line in s.to_string().lines() {
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Ok { states: usize },
    Violation { states: usize, trace: Trace },
    ExecutionError { error: Box<ExecutionError>, trace: Trace },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InductiveOutcome {
    Ok { candidates: usize, states: usize },
    Cti { candidates: usize, state: State, action: String, next: State },
    ExecutionError { candidates: usize, error: Box<ExecutionError>, trace: Trace },
}

/// Split solver failures into execution errors (reported with a trace) and
/// everything else.
enum Failure {
    Exec(Box<ExecutionError>),
    Other(CheckError),
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Eval(EvalError::Exec(x)) => Failure::Exec(x),
            SolveError::Eval(e) => Failure::Other(CheckError::Eval(e)),
            SolveError::Unconstrained(v) => Failure::Other(CheckError::UnconstrainedVariable(v)),
            SolveError::NotNormalForm { action, var } => Failure::Other(CheckError::NotActionNormalForm { action, var }),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        SolveError::Eval(e).into()
    }
}

fn holds(e: &Expr, env: &dyn DefEnv, s: &State, next: Option<&State>) -> Result<bool, Failure> {
    let consts = Default::default();
    Ok(Ctx::new(env, s, next, &consts).bool(e)?)
}

struct Graph {
    states: Vec<State>,
    index: HashMap<State, usize>,
    parent: Vec<Option<(usize, String)>>,
}

impl Graph {
    fn trace_to(&self, mut i: usize) -> Trace {
        let mut states = vec![self.states[i].clone()];
        let mut actions = vec![];
        while let Some((p, a)) = &self.parent[i] {
            states.push(self.states[*p].clone());
            actions.push(a.clone());
            i = *p;
        }
        states.reverse();
        actions.reverse();
        Trace { states, actions }
    }
}

/// Explore every state reachable from `init` under `next`, checking `inv`
/// in each. Exploration is breadth-first, so a reported violation has a
/// shortest trace; successor generation for a level runs in parallel but
/// results are merged in a fixed order.
pub fn check_invariant(
    env: &(dyn DefEnv + Sync),
    vars: &[String],
    init: &Expr,
    next: &Expr,
    inv: &Expr,
    limit: usize,
) -> Result<CheckOutcome, CheckError> {
    let mut g = Graph {
        states: vec![],
        index: HashMap::new(),
        parent: vec![],
    };
    let fail = |g: &Graph, f: Failure, at: Option<usize>| -> Result<CheckOutcome, CheckError> {
        match f {
            Failure::Other(e) => Err(e),
            Failure::Exec(error) => {
                let trace = match at {
                    Some(i) => g.trace_to(i),
                    None => Trace {
                        states: vec![error.state.clone()],
                        actions: vec![],
                    },
                };
                Ok(CheckOutcome::ExecutionError { error, trace })
            }
        }
    };

    let inits = match initial_states(init, vars, env) {
        Ok((s, _)) => s,
        Err(e) => return fail(&g, e.into(), None),
    };
    let mut frontier = vec![];
    for s in inits {
        if g.index.contains_key(&s) {
            continue;
        }
        let i = g.states.len();
        g.index.insert(s.clone(), i);
        g.states.push(s);
        g.parent.push(None);
        frontier.push(i);
        match holds(inv, env, &g.states[i], None) {
            Ok(true) => {}
            Ok(false) => {
                return Ok(CheckOutcome::Violation {
                    states: g.states.len(),
                    trace: g.trace_to(i),
                })
            }
            Err(f) => return fail(&g, f, Some(i)),
        }
    }

    while !frontier.is_empty() {
        let results: Vec<Result<Vec<(String, State)>, SolveError>> = frontier
            .par_iter()
            .map(|&i| successors(&g.states[i], next, vars, env))
            .collect();
        let mut level = vec![];
        for (&from, r) in frontier.iter().zip(results) {
            let succ = match r {
                Ok(s) => s,
                Err(e) => return fail(&g, e.into(), Some(from)),
            };
            for (action, t) in succ {
                if g.index.contains_key(&t) {
                    continue;
                }
                if g.states.len() >= limit {
                    return Err(CheckError::StateLimitExceeded(limit));
                }
                let i = g.states.len();
                g.index.insert(t.clone(), i);
                g.states.push(t);
                g.parent.push(Some((from, action)));
                level.push(i);
                match holds(inv, env, &g.states[i], None) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Ok(CheckOutcome::Violation {
                            states: g.states.len(),
                            trace: g.trace_to(i),
                        })
                    }
                    Err(f) => return fail(&g, f, Some(i)),
                }
            }
        }
        frontier = level;
    }
    Ok(CheckOutcome::Ok { states: g.states.len() })
}

/// Check that every `next` step from a state satisfying `inv` lands in a
/// state satisfying `inv`. Stuttering steps preserve any state predicate and
/// are not enumerated.
pub fn check_inductive(
    env: &(dyn DefEnv + Sync),
    vars: &[String],
    inv: &Expr,
    next: &Expr,
    limit: usize,
) -> Result<InductiveOutcome, CheckError> {
    let (states, candidates) = match initial_states(inv, vars, env) {
        Ok(r) => r,
        Err(e) => {
            return match Failure::from(e) {
                Failure::Other(e) => Err(e),
                Failure::Exec(error) => Ok(InductiveOutcome::ExecutionError {
                    candidates: 0,
                    trace: Trace {
                        states: vec![error.state.clone()],
                        actions: vec![],
                    },
                    error,
                }),
            }
        }
    };
    if candidates > limit {
        return Err(CheckError::StateLimitExceeded(limit));
    }
    let found = states.par_iter().find_map_first(|s| -> Option<Result<InductiveOutcome, CheckError>> {
        let succ = match successors(s, next, vars, env) {
            Ok(x) => x,
            Err(e) => return Some(exec_outcome(candidates, e.into(), vec![s.clone()], vec![])),
        };
        for (action, t) in succ {
            match holds(inv, env, &t, None) {
                Ok(true) => {}
                Ok(false) => {
                    return Some(Ok(InductiveOutcome::Cti {
                        candidates,
                        state: s.clone(),
                        action,
                        next: t,
                    }))
                }
                Err(f) => return Some(exec_outcome(candidates, f, vec![s.clone(), t], vec![action])),
            }
        }
        None
    });
    match found {
        Some(r) => r,
        None => Ok(InductiveOutcome::Ok {
            candidates,
            states: states.len(),
        }),
    }
}

fn exec_outcome(candidates: usize, f: Failure, states: Vec<State>, actions: Vec<String>) -> Result<InductiveOutcome, CheckError> {
    match f {
        Failure::Other(e) => Err(e),
        Failure::Exec(error) => Ok(InductiveOutcome::ExecutionError {
            candidates,
            error,
            trace: Trace { states, actions },
        }),
    }
}
