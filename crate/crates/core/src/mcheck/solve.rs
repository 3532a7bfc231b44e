//! Enumeration of the states that satisfy an initial predicate, and of the
//! successors allowed by an action, by left-to-right solving of conjuncts.

use std::collections::{BTreeMap, VecDeque};

use super::eval::{Ctx, EResult, EvalError, State};
use crate::kernel::{BinOp, DefEnv, Expr, Quant, Value, ValueError};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Unknowns are unprimed variables.
    Init,
    /// Unknowns are primed variables; the current state is complete.
    Next,
}

#[derive(Clone)]
struct Goal {
    e: Expr,
    frame: Vec<Value>,
}

/// Why enumeration could not proceed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveError {
    Eval(EvalError),
    /// A variable that no conjunct pins or bounds.
    Unconstrained(String),
    /// The named action leaves a primed variable undetermined.
    NotNormalForm { action: String, var: String },
}

impl From<EvalError> for SolveError {
    fn from(e: EvalError) -> Self {
        SolveError::Eval(e)
    }
}

pub type SResult<T> = Result<T, SolveError>;

struct Solver<'a> {
    env: &'a dyn DefEnv,
    vars: &'a [String],
    mode: Mode,
    cur: &'a State,
    consts: BTreeMap<String, Value>,
    /// Assignments reaching completeness, counted once per branch.
    complete: usize,
}

/// One branch of the search.
#[derive(Clone)]
struct Branch {
    goals: VecDeque<Goal>,
    deferred: Vec<Goal>,
    asg: State,
    name: Option<String>,
    /// Set once a conjunction has been entered; later definitions no longer
    /// rename the action.
    named: bool,
    was_complete: bool,
    retry_mark: Option<(usize, usize)>,
}

/// All states satisfying `init`, in enumeration order, plus the number of
/// complete variable assignments produced before the remaining conjuncts
/// filtered them.
pub fn initial_states(init: &Expr, vars: &[String], env: &dyn DefEnv) -> SResult<(Vec<State>, usize)> {
    let empty = State::default();
    let mut s = Solver {
        env,
        vars,
        mode: Mode::Init,
        cur: &empty,
        consts: BTreeMap::new(),
        complete: 0,
    };
    let mut out = vec![];
    s.run(init, &mut out)?;
    let mut seen = std::collections::HashSet::new();
    let states = out.into_iter().map(|(_, st)| st).filter(|st| seen.insert(st.clone())).collect();
    Ok((states, s.complete))
}

/// Every `(action name, next state)` allowed by `next` from `cur`.
pub fn successors(cur: &State, next: &Expr, vars: &[String], env: &dyn DefEnv) -> SResult<Vec<(String, State)>> {
    let mut s = Solver {
        env,
        vars,
        mode: Mode::Next,
        cur,
        consts: BTreeMap::new(),
        complete: 0,
    };
    let mut out = vec![];
    s.run(next, &mut out)?;
    Ok(out
        .into_iter()
        .map(|(n, st)| (n.unwrap_or_else(|| "Next".into()), st))
        .collect())
}

impl<'a> Solver<'a> {
    fn run(&mut self, e: &Expr, out: &mut Vec<(Option<String>, State)>) -> SResult<()> {
        let b = Branch {
            goals: VecDeque::from([Goal {
                e: e.clone(),
                frame: vec![],
            }]),
            deferred: vec![],
            asg: State::default(),
            name: None,
            named: false,
            was_complete: false,
            retry_mark: None,
        };
        self.branch(b, out)
    }

    fn ctx<'s>(&'s self, asg: &'s State, frame: &[Value]) -> Ctx<'s> {
        let (cur, next) = match self.mode {
            Mode::Init => (asg, None),
            Mode::Next => (self.cur, Some(asg)),
        };
        Ctx::new(self.env, cur, next, &self.consts).with_frame(frame.to_vec())
    }

    fn eval(&self, asg: &State, g: &Goal, e: &Expr) -> EResult<Value> {
        self.ctx(asg, &g.frame).eval(e)
    }

    /// The variable named by an unknown-position expression, if unassigned.
    fn unknown<'e>(&self, e: &'e Expr, asg: &State) -> Option<&'e str> {
        let v = match (self.mode, e) {
            (Mode::Init, Expr::Var(v)) => v,
            (Mode::Next, Expr::Prime(inner)) => match &**inner {
                Expr::Var(v) => v,
                _ => return None,
            },
            _ => return None,
        };
        (asg.get(v).is_none()).then_some(v.as_str())
    }

    fn is_complete(&self, asg: &State) -> bool {
        self.vars.iter().all(|v| asg.get(v).is_some())
    }

    fn assign(&mut self, b: &mut Branch, v: &str, val: Value) {
        b.asg.0.insert(v.to_string(), val);
        if !b.was_complete && self.is_complete(&b.asg) {
            b.was_complete = true;
            self.complete += 1;
        }
    }

    fn branch(&mut self, mut b: Branch, out: &mut Vec<(Option<String>, State)>) -> SResult<()> {
        loop {
            let Some(g) = b.goals.pop_front() else {
                if b.deferred.is_empty() {
                    return self.finish(b, out);
                }
                // Retry deferred conjuncts; give up when a full pass over
                // them assigns nothing and resolves none.
                let mark = (b.asg.0.len(), b.deferred.len());
                if b.retry_mark == Some(mark) {
                    let var = self.first_missing(&b.asg).unwrap_or_else(|| unassigned_in(&b.deferred));
                    return Err(self.stuck(&b, var));
                }
                b.retry_mark = Some(mark);
                b.goals.extend(std::mem::take(&mut b.deferred));
                continue;
            };
            let top = b.goals.is_empty() && b.deferred.is_empty() && !b.named;
            match &g.e {
                Expr::And(items, _) => {
                    b.named = true;
                    for x in items.iter().rev() {
                        b.goals.push_front(Goal {
                            e: x.clone(),
                            frame: g.frame.clone(),
                        });
                    }
                }
                Expr::Lit(Value::Bool(true)) => {}
                Expr::Apply(name, args) if self.env.definition(name).is_some() => {
                    let d = self.env.definition(name).unwrap();
                    if d.params.len() != args.len() {
                        return Err(EvalError::Arity {
                            name: name.clone(),
                            expected: d.params.len(),
                            found: args.len(),
                        }
                        .into());
                    }
                    let vals = match args.iter().map(|a| self.eval(&b.asg, &g, a)).collect::<EResult<Vec<_>>>() {
                        Ok(v) => v,
                        Err(EvalError::Unassigned(_)) => {
                            b.deferred.push(g);
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    if top {
                        b.name = Some(action_name(name, &vals));
                    }
                    b.goals.push_front(Goal {
                        e: d.body.clone(),
                        frame: vals,
                    });
                }
                Expr::Or(items, _) => {
                    for x in items {
                        let mut nb = b.clone();
                        nb.goals.push_front(Goal {
                            e: x.clone(),
                            frame: g.frame.clone(),
                        });
                        self.branch(nb, out)?;
                    }
                    return Ok(());
                }
                Expr::Quant(Quant::Exists, _, dom, body) => {
                    let dv = match self.eval(&b.asg, &g, dom) {
                        Ok(v) => v,
                        Err(EvalError::Unassigned(_)) => {
                            b.deferred.push(g);
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let Value::Set(items) = dv else {
                        return Err(self.ctx(&b.asg, &g.frame).fail(ValueError::UnboundedDomain, &g.e).into());
                    };
                    for x in items {
                        let mut nb = b.clone();
                        let mut frame = g.frame.clone();
                        frame.push(x);
                        nb.goals.push_front(Goal {
                            e: (**body).clone(),
                            frame,
                        });
                        self.branch(nb, out)?;
                    }
                    return Ok(());
                }
                Expr::If(c, t, f) => match self.eval(&b.asg, &g, c) {
                    Ok(v) => {
                        let cond = v.as_bool().map_err(|k| self.ctx(&b.asg, &g.frame).fail(k, c))?;
                        b.goals.push_front(Goal {
                            e: if cond { (**t).clone() } else { (**f).clone() },
                            frame: g.frame.clone(),
                        });
                    }
                    Err(EvalError::Unassigned(_)) => b.deferred.push(g),
                    Err(e) => return Err(e.into()),
                },
                Expr::Unchanged(x) if self.mode == Mode::Next => {
                    b.named = true;
                    let parts = self.unchanged_parts(x, &g.frame);
                    for p in parts.into_iter().rev() {
                        b.goals.push_front(p);
                    }
                }
                Expr::BoxAction(a, v) if self.mode == Mode::Next => {
                    let alt = Expr::or(vec![(**a).clone(), Expr::Unchanged(v.clone())]);
                    b.goals.push_front(Goal { e: alt, frame: g.frame.clone() });
                }
                Expr::Bin(BinOp::Eq, lhs, rhs) if self.unknown(lhs, &b.asg).is_some() => {
                    let v = self.unknown(lhs, &b.asg).unwrap().to_string();
                    match self.eval(&b.asg, &g, rhs) {
                        Ok(val) => self.assign(&mut b, &v, val),
                        Err(EvalError::Unassigned(_)) => b.deferred.push(g),
                        Err(e) => return Err(e.into()),
                    }
                }
                Expr::Bin(BinOp::In, lhs, rhs) if self.unknown(lhs, &b.asg).is_some() => {
                    let v = self.unknown(lhs, &b.asg).unwrap().to_string();
                    match self.eval(&b.asg, &g, rhs) {
                        Ok(Value::Set(items)) => {
                            for x in items {
                                let mut nb = b.clone();
                                self.assign(&mut nb, &v, x);
                                self.branch(nb, out)?;
                            }
                            return Ok(());
                        }
                        Ok(_) => {
                            return Err(self.ctx(&b.asg, &g.frame).fail(ValueError::UnboundedDomain, &g.e).into());
                        }
                        Err(EvalError::Unassigned(_)) => b.deferred.push(g),
                        Err(e) => return Err(e.into()),
                    }
                }
                _ => match self.eval(&b.asg, &g, &g.e) {
                    Ok(v) => {
                        let ok = v.as_bool().map_err(|k| self.ctx(&b.asg, &g.frame).fail(k, &g.e))?;
                        if !ok {
                            return Ok(());
                        }
                    }
                    Err(EvalError::Unassigned(_)) => b.deferred.push(g),
                    Err(e) => return Err(e.into()),
                },
            }
        }
    }

    /// `UNCHANGED e` as one `v' = v` goal per variable when `e` is built from
    /// variables, tuples, and definitions; otherwise a single predicate.
    fn unchanged_parts(&self, x: &Expr, frame: &[Value]) -> Vec<Goal> {
        match x {
            Expr::Var(v) => vec![Goal {
                e: Expr::eq(Expr::prime(Expr::var(v)), Expr::var(v)),
                frame: frame.to_vec(),
            }],
            Expr::Tuple(items) => items.iter().flat_map(|i| self.unchanged_parts(i, frame)).collect(),
            Expr::Apply(n, args) if args.is_empty() && self.env.definition(n).is_some() => {
                self.unchanged_parts(&self.env.definition(n).unwrap().body, &[])
            }
            _ => vec![Goal {
                e: Expr::Unchanged(Box::new(x.clone())),
                frame: frame.to_vec(),
            }],
        }
    }

    fn first_missing(&self, asg: &State) -> Option<String> {
        self.vars.iter().find(|v| asg.get(v).is_none()).cloned()
    }

    fn stuck(&self, b: &Branch, var: String) -> SolveError {
        match self.mode {
            Mode::Init => SolveError::Unconstrained(var),
            Mode::Next => SolveError::NotNormalForm {
                action: b.name.clone().unwrap_or_else(|| "Next".into()),
                var,
            },
        }
    }

    fn finish(&mut self, b: Branch, out: &mut Vec<(Option<String>, State)>) -> SResult<()> {
        if let Some(v) = self.first_missing(&b.asg) {
            return Err(self.stuck(&b, v));
        }
        let mut st = b.asg;
        st.0.retain(|k, _| self.vars.contains(k));
        out.push((b.name, st));
        Ok(())
    }
}

fn unassigned_in(goals: &[Goal]) -> String {
    goals
        .iter()
        .flat_map(|g| g.e.free_symbols())
        .next()
        .unwrap_or_default()
}

fn action_name(name: &str, args: &[Value]) -> String {
    if args.is_empty() {
        return name.to_string();
    }
    let a: Vec<String> = args.iter().map(|v| v.to_string()).collect();
    format!("{name}({})", a.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Definition;

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn membership_then_equality() {
        let init = Expr::and(vec![
            Expr::member(Expr::var("x"), Expr::int_set(&[1, 2])),
            Expr::eq(Expr::var("y"), Expr::var("x")),
        ]);
        let (states, n) = initial_states(&init, &vars(&["x", "y"]), &Vec::<Definition>::new()).unwrap();
        assert_eq!((states.len(), n), (2, 2));
    }

    #[test]
    fn contradiction_is_empty() {
        let init = Expr::and(vec![Expr::eq(Expr::var("x"), 1.into()), Expr::eq(Expr::var("x"), 2.into())]);
        let (states, _) = initial_states(&init, &vars(&["x"]), &Vec::<Definition>::new()).unwrap();
        assert!(states.is_empty());
    }

    #[test]
    fn deferred_predicate_and_unconstrained() {
        let init = Expr::and(vec![
            Expr::bin(BinOp::Lt, Expr::var("x"), 3.into()),
            Expr::member(Expr::var("x"), Expr::int_set(&[1, 2, 3, 4])),
        ]);
        let (states, n) = initial_states(&init, &vars(&["x"]), &Vec::<Definition>::new()).unwrap();
        assert_eq!((states.len(), n), (2, 4));
        let r = initial_states(&Expr::eq(Expr::var("x"), 1.into()), &vars(&["x", "z"]), &Vec::<Definition>::new());
        assert_eq!(r, Err(SolveError::Unconstrained("z".into())));
    }

    #[test]
    fn successors_need_every_primed_variable() {
        let s = State::default().with("x", Value::Int(0)).with("y", Value::Int(0));
        let next = Expr::eq(Expr::prime(Expr::var("x")), 1.into());
        let r = successors(&s, &next, &vars(&["x", "y"]), &Vec::<Definition>::new());
        assert!(matches!(r, Err(SolveError::NotNormalForm { var, .. }) if var == "y"));
    }
}
