//! Refutation prover for finite, ground obligations.
//!
//! The negated goal and the hypotheses are decomposed on a branch. Equalities
//! `t = e` with `t` a variable, primed variable, constant, or an application
//! of one of those to a literal pin `t`; memberships `t \in S` with `S`
//! evaluable split the branch over the elements of `S`. Everything else is
//! evaluated once its inputs are pinned. A branch closes when a formula
//! evaluates to FALSE or meets its own negation. Unexpanded definitions are
//! opaque atoms that can only take part in the latter.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use crate::kernel::value::{self, ValueError};
use crate::kernel::{BinOp, Definition, Expr, Quant, Value};
use crate::mcheck::eval::{Ctx, EvalError, State};
use crate::syntax::print_expr;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Default)]
pub struct Limits<'a> {
    /// Maximum number of branch alternatives explored.
    pub budget: Option<u64>,
    pub deadline: Option<Instant>,
    pub cancel: Option<&'a AtomicBool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundOutcome {
    Proved,
    Failed(Failure),
    Unsupported(String),
    Canceled,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// A branch stays open only because of an unexpanded definition.
    OpaqueAtom(String),
    /// Values for every pinned term under which the hypotheses hold and the
    /// goal does not.
    CounterValuation(Valuation),
    ExecutionError { kind: ValueError, expr: String },
    /// A back-end other than the ground prover gave up.
    Declined(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::OpaqueAtom(n) => write!(f, "unexpanded-opaque-atom: {n}"),
            Failure::CounterValuation(v) => write!(f, "counter-valuation: {v}"),
            Failure::ExecutionError { kind, expr } => write!(f, "execution-error ({}): {expr}", kind.code()),
            Failure::Declined(why) => f.write_str(why),
        }
    }
}

/// Pinned terms and their values, in the order they were pinned.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation(pub Vec<(Expr, Value)>);

impl Valuation {
    fn get(&self, k: &Expr) -> Option<&Value> {
        self.0.iter().find(|(x, _)| x == k).map(|(_, v)| v)
    }

    /// Split into unprimed and primed variable assignments.
    pub fn states(&self) -> (State, State) {
        let (mut s, mut t) = (BTreeMap::new(), BTreeMap::new());
        for (k, v) in &self.0 {
            match k {
                Expr::Var(n) => {
                    s.insert(n.clone(), v.clone());
                }
                Expr::Prime(x) => {
                    if let Expr::Var(n) = &**x {
                        t.insert(n.clone(), v.clone());
                    }
                }
                _ => {}
            }
        }
        (State(s), State(t))
    }

    pub fn consts(&self) -> BTreeMap<String, Value> {
        self.0
            .iter()
            .filter_map(|(k, v)| match k {
                Expr::Const(n) => Some((n.clone(), v.clone())),
                _ => None,
            })
            .collect()
    }

    /// Give every function whose applications were pinned, but which was
    /// not pinned itself, the smallest function agreeing with those pins.
    fn complete(mut self) -> Valuation {
        let mut made: Vec<(Expr, BTreeMap<Value, Value>)> = vec![];
        for (k, v) in &self.0 {
            if let Expr::FuncApp(f, a) = k {
                let Expr::Lit(av) = &**a else { continue };
                if self.get(f).is_some() {
                    continue;
                }
                match made.iter_mut().find(|(g, _)| g == &**f) {
                    Some((_, m)) => {
                        m.insert(av.clone(), v.clone());
                    }
                    None => made.push(((**f).clone(), [(av.clone(), v.clone())].into())),
                }
            }
        }
        self.0.retain(|(k, _)| !matches!(k, Expr::FuncApp(..)));
        self.0.extend(made.into_iter().map(|(f, m)| (f, Value::Func(m))));
        self
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = self.0.iter().map(|(k, v)| format!("{} = {v}", print_expr(k))).collect();
        items.sort();
        f.write_str(&items.join(", "))
    }
}

/// Try to refute `hyps /\ ~goal`. Inputs must be closed, with listed
/// definitions already expanded and primes pushed onto variables.
pub fn prove(hyps: &[Expr], goal: &Expr, limits: Limits) -> GroundOutcome {
    if goal.contains_always() || hyps.iter().any(Expr::contains_always) {
        return GroundOutcome::Unsupported("temporal formula".into());
    }
    let mut todo: Vec<Expr> = hyps.to_vec();
    todo.push(Expr::not(goal.clone()));
    todo.reverse();
    let b = Branch {
        pins: Valuation::default(),
        todo,
        splits: vec![],
        stuck: vec![],
        seen: HashSet::new(),
    };
    let mut s = Search {
        limits,
        spent: 0,
        ticks: 0,
    };
    match s.run(b) {
        Ok(Res::Closed) => GroundOutcome::Proved,
        Ok(Res::Open(f)) => GroundOutcome::Failed(f),
        Err(Stop::Budget) => GroundOutcome::Unsupported("enumeration budget exceeded".into()),
        Err(Stop::Unbounded(v)) => GroundOutcome::Unsupported(format!("unbounded variable {v}")),
        Err(Stop::Canceled) => GroundOutcome::Canceled,
    }
}

enum Res {
    Closed,
    Open(Failure),
}

enum Stop {
    Budget,
    Unbounded(String),
    Canceled,
}

#[derive(Clone)]
enum Split {
    Or(Vec<Expr>),
    Member(Expr, Vec<Value>),
}

#[derive(Clone)]
struct Branch {
    pins: Valuation,
    todo: Vec<Expr>,
    splits: Vec<Split>,
    stuck: Vec<Expr>,
    seen: HashSet<Expr>,
}

enum Eval {
    Val(Value),
    Err(ValueError, String),
    Unknown,
}

static NO_DEFS: Vec<Definition> = Vec::new();

fn evaluate(e: &Expr) -> Eval {
    if !e.is_closed() {
        return Eval::Unknown;
    }
    let st = State::default();
    let consts = BTreeMap::new();
    match Ctx::new(&NO_DEFS, &st, None, &consts).eval(e) {
        Ok(v) => Eval::Val(v),
        Err(EvalError::Exec(x)) => Eval::Err(x.kind, x.expr),
        Err(_) => Eval::Unknown,
    }
}

fn is_base_key(e: &Expr) -> bool {
    match e {
        Expr::Var(_) | Expr::Const(_) => true,
        Expr::Prime(x) => matches!(**x, Expr::Var(_)),
        _ => false,
    }
}

fn is_key(e: &Expr) -> bool {
    match e {
        Expr::FuncApp(f, a) => is_base_key(f) && matches!(**a, Expr::Lit(_)),
        _ => is_base_key(e),
    }
}

fn negate(e: &Expr) -> Expr {
    match e {
        Expr::Not(x) => (**x).clone(),
        _ => Expr::not(e.clone()),
    }
}

fn quant_instances(body: &Expr, dom: &[Value]) -> Vec<Expr> {
    dom.iter().map(|v| body.instantiate(&[Expr::Lit(v.clone())])).collect()
}

/// Replace pinned terms by their values. Under a prime only constants
/// are rigid.
fn subst(e: &Expr, pins: &Valuation) -> Expr {
    if pins.0.is_empty() {
        return e.clone();
    }
    subst_in(e, pins, false)
}

fn subst_in(e: &Expr, pins: &Valuation, primed: bool) -> Expr {
    e.map_with_depth(0, &mut |node, _| match node {
        Expr::Var(_) if !primed => pins.get(node).map(|v| Expr::Lit(v.clone())),
        Expr::Const(_) => pins.get(node).map(|v| Expr::Lit(v.clone())),
        Expr::Prime(x) if !primed => {
            if matches!(**x, Expr::Var(_)) {
                if let Some(v) = pins.get(node) {
                    return Some(Expr::Lit(v.clone()));
                }
            }
            Some(Expr::Prime(Box::new(subst_in(x, pins, true))))
        }
        Expr::FuncApp(f, a) if is_base_key(f) && !primed => {
            if pins.get(f).is_some() {
                return None;
            }
            let a = subst_in(a, pins, primed);
            if let Eval::Val(av) = evaluate(&a) {
                let k = Expr::FuncApp(f.clone(), Box::new(Expr::Lit(av)));
                if let Some(v) = pins.get(&k) {
                    return Some(Expr::Lit(v.clone()));
                }
                return Some(k);
            }
            Some(Expr::FuncApp(f.clone(), Box::new(a)))
        }
        _ => None,
    })
}

fn first_opaque(e: &Expr) -> Option<String> {
    let mut found = None;
    e.visit(0, &mut |x, _| {
        if let Expr::Apply(n, _) | Expr::Bang(n, _) = x {
            found.get_or_insert_with(|| n.clone());
        }
    });
    found
}

fn first_unpinned(e: &Expr) -> Option<String> {
    let mut found = None;
    e.visit(0, &mut |x, _| match x {
        Expr::Var(n) | Expr::Const(n) => {
            found.get_or_insert_with(|| n.clone());
        }
        _ => {}
    });
    found
}

struct Search<'a> {
    limits: Limits<'a>,
    spent: u64,
    ticks: u64,
}

impl Search<'_> {
    fn interrupted(&self) -> bool {
        self.limits.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
            || self.limits.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run(&mut self, mut b: Branch) -> Result<Res, Stop> {
        loop {
            self.ticks += 1;
            if self.ticks.is_multiple_of(1024) && self.interrupted() {
                return Err(Stop::Canceled);
            }
            if let Some(f) = b.todo.pop() {
                if let Some(r) = self.step(&mut b, f) {
                    return Ok(r);
                }
                continue;
            }
            match self.pick_split(&mut b) {
                Picked::Closed => return Ok(Res::Closed),
                Picked::Progress => continue,
                Picked::Branch(alts) => return self.branch(b, alts),
                Picked::None => return saturated(&b),
            }
        }
    }

    fn branch(&mut self, b: Branch, alts: Vec<Alt>) -> Result<Res, Stop> {
        for alt in alts {
            self.spent += 1;
            if self.limits.budget.is_some_and(|n| self.spent > n) {
                return Err(Stop::Budget);
            }
            if self.interrupted() {
                return Err(Stop::Canceled);
            }
            let mut c = b.clone();
            match alt {
                Alt::Assert(f) => c.todo.push(f),
                Alt::Pin(k, v) => {
                    if !pin(&mut c, k, v) {
                        continue;
                    }
                }
            }
            if let Res::Open(f) = self.run(c)? {
                return Ok(Res::Open(f));
            }
        }
        Ok(Res::Closed)
    }

    /// Process one formula. `Some` ends the branch.
    fn step(&mut self, b: &mut Branch, f: Expr) -> Option<Res> {
        let s = subst(&f, &b.pins);
        match evaluate(&s) {
            Eval::Val(Value::Bool(true)) => return None,
            Eval::Val(Value::Bool(false)) => return Some(Res::Closed),
            Eval::Val(_) => {
                return Some(Res::Open(Failure::ExecutionError {
                    kind: ValueError::NonBooleanCondition,
                    expr: print_expr(&s),
                }))
            }
            Eval::Err(kind, expr) => return Some(Res::Open(Failure::ExecutionError { kind, expr })),
            Eval::Unknown => {}
        }
        for x in [&f, &s] {
            if b.seen.contains(&negate(x)) {
                return Some(Res::Closed);
            }
        }
        b.seen.insert(f);
        b.seen.insert(s.clone());
        let push = |b: &mut Branch, xs: Vec<Expr>| b.todo.extend(xs.into_iter().rev());
        match s {
            Expr::And(xs, _) => push(b, xs),
            Expr::Or(xs, _) => b.splits.push(Split::Or(xs)),
            Expr::Implies(a, c) => b.splits.push(Split::Or(vec![Expr::not(*a), *c])),
            Expr::If(c, t, e) => b.splits.push(Split::Or(vec![
                Expr::and(vec![(*c).clone(), *t]),
                Expr::and(vec![Expr::not(*c), *e]),
            ])),
            Expr::Quant(q, h, d, body) => match evaluate(&d) {
                Eval::Val(Value::Set(dom)) => {
                    let dom: Vec<Value> = dom.into_iter().collect();
                    let xs = quant_instances(&body, &dom);
                    match q {
                        Quant::Forall => push(b, xs),
                        Quant::Exists => b.splits.push(Split::Or(xs)),
                    }
                }
                Eval::Err(kind, expr) => return Some(Res::Open(Failure::ExecutionError { kind, expr })),
                _ => b.stuck.push(Expr::Quant(q, h, d, body)),
            },
            Expr::Bin(BinOp::Neq, x, y) => b.todo.push(Expr::not(Expr::Bin(BinOp::Eq, x, y))),
            Expr::Bin(BinOp::NotIn, x, y) => b.todo.push(Expr::not(Expr::Bin(BinOp::In, x, y))),
            Expr::Bin(BinOp::Eq, x, y) => {
                for (k, e) in [(&x, &y), (&y, &x)] {
                    if is_key(k) {
                        if let Eval::Val(v) = evaluate(e) {
                            return if pin(b, (**k).clone(), v) { None } else { Some(Res::Closed) };
                        }
                    }
                }
                match (*x, *y) {
                    (Expr::Tuple(xs), Expr::Tuple(ys)) if xs.len() == ys.len() => {
                        push(b, xs.into_iter().zip(ys).map(|(a, c)| Expr::eq(a, c)).collect())
                    }
                    (x, y) => b.stuck.push(Expr::eq(x, y)),
                }
            }
            Expr::Bin(BinOp::In, x, y) if is_key(&x) => match evaluate(&y) {
                Eval::Val(Value::Set(items)) => b.splits.push(Split::Member(*x, items.into_iter().collect())),
                Eval::Val(_) => {
                    return Some(Res::Open(Failure::ExecutionError {
                        kind: ValueError::NotASet,
                        expr: print_expr(&y),
                    }))
                }
                Eval::Err(kind, expr) => return Some(Res::Open(Failure::ExecutionError { kind, expr })),
                Eval::Unknown => b.stuck.push(Expr::member(*x, *y)),
            },
            Expr::Not(inner) => match *inner {
                Expr::Not(y) => b.todo.push(*y),
                Expr::And(xs, _) => b.splits.push(Split::Or(xs.into_iter().map(Expr::not).collect())),
                Expr::Or(xs, _) => push(b, xs.into_iter().map(Expr::not).collect()),
                Expr::Implies(x, y) => push(b, vec![*x, Expr::not(*y)]),
                Expr::If(c, t, e) => b.todo.push(Expr::ite(*c, Expr::not(*t), Expr::not(*e))),
                Expr::Quant(q, h, d, body) => {
                    let dual = match q {
                        Quant::Forall => Quant::Exists,
                        Quant::Exists => Quant::Forall,
                    };
                    b.todo.push(Expr::Quant(dual, h, d, Box::new(Expr::not(*body))))
                }
                Expr::Bin(BinOp::Neq, x, y) => b.todo.push(Expr::Bin(BinOp::Eq, x, y)),
                Expr::Bin(BinOp::NotIn, x, y) => b.todo.push(Expr::Bin(BinOp::In, x, y)),
                k if is_key(&k) => {
                    return if pin(b, k, Value::Bool(false)) { None } else { Some(Res::Closed) };
                }
                other => b.stuck.push(Expr::not(other)),
            },
            k if is_key(&k) => {
                return if pin(b, k, Value::Bool(true)) { None } else { Some(Res::Closed) };
            }
            other => b.stuck.push(other),
        }
        None
    }

    fn pick_split(&mut self, b: &mut Branch) -> Picked {
        let mut best: Option<(usize, usize)> = None;
        let mut i = 0;
        while i < b.splits.len() {
            let n = match &mut b.splits[i] {
                Split::Member(k, items) => {
                    let k2 = subst(k, &b.pins);
                    if !is_key(&k2) {
                        let set = Expr::Lit(Value::Set(items.iter().cloned().collect()));
                        b.todo.push(Expr::member(k2, set));
                        b.splits.swap_remove(i);
                        return Picked::Progress;
                    }
                    // Memberships are explored before disjunctions.
                    items.len()
                }
                Split::Or(xs) => {
                    let mut kept = vec![];
                    let mut done = false;
                    for x in xs.drain(..) {
                        let s = subst(&x, &b.pins);
                        match evaluate(&s) {
                            Eval::Val(Value::Bool(true)) => {
                                done = true;
                                break;
                            }
                            Eval::Val(Value::Bool(false)) => continue,
                            _ => {}
                        }
                        if b.seen.contains(&negate(&x)) || b.seen.contains(&negate(&s)) {
                            continue;
                        }
                        if b.seen.contains(&x) || b.seen.contains(&s) {
                            done = true;
                            break;
                        }
                        kept.push(x);
                    }
                    if done {
                        b.splits.swap_remove(i);
                        continue;
                    }
                    match kept.len() {
                        0 => return Picked::Closed,
                        1 => {
                            b.todo.push(kept.pop().unwrap());
                            b.splits.swap_remove(i);
                            return Picked::Progress;
                        }
                        n => {
                            *xs = kept;
                            usize::MAX / 2 + n
                        }
                    }
                }
            };
            if best.is_none_or(|(_, m)| n < m) {
                best = Some((i, n));
            }
            i += 1;
        }
        let Some((i, _)) = best else {
            return Picked::None;
        };
        let alts = match b.splits.swap_remove(i) {
            Split::Member(k, items) => items.into_iter().map(|v| Alt::Pin(k.clone(), v)).collect(),
            Split::Or(xs) => xs.into_iter().map(Alt::Assert).collect(),
        };
        Picked::Branch(alts)
    }
}

enum Picked {
    Closed,
    Progress,
    Branch(Vec<Alt>),
    None,
}

enum Alt {
    Assert(Expr),
    Pin(Expr, Value),
}

/// Record `k = v`; false if that contradicts an existing pin. Literals that
/// were waiting on more information are revisited.
fn pin(b: &mut Branch, k: Expr, v: Value) -> bool {
    if let Some(old) = b.pins.get(&k) {
        return old == &v;
    }
    if is_base_key(&k) {
        for (pk, pv) in &b.pins.0 {
            if let Expr::FuncApp(f, a) = pk {
                if **f == k {
                    let Expr::Lit(av) = &**a else { continue };
                    match value::apply(&v, av) {
                        Ok(x) if &x == pv => {}
                        _ => return false,
                    }
                }
            }
        }
    }
    b.pins.0.push((k, v));
    let stuck = std::mem::take(&mut b.stuck);
    b.todo.extend(stuck);
    true
}

fn saturated(b: &Branch) -> Result<Res, Stop> {
    for s in b.stuck.iter().rev() {
        if let Some(n) = first_opaque(s) {
            return Ok(Res::Open(Failure::OpaqueAtom(n)));
        }
    }
    for s in &b.stuck {
        if let Some(n) = first_unpinned(s) {
            return Err(Stop::Unbounded(n));
        }
    }
    Ok(Res::Open(Failure::CounterValuation(b.pins.clone().complete())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    fn unlimited() -> Limits<'static> {
        Limits::default()
    }

    #[test]
    fn trivially_true() {
        assert_eq!(prove(&[], &Expr::TRUE, unlimited()), GroundOutcome::Proved);
    }

    #[test]
    fn bounded_variable() {
        let h = Expr::member(x(), Expr::int_set(&[1, 2]));
        let g = Expr::bin(BinOp::Lt, x(), 3.into());
        assert_eq!(prove(std::slice::from_ref(&h), &g, unlimited()), GroundOutcome::Proved);
        let g = Expr::bin(BinOp::Lt, x(), 2.into());
        match prove(&[h], &g, unlimited()) {
            GroundOutcome::Failed(Failure::CounterValuation(v)) => assert_eq!(v.to_string(), "x = 2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn opaque_atoms_close_by_complement() {
        let p = Expr::apply("P", vec![]);
        assert_eq!(prove(std::slice::from_ref(&p), &p, unlimited()), GroundOutcome::Proved);
        let q = Expr::apply("Q", vec![]);
        assert_eq!(
            prove(&[p], &q, unlimited()),
            GroundOutcome::Failed(Failure::OpaqueAtom("Q".into()))
        );
    }

    #[test]
    fn unbounded_is_unsupported() {
        let g = Expr::eq(x(), Expr::var("y"));
        assert!(matches!(prove(&[], &g, unlimited()), GroundOutcome::Unsupported(_)));
    }

    #[test]
    fn function_application_pins() {
        // pc[0] = "cs" /\ pc \in [{0,1} -> {"a","cs"}] => pc[0] # "a"
        let pc = Expr::var("pc");
        let labels = Expr::SetEnum(vec![Expr::str("a"), Expr::str("cs")]);
        let h1 = Expr::eq(Expr::app(pc.clone(), 0.into()), Expr::str("cs"));
        let h2 = Expr::member(pc.clone(), Expr::FuncSet(Box::new(Expr::int_set(&[0, 1])), Box::new(labels)));
        let g = Expr::bin(BinOp::Neq, Expr::app(pc, 0.into()), Expr::str("a"));
        assert_eq!(prove(&[h1, h2], &g, unlimited()), GroundOutcome::Proved);
    }

    #[test]
    fn budget_is_enforced() {
        let h = Expr::member(x(), Expr::Bin(BinOp::Range, Box::new(1.into()), Box::new(100.into())));
        let g = Expr::bin(BinOp::Gt, x(), 0.into());
        let lim = Limits {
            budget: Some(10),
            ..Default::default()
        };
        assert!(matches!(prove(&[h], &g, lim), GroundOutcome::Unsupported(_)));
    }
}
