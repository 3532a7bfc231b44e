//! Expression terms in locally-nameless form.
//!
//! Free symbols are names (`Var`, `Const`, `Apply`); bound variables are de
//! Bruijn indices carrying their source name only as a printing hint.
//! Because hints and bullet layout compare equal unconditionally, the
//! derived `PartialEq` is alpha-equivalence.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use super::value::Value;

/// Bound-variable name kept only for printing. Ignored by `==` and hashing.
#[derive(Clone, Debug, Default)]
pub struct Hint(pub String);

impl PartialEq for Hint {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Hint {}
impl Hash for Hint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl From<&str> for Hint {
    fn from(s: &str) -> Self {
        Hint(s.to_string())
    }
}

/// Whether a conjunction/disjunction was written as an aligned bullet list.
/// Ignored by `==` and hashing.
#[derive(Clone, Copy, Debug, Default)]
pub struct Layout {
    pub bulleted: bool,
}

impl Layout {
    pub const INLINE: Layout = Layout { bulleted: false };
    pub const BULLETS: Layout = Layout { bulleted: true };
}

impl PartialEq for Layout {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Layout {}
impl Hash for Layout {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Source line of a parsed item (1-based, 0 when synthetic). Ignored by `==`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SourcePos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for SourcePos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for SourcePos {}
impl Hash for SourcePos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Eq,
    Neq,
    In,
    NotIn,
    Lt,
    Le,
    Gt,
    Ge,
    Subseteq,
    Range,
    Cup,
    Cap,
    SetMinus,
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quant {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Value),
    /// State variable.
    Var(String),
    /// Constant introduced by `NEW` or `PICK`.
    Const(String),
    Bound(u32, Hint),
    /// Application of a user definition (arity may be zero).
    Apply(String, Vec<Expr>),
    /// `Name!(args)`: body of the quantifier that forms the definition.
    Bang(String, Vec<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>, Layout),
    Or(Vec<Expr>, Layout),
    Implies(Box<Expr>, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    SetEnum(Vec<Expr>),
    Tuple(Vec<Expr>),
    /// `[x \in dom |-> body]`; `body` is under one binder.
    FuncLit(Hint, Box<Expr>, Box<Expr>),
    FuncApp(Box<Expr>, Box<Expr>),
    Except(Box<Expr>, Vec<(Expr, Expr)>),
    FuncSet(Box<Expr>, Box<Expr>),
    Domain(Box<Expr>),
    /// Bounded quantifier; `body` is under one binder.
    Quant(Quant, Hint, Box<Expr>, Box<Expr>),
    Prime(Box<Expr>),
    Unchanged(Box<Expr>),
    /// `[A]_v`
    BoxAction(Box<Expr>, Box<Expr>),
    Always(Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Constant,
    State,
    Action,
    Temporal,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Constant => "constant",
            Level::State => "state",
            Level::Action => "action",
            Level::Temporal => "temporal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    /// Parameters are the outermost binders: parameter `i` of `n` is
    /// `Bound(n - 1 - i)` at the top of the body.
    pub body: Expr,
    pub level: Level,
    pub pos: SourcePos,
}

/// Lookup of definitions by name.
pub trait DefEnv {
    fn definition(&self, name: &str) -> Option<&Definition>;
}

impl DefEnv for HashMap<String, Definition> {
    fn definition(&self, name: &str) -> Option<&Definition> {
        self.get(name)
    }
}

impl DefEnv for [Definition] {
    fn definition(&self, name: &str) -> Option<&Definition> {
        self.iter().find(|d| d.name == name)
    }
}

impl DefEnv for Vec<Definition> {
    fn definition(&self, name: &str) -> Option<&Definition> {
        self.as_slice().definition(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("prime applied to a temporal formula")]
    PrimeOfTemporal,
    #[error("nested prime")]
    DoublePrime,
    #[error("unknown definition `{0}`")]
    UnknownDefinition(String),
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` is not defined by a single bounded quantifier")]
    NotAQuantifiedDefinition(String),
}

pub type KResult<T> = Result<T, KernelError>;

impl Definition {
    pub fn new(name: &str, params: Vec<String>, body: Expr, env: &dyn DefEnv) -> Definition {
        let level = body.level(env);
        Definition {
            name: name.to_string(),
            params,
            body,
            level,
            pos: SourcePos::default(),
        }
    }

    pub fn with_pos(mut self, pos: SourcePos) -> Self {
        self.pos = pos;
        self
    }
}

impl From<bool> for Expr {
    fn from(b: bool) -> Self {
        Expr::Lit(Value::Bool(b))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::Lit(Value::Int(n))
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Self {
        Expr::Lit(v)
    }
}

// Small constructors used throughout the crate.
impl Expr {
    pub const TRUE: Expr = Expr::Lit(Value::Bool(true));
    pub const FALSE: Expr = Expr::Lit(Value::Bool(false));

    pub fn str(s: &str) -> Expr {
        Expr::Lit(Value::Str(s.to_string()))
    }
    pub fn var(s: &str) -> Expr {
        Expr::Var(s.to_string())
    }
    pub fn constant(s: &str) -> Expr {
        Expr::Const(s.to_string())
    }
    pub fn bound(i: u32, hint: &str) -> Expr {
        Expr::Bound(i, hint.into())
    }
    pub fn apply(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Apply(name.to_string(), args)
    }
    pub fn op(name: &str) -> Expr {
        Expr::Apply(name.to_string(), vec![])
    }
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }
    pub fn and(items: Vec<Expr>) -> Expr {
        Expr::And(items, Layout::INLINE)
    }
    pub fn or(items: Vec<Expr>) -> Expr {
        Expr::Or(items, Layout::INLINE)
    }
    pub fn implies(a: Expr, b: Expr) -> Expr {
        Expr::Implies(Box::new(a), Box::new(b))
    }
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }
    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::Eq, a, b)
    }
    pub fn member(a: Expr, b: Expr) -> Expr {
        Expr::bin(BinOp::In, a, b)
    }
    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }
    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::FuncApp(Box::new(f), Box::new(a))
    }
    pub fn prime(e: Expr) -> Expr {
        Expr::Prime(Box::new(e))
    }
    pub fn quant(q: Quant, hint: &str, dom: Expr, body: Expr) -> Expr {
        Expr::Quant(q, hint.into(), Box::new(dom), Box::new(body))
    }
    pub fn forall(hint: &str, dom: Expr, body: Expr) -> Expr {
        Expr::quant(Quant::Forall, hint, dom, body)
    }
    pub fn exists(hint: &str, dom: Expr, body: Expr) -> Expr {
        Expr::quant(Quant::Exists, hint, dom, body)
    }
    pub fn func_lit(hint: &str, dom: Expr, body: Expr) -> Expr {
        Expr::FuncLit(hint.into(), Box::new(dom), Box::new(body))
    }
    pub fn int_set(items: &[i64]) -> Expr {
        Expr::SetEnum(items.iter().map(|&i| Expr::from(i)).collect())
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Lit(Value::Bool(true)))
    }
}

impl Expr {
    /// Rebuild the tree bottom-up. `f` sees each node with the number of
    /// binders above it and may return a replacement that is not descended.
    pub fn map_with_depth(&self, depth: u32, f: &mut dyn FnMut(&Expr, u32) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self, depth) {
            return r;
        }
        let m = |e: &Expr, f: &mut dyn FnMut(&Expr, u32) -> Option<Expr>| e.map_with_depth(depth, f);
        let mb = |e: &Expr, f: &mut dyn FnMut(&Expr, u32) -> Option<Expr>| {
            Box::new(e.map_with_depth(depth, f))
        };
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Const(_) | Expr::Bound(..) => self.clone(),
            Expr::Apply(n, args) => Expr::Apply(n.clone(), args.iter().map(|a| m(a, f)).collect()),
            Expr::Bang(n, args) => Expr::Bang(n.clone(), args.iter().map(|a| m(a, f)).collect()),
            Expr::Not(a) => Expr::Not(mb(a, f)),
            Expr::And(items, l) => Expr::And(items.iter().map(|a| m(a, f)).collect(), *l),
            Expr::Or(items, l) => Expr::Or(items.iter().map(|a| m(a, f)).collect(), *l),
            Expr::Implies(a, b) => Expr::Implies(mb(a, f), mb(b, f)),
            Expr::Bin(op, a, b) => Expr::Bin(*op, mb(a, f), mb(b, f)),
            Expr::If(c, t, e) => Expr::If(mb(c, f), mb(t, f), mb(e, f)),
            Expr::SetEnum(items) => Expr::SetEnum(items.iter().map(|a| m(a, f)).collect()),
            Expr::Tuple(items) => Expr::Tuple(items.iter().map(|a| m(a, f)).collect()),
            Expr::FuncLit(h, d, b) => Expr::FuncLit(
                h.clone(),
                mb(d, f),
                Box::new(b.map_with_depth(depth + 1, f)),
            ),
            Expr::FuncApp(a, b) => Expr::FuncApp(mb(a, f), mb(b, f)),
            Expr::Except(base, ups) => Expr::Except(
                mb(base, f),
                ups.iter().map(|(k, v)| (m(k, f), m(v, f))).collect(),
            ),
            Expr::FuncSet(a, b) => Expr::FuncSet(mb(a, f), mb(b, f)),
            Expr::Domain(a) => Expr::Domain(mb(a, f)),
            Expr::Quant(q, h, d, b) => Expr::Quant(
                *q,
                h.clone(),
                mb(d, f),
                Box::new(b.map_with_depth(depth + 1, f)),
            ),
            Expr::Prime(a) => Expr::Prime(mb(a, f)),
            Expr::Unchanged(a) => Expr::Unchanged(mb(a, f)),
            Expr::BoxAction(a, v) => Expr::BoxAction(mb(a, f), mb(v, f)),
            Expr::Always(a) => Expr::Always(mb(a, f)),
        }
    }

    /// Immediate children, each with the number of binders it sits under
    /// relative to `self`.
    pub fn children(&self) -> Vec<(&Expr, u32)> {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Const(_) | Expr::Bound(..) => vec![],
            Expr::Apply(_, args) | Expr::Bang(_, args) => args.iter().map(|a| (a, 0)).collect(),
            Expr::And(items, _) | Expr::Or(items, _) | Expr::SetEnum(items) | Expr::Tuple(items) => {
                items.iter().map(|a| (a, 0)).collect()
            }
            Expr::Not(a)
            | Expr::Domain(a)
            | Expr::Prime(a)
            | Expr::Unchanged(a)
            | Expr::Always(a) => vec![(a, 0)],
            Expr::Implies(a, b)
            | Expr::Bin(_, a, b)
            | Expr::FuncApp(a, b)
            | Expr::FuncSet(a, b)
            | Expr::BoxAction(a, b) => vec![(a, 0), (b, 0)],
            Expr::If(c, t, e) => vec![(c, 0), (t, 0), (e, 0)],
            Expr::FuncLit(_, d, b) | Expr::Quant(_, _, d, b) => vec![(d, 0), (b, 1)],
            Expr::Except(base, ups) => {
                let mut v = vec![(&**base, 0)];
                for (k, val) in ups {
                    v.push((k, 0));
                    v.push((val, 0));
                }
                v
            }
        }
    }

    /// Pre-order visit with binder depth.
    pub fn visit(&self, depth: u32, f: &mut dyn FnMut(&Expr, u32)) {
        f(self, depth);
        for (c, inc) in self.children() {
            c.visit(depth + inc, f);
        }
    }

    /// Add `d` to every bound index at or above `cutoff`.
    pub fn shift(&self, d: i64, cutoff: u32) -> Expr {
        if d == 0 {
            return self.clone();
        }
        self.map_with_depth(cutoff, &mut |e, depth| match e {
            Expr::Bound(k, h) if *k >= depth => {
                Some(Expr::Bound((*k as i64 + d) as u32, h.clone()))
            }
            _ => None,
        })
    }

    /// Substitute the `args.len()` outermost binders of `self`: with `n`
    /// args, `Bound(n - 1 - i)` at the top becomes `args[i]`. Free indices
    /// beyond those binders are lowered by `n`.
    pub fn instantiate(&self, args: &[Expr]) -> Expr {
        let n = args.len() as u32;
        if n == 0 {
            return self.clone();
        }
        self.map_with_depth(0, &mut |e, depth| match e {
            Expr::Bound(k, h) if *k >= depth => {
                let idx = k - depth;
                if idx < n {
                    Some(args[(n - 1 - idx) as usize].shift(depth as i64, 0))
                } else {
                    Some(Expr::Bound(k - n, h.clone()))
                }
            }
            _ => None,
        })
    }

    /// Turn free occurrences of `Const(name)` into a new outermost binder,
    /// so the result can be placed as the body of a quantifier.
    pub fn abstract_const(&self, name: &str) -> Expr {
        self.map_with_depth(0, &mut |e, depth| match e {
            Expr::Const(c) if c == name => Some(Expr::Bound(depth, Hint(name.to_string()))),
            Expr::Bound(k, h) if *k >= depth => Some(Expr::Bound(k + 1, h.clone())),
            _ => None,
        })
    }

    /// True if no bound index escapes the term.
    pub fn is_closed(&self) -> bool {
        let mut ok = true;
        self.visit(0, &mut |e, depth| {
            if let Expr::Bound(k, _) = e {
                if *k >= depth {
                    ok = false;
                }
            }
        });
        ok
    }

    pub fn level(&self, env: &dyn DefEnv) -> Level {
        match self {
            Expr::Lit(_) | Expr::Const(_) | Expr::Bound(..) => Level::Constant,
            Expr::Var(_) => Level::State,
            Expr::Prime(_) | Expr::Unchanged(_) | Expr::BoxAction(..) => {
                let inner = self.children().iter().map(|(c, _)| c.level(env)).max();
                inner.unwrap_or(Level::Action).max(Level::Action)
            }
            Expr::Always(_) => Level::Temporal,
            Expr::Apply(n, args) | Expr::Bang(n, args) => {
                let own = env.definition(n).map(|d| d.level).unwrap_or(Level::State);
                args.iter().map(|a| a.level(env)).fold(own, Level::max)
            }
            _ => self
                .children()
                .iter()
                .map(|(c, _)| c.level(env))
                .fold(Level::Constant, Level::max),
        }
    }

    pub fn contains_always(&self) -> bool {
        let mut found = false;
        self.visit(0, &mut |e, _| {
            if matches!(e, Expr::Always(_)) {
                found = true;
            }
        });
        found
    }

    /// Declared variables and definition names occurring free, in
    /// first-occurrence order. Constants are included; bound variables are not.
    pub fn free_symbols(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.visit(0, &mut |e, _| {
            let name = match e {
                Expr::Var(n) | Expr::Const(n) | Expr::Apply(n, _) | Expr::Bang(n, _) => n,
                _ => return,
            };
            if seen.insert(name.clone()) {
                out.push(name.clone());
            }
        });
        out
    }
}

/// Push primes inward until they sit directly on state variables (or on
/// unexpanded non-constant definitions, which cannot be opened).
pub fn distribute_prime(e: &Expr, env: &dyn DefEnv) -> KResult<Expr> {
    let mut err = None;
    let out = e.map_with_depth(0, &mut |node, _| match node {
        Expr::Prime(inner) => match prime_inside(inner, env) {
            Ok(r) => Some(r),
            Err(x) => {
                err.get_or_insert(x);
                Some(node.clone())
            }
        },
        _ => None,
    });
    match err {
        Some(x) => Err(x),
        None => Ok(out),
    }
}

fn prime_inside(e: &Expr, env: &dyn DefEnv) -> KResult<Expr> {
    match e {
        Expr::Lit(_) | Expr::Const(_) | Expr::Bound(..) => Ok(e.clone()),
        Expr::Var(_) => Ok(Expr::prime(e.clone())),
        Expr::Always(_) => Err(KernelError::PrimeOfTemporal),
        Expr::Prime(_) | Expr::Unchanged(_) | Expr::BoxAction(..) => {
            if e.contains_always() {
                Err(KernelError::PrimeOfTemporal)
            } else {
                Err(KernelError::DoublePrime)
            }
        }
        Expr::Apply(n, args) | Expr::Bang(n, args) => {
            let def_level = env.definition(n).map(|d| d.level);
            match def_level {
                Some(Level::Temporal) => Err(KernelError::PrimeOfTemporal),
                Some(Level::Action) => Err(KernelError::DoublePrime),
                Some(Level::Constant) if matches!(e, Expr::Apply(..)) => {
                    let args = args
                        .iter()
                        .map(|a| prime_inside(a, env))
                        .collect::<KResult<Vec<_>>>()?;
                    Ok(Expr::Apply(n.clone(), args))
                }
                _ => {
                    if e.level(env) == Level::Constant {
                        return Ok(e.clone());
                    }
                    for a in args {
                        if a.level(env) > Level::State {
                            return Err(if a.contains_always() {
                                KernelError::PrimeOfTemporal
                            } else {
                                KernelError::DoublePrime
                            });
                        }
                    }
                    Ok(Expr::prime(e.clone()))
                }
            }
        }
        _ => {
            let mut err = None;
            // Children of an arbitrary node: prime each immediate child.
            let out = rebuild_children(e, &mut |c| match prime_inside(c, env) {
                Ok(r) => r,
                Err(x) => {
                    err.get_or_insert(x);
                    c.clone()
                }
            });
            match err {
                Some(x) => Err(x),
                None => Ok(out),
            }
        }
    }
}

/// Apply `f` to each immediate child of `e` (binder bodies included, with
/// no index adjustment).
pub fn rebuild_children(e: &Expr, f: &mut dyn FnMut(&Expr) -> Expr) -> Expr {
    let mut first = true;
    e.map_with_depth(0, &mut |node, _| {
        if first {
            first = false;
            None
        } else {
            Some(f(node))
        }
    })
}

/// Replace applications of the listed definitions by their bodies,
/// repeatedly, leaving every other name opaque.
pub fn expand_definitions(e: &Expr, names: &[String], env: &dyn DefEnv) -> KResult<Expr> {
    for n in names {
        if env.definition(n).is_none() {
            return Err(KernelError::UnknownDefinition(n.clone()));
        }
    }
    let set: HashSet<&str> = names.iter().map(String::as_str).collect();
    expand_rec(e, &set, env)
}

fn expand_rec(e: &Expr, names: &HashSet<&str>, env: &dyn DefEnv) -> KResult<Expr> {
    let mut err = None;
    let out = e.map_with_depth(0, &mut |node, _| match node {
        Expr::Apply(n, args) if names.contains(n.as_str()) => {
            let r = (|| {
                let def = env
                    .definition(n)
                    .ok_or_else(|| KernelError::UnknownDefinition(n.clone()))?;
                if def.params.len() != args.len() {
                    return Err(KernelError::ArityMismatch {
                        name: n.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .map(|a| expand_rec(a, names, env))
                    .collect::<KResult<Vec<_>>>()?;
                expand_rec(&def.body.instantiate(&args), names, env)
            })();
            Some(r.unwrap_or_else(|x| {
                err.get_or_insert(x);
                node.clone()
            }))
        }
        Expr::Bang(n, args) if names.contains(n.as_str()) => {
            let r = (|| {
                let def = env
                    .definition(n)
                    .ok_or_else(|| KernelError::UnknownDefinition(n.clone()))?;
                let args = args
                    .iter()
                    .map(|a| expand_rec(a, names, env))
                    .collect::<KResult<Vec<_>>>()?;
                expand_rec(&resolve_bang(def, &args)?, names, env)
            })();
            Some(r.unwrap_or_else(|x| {
                err.get_or_insert(x);
                node.clone()
            }))
        }
        _ => None,
    });
    match err {
        Some(x) => Err(x),
        None => Ok(out),
    }
}

/// `Name!(args)`: the body of the bounded quantifier that makes up the
/// definition, with the definition's parameters and then the quantified
/// variable replaced by `args`.
pub fn resolve_bang(def: &Definition, args: &[Expr]) -> KResult<Expr> {
    let Expr::Quant(_, _, _, body) = &def.body else {
        return Err(KernelError::NotAQuantifiedDefinition(def.name.clone()));
    };
    if args.len() != def.params.len() + 1 {
        return Err(KernelError::ArityMismatch {
            name: format!("{}!", def.name),
            expected: def.params.len() + 1,
            found: args.len(),
        });
    }
    Ok(body.instantiate(args))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_with(defs: Vec<Definition>) -> HashMap<String, Definition> {
        defs.into_iter().map(|d| (d.name.clone(), d)).collect()
    }

    fn not_def() -> Definition {
        // Not(i) == IF i = 0 THEN 1 ELSE 0
        let body = Expr::ite(Expr::eq(Expr::bound(0, "i"), 0.into()), 1.into(), 0.into());
        Definition::new("Not", vec!["i".into()], body, &HashMap::new())
    }

    #[test]
    fn prime_distributes_over_addition() {
        let env: HashMap<String, Definition> = HashMap::new();
        let e = Expr::prime(Expr::bin(BinOp::Add, Expr::var("a"), Expr::var("b")));
        let want = Expr::bin(BinOp::Add, Expr::prime(Expr::var("a")), Expr::prime(Expr::var("b")));
        assert_eq!(distribute_prime(&e, &env).unwrap(), want);
        let t = Expr::prime(Expr::var("turn"));
        assert_eq!(distribute_prime(&t, &env).unwrap(), t);
    }

    #[test]
    fn prime_leaves_constants_and_constant_operators() {
        let env = env_with(vec![not_def()]);
        // (flag[Not(c)])' with c a constant
        let e = Expr::prime(Expr::app(
            Expr::var("flag"),
            Expr::apply("Not", vec![Expr::constant("c")]),
        ));
        let want = Expr::app(
            Expr::prime(Expr::var("flag")),
            Expr::apply("Not", vec![Expr::constant("c")]),
        );
        assert_eq!(distribute_prime(&e, &env).unwrap(), want);
    }

    #[test]
    fn prime_errors() {
        let env: HashMap<String, Definition> = HashMap::new();
        let dbl = Expr::prime(Expr::prime(Expr::var("x")));
        assert_eq!(distribute_prime(&dbl, &env), Err(KernelError::DoublePrime));
        let tmp = Expr::prime(Expr::Always(Box::new(Expr::var("x"))));
        assert_eq!(distribute_prime(&tmp, &env), Err(KernelError::PrimeOfTemporal));
    }

    #[test]
    fn opaque_state_definition_keeps_its_prime() {
        let ty = Definition::new("TypeOK", vec![], Expr::member(Expr::var("x"), Expr::int_set(&[0])), &HashMap::new());
        assert_eq!(ty.level, Level::State);
        let env = env_with(vec![ty]);
        let e = Expr::prime(Expr::and(vec![Expr::op("TypeOK"), Expr::op("I")]));
        let want = Expr::and(vec![Expr::prime(Expr::op("TypeOK")), Expr::prime(Expr::op("I"))]);
        assert_eq!(distribute_prime(&e, &env).unwrap(), want);
    }

    #[test]
    fn expand_not_zero() {
        let env = env_with(vec![not_def()]);
        let e = Expr::apply("Not", vec![0.into()]);
        let got = expand_definitions(&e, &["Not".into()], &env).unwrap();
        assert_eq!(got, Expr::ite(Expr::eq(0.into(), 0.into()), 1.into(), 0.into()));
        assert_eq!(expand_definitions(&e, &[], &env).unwrap(), e);
    }

    #[test]
    fn expand_under_binder_shifts_arguments() {
        let env = env_with(vec![not_def()]);
        // \A x \in S: Not(x)
        let e = Expr::forall("x", Expr::op("S"), Expr::apply("Not", vec![Expr::bound(0, "x")]));
        let got = expand_definitions(&e, &["Not".into()], &env).unwrap();
        let want = Expr::forall(
            "x",
            Expr::op("S"),
            Expr::ite(Expr::eq(Expr::bound(0, "x"), 0.into()), 1.into(), 0.into()),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn expand_errors() {
        let env = env_with(vec![not_def()]);
        assert_eq!(
            expand_definitions(&Expr::op("Nope"), &["Nope".into()], &env),
            Err(KernelError::UnknownDefinition("Nope".into()))
        );
        assert!(matches!(
            expand_definitions(&Expr::op("Not"), &["Not".into()], &env),
            Err(KernelError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn bang_substitutes_quantified_variable() {
        let env: HashMap<String, Definition> = HashMap::new();
        // Q == \A x \in S: x = x
        let q = Definition::new(
            "Q",
            vec![],
            Expr::forall("x", Expr::var("S"), Expr::eq(Expr::bound(0, "x"), Expr::bound(0, "x"))),
            &env,
        );
        let got = resolve_bang(&q, &[Expr::constant("y")]).unwrap();
        assert_eq!(got, Expr::eq(Expr::constant("y"), Expr::constant("y")));
        assert_eq!(
            resolve_bang(&not_def(), &[0.into(), 1.into()]),
            Err(KernelError::NotAQuantifiedDefinition("Not".into()))
        );
    }

    #[test]
    fn free_symbols_skip_bound() {
        let e = Expr::forall("i", Expr::int_set(&[0, 1]), Expr::app(Expr::var("flag"), Expr::bound(0, "i")));
        assert_eq!(e.free_symbols(), vec!["flag".to_string()]);
        let e = Expr::and(vec![Expr::op("Init"), Expr::eq(Expr::var("turn"), 0.into())]);
        assert_eq!(e.free_symbols(), vec!["Init".to_string(), "turn".to_string()]);
    }

    #[test]
    fn abstract_then_instantiate_is_identity() {
        let e = Expr::and(vec![
            Expr::eq(Expr::constant("j"), 1.into()),
            Expr::forall("k", Expr::var("S"), Expr::eq(Expr::bound(0, "k"), Expr::constant("j"))),
        ]);
        let abs = e.abstract_const("j");
        assert!(!abs.is_closed());
        assert_eq!(abs.instantiate(&[Expr::constant("j")]), e);
    }
}
