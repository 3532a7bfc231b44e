//! Finite values and the primitive operations both evaluators share.
//!
//! Sets and functions are kept in canonical (sorted) form, so structural
//! equality on [`Value`] coincides with extensional equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    Set(BTreeSet<Value>),
    /// Finite function: the key set is the domain.
    Func(BTreeMap<Value, Value>),
    Tuple(Vec<Value>),
}

/// Why a primitive operation has no defined result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("incomparable equality")]
    IncomparableEquality,
    #[error("function applied outside its domain")]
    ApplyOutsideDomain,
    #[error("non-boolean condition")]
    NonBooleanCondition,
    #[error("applied value is not a function")]
    NonFunctionApplied,
    #[error("arithmetic on non-integer")]
    ArithmeticOnNonInteger,
    #[error("operand is not a set")]
    NotASet,
    #[error("domain is not a finite set")]
    UnboundedDomain,
}

impl ValueError {
    /// Stable kebab-case name used in reports.
    pub fn code(self) -> &'static str {
        match self {
            ValueError::IncomparableEquality => "incomparable-equality",
            ValueError::ApplyOutsideDomain => "apply-outside-domain",
            ValueError::NonBooleanCondition => "non-boolean-condition",
            ValueError::NonFunctionApplied => "non-function-applied",
            ValueError::ArithmeticOnNonInteger => "arithmetic-on-non-integer",
            ValueError::NotASet => "not-a-set",
            ValueError::UnboundedDomain => "unbounded-domain",
        }
    }
}

pub type VResult<T> = Result<T, ValueError>;

impl Value {
    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn string(s: &str) -> Value {
        Value::Str(s.to_string())
    }

    /// The set `BOOLEAN`.
    pub fn boolean_set() -> Value {
        Value::set([Value::Bool(false), Value::Bool(true)])
    }

    pub fn as_bool(&self) -> VResult<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            _ => Err(ValueError::NonBooleanCondition),
        }
    }

    pub fn as_int(&self) -> VResult<i64> {
        match self {
            Value::Int(n) => Ok(*n),
            _ => Err(ValueError::ArithmeticOnNonInteger),
        }
    }

    pub fn as_set(&self) -> VResult<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Ok(s),
            _ => Err(ValueError::NotASet),
        }
    }

    fn kind(&self) -> Kind {
        match self {
            Value::Bool(_) => Kind::Bool,
            Value::Int(_) => Kind::Int,
            Value::Str(_) => Kind::Str,
            Value::Set(_) => Kind::Set,
            Value::Func(_) | Value::Tuple(_) => Kind::Func,
        }
    }

    /// Tuples are functions over `1..n`.
    fn as_graph(&self) -> Option<BTreeMap<Value, Value>> {
        match self {
            Value::Func(g) => Some(g.clone()),
            Value::Tuple(items) => Some(
                items
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (Value::Int(i as i64 + 1), v.clone()))
                    .collect(),
            ),
            _ => None,
        }
    }
}

#[derive(PartialEq, Eq)]
enum Kind {
    Bool,
    Int,
    Str,
    Set,
    Func,
}

/// Equality with execution-error semantics: values of different kinds
/// cannot be compared.
pub fn equal(a: &Value, b: &Value) -> VResult<bool> {
    if a.kind() != b.kind() {
        return Err(ValueError::IncomparableEquality);
    }
    match (a, b) {
        (Value::Tuple(_), Value::Func(_)) | (Value::Func(_), Value::Tuple(_)) => {
            Ok(a.as_graph() == b.as_graph())
        }
        _ => Ok(a == b),
    }
}

pub fn member(x: &Value, s: &Value) -> VResult<bool> {
    let set = s.as_set()?;
    if set.contains(x) {
        return Ok(true);
    }
    for e in set {
        if equal(x, e)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `f ∈ [dom -> range]` without materialising the function set.
pub fn member_func_set(f: &Value, dom: &Value, range: &Value) -> VResult<bool> {
    let dom = dom.as_set()?;
    range.as_set()?;
    let Some(graph) = f.as_graph() else {
        return Err(ValueError::NonFunctionApplied);
    };
    if graph.len() != dom.len() || !dom.iter().all(|d| graph.contains_key(d)) {
        return Ok(false);
    }
    for v in graph.values() {
        if !member(v, range)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn apply(f: &Value, arg: &Value) -> VResult<Value> {
    match f {
        Value::Func(g) => g.get(arg).cloned().ok_or(ValueError::ApplyOutsideDomain),
        Value::Tuple(items) => match arg {
            Value::Int(i) if *i >= 1 && (*i as usize) <= items.len() => {
                Ok(items[*i as usize - 1].clone())
            }
            _ => Err(ValueError::ApplyOutsideDomain),
        },
        _ => Err(ValueError::NonFunctionApplied),
    }
}

pub fn except(f: &Value, arg: &Value, new: Value) -> VResult<Value> {
    match f {
        Value::Func(g) => {
            if !g.contains_key(arg) {
                return Err(ValueError::ApplyOutsideDomain);
            }
            let mut g = g.clone();
            g.insert(arg.clone(), new);
            Ok(Value::Func(g))
        }
        Value::Tuple(items) => match arg {
            Value::Int(i) if *i >= 1 && (*i as usize) <= items.len() => {
                let mut items = items.clone();
                items[*i as usize - 1] = new;
                Ok(Value::Tuple(items))
            }
            _ => Err(ValueError::ApplyOutsideDomain),
        },
        _ => Err(ValueError::NonFunctionApplied),
    }
}

pub fn domain(f: &Value) -> VResult<Value> {
    match f.as_graph() {
        Some(g) => Ok(Value::Set(g.into_keys().collect())),
        None => Err(ValueError::NonFunctionApplied),
    }
}

/// Every function from `dom` to `range`.
pub fn func_set(dom: &Value, range: &Value) -> VResult<Value> {
    let dom: Vec<&Value> = dom.as_set()?.iter().collect();
    let range: Vec<&Value> = range.as_set()?.iter().collect();
    let mut out = BTreeSet::new();
    if range.is_empty() && !dom.is_empty() {
        return Ok(Value::Set(out));
    }
    let mut idx = vec![0usize; dom.len()];
    loop {
        let g: BTreeMap<Value, Value> = dom
            .iter()
            .zip(&idx)
            .map(|(d, &i)| ((*d).clone(), range[i].clone()))
            .collect();
        out.insert(Value::Func(g));
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(Value::Set(out));
            }
            idx[k] += 1;
            if idx[k] < range.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Cardinality of `[dom -> range]` without building it.
pub fn func_set_size(dom: &Value, range: &Value) -> VResult<u128> {
    let d = dom.as_set()?.len() as u32;
    let r = range.as_set()?.len() as u128;
    Ok(r.checked_pow(d).unwrap_or(u128::MAX))
}

pub fn range(lo: &Value, hi: &Value) -> VResult<Value> {
    let (lo, hi) = (lo.as_int()?, hi.as_int()?);
    Ok(Value::Set((lo..=hi).map(Value::Int).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arith {
    Add,
    Sub,
    Mul,
}

pub fn arith(op: Arith, a: &Value, b: &Value) -> VResult<Value> {
    let (a, b) = (a.as_int()?, b.as_int()?);
    let r = match op {
        Arith::Add => a.checked_add(b),
        Arith::Sub => a.checked_sub(b),
        Arith::Mul => a.checked_mul(b),
    };
    r.map(Value::Int).ok_or(ValueError::ArithmeticOnNonInteger)
}

pub fn set_union(a: &Value, b: &Value) -> VResult<Value> {
    Ok(Value::Set(a.as_set()?.union(b.as_set()?).cloned().collect()))
}

pub fn set_inter(a: &Value, b: &Value) -> VResult<Value> {
    Ok(Value::Set(a.as_set()?.intersection(b.as_set()?).cloned().collect()))
}

pub fn set_minus(a: &Value, b: &Value) -> VResult<Value> {
    Ok(Value::Set(a.as_set()?.difference(b.as_set()?).cloned().collect()))
}

pub fn subseteq(a: &Value, b: &Value) -> VResult<bool> {
    let b_val = Value::Set(b.as_set()?.clone());
    for x in a.as_set()? {
        if !member(x, &b_val)? {
            return Ok(false);
        }
    }
    Ok(true)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "TRUE"),
            Value::Bool(false) => write!(f, "FALSE"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "\"{}\"", escape(s)),
            Value::Set(items) => {
                write!(f, "{{")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Value::Func(g) => {
                if g.is_empty() {
                    return write!(f, "<<>>");
                }
                write!(f, "(")?;
                for (i, (k, v)) in g.iter().enumerate() {
                    if i > 0 {
                        write!(f, " @@ ")?;
                    }
                    write!(f, "{k} :> {v}")?;
                }
                write!(f, ")")
            }
            Value::Tuple(items) => {
                write!(f, "<<")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ">>")
            }
        }
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n")
        .replace('\t', "\\t")
}
