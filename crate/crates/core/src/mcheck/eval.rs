//! Expression evaluation with execution-error semantics.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::kernel::value::{self, Arith};
use crate::kernel::{resolve_bang, BinOp, DefEnv, Expr, KernelError, Quant, SourcePos, Value, ValueError};
use crate::syntax::printer::print_expr;

/// A (possibly partial) assignment of values to state variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(pub BTreeMap<String, Value>);

impl State {
    pub fn get(&self, v: &str) -> Option<&Value> {
        self.0.get(v)
    }

    pub fn with(mut self, v: &str, val: Value) -> State {
        self.0.insert(v.to_string(), val);
        self
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "/\\ {k} = {v}")?;
        }
        Ok(())
    }
}

/// An evaluation with no defined result, with the states it happened in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionError {
    pub kind: ValueError,
    /// The offending subexpression, printed with bound variables replaced
    /// by their values.
    pub expr: String,
    /// The failing operation applied to its operand values, when it has two.
    pub evaluated: Option<String>,
    /// Innermost definition being evaluated and where it is declared.
    pub def: Option<(String, SourcePos)>,
    pub state: State,
    pub next: Option<State>,
}

impl fmt::Display for ExecutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "execution error ({})", self.kind.code())?;
        match &self.evaluated {
            Some(v) if *v != self.expr => write!(f, ": {v} in `{}`", self.expr)?,
            _ => write!(f, " in `{}`", self.expr)?,
        }
        if let Some((d, pos)) = &self.def {
            write!(f, " within {d} (line {})", pos.line)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{0}")]
    Exec(Box<ExecutionError>),
    /// A variable with no value yet; the enumerators use this to defer.
    #[error("variable `{0}` has no value")]
    Unassigned(String),
    #[error("unknown definition `{0}`")]
    UnknownDefinition(String),
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("constant `{0}` has no value")]
    UnboundConstant(String),
    #[error("temporal formula cannot be evaluated on states")]
    Temporal,
    #[error("nested prime")]
    DoublePrime,
    #[error("primed expression evaluated without a next state")]
    MissingNextState,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type EResult<T> = Result<T, EvalError>;

/// Evaluation context: current state, optional next state, values for
/// constants, and the bound-variable stack (innermost last).
#[derive(Clone)]
pub struct Ctx<'a> {
    pub env: &'a dyn DefEnv,
    pub cur: &'a State,
    pub next: Option<&'a State>,
    pub consts: &'a BTreeMap<String, Value>,
    pub frame: Vec<Value>,
    primed: bool,
    def: Option<(String, SourcePos)>,
}

impl<'a> Ctx<'a> {
    pub fn new(env: &'a dyn DefEnv, cur: &'a State, next: Option<&'a State>, consts: &'a BTreeMap<String, Value>) -> Self {
        Ctx {
            env,
            cur,
            next,
            consts,
            frame: vec![],
            primed: false,
            def: None,
        }
    }

    pub fn with_frame(&self, frame: Vec<Value>) -> Self {
        let mut c = self.clone();
        c.frame = frame;
        c
    }

    pub fn eval(&mut self, e: &Expr) -> EResult<Value> {
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(v) => {
                let st = if self.primed {
                    self.next.ok_or(EvalError::MissingNextState)?
                } else {
                    self.cur
                };
                st.get(v).cloned().ok_or_else(|| EvalError::Unassigned(v.clone()))
            }
            Expr::Const(c) => self
                .consts
                .get(c)
                .cloned()
                .ok_or_else(|| EvalError::UnboundConstant(c.clone())),
            Expr::Bound(k, _) => {
                let k = *k as usize;
                let n = self.frame.len();
                assert!(k < n, "dangling bound index");
                Ok(self.frame[n - 1 - k].clone())
            }
            Expr::Apply(name, args) => {
                let d = self
                    .env
                    .definition(name)
                    .ok_or_else(|| EvalError::UnknownDefinition(name.clone()))?;
                if d.params.len() != args.len() {
                    return Err(EvalError::Arity {
                        name: name.clone(),
                        expected: d.params.len(),
                        found: args.len(),
                    });
                }
                let vals = args.iter().map(|a| self.eval(a)).collect::<EResult<Vec<_>>>()?;
                let mut inner = self.with_frame(vals);
                inner.def = Some((d.name.clone(), d.pos));
                inner.eval(&d.body)
            }
            Expr::Bang(name, args) => {
                let d = self
                    .env
                    .definition(name)
                    .ok_or_else(|| EvalError::UnknownDefinition(name.clone()))?;
                let body = resolve_bang(d, args)?;
                self.eval(&body)
            }
            Expr::Not(a) => Ok(Value::Bool(!self.bool(a)?)),
            Expr::And(items, _) => {
                for x in items {
                    if !self.bool(x)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            Expr::Or(items, _) => {
                for x in items {
                    if self.bool(x)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            Expr::Implies(a, b) => Ok(Value::Bool(!self.bool(a)? || self.bool(b)?)),
            Expr::Bin(op, a, b) => self.binop(e, *op, a, b),
            Expr::If(c, t, f) => {
                if self.bool(c)? {
                    self.eval(t)
                } else {
                    self.eval(f)
                }
            }
            Expr::SetEnum(items) => Ok(Value::Set(items.iter().map(|x| self.eval(x)).collect::<EResult<_>>()?)),
            Expr::Tuple(items) => Ok(Value::Tuple(items.iter().map(|x| self.eval(x)).collect::<EResult<_>>()?)),
            Expr::FuncLit(_, d, body) => {
                let dom = self.set(e, d)?;
                let mut g = BTreeMap::new();
                for x in dom {
                    self.frame.push(x.clone());
                    let r = self.eval(body);
                    self.frame.pop();
                    g.insert(x, r?);
                }
                Ok(Value::Func(g))
            }
            Expr::FuncApp(f, a) => {
                let fv = self.eval(f)?;
                let av = self.eval(a)?;
                value::apply(&fv, &av).map_err(|k| self.fail(k, e))
            }
            Expr::Except(base, ups) => {
                let mut f = self.eval(base)?;
                for (k, v) in ups {
                    let kv = self.eval(k)?;
                    let vv = self.eval(v)?;
                    f = value::except(&f, &kv, vv).map_err(|k| self.fail(k, e))?;
                }
                Ok(f)
            }
            Expr::FuncSet(a, b) => {
                let av = self.eval(a)?;
                let bv = self.eval(b)?;
                value::func_set(&av, &bv).map_err(|k| self.fail(k, e))
            }
            Expr::Domain(a) => {
                let av = self.eval(a)?;
                value::domain(&av).map_err(|k| self.fail(k, e))
            }
            Expr::Quant(q, _, d, body) => {
                let dom = self.set(e, d)?;
                let want = *q == Quant::Exists;
                for x in dom {
                    self.frame.push(x);
                    let r = self.bool(body);
                    self.frame.pop();
                    if r? == want {
                        return Ok(Value::Bool(want));
                    }
                }
                Ok(Value::Bool(!want))
            }
            Expr::Prime(a) => {
                if self.primed {
                    return Err(EvalError::DoublePrime);
                }
                if self.next.is_none() {
                    return Err(EvalError::MissingNextState);
                }
                self.primed = true;
                let r = self.eval(a);
                self.primed = false;
                r
            }
            Expr::Unchanged(a) => {
                let before = self.eval(a)?;
                let after = self.eval(&Expr::prime((**a).clone()))?;
                value::equal(&before, &after).map(Value::Bool).map_err(|k| self.fail(k, e))
            }
            Expr::BoxAction(a, v) => {
                if self.bool(a)? {
                    return Ok(Value::Bool(true));
                }
                self.eval(&Expr::Unchanged(v.clone()))
            }
            Expr::Always(_) => Err(EvalError::Temporal),
        }
    }

    pub fn bool(&mut self, e: &Expr) -> EResult<bool> {
        let v = self.eval(e)?;
        v.as_bool().map_err(|k| self.fail(k, e))
    }

    /// Evaluate `d` to a finite set; `whole` is reported on failure.
    fn set(&mut self, whole: &Expr, d: &Expr) -> EResult<Vec<Value>> {
        match self.eval(d)? {
            Value::Set(s) => Ok(s.into_iter().collect()),
            _ => Err(self.fail(ValueError::UnboundedDomain, whole)),
        }
    }

    fn binop(&mut self, e: &Expr, op: BinOp, a: &Expr, b: &Expr) -> EResult<Value> {
        // `f \in [S -> T]` is decided without building the function set.
        if op == BinOp::In || op == BinOp::NotIn {
            if let Expr::FuncSet(s, t) = b {
                let fv = self.eval(a)?;
                let sv = self.eval(s)?;
                let tv = self.eval(t)?;
                let r = value::member_func_set(&fv, &sv, &tv).map_err(|k| self.fail(k, e))?;
                return Ok(Value::Bool(r == (op == BinOp::In)));
            }
        }
        let av = self.eval(a)?;
        let bv = self.eval(b)?;
        let r = match op {
            BinOp::Eq => value::equal(&av, &bv).map(Value::Bool),
            BinOp::Neq => value::equal(&av, &bv).map(|x| Value::Bool(!x)),
            BinOp::In => value::member(&av, &bv).map(Value::Bool),
            BinOp::NotIn => value::member(&av, &bv).map(|x| Value::Bool(!x)),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => (|| {
                let (x, y) = (av.as_int()?, bv.as_int()?);
                Ok(Value::Bool(match op {
                    BinOp::Lt => x < y,
                    BinOp::Le => x <= y,
                    BinOp::Gt => x > y,
                    _ => x >= y,
                }))
            })(),
            BinOp::Subseteq => value::subseteq(&av, &bv).map(Value::Bool),
            BinOp::Range => value::range(&av, &bv),
            BinOp::Cup => value::set_union(&av, &bv),
            BinOp::Cap => value::set_inter(&av, &bv),
            BinOp::SetMinus => value::set_minus(&av, &bv),
            BinOp::Add => value::arith(Arith::Add, &av, &bv),
            BinOp::Sub => value::arith(Arith::Sub, &av, &bv),
            BinOp::Mul => value::arith(Arith::Mul, &av, &bv),
        };
        r.map_err(|k| {
            let mut err = self.fail(k, e);
            if let EvalError::Exec(x) = &mut err {
                x.evaluated = Some(print_expr(&Expr::bin(op, Expr::Lit(av.clone()), Expr::Lit(bv.clone()))));
            }
            err
        })
    }

    pub fn fail(&self, kind: ValueError, e: &Expr) -> EvalError {
        EvalError::Exec(Box::new(ExecutionError {
            kind,
            expr: print_expr(&close(e, &self.frame)),
            evaluated: None,
            def: self.def.clone(),
            state: self.cur.clone(),
            next: self.next.cloned(),
        }))
    }
}

/// Replace bound variables that refer into `frame` by their values.
pub fn close(e: &Expr, frame: &[Value]) -> Expr {
    let n = frame.len() as u32;
    e.map_with_depth(0, &mut |x, depth| match x {
        Expr::Bound(k, _) if *k >= depth && k - depth < n => {
            Some(Expr::Lit(frame[(n - 1 - (k - depth)) as usize].clone()))
        }
        _ => None,
    })
}

/// Evaluate a closed expression in a single state.
pub fn eval(e: &Expr, env: &dyn DefEnv, s: &State, next: Option<&State>) -> EResult<Value> {
    let consts = BTreeMap::new();
    Ctx::new(env, s, next, &consts).eval(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Definition;

    fn not_def() -> Vec<Definition> {
        let body = Expr::ite(Expr::eq(Expr::bound(0, "i"), 0.into()), 1.into(), 0.into());
        vec![Definition::new("Not", vec!["i".into()], body, &Vec::<Definition>::new())]
    }

    #[test]
    fn not_of_zero() {
        let env = not_def();
        let r = eval(&Expr::apply("Not", vec![0.into()]), &env, &State::default(), None);
        assert_eq!(r, Ok(Value::Int(1)));
    }

    #[test]
    fn zero_equals_false_is_an_error() {
        let r = eval(&Expr::eq(0.into(), false.into()), &not_def(), &State::default(), None);
        match r {
            Err(EvalError::Exec(x)) => {
                assert_eq!(x.kind, ValueError::IncomparableEquality);
                assert_eq!(x.expr, "0 = FALSE");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn apply_outside_domain() {
        let flag = Expr::func_lit("i", Expr::int_set(&[0, 1]), false.into());
        let s = State::default().with("flag", eval(&flag, &not_def(), &State::default(), None).unwrap());
        let r = eval(&Expr::app(Expr::var("flag"), 2.into()), &not_def(), &s, None);
        assert!(matches!(r, Err(EvalError::Exec(x)) if x.kind == ValueError::ApplyOutsideDomain));
    }

    #[test]
    fn extensional_function_equality() {
        let lit = Expr::func_lit("i", Expr::int_set(&[0, 1]), false.into());
        let g: BTreeMap<Value, Value> = [(Value::Int(0), Value::Bool(false)), (Value::Int(1), Value::Bool(false))].into();
        let s = State::default().with("f", Value::Func(g));
        let r = eval(&Expr::eq(Expr::var("f"), lit), &not_def(), &s, None);
        assert_eq!(r, Ok(Value::Bool(true)));
    }

    #[test]
    fn bound_values_show_in_errors() {
        // \A x \in {1} : x = "a"
        let e = Expr::forall("x", Expr::int_set(&[1]), Expr::eq(Expr::bound(0, "x"), Expr::str("a")));
        match eval(&e, &not_def(), &State::default(), None) {
            Err(EvalError::Exec(x)) => assert_eq!(x.expr, "1 = \"a\""),
            other => panic!("{other:?}"),
        }
    }
}
