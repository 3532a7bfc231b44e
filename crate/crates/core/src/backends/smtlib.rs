//! SMT-LIB export. Every TLA+ value lives in one uninterpreted sort `U`;
//! booleans, integers and strings enter it through injections whose images
//! carry distinct kind tags. Sets are characterised by `mem`, functions by
//! `app` and `dom`. Set and function constructors become fresh symbols with
//! defining axioms, lifted over the enclosing bound variables. See
//! `docs/smt.md`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{prepare, Failure, ProverResult};
use crate::kernel::{BinOp, Expr, Quant, Value};
use crate::proofman::Obligation;

const PRELUDE: &str = "\
(set-logic ALL)
(declare-sort U 0)
(declare-fun kind (U) Int)
(declare-fun b2u (Bool) U)
(declare-fun u2b (U) Bool)
(declare-fun i2u (Int) U)
(declare-fun u2i (U) Int)
(declare-fun s2u (String) U)
(declare-fun u2s (U) String)
(declare-fun mem (U U) Bool)
(declare-fun app (U U) U)
(declare-fun dom (U) U)
(assert (forall ((b Bool)) (and (= (kind (b2u b)) 0) (= (u2b (b2u b)) b))))
(assert (forall ((i Int)) (and (= (kind (i2u i)) 1) (= (u2i (i2u i)) i))))
(assert (forall ((s String)) (and (= (kind (s2u s)) 2) (= (u2s (s2u s)) s))))
(assert (forall ((x U)) (=> (= (kind x) 0) (= x (b2u (u2b x))))))
(assert (forall ((x U)) (=> (= (kind x) 1) (= x (i2u (u2i x))))))
(assert (forall ((x U)) (=> (= (kind x) 2) (= x (s2u (u2s x))))))
(assert (forall ((s U) (t U)) (=> (and (= (kind s) 3) (= (kind t) 3) (forall ((x U)) (= (mem x s) (mem x t)))) (= s t))))
(assert (forall ((f U) (g U)) (=> (and (= (kind f) 4) (= (kind g) 4) (= (dom f) (dom g)) (forall ((x U)) (=> (mem x (dom f)) (= (app f x) (app g x))))) (= f g))))
(assert (forall ((f U)) (=> (= (kind f) 4) (= (kind (dom f)) 3))))
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unsupported(pub String);

struct Enc {
    decls: Vec<String>,
    axioms: Vec<String>,
    fresh: usize,
    /// Names of enclosing binders, outermost first.
    scope: Vec<String>,
    declared: Vec<String>,
    /// Closed constructor terms already given a symbol.
    memo: HashMap<Expr, String>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn sym(prefix: &str, name: &str) -> String {
    format!("|{prefix}{name}|")
}

impl Enc {
    fn declare(&mut self, name: &str, arity: usize) {
        if self.declared.iter().any(|d| d == name) {
            return;
        }
        self.declared.push(name.to_string());
        self.decls.push(format!("(declare-fun {name} ({}) U)", vec!["U"; arity].join(" ")));
    }

    /// A fresh symbol standing for a term, parameterised by every enclosing
    /// binder. Returns the name and the application to those binders.
    fn lift(&mut self, kind: u8) -> (String, String) {
        self.fresh += 1;
        let name = format!("k{}", self.fresh);
        self.declare(&name, self.scope.len());
        let use_ = if self.scope.is_empty() {
            name.clone()
        } else {
            format!("({name} {})", self.scope.join(" "))
        };
        self.axiom(&format!("(= (kind {use_}) {kind})"));
        (name, use_)
    }

    fn axiom(&mut self, body: &str) {
        if self.scope.is_empty() {
            self.axioms.push(format!("(assert {body})"));
        } else {
            let vars: Vec<String> = self.scope.iter().map(|v| format!("({v} U)")).collect();
            self.axioms.push(format!("(assert (forall ({}) {body}))", vars.join(" ")));
        }
    }

    fn bind<T>(&mut self, f: impl FnOnce(&mut Self, &str) -> T) -> T {
        let v = format!("x{}", self.scope.len());
        self.scope.push(v.clone());
        let r = f(self, &v);
        self.scope.pop();
        r
    }

    fn value(&mut self, v: &Value) -> Result<String, Unsupported> {
        Ok(match v {
            Value::Bool(b) => format!("(b2u {b})"),
            Value::Int(n) if *n < 0 => format!("(i2u (- {}))", n.unsigned_abs()),
            Value::Int(n) => format!("(i2u {n})"),
            Value::Str(s) => format!("(s2u {})", quote(s)),
            Value::Set(items) => {
                let elems = items.iter().map(|x| self.value(x)).collect::<Result<Vec<_>, _>>()?;
                self.set_of(&elems)
            }
            Value::Func(g) => {
                let pairs = g
                    .iter()
                    .map(|(k, v)| Ok((self.value(k)?, self.value(v)?)))
                    .collect::<Result<Vec<_>, Unsupported>>()?;
                let keys: Vec<String> = pairs.iter().map(|(k, _)| k.clone()).collect();
                let d = self.set_of(&keys);
                let (_, f) = self.lift(4);
                self.axiom(&format!("(= (dom {f}) {d})"));
                for (k, v) in pairs {
                    self.axiom(&format!("(= (app {f} {k}) {v})"));
                }
                f
            }
            Value::Tuple(items) => {
                let map = items.iter().enumerate().map(|(i, x)| (Value::Int(i as i64 + 1), x.clone())).collect();
                self.value(&Value::Func(map))?
            }
        })
    }

    fn set_of(&mut self, elems: &[String]) -> String {
        let (_, s) = self.lift(3);
        let body = if elems.is_empty() {
            "false".to_string()
        } else {
            let eqs: Vec<String> = elems.iter().map(|e| format!("(= y {e})")).collect();
            format!("(or {})", eqs.join(" "))
        };
        self.axiom(&format!("(forall ((y U)) (= (mem y {s}) {body}))"));
        s
    }

    /// A fresh set `s` with `mem y s` defined by `body(y)`.
    fn set_by(&mut self, body: impl FnOnce(&str) -> String) -> String {
        let (_, s) = self.lift(3);
        let b = body("y");
        self.axiom(&format!("(forall ((y U)) (= (mem y {s}) {b}))"));
        s
    }

    fn term(&mut self, e: &Expr) -> Result<String, Unsupported> {
        let constructor = matches!(
            e,
            Expr::Lit(Value::Set(_) | Value::Func(_) | Value::Tuple(_))
                | Expr::SetEnum(_)
                | Expr::Tuple(_)
                | Expr::FuncLit(..)
                | Expr::FuncSet(..)
                | Expr::Except(..)
                | Expr::Bin(BinOp::Range | BinOp::Cup | BinOp::Cap | BinOp::SetMinus, ..)
        );
        if !constructor || !e.is_closed() {
            return self.term_uncached(e);
        }
        if let Some(s) = self.memo.get(e) {
            return Ok(s.clone());
        }
        if !self.scope.is_empty() {
            return self.term_uncached(e);
        }
        let s = self.term_uncached(e)?;
        self.memo.insert(e.clone(), s.clone());
        Ok(s)
    }

    fn term_uncached(&mut self, e: &Expr) -> Result<String, Unsupported> {
        Ok(match e {
            Expr::Lit(v) => self.value(v)?,
            Expr::Var(n) => {
                let s = sym("v_", n);
                self.declare(&s, 0);
                s
            }
            Expr::Const(n) => {
                let s = sym("c_", n);
                self.declare(&s, 0);
                s
            }
            Expr::Bound(k, _) => {
                let n = self.scope.len();
                self.scope
                    .get(n.wrapping_sub(1 + *k as usize))
                    .cloned()
                    .ok_or_else(|| Unsupported("dangling bound variable".into()))?
            }
            Expr::Prime(x) => match &**x {
                Expr::Var(n) => {
                    let s = sym("p_", n);
                    self.declare(&s, 0);
                    s
                }
                Expr::Apply(n, args) | Expr::Bang(n, args) => self.opaque("dp_", n, args)?,
                _ => return Err(Unsupported("prime on a compound term".into())),
            },
            Expr::Apply(n, args) => self.opaque("d_", n, args)?,
            Expr::Bang(n, args) => self.opaque("b_", n, args)?,
            Expr::Bin(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul), a, b) => {
                let o = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    _ => "*",
                };
                format!("(i2u ({o} (u2i {}) (u2i {})))", self.term(a)?, self.term(b)?)
            }
            Expr::Bin(BinOp::Range, a, b) => {
                let (lo, hi) = (self.term(a)?, self.term(b)?);
                self.set_by(|y| format!("(and (= (kind {y}) 1) (<= (u2i {lo}) (u2i {y})) (<= (u2i {y}) (u2i {hi})))"))
            }
            Expr::Bin(op @ (BinOp::Cup | BinOp::Cap | BinOp::SetMinus), a, b) => {
                let (sa, sb) = (self.term(a)?, self.term(b)?);
                let op = *op;
                self.set_by(|y| match op {
                    BinOp::Cup => format!("(or (mem {y} {sa}) (mem {y} {sb}))"),
                    BinOp::Cap => format!("(and (mem {y} {sa}) (mem {y} {sb}))"),
                    _ => format!("(and (mem {y} {sa}) (not (mem {y} {sb})))"),
                })
            }
            Expr::If(c, t, f) => format!("(ite {} {} {})", self.formula(c)?, self.term(t)?, self.term(f)?),
            Expr::SetEnum(items) => {
                let elems = items.iter().map(|x| self.term(x)).collect::<Result<Vec<_>, _>>()?;
                self.set_of(&elems)
            }
            Expr::Tuple(items) => {
                let elems = items.iter().map(|x| self.term(x)).collect::<Result<Vec<_>, _>>()?;
                let keys: Vec<String> = (1..=elems.len()).map(|i| format!("(i2u {i})")).collect();
                let d = self.set_of(&keys);
                let (_, f) = self.lift(4);
                self.axiom(&format!("(= (dom {f}) {d})"));
                for (k, v) in keys.iter().zip(elems) {
                    self.axiom(&format!("(= (app {f} {k}) {v})"));
                }
                f
            }
            Expr::FuncLit(_, d, body) => {
                let dom = self.term(d)?;
                let (_, f) = self.lift(4);
                self.axiom(&format!("(= (dom {f}) {dom})"));
                let (x, b) = self.bind(|me, x| Ok::<_, Unsupported>((x.to_string(), me.term(body)?)))?;
                self.axiom(&format!("(forall (({x} U)) (=> (mem {x} {dom}) (= (app {f} {x}) {b})))"));
                f
            }
            Expr::FuncApp(f, a) => format!("(app {} {})", self.term(f)?, self.term(a)?),
            Expr::Except(base, ups) => {
                let mut cur = self.term(base)?;
                for (k, v) in ups {
                    let (k, v) = (self.term(k)?, self.term(v)?);
                    let (_, g) = self.lift(4);
                    self.axiom(&format!("(= (dom {g}) (dom {cur}))"));
                    self.axiom(&format!("(=> (mem {k} (dom {cur})) (= (app {g} {k}) {v}))"));
                    self.axiom(&format!("(forall ((y U)) (=> (not (= y {k})) (= (app {g} y) (app {cur} y))))"));
                    cur = g;
                }
                cur
            }
            Expr::FuncSet(a, b) => {
                let (s, t) = (self.term(a)?, self.term(b)?);
                self.set_by(|y| {
                    format!("(and (= (kind {y}) 4) (= (dom {y}) {s}) (forall ((z U)) (=> (mem z {s}) (mem (app {y} z) {t}))))")
                })
            }
            Expr::Domain(a) => format!("(dom {})", self.term(a)?),
            Expr::Unchanged(_) | Expr::BoxAction(..) => return Err(Unsupported("unlowered action operator".into())),
            Expr::Always(_) => return Err(Unsupported("temporal formula".into())),
            _ => format!("(b2u {})", self.formula(e)?),
        })
    }

    fn opaque(&mut self, prefix: &str, n: &str, args: &[Expr]) -> Result<String, Unsupported> {
        let s = sym(prefix, n);
        self.declare(&s, args.len());
        if args.is_empty() {
            return Ok(s);
        }
        let a = args.iter().map(|x| self.term(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(format!("({s} {})", a.join(" ")))
    }

    fn formula(&mut self, e: &Expr) -> Result<String, Unsupported> {
        Ok(match e {
            Expr::Lit(Value::Bool(b)) => b.to_string(),
            Expr::Not(a) => format!("(not {})", self.formula(a)?),
            Expr::And(items, _) | Expr::Or(items, _) => {
                let op = if matches!(e, Expr::And(..)) { "and" } else { "or" };
                if items.is_empty() {
                    return Ok((op == "and").to_string());
                }
                let xs = items.iter().map(|x| self.formula(x)).collect::<Result<Vec<_>, _>>()?;
                format!("({op} {})", xs.join(" "))
            }
            Expr::Implies(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Expr::If(c, t, f) => format!("(ite {} {} {})", self.formula(c)?, self.formula(t)?, self.formula(f)?),
            Expr::Bin(BinOp::Eq, a, b) => format!("(= {} {})", self.term(a)?, self.term(b)?),
            Expr::Bin(BinOp::Neq, a, b) => format!("(not (= {} {}))", self.term(a)?, self.term(b)?),
            Expr::Bin(BinOp::In, a, b) => self.member(a, b)?,
            Expr::Bin(BinOp::NotIn, a, b) => format!("(not {})", self.member(a, b)?),
            Expr::Bin(op @ (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge), a, b) => {
                let o = match op {
                    BinOp::Lt => "<",
                    BinOp::Le => "<=",
                    BinOp::Gt => ">",
                    _ => ">=",
                };
                format!("({o} (u2i {}) (u2i {}))", self.term(a)?, self.term(b)?)
            }
            Expr::Bin(BinOp::Subseteq, a, b) => {
                let (s, t) = (self.term(a)?, self.term(b)?);
                format!("(forall ((y U)) (=> (mem y {s}) (mem y {t})))")
            }
            Expr::Quant(q, _, d, body) => {
                let dom = match &**d {
                    Expr::SetEnum(items) => {
                        let xs: Vec<Expr> = items.iter().map(|x| body.instantiate(std::slice::from_ref(x))).collect();
                        let joined = match q {
                            Quant::Forall => Expr::and(xs),
                            Quant::Exists => Expr::or(xs),
                        };
                        return self.formula(&joined);
                    }
                    _ => self.term(d)?,
                };
                let (x, b) = self.bind(|me, x| Ok::<_, Unsupported>((x.to_string(), me.formula(body)?)))?;
                match q {
                    Quant::Forall => format!("(forall (({x} U)) (=> (mem {x} {dom}) {b}))"),
                    Quant::Exists => format!("(exists (({x} U)) (and (mem {x} {dom}) {b}))"),
                }
            }
            Expr::Always(_) => return Err(Unsupported("temporal formula".into())),
            _ => format!("(u2b {})", self.term(e)?),
        })
    }

    fn member(&mut self, a: &Expr, s: &Expr) -> Result<String, Unsupported> {
        let x = self.term(a)?;
        self.member_of(&x, s)
    }

    /// `x \in s`, unfolding the set constructors whose membership is
    /// quantifier free (or becomes so over an enumerated domain).
    fn member_of(&mut self, x: &str, s: &Expr) -> Result<String, Unsupported> {
        let disj = |eqs: Vec<String>| if eqs.is_empty() { "false".to_string() } else { format!("(or {})", eqs.join(" ")) };
        Ok(match s {
            Expr::SetEnum(items) => {
                let eqs = items.iter().map(|i| Ok(format!("(= {x} {})", self.term(i)?))).collect::<Result<Vec<_>, Unsupported>>()?;
                disj(eqs)
            }
            Expr::Lit(Value::Set(items)) => {
                let eqs = items.iter().map(|i| Ok(format!("(= {x} {})", self.value(i)?))).collect::<Result<Vec<_>, Unsupported>>()?;
                disj(eqs)
            }
            Expr::Bin(op @ (BinOp::Cup | BinOp::Cap | BinOp::SetMinus), a, b) => {
                let (ma, mb) = (self.member_of(x, a)?, self.member_of(x, b)?);
                match op {
                    BinOp::Cup => format!("(or {ma} {mb})"),
                    BinOp::Cap => format!("(and {ma} {mb})"),
                    _ => format!("(and {ma} (not {mb}))"),
                }
            }
            Expr::Bin(BinOp::Range, lo, hi) => {
                let (lo, hi) = (self.term(lo)?, self.term(hi)?);
                format!("(and (= (kind {x}) 1) (<= (u2i {lo}) (u2i {x})) (<= (u2i {x}) (u2i {hi})))")
            }
            Expr::FuncSet(d, r) => {
                let dom = self.term(d)?;
                let ranges = match &**d {
                    Expr::SetEnum(items) => {
                        let mut parts = vec![];
                        for i in items {
                            let k = self.term(i)?;
                            parts.push(self.member_of(&format!("(app {x} {k})"), r)?);
                        }
                        format!("(and true {})", parts.join(" "))
                    }
                    _ => {
                        self.fresh += 1;
                        let z = format!("z{}", self.fresh);
                        let inner = self.member_of(&format!("(app {x} {z})"), r)?;
                        format!("(forall (({z} U)) (=> (mem {z} {dom}) {inner}))")
                    }
                };
                format!("(and (= (kind {x}) 4) (= (dom {x}) {dom}) {ranges})")
            }
            _ => format!("(mem {x} {})", self.term(s)?),
        })
    }
}

/// The obligation as an SMT-LIB script that is unsatisfiable exactly when
/// the obligation is valid under the encoding.
pub fn export_smtlib(ob: &Obligation) -> Result<String, Unsupported> {
    if ob.is_temporal() {
        return Err(Unsupported("temporal goal".into()));
    }
    let (hyps, goal) = prepare(ob).map_err(|e| Unsupported(e.to_string()))?;
    export_formulas(&ob.id, &hyps, &goal)
}

pub fn export_formulas(name: &str, hyps: &[Expr], goal: &Expr) -> Result<String, Unsupported> {
    let mut enc = Enc {
        decls: vec![],
        axioms: vec![],
        fresh: 0,
        scope: vec![],
        declared: vec![],
        memo: HashMap::new(),
    };
    let mut asserts = vec![];
    for h in hyps {
        asserts.push(format!("(assert {})", enc.formula(h)?));
    }
    asserts.push(format!("(assert (not {}))", enc.formula(goal)?));
    let mut out = format!("; obligation {name}\n");
    out.push_str(PRELUDE);
    for d in enc.decls {
        out.push_str(&d);
        out.push('\n');
    }
    for a in enc.axioms.into_iter().chain(asserts) {
        out.push_str(&a);
        out.push('\n');
    }
    out.push_str("(check-sat)\n");
    Ok(out)
}

/// Pipe `script` to the command line `cmd` and read its verdict.
pub fn run_solver(cmd: &str, script: &str, timeout: Duration) -> ProverResult {
    let mut parts = cmd.split_whitespace();
    let Some(prog) = parts.next() else {
        return ProverResult::Unsupported("empty solver command".into());
    };
    let mut child = match Command::new(prog)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return ProverResult::Unsupported(format!("cannot run `{prog}`: {e}")),
    };
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(script.as_bytes());
    }
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return ProverResult::Canceled;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return ProverResult::Unsupported(e.to_string()),
        }
    }
    let mut out = String::new();
    if let Some(mut s) = child.stdout.take() {
        let _ = s.read_to_string(&mut out);
    }
    match out.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some("unsat") => ProverResult::Proved,
        Some("sat") => ProverResult::Failed(Failure::Declined("solver answered sat".into())),
        Some(other) => ProverResult::Unsupported(format!("solver answered {other}")),
        None => ProverResult::Unsupported("no answer from solver".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addition_script() {
        let g = Expr::eq(Expr::bin(BinOp::Add, 1.into(), 1.into()), 2.into());
        let s = export_formulas("t", &[], &g).unwrap();
        assert!(s.contains("(assert (not (= (i2u (+ (u2i (i2u 1)) (u2i (i2u 1)))) (i2u 2))))"));
        assert!(s.trim_end().ends_with("(check-sat)"));
    }

    #[test]
    fn true_goal() {
        let s = export_formulas("t", &[], &Expr::TRUE).unwrap();
        assert!(s.contains("(assert (not true))"));
    }

    #[test]
    fn balanced_parentheses() {
        let f = Expr::func_lit("i", Expr::int_set(&[0, 1]), false.into());
        let g = Expr::forall("j", Expr::var("S"), Expr::eq(Expr::app(f, Expr::bound(0, "j")), false.into()));
        let s = export_formulas("t", &[], &g).unwrap();
        let mut depth = 0i64;
        for c in s.lines().filter(|l| !l.starts_with(';')).flat_map(str::chars) {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            assert!(depth >= 0);
        }
        assert_eq!(depth, 0);
    }
}
