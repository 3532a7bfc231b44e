//! Column-aware pretty-printer whose output parses back to the same tree.

use std::collections::HashSet;

use super::ast::*;
use crate::kernel::value::escape;
use crate::kernel::{BinOp, Definition, Expr, Quant, Value};

const P_IMPLIES: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_REL: u8 = 5;
const P_RANGE: u8 = 6;
const P_SET: u8 = 7;
const P_ADD: u8 = 8;
const P_MUL: u8 = 9;
const P_PREFIX: u8 = 10;
const P_POSTFIX: u8 = 11;
const P_ATOM: u8 = 12;

fn binop_info(op: BinOp) -> (&'static str, u8) {
    match op {
        BinOp::Eq => ("=", P_REL),
        BinOp::Neq => ("#", P_REL),
        BinOp::In => ("\\in", P_REL),
        BinOp::NotIn => ("\\notin", P_REL),
        BinOp::Lt => ("<", P_REL),
        BinOp::Le => ("<=", P_REL),
        BinOp::Gt => (">", P_REL),
        BinOp::Ge => (">=", P_REL),
        BinOp::Subseteq => ("\\subseteq", P_REL),
        BinOp::Range => ("..", P_RANGE),
        BinOp::Cup => ("\\cup", P_SET),
        BinOp::Cap => ("\\cap", P_SET),
        BinOp::SetMinus => ("\\", P_SET),
        BinOp::Add => ("+", P_ADD),
        BinOp::Sub => ("-", P_ADD),
        BinOp::Mul => ("*", P_MUL),
    }
}

/// Forms that extend as far right as possible and so need parentheses
/// unless nothing follows them.
fn open_ended(e: &Expr) -> bool {
    match e {
        Expr::If(..) | Expr::Quant(..) => true,
        Expr::And(items, l) | Expr::Or(items, l) => l.bulleted || items.len() < 2,
        _ => false,
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Implies(..) => P_IMPLIES,
        Expr::Or(..) => P_OR,
        Expr::And(..) => P_AND,
        Expr::Not(_) => P_NOT,
        Expr::Bin(op, ..) => binop_info(*op).1,
        Expr::Unchanged(_) | Expr::Domain(_) | Expr::Always(_) => P_PREFIX,
        Expr::Lit(Value::Int(n)) if *n < 0 => P_PREFIX,
        Expr::Prime(_) | Expr::FuncApp(..) => P_POSTFIX,
        _ => P_ATOM,
    }
}

pub struct Printer {
    out: String,
    col: usize,
    names: Vec<String>,
}

impl Default for Printer {
    fn default() -> Self {
        Self::new()
    }
}

impl Printer {
    pub fn new() -> Printer {
        Printer {
            out: String::new(),
            col: 0,
            names: vec![],
        }
    }

    pub fn finish(self) -> String {
        self.out
    }

    pub fn col(&self) -> usize {
        self.col
    }

    pub fn write(&mut self, s: &str) {
        self.out.push_str(s);
        match s.rfind('\n') {
            Some(i) => self.col = s.len() - i - 1,
            None => self.col += s.chars().count(),
        }
    }

    pub fn newline(&mut self, indent: usize) {
        while self.out.ends_with(' ') {
            self.out.pop();
        }
        self.out.push('\n');
        self.out.push_str(&" ".repeat(indent));
        self.col = indent;
    }

    /// Print with the names of enclosing binders (outermost first).
    pub fn with_names<T>(&mut self, names: &[String], f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.names.len();
        self.names.extend(names.iter().cloned());
        let r = f(self);
        self.names.truncate(n);
        r
    }

    fn fresh(&self, hint: &str, body: &Expr) -> String {
        let hint = if hint.is_empty() { "x" } else { hint };
        let free: HashSet<String> = body.free_symbols().into_iter().collect();
        let taken = |n: &str| self.names.iter().any(|b| b == n) || free.contains(n);
        if !taken(hint) {
            return hint.to_string();
        }
        (1..)
            .map(|k| format!("{hint}_{k}"))
            .find(|n| !taken(n))
            .unwrap()
    }

    pub fn expr_top(&mut self, e: &Expr) {
        self.expr(e, 0, true);
    }

    fn expr(&mut self, e: &Expr, min: u8, tail: bool) {
        let needs_parens = prec(e) < min || (open_ended(e) && !tail);
        if needs_parens {
            self.write("(");
            self.bare(e, true);
            self.write(")");
        } else {
            self.bare(e, tail);
        }
    }

    fn list(&mut self, items: &[Expr], sep: &str) {
        for (i, x) in items.iter().enumerate() {
            if i > 0 {
                self.write(sep);
            }
            self.expr(x, 0, true);
        }
    }

    fn bare(&mut self, e: &Expr, tail: bool) {
        match e {
            Expr::Lit(v) => self.value(v),
            Expr::Var(n) | Expr::Const(n) => self.write(n),
            Expr::Bound(k, _) => {
                let k = *k as usize;
                let name = if k < self.names.len() {
                    self.names[self.names.len() - 1 - k].clone()
                } else {
                    format!("?{k}")
                };
                self.write(&name);
            }
            Expr::Apply(n, args) | Expr::Bang(n, args) => {
                self.write(n);
                if matches!(e, Expr::Bang(..)) {
                    self.write("!");
                }
                if !args.is_empty() || matches!(e, Expr::Bang(..)) {
                    self.write("(");
                    self.list(args, ", ");
                    self.write(")");
                }
            }
            Expr::Not(a) => {
                self.write("~");
                self.expr(a, P_NOT, tail);
            }
            Expr::And(items, l) | Expr::Or(items, l) => {
                let (sym, p) = if matches!(e, Expr::And(..)) { ("/\\", P_AND) } else { ("\\/", P_OR) };
                if items.is_empty() {
                    self.write(if p == P_AND { "TRUE" } else { "FALSE" });
                } else if l.bulleted || items.len() < 2 {
                    let col = self.col;
                    for (i, x) in items.iter().enumerate() {
                        if i > 0 {
                            self.newline(col);
                        }
                        self.write(sym);
                        self.write(" ");
                        self.expr(x, 0, true);
                    }
                } else {
                    let last = items.len() - 1;
                    for (i, x) in items.iter().enumerate() {
                        if i > 0 {
                            self.write(&format!(" {sym} "));
                        }
                        self.expr(x, p + 1, i == last && tail);
                    }
                }
            }
            Expr::Implies(a, b) => {
                self.expr(a, P_IMPLIES + 1, false);
                self.write(" => ");
                self.expr(b, P_IMPLIES, tail);
            }
            Expr::Bin(op, a, b) => {
                let (sym, p) = binop_info(*op);
                let (lmin, rmin) = match p {
                    P_REL | P_RANGE => (p + 1, p + 1),
                    _ => (p, p + 1),
                };
                self.expr(a, lmin, false);
                self.write(&format!(" {sym} "));
                self.expr(b, rmin, tail);
            }
            Expr::If(c, t, f) => {
                self.write("IF ");
                self.expr(c, 0, true);
                self.write(" THEN ");
                self.expr(t, 0, true);
                self.write(" ELSE ");
                self.expr(f, 0, true);
            }
            Expr::SetEnum(items) => {
                self.write("{");
                self.list(items, ", ");
                self.write("}");
            }
            Expr::Tuple(items) => {
                self.write("<<");
                self.list(items, ", ");
                self.write(">>");
            }
            Expr::FuncLit(h, d, b) => {
                let name = self.fresh(&h.0, b);
                self.write("[");
                self.write(&name);
                self.write(" \\in ");
                self.expr(d, 0, true);
                self.write(" |-> ");
                self.with_names(&[name], |p| p.expr(b, 0, true));
                self.write("]");
            }
            Expr::FuncApp(f, a) => {
                self.expr(f, P_POSTFIX, false);
                self.write("[");
                self.expr(a, 0, true);
                self.write("]");
            }
            Expr::Except(f, ups) => {
                self.write("[");
                self.expr(f, 0, true);
                self.write(" EXCEPT ");
                for (i, (k, v)) in ups.iter().enumerate() {
                    if i > 0 {
                        self.write(", ");
                    }
                    self.write("![");
                    self.expr(k, 0, true);
                    self.write("] = ");
                    self.expr(v, 0, true);
                }
                self.write("]");
            }
            Expr::FuncSet(a, b) => {
                self.write("[");
                self.expr(a, 0, true);
                self.write(" -> ");
                self.expr(b, 0, true);
                self.write("]");
            }
            Expr::Domain(a) => {
                self.write("DOMAIN ");
                self.expr(a, P_PREFIX, tail);
            }
            Expr::Quant(q, h, d, b) => {
                let name = self.fresh(&h.0, b);
                self.write(match q {
                    Quant::Forall => "\\A ",
                    Quant::Exists => "\\E ",
                });
                self.write(&name);
                self.write(" \\in ");
                self.expr(d, 0, true);
                self.write(" : ");
                self.with_names(&[name], |p| p.expr(b, 0, true));
            }
            Expr::Prime(a) => {
                self.expr(a, P_POSTFIX, false);
                self.write("'");
            }
            Expr::Unchanged(a) => {
                self.write("UNCHANGED ");
                self.expr(a, P_PREFIX, tail);
            }
            Expr::BoxAction(a, v) => {
                self.write("[");
                self.expr(a, 0, true);
                self.write("]_");
                self.expr(v, P_ATOM, false);
            }
            Expr::Always(a) => {
                self.write("[]");
                self.expr(a, P_PREFIX, tail);
            }
        }
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Set(_) if *v == Value::boolean_set() => self.write("BOOLEAN"),
            Value::Str(s) => self.write(&format!("\"{}\"", escape(s))),
            other => self.write(&other.to_string()),
        }
    }

    pub fn definition(&mut self, d: &Definition) {
        self.write(&d.name);
        if !d.params.is_empty() {
            self.write("(");
            self.write(&d.params.join(", "));
            self.write(")");
        }
        self.write(" == ");
        self.with_names(&d.params, |p| p.expr(&d.body, 0, true));
    }

    pub fn statement(&mut self, st: &Statement) {
        match st {
            Statement::Expr(e) => self.expr(e, 0, true),
            Statement::Sequent(ap) => {
                let col = self.col;
                self.write("ASSUME ");
                for (i, a) in ap.assumptions.iter().enumerate() {
                    if i > 0 {
                        self.write(",");
                        self.newline(col + 7);
                    }
                    match a {
                        Assumption::New { name, domain } => {
                            self.write("NEW ");
                            self.write(name);
                            if let Some(d) = domain {
                                self.write(" \\in ");
                                self.expr(d, 0, true);
                            }
                        }
                        Assumption::Fact(e) => self.expr(e, 0, true),
                    }
                }
                self.newline(col);
                self.write("PROVE  ");
                self.expr(&ap.goal, 0, true);
            }
        }
    }

    /// A proof whose first line starts at column `indent`.
    pub fn proof(&mut self, proof: &Proof, indent: usize) {
        match proof {
            Proof::Omitted { implicit: true } => {}
            Proof::Omitted { implicit: false } => {
                self.newline(indent);
                self.write("PROOF OMITTED");
            }
            Proof::Obvious => {
                self.newline(indent);
                self.write("OBVIOUS");
            }
            Proof::By(by) => {
                self.newline(indent);
                self.by(by);
            }
            Proof::Steps(steps) => {
                for s in steps {
                    self.newline(indent);
                    self.write(&format!("{}. ", s.label));
                    match &s.kind {
                        StepKind::Qed => self.write("QED"),
                        StepKind::Assert(st) => self.statement(st),
                        StepKind::Suffices(st) => {
                            self.write("SUFFICES ");
                            self.statement(st);
                        }
                        StepKind::Case(e) => {
                            self.write("CASE ");
                            self.expr(e, 0, true);
                        }
                        StepKind::Pick { name, domain, body } => {
                            self.write(&format!("PICK {name} \\in "));
                            self.expr(domain, 0, true);
                            self.write(" : ");
                            self.expr(body, 0, true);
                        }
                    }
                    self.proof(&s.proof, indent + 2);
                }
            }
        }
    }

    pub fn by(&mut self, by: &ByClause) {
        self.write("BY");
        for (i, f) in by.facts.iter().enumerate() {
            self.write(if i == 0 { " " } else { ", " });
            match f {
                FactRef::Step(l) => self.write(&l.to_string()),
                FactRef::Expr(e) => self.expr(e, 0, true),
            }
        }
        if !by.defs.is_empty() {
            self.write(match by.keyword {
                DefKeyword::Def => " DEF ",
                DefKeyword::Defs => " DEFS ",
            });
            self.write(&by.defs.join(", "));
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer::new();
    p.expr_top(e);
    p.finish()
}

pub fn print_proof(proof: &Proof) -> String {
    let mut p = Printer::new();
    p.proof(proof, 0);
    p.finish().trim_start_matches('\n').to_string()
}

pub fn print_definition(d: &Definition) -> String {
    let mut p = Printer::new();
    p.definition(d);
    p.finish()
}

pub fn print_module(m: &SpecModule) -> String {
    let mut p = Printer::new();
    p.write(&format!("---- MODULE {} ----", m.name));
    if let Some(alg) = &m.pluscal {
        p.newline(0);
        p.write("(*");
        p.out.push('\n');
        p.out.push_str(alg);
        p.out.push('\n');
        p.col = 0;
        p.write("*)");
    }
    for u in &m.units {
        p.newline(0);
        match u {
            Unit::Variables(vs) => p.write(&format!("VARIABLES {}", vs.join(", "))),
            Unit::Definition(i) => {
                p.newline(0);
                p.definition(&m.definitions[*i]);
            }
            Unit::Theorem(i) => {
                let t = &m.theorems[*i];
                p.newline(0);
                p.write("THEOREM ");
                if let Some(n) = &t.name {
                    p.write(&format!("{n} == "));
                }
                p.statement(&t.statement);
                p.proof(&t.proof, 2);
            }
        }
    }
    p.newline(0);
    p.write("====");
    p.newline(0);
    p.finish()
}

#[cfg(test)]
mod tests {
    use super::super::parse_module;
    use super::*;

    fn round_trip(src: &str) {
        let m = parse_module(src).unwrap();
        let printed = print_module(&m);
        let again = parse_module(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(m, again, "\n{printed}");
    }

    #[test]
    fn round_trips() {
        round_trip("---- MODULE M ----\nVARIABLES x, y\nA == /\\ x' = x + 1\n     /\\ \\/ y' = y\n        \\/ y' = 0\nB == (x = 1 => y = 2) => x = 3\nC == \\A i \\in 1..3 : \\E j \\in {i} : i = j\nD == [A]_<<x, y>> /\\ (IF x = 1 THEN y ELSE 2) = 3\n====");
        round_trip("---- MODULE M ----\nVARIABLES f\nT == [i \\in {0, 1} |-> FALSE]\nU == f' = [f EXCEPT ![0] = TRUE, ![1] = ~f[1]]\na == TRUE\nb == a - -1 = 3\nW == f \\in [{0, 1} -> BOOLEAN] /\\ (a \\/ b)\n====");
    }

    #[test]
    fn shadowed_binder_is_renamed() {
        // \A x \in S : \A x \in S : outer = inner
        let e = Expr::forall(
            "x",
            Expr::int_set(&[1]),
            Expr::forall("x", Expr::int_set(&[1]), Expr::eq(Expr::bound(1, "x"), Expr::bound(0, "x"))),
        );
        assert_eq!(print_expr(&e), "\\A x \\in {1} : \\A x_1 \\in {1} : x = x_1");
    }
}
