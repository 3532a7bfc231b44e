//! Recursive-descent parser for modules, expressions, and proofs.
//!
//! Bulleted `/\` and `\/` lists are the only indentation-sensitive
//! construct: a list opened at column `c` owns every following token until
//! one starts a line at a column `<= c`. Brackets suspend the rule.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::kernel::{BinOp, Definition, Expr, Hint, Layout, Quant, SourcePos, Value};

pub(crate) type PResult<T> = Result<T, ParseError>;

const KEYWORDS: &[&str] = &[
    "MODULE", "VARIABLE", "VARIABLES", "THEOREM", "PROOF", "BY", "DEF", "DEFS", "OBVIOUS",
    "OMITTED", "QED", "SUFFICES", "ASSUME", "PROVE", "NEW", "PICK", "CASE", "IF", "THEN", "ELSE",
    "EXCEPT", "UNCHANGED", "DOMAIN", "TRUE", "FALSE", "BOOLEAN",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

static EOF: Tok = Tok::Eof;

#[derive(Default)]
pub(crate) struct Scope {
    pub bound: Vec<String>,
    pub consts: Vec<String>,
    pub vars: HashSet<String>,
    /// Visible definitions with their arity.
    pub defs: HashMap<String, usize>,
    /// Definitions that exist further down the module.
    pub later: HashSet<String>,
    /// Unknown identifiers become opaque applications instead of errors.
    pub lenient: bool,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    fences: Vec<usize>,
    pub scope: Scope,
    check_refs: bool,
    visible: Vec<StepLabel>,
}

impl Parser {
    pub fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            fences: vec![],
            scope: Scope::default(),
            check_refs: true,
            visible: vec![],
        })
    }

    pub fn raw(&self) -> &Token {
        &self.toks[self.pos]
    }

    pub fn lookahead(&self, k: usize) -> Tok {
        self.raw_at(k).clone()
    }

    fn raw_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn fenced(&self) -> bool {
        let t = self.raw();
        match self.fences.last() {
            Some(&f) if f > 0 => t.first_on_line && t.col <= f,
            _ => false,
        }
    }

    pub fn peek(&self) -> &Tok {
        if self.fenced() {
            &EOF
        } else {
            &self.raw().tok
        }
    }

    pub fn here(&self) -> SourcePos {
        let t = self.raw();
        SourcePos {
            line: t.line,
            col: t.col,
        }
    }

    pub fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    pub fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(k))
        }
    }

    pub fn err_here(&self, msg: &str) -> ParseError {
        let t = self.raw();
        ParseError::syntax(t.line, t.col, msg)
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => n.to_string(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::StepDef(l) => format!("{l}."),
            Tok::StepRef(l) => l.to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Dashes => "----".into(),
            Tok::ModuleEnd => "====".into(),
            Tok::Eof => "end of input".into(),
        };
        self.err_here(&format!("expected {wanted}, found {found}"))
    }

    /// A non-keyword identifier.
    pub fn ident(&mut self) -> PResult<(String, SourcePos)> {
        let pos = self.here();
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) && s != "--algorithm" => {
                let s = s.clone();
                self.advance();
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn with_fence<T>(&mut self, col: usize, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.fences.push(col);
        let r = f(self);
        self.fences.pop();
        r
    }

    fn with_bound<T>(&mut self, names: &[String], f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let n = self.scope.bound.len();
        self.scope.bound.extend(names.iter().cloned());
        let r = f(self);
        self.scope.bound.truncate(n);
        r
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.or_expr()?;
        if self.eat_sym("=>") {
            let rhs = self.expr()?;
            return Ok(Expr::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let first = self.and_expr()?;
        let mut items = vec![first];
        while self.eat_sym("\\/") {
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items, Layout::INLINE)
        })
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let first = self.not_expr()?;
        let mut items = vec![first];
        while self.eat_sym("/\\") {
            items.push(self.not_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items, Layout::INLINE)
        })
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_sym("~") {
            return Ok(Expr::not(self.not_expr()?));
        }
        self.rel_expr()
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        let lhs = self.range_expr()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("#") | Tok::Sym("/=") => BinOp::Neq,
            Tok::Sym("\\in") => BinOp::In,
            Tok::Sym("\\notin") => BinOp::NotIn,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") | Tok::Sym("=<") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("\\subseteq") => BinOp::Subseteq,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.range_expr()?;
        Ok(Expr::bin(op, lhs, rhs))
    }

    fn range_expr(&mut self) -> PResult<Expr> {
        let lhs = self.set_expr()?;
        if self.eat_sym("..") {
            let rhs = self.set_expr()?;
            return Ok(Expr::bin(BinOp::Range, lhs, rhs));
        }
        Ok(lhs)
    }

    fn set_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("\\cup") => BinOp::Cup,
                Tok::Sym("\\cap") => BinOp::Cap,
                Tok::Sym("\\") => BinOp::SetMinus,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.add_expr()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.prefix_expr()?;
        while self.eat_sym("*") {
            let rhs = self.prefix_expr()?;
            lhs = Expr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("UNCHANGED") {
            return Ok(Expr::Unchanged(Box::new(self.prefix_expr()?)));
        }
        if self.eat_kw("DOMAIN") {
            return Ok(Expr::Domain(Box::new(self.prefix_expr()?)));
        }
        if self.eat_sym("[]") {
            return Ok(Expr::Always(Box::new(self.prefix_expr()?)));
        }
        if self.at_sym("-") {
            if let Tok::Num(n) = self.raw_at(1) {
                let n = *n;
                self.advance();
                self.advance();
                return self.postfix(Expr::Lit(Value::Int(-n)));
            }
        }
        let atom = self.atom()?;
        self.postfix(atom)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            if self.eat_sym("'") {
                e = Expr::prime(e);
            } else if self.at_sym("[") {
                self.advance();
                let arg = self.with_fence(0, |p| p.expr_list("]"))?;
                let arg = if arg.len() == 1 {
                    arg.into_iter().next().unwrap()
                } else {
                    Expr::Tuple(arg)
                };
                e = Expr::app(e, arg);
            } else {
                return Ok(e);
            }
        }
    }

    /// Comma-separated expressions up to (and consuming) `close`.
    fn expr_list(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut items = vec![];
        if self.eat_sym(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(items);
            }
            self.expect_sym(",")?;
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(Expr::from(n))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::str(&s))
            }
            Tok::Sym("(") => {
                self.advance();
                self.with_fence(0, |p| {
                    let e = p.expr()?;
                    p.expect_sym(")")?;
                    Ok(e)
                })
            }
            Tok::Sym("{") => {
                self.advance();
                Ok(Expr::SetEnum(self.with_fence(0, |p| p.expr_list("}"))?))
            }
            Tok::Sym("<<") => {
                self.advance();
                Ok(Expr::Tuple(self.with_fence(0, |p| p.expr_list(">>"))?))
            }
            Tok::Sym("[") => {
                self.advance();
                self.with_fence(0, |p| p.bracket())
            }
            Tok::Sym(s @ ("/\\" | "\\/")) => self.bullets(s),
            Tok::Sym(q @ ("\\A" | "\\E")) => {
                self.advance();
                let q = if q == "\\A" { Quant::Forall } else { Quant::Exists };
                self.quantifier(q)
            }
            Tok::Ident(k) if k == "TRUE" || k == "FALSE" => {
                self.advance();
                Ok(Expr::from(k == "TRUE"))
            }
            Tok::Ident(k) if k == "BOOLEAN" => {
                self.advance();
                Ok(Expr::Lit(Value::boolean_set()))
            }
            Tok::Ident(k) if k == "IF" => {
                self.advance();
                let c = self.expr()?;
                self.expect_kw("THEN")?;
                let t = self.expr()?;
                self.expect_kw("ELSE")?;
                let f = self.expr()?;
                Ok(Expr::ite(c, t, f))
            }
            Tok::Ident(name) if !is_keyword(&name) => {
                self.advance();
                self.name_ref(name, pos)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn bullets(&mut self, sym: &'static str) -> PResult<Expr> {
        let col = self.raw().col;
        let mut items = vec![];
        loop {
            self.advance();
            items.push(self.with_fence(col, |p| p.expr())?);
            let t = self.raw();
            if t.tok == Tok::Sym(sym) && t.col == col && t.first_on_line && !self.fenced() {
                continue;
            }
            break;
        }
        Ok(if sym == "/\\" {
            Expr::And(items, Layout::BULLETS)
        } else {
            Expr::Or(items, Layout::BULLETS)
        })
    }

    /// Binder groups `x, y \in S, z \in T :` then the body; one nested
    /// quantifier per bound name.
    fn quantifier(&mut self, q: Quant) -> PResult<Expr> {
        let mut groups: Vec<(Vec<String>, Expr)> = vec![];
        let mut names_so_far: Vec<String> = vec![];
        loop {
            let mut names = vec![self.ident()?.0];
            while self.eat_sym(",") {
                names.push(self.ident()?.0);
            }
            self.expect_sym("\\in")?;
            let dom = self.with_bound(&names_so_far.clone(), |p| p.expr())?;
            names_so_far.extend(names.iter().cloned());
            groups.push((names, dom));
            if self.eat_sym(",") {
                continue;
            }
            self.expect_sym(":")?;
            break;
        }
        let body = self.with_bound(&names_so_far, |p| p.expr())?;
        // Domains were parsed under the earlier groups' binders; each
        // additional binder inside a group shifts its domain by one.
        let mut binders: Vec<(String, Expr)> = vec![];
        for (names, dom) in groups {
            for (k, n) in names.into_iter().enumerate() {
                binders.push((n, dom.shift(k as i64, 0)));
            }
        }
        let mut e = body;
        for (n, d) in binders.into_iter().rev() {
            e = Expr::quant(q, &n, d, e);
        }
        Ok(e)
    }

    /// After `[`: function literal, EXCEPT, function set, or `[A]_v`.
    fn bracket(&mut self) -> PResult<Expr> {
        if let (Tok::Ident(x), Tok::Sym("\\in")) = (self.raw_at(0).clone(), self.raw_at(1)) {
            if !is_keyword(&x) {
                let save = self.pos;
                self.advance();
                self.advance();
                let dom = self.expr()?;
                if self.eat_sym("|->") {
                    let body = self.with_bound(std::slice::from_ref(&x), |p| p.expr())?;
                    self.expect_sym("]")?;
                    return Ok(Expr::func_lit(&x, dom, body));
                }
                self.pos = save;
            }
        }
        let e = self.expr()?;
        if self.eat_kw("EXCEPT") {
            let mut ups = vec![];
            loop {
                self.expect_sym("!")?;
                self.expect_sym("[")?;
                let k = self.expr()?;
                self.expect_sym("]")?;
                self.expect_sym("=")?;
                let v = self.expr()?;
                ups.push((k, v));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("]")?;
            return Ok(Expr::Except(Box::new(e), ups));
        }
        if self.eat_sym("->") {
            let r = self.expr()?;
            self.expect_sym("]")?;
            return Ok(Expr::FuncSet(Box::new(e), Box::new(r)));
        }
        if self.eat_sym("]_") {
            let sub = self.atom()?;
            return Ok(Expr::BoxAction(Box::new(e), Box::new(sub)));
        }
        Err(self.unexpected("`|->`, `EXCEPT`, `->`, or `]_`"))
    }

    fn name_ref(&mut self, name: String, pos: SourcePos) -> PResult<Expr> {
        if self.at_sym("!") && matches!(self.raw_at(1), Tok::Sym("(")) {
            self.advance();
            self.advance();
            let args = self.with_fence(0, |p| p.expr_list(")"))?;
            self.check_def(&name, None, pos)?;
            return Ok(Expr::Bang(name, args));
        }
        if self.at_sym("(") {
            self.advance();
            let args = self.with_fence(0, |p| p.expr_list(")"))?;
            if self.scope.bound.contains(&name)
                || self.scope.consts.contains(&name)
                || self.scope.vars.contains(&name)
            {
                return Err(ParseError::syntax(pos.line, pos.col, &format!("`{name}` is not an operator")));
            }
            self.check_def(&name, Some(args.len()), pos)?;
            return Ok(Expr::Apply(name, args));
        }
        if let Some(i) = self.scope.bound.iter().rev().position(|b| *b == name) {
            return Ok(Expr::Bound(i as u32, Hint(name)));
        }
        if self.scope.consts.contains(&name) {
            return Ok(Expr::Const(name));
        }
        if self.scope.vars.contains(&name) {
            return Ok(Expr::Var(name));
        }
        self.check_def(&name, Some(0), pos)?;
        Ok(Expr::Apply(name, vec![]))
    }

    fn check_def(&self, name: &str, arity: Option<usize>, pos: SourcePos) -> PResult<()> {
        match self.scope.defs.get(name) {
            Some(&n) => match arity {
                Some(a) if a != n => Err(ParseError::syntax(
                    pos.line,
                    pos.col,
                    &format!("`{name}` expects {n} argument(s), got {a}"),
                )),
                _ => Ok(()),
            },
            None if self.scope.later.contains(name) => Err(ParseError::Order {
                line: pos.line,
                col: pos.col,
                name: name.to_string(),
            }),
            None if self.scope.lenient => Ok(()),
            None => Err(ParseError::Scope {
                line: pos.line,
                col: pos.col,
                name: name.to_string(),
            }),
        }
    }

    // ---- statements and proofs ----

    /// `ASSUME ... PROVE ...` or a plain formula. NEW names stay in scope
    /// afterwards; the caller pops them.
    fn statement(&mut self) -> PResult<Statement> {
        if !self.eat_kw("ASSUME") {
            return Ok(Statement::Expr(self.expr()?));
        }
        let mut assumptions = vec![];
        loop {
            if self.eat_kw("NEW") {
                let (name, pos) = self.ident()?;
                if self.scope.consts.contains(&name) || self.scope.vars.contains(&name) {
                    return Err(ParseError::syntax(pos.line, pos.col, &format!("`{name}` is already declared")));
                }
                let domain = if self.eat_sym("\\in") { Some(self.expr()?) } else { None };
                self.scope.consts.push(name.clone());
                assumptions.push(Assumption::New { name, domain });
            } else {
                assumptions.push(Assumption::Fact(self.expr()?));
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_kw("PROVE")?;
        let goal = self.expr()?;
        Ok(Statement::Sequent(AssumeProve { assumptions, goal }))
    }

    fn statement_news(st: &Statement) -> usize {
        match st {
            Statement::Sequent(ap) => ap
                .assumptions
                .iter()
                .filter(|a| matches!(a, Assumption::New { .. }))
                .count(),
            Statement::Expr(_) => 0,
        }
    }

    /// Proof of a statement at `level` (0 for a theorem).
    pub fn proof(&mut self, level: u32) -> PResult<Proof> {
        let explicit = self.eat_kw("PROOF");
        if self.eat_kw("OBVIOUS") {
            return Ok(Proof::Obvious);
        }
        if self.eat_kw("OMITTED") {
            return Ok(Proof::Omitted { implicit: false });
        }
        if self.eat_kw("BY") {
            return Ok(Proof::By(self.by_clause()?));
        }
        if let Tok::StepDef(l) = self.peek() {
            if l.level > level {
                let lvl = l.level;
                return Ok(Proof::Steps(self.step_list(lvl)?));
            }
        }
        if explicit {
            return Err(self.unexpected("proof"));
        }
        Ok(Proof::Omitted { implicit: true })
    }

    fn by_clause(&mut self) -> PResult<ByClause> {
        let mut facts = vec![];
        if !self.at_kw("DEF") && !self.at_kw("DEFS") {
            loop {
                if let Tok::StepRef(l) = self.peek().clone() {
                    let pos = self.here();
                    self.advance();
                    if self.check_refs && !self.visible.contains(&l) {
                        return Err(ParseError::DanglingStepReference {
                            line: pos.line,
                            col: pos.col,
                            label: l.to_string(),
                        });
                    }
                    facts.push(FactRef::Step(l));
                } else {
                    facts.push(FactRef::Expr(self.expr()?));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        let mut defs = vec![];
        let mut keyword = DefKeyword::Def;
        if self.at_kw("DEF") || self.at_kw("DEFS") {
            if self.eat_kw("DEFS") {
                keyword = DefKeyword::Defs;
            } else {
                self.advance();
            }
            loop {
                let (name, pos) = self.ident()?;
                if !self.scope.lenient && !self.scope.defs.contains_key(&name) && !self.scope.later.contains(&name) {
                    return Err(ParseError::Scope {
                        line: pos.line,
                        col: pos.col,
                        name,
                    });
                }
                defs.push(name);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        Ok(ByClause { facts, defs, keyword })
    }

    fn step_list(&mut self, level: u32) -> PResult<Vec<Step>> {
        let visible_mark = self.visible.len();
        let consts_mark = self.scope.consts.len();
        let mut steps: Vec<Step> = vec![];
        while let Tok::StepDef(l) = self.peek().clone() {
            if l.level != level {
                if l.level > level {
                    return Err(self.err_here(&format!("unexpected step level {}", l.level)));
                }
                break;
            }
            let pos = self.here();
            self.advance();
            if steps.iter().any(|s| s.label == l) {
                return Err(ParseError::syntax(pos.line, pos.col, &format!("duplicate step label {l}")));
            }
            let before = self.scope.consts.len();
            let (kind, keep) = if self.eat_kw("QED") {
                (StepKind::Qed, 0)
            } else if self.eat_kw("SUFFICES") {
                let st = self.statement()?;
                let n = Self::statement_news(&st);
                (StepKind::Suffices(st), n)
            } else if self.eat_kw("CASE") {
                (StepKind::Case(self.expr()?), 0)
            } else if self.eat_kw("PICK") {
                let (name, npos) = self.ident()?;
                if self.scope.consts.contains(&name) || self.scope.vars.contains(&name) {
                    return Err(ParseError::syntax(npos.line, npos.col, &format!("`{name}` is already declared")));
                }
                self.expect_sym("\\in")?;
                let domain = self.expr()?;
                self.expect_sym(":")?;
                self.scope.consts.push(name.clone());
                let body = self.expr()?;
                (StepKind::Pick { name, domain, body }, 1)
            } else {
                (StepKind::Assert(self.statement()?), 0)
            };
            // The proof of a SUFFICES or PICK step does not see its new names.
            let introduced: Vec<String> = self.scope.consts.drain(before..).collect();
            let own_scope = matches!(kind, StepKind::Assert(_));
            if own_scope {
                self.scope.consts.extend(introduced.iter().cloned());
            }
            self.visible.push(l.clone());
            let proof = self.proof(level)?;
            if own_scope {
                self.scope.consts.truncate(before);
            }
            if keep > 0 {
                self.scope.consts.extend(introduced);
            }
            steps.push(Step {
                label: l,
                kind,
                proof,
                pos,
            });
        }
        self.visible.truncate(visible_mark);
        self.scope.consts.truncate(consts_mark);
        match steps.last() {
            None => Err(self.unexpected("proof step")),
            Some(s) if s.kind != StepKind::Qed => Err(ParseError::MissingQed {
                line: s.pos.line,
                col: s.pos.col,
            }),
            Some(_) => Ok(steps),
        }
    }

    // ---- module ----

    fn module(&mut self, src: &str) -> PResult<SpecModule> {
        self.eat_dashes();
        self.expect_kw("MODULE")?;
        let (name, _) = self.ident()?;
        self.eat_dashes();
        let mut m = SpecModule::empty(&name);
        m.pluscal = extract_pluscal(src);
        self.scope.later = prescan_definitions(&self.toks);
        loop {
            match self.peek().clone() {
                Tok::ModuleEnd | Tok::Eof => break,
                Tok::Dashes => {
                    self.advance();
                }
                Tok::Ident(k) if k == "VARIABLE" || k == "VARIABLES" => {
                    self.advance();
                    let mut names = vec![];
                    loop {
                        let (v, pos) = self.ident()?;
                        if m.variables.contains(&v) || self.scope.defs.contains_key(&v) {
                            return Err(ParseError::syntax(pos.line, pos.col, &format!("`{v}` is already declared")));
                        }
                        self.scope.vars.insert(v.clone());
                        m.variables.push(v.clone());
                        names.push(v);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    m.units.push(Unit::Variables(names));
                }
                Tok::Ident(k) if k == "THEOREM" => {
                    let pos = self.here();
                    self.advance();
                    let name = match (self.raw_at(0), self.raw_at(1)) {
                        (Tok::Ident(n), Tok::Sym("==")) if !is_keyword(n) => {
                            let n = n.clone();
                            self.advance();
                            self.advance();
                            Some(n)
                        }
                        _ => None,
                    };
                    let statement = self.statement()?;
                    let proof = self.proof(0)?;
                    self.scope.consts.clear();
                    m.units.push(Unit::Theorem(m.theorems.len()));
                    m.theorems.push(Theorem {
                        name,
                        statement,
                        proof,
                        defs_visible: m.definitions.len(),
                        pos,
                    });
                }
                Tok::Ident(_) => {
                    let d = self.definition(&m)?;
                    self.scope.later.remove(&d.name);
                    self.scope.defs.insert(d.name.clone(), d.params.len());
                    m.units.push(Unit::Definition(m.definitions.len()));
                    m.definitions.push(d);
                }
                _ => return Err(self.unexpected("definition, VARIABLES, or THEOREM")),
            }
        }
        Ok(m)
    }

    fn eat_dashes(&mut self) {
        while matches!(self.peek(), Tok::Dashes) {
            self.advance();
        }
    }

    fn definition(&mut self, m: &SpecModule) -> PResult<Definition> {
        let (name, pos) = self.ident()?;
        if self.scope.defs.contains_key(&name) || self.scope.vars.contains(&name) {
            return Err(ParseError::syntax(pos.line, pos.col, &format!("`{name}` is already defined")));
        }
        let mut params = vec![];
        if self.eat_sym("(") {
            loop {
                let (p, ppos) = self.ident()?;
                if params.contains(&p) {
                    return Err(ParseError::syntax(ppos.line, ppos.col, &format!("duplicate parameter `{p}`")));
                }
                params.push(p);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym("==")?;
        let body = self.with_bound(&params, |p| p.expr())?;
        Ok(Definition::new(&name, params, body, &m.definitions).with_pos(pos))
    }

    pub fn at_end(&self) -> bool {
        matches!(self.raw().tok, Tok::Eof)
    }
}

/// Names introduced by `Name ==` or `Name(params) ==` anywhere in the token
/// stream, excluding theorem names.
fn prescan_definitions(toks: &[Token]) -> HashSet<String> {
    let mut out = HashSet::new();
    for k in 1..toks.len() {
        if toks[k].tok != Tok::Sym("==") {
            continue;
        }
        let mut j = k - 1;
        if toks[j].tok == Tok::Sym(")") {
            while j > 0 && toks[j].tok != Tok::Sym("(") {
                j -= 1;
            }
            if j == 0 {
                continue;
            }
            j -= 1;
        }
        if let Tok::Ident(n) = &toks[j].tok {
            let theorem = j > 0 && toks[j - 1].tok == Tok::Ident("THEOREM".into());
            if !theorem && !is_keyword(n) {
                out.insert(n.clone());
            }
        }
    }
    out
}

/// The `--algorithm Name { ... }` text inside the module, braces balanced.
pub fn extract_pluscal(src: &str) -> Option<String> {
    let start = src.find("--algorithm")?;
    let bytes = src.as_bytes();
    let mut depth = 0i32;
    let mut i = start;
    let mut seen_open = false;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
            }
            b'\\' if bytes.get(i + 1) == Some(&b'*') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'{' => {
                depth += 1;
                seen_open = true;
            }
            b'}' => {
                depth -= 1;
                if seen_open && depth == 0 {
                    return Some(src[start..=i].to_string());
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

pub fn parse_module(text: &str) -> PResult<SpecModule> {
    let mut p = Parser::new(text)?;
    let m = p.module(text)?;
    if !matches!(p.peek(), Tok::ModuleEnd | Tok::Eof) {
        return Err(p.unexpected("end of module"));
    }
    Ok(m)
}

/// Parse an expression in the scope of `module` (its variables and all of
/// its definitions).
pub fn parse_expr(text: &str, module: &SpecModule) -> PResult<Expr> {
    let mut p = Parser::new(text)?;
    p.scope.vars = module.variables.iter().cloned().collect();
    p.scope.defs = module
        .definitions
        .iter()
        .map(|d| (d.name.clone(), d.params.len()))
        .collect();
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

/// Parse a detached proof. Identifiers are taken as opaque definitions and
/// step references are not resolved.
pub fn parse_proof(text: &str) -> PResult<Proof> {
    let mut p = Parser::new(text)?;
    p.scope.lenient = true;
    p.check_refs = false;
    let proof = p.proof(0)?;
    if !p.at_end() {
        return Err(p.unexpected("end of proof"));
    }
    Ok(proof)
}
