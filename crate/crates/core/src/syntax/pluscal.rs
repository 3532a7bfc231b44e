//! The C-syntax PlusCal subset: one or more `process` blocks made of
//! labeled `while`, `if`/`else`, `goto`, `skip`, and assignments.

use std::collections::HashSet;

use super::lexer::Tok;
use super::parser::{PResult, Parser};
use super::ParseError;
use crate::kernel::{Expr, SourcePos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlusCalAlgorithm {
    pub name: String,
    pub variables: Vec<(String, Expr)>,
    pub processes: Vec<Process>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process {
    pub name: String,
    /// Inside bodies the process identity is `Expr::Const("self")`.
    pub domain: Expr,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub label: Option<String>,
    pub kind: StmtKind,
    pub pos: SourcePos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    While { cond: Expr, body: Vec<Stmt> },
    If { cond: Expr, then: Vec<Stmt>, els: Vec<Stmt> },
    Goto(String),
    Skip,
    /// `var := value` or `var[index] := value`.
    Assign { var: String, index: Option<Expr>, value: Expr },
}

impl Process {
    /// Labels in source order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = vec![];
        collect_labels(&self.body, &mut out);
        out
    }
}

fn collect_labels(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        if let Some(l) = &s.label {
            out.push(l.clone());
        }
        match &s.kind {
            StmtKind::While { body, .. } => collect_labels(body, out),
            StmtKind::If { then, els, .. } => {
                collect_labels(then, out);
                collect_labels(els, out);
            }
            _ => {}
        }
    }
}

pub fn parse_pluscal(text: &str) -> PResult<PlusCalAlgorithm> {
    let mut p = Parser::new(text)?;
    p.scope.lenient = true;
    p.scope.consts.push("self".into());
    if !matches!(p.peek(), Tok::Ident(s) if s == "--algorithm") {
        return Err(p.unexpected("`--algorithm`"));
    }
    p.advance();
    let (name, _) = p.ident()?;
    p.expect_sym("{")?;
    let mut variables = vec![];
    if p.eat_kw_lower("variables") || p.eat_kw_lower("variable") {
        loop {
            let (v, pos) = p.ident()?;
            if variables.iter().any(|(n, _): &(String, Expr)| *n == v) {
                return Err(ParseError::syntax(pos.line, pos.col, &format!("`{v}` is already declared")));
            }
            p.expect_sym("=")?;
            let init = p.expr()?;
            p.scope.vars.insert(v.clone());
            variables.push((v, init));
            if !p.eat_sym(",") {
                break;
            }
        }
        p.expect_sym(";")?;
    }
    let mut processes = vec![];
    while p.eat_kw_lower("process") {
        p.expect_sym("(")?;
        let (pname, _) = p.ident()?;
        p.expect_sym("\\in")?;
        let domain = p.expr()?;
        p.expect_sym(")")?;
        let body = block(&mut p)?;
        let proc = Process {
            name: pname,
            domain,
            body,
        };
        check_labels(&proc)?;
        processes.push(proc);
        p.eat_sym(";");
    }
    if processes.is_empty() {
        return Err(p.unexpected("`process`"));
    }
    p.expect_sym("}")?;
    if !p.at_end() {
        return Err(p.unexpected("end of algorithm"));
    }
    Ok(PlusCalAlgorithm {
        name,
        variables,
        processes,
    })
}

impl Parser {
    fn eat_kw_lower(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == k) {
            self.advance();
            true
        } else {
            false
        }
    }
}

/// `{ stmt; stmt; ... }`
fn block(p: &mut Parser) -> PResult<Vec<Stmt>> {
    p.expect_sym("{")?;
    let mut out = vec![];
    while !p.eat_sym("}") {
        out.push(stmt(p)?);
        if !p.eat_sym(";") && !p.at_sym("}") {
            return Err(p.unexpected("`;` or `}`"));
        }
    }
    Ok(out)
}

fn stmt(p: &mut Parser) -> PResult<Stmt> {
    let pos = p.here();
    let mut label = None;
    if let Tok::Ident(l) = p.peek().clone() {
        if matches!(p.lookahead(1), Tok::Sym(":")) {
            p.advance();
            p.advance();
            label = Some(l);
        }
    }
    let kind = match p.peek().clone() {
        Tok::Ident(k) if k == "while" => {
            p.advance();
            p.expect_sym("(")?;
            let cond = p.expr()?;
            p.expect_sym(")")?;
            StmtKind::While {
                cond,
                body: block(p)?,
            }
        }
        Tok::Ident(k) if k == "if" => {
            p.advance();
            p.expect_sym("(")?;
            let cond = p.expr()?;
            p.expect_sym(")")?;
            let then = block(p)?;
            let els = if p.eat_kw_lower("else") { block(p)? } else { vec![] };
            StmtKind::If { cond, then, els }
        }
        Tok::Ident(k) if k == "goto" => {
            p.advance();
            StmtKind::Goto(p.ident()?.0)
        }
        Tok::Ident(k) if k == "skip" => {
            p.advance();
            StmtKind::Skip
        }
        Tok::Ident(_) => {
            let (var, vpos) = p.ident()?;
            if !p.scope.vars.contains(&var) {
                return Err(ParseError::Scope {
                    line: vpos.line,
                    col: vpos.col,
                    name: var,
                });
            }
            let index = if p.eat_sym("[") {
                let i = p.expr()?;
                p.expect_sym("]")?;
                Some(i)
            } else {
                None
            };
            p.expect_sym(":=")?;
            StmtKind::Assign {
                var,
                index,
                value: p.expr()?,
            }
        }
        _ => return Err(p.unexpected("statement")),
    };
    Ok(Stmt { label, kind, pos })
}

/// Label placement rules of the subset, plus goto targets.
fn check_labels(proc: &Process) -> PResult<()> {
    let mut seen = HashSet::new();
    let mut stack: Vec<&Stmt> = proc.body.iter().rev().collect();
    while let Some(s) = stack.pop() {
        if let Some(l) = &s.label {
            if !seen.insert(l.clone()) {
                return Err(ParseError::syntax(s.pos.line, s.pos.col, &format!("duplicate label `{l}`")));
            }
        }
        match &s.kind {
            StmtKind::While { body, .. } => stack.extend(body.iter().rev()),
            StmtKind::If { then, els, .. } => {
                stack.extend(els.iter().rev());
                stack.extend(then.iter().rev());
            }
            _ => {}
        }
    }
    if let Some(first) = proc.body.first() {
        require_label(first)?;
    }
    check_seq(&proc.body, &seen, false)
}

fn require_label(s: &Stmt) -> PResult<()> {
    if s.label.is_none() {
        return Err(ParseError::UnlabeledStatement {
            line: s.pos.line,
            col: s.pos.col,
        });
    }
    Ok(())
}

fn check_seq(stmts: &[Stmt], labels: &HashSet<String>, in_branch: bool) -> PResult<()> {
    for (i, s) in stmts.iter().enumerate() {
        if in_branch && s.label.is_some() {
            return Err(ParseError::syntax(
                s.pos.line,
                s.pos.col,
                "labels inside if branches are not supported",
            ));
        }
        if i > 0 && matches!(stmts[i - 1].kind, StmtKind::While { .. } | StmtKind::Goto(_)) {
            require_label(s)?;
        }
        match &s.kind {
            StmtKind::While { body, .. } => {
                require_label(s)?;
                if in_branch {
                    return Err(ParseError::syntax(s.pos.line, s.pos.col, "while inside if branches is not supported"));
                }
                match body.first() {
                    Some(b) => require_label(b)?,
                    None => return Err(ParseError::syntax(s.pos.line, s.pos.col, "empty while body")),
                }
                check_seq(body, labels, false)?;
            }
            StmtKind::If { then, els, .. } => {
                check_seq(then, labels, true)?;
                check_seq(els, labels, true)?;
            }
            StmtKind::Goto(t) if !labels.contains(t) => {
                return Err(ParseError::UnknownGotoTarget {
                    line: s.pos.line,
                    col: s.pos.col,
                    label: t.clone(),
                });
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PETERSON: &str = r#"--algorithm Peterson {
  variables flag = [i \in {0, 1} |-> FALSE], turn = 0;
  process (proc \in {0,1}) {
    a0: while (TRUE) {
    a1:   flag[self] := TRUE;
    a2:   turn := Not(self);
    a3a:  if (flag[Not(self)]) {goto a3b} else {goto cs} ;
    a3b:  if (turn = Not(self)) {goto a3a} else {goto cs} ;
    cs:   skip;  \* critical section
    a4:   flag[self] := FALSE;
    } \* end while
  } \* end process
} \* end algorithm"#;

    #[test]
    fn peterson_labels() {
        let alg = parse_pluscal(PETERSON).unwrap();
        assert_eq!(alg.processes.len(), 1);
        assert_eq!(alg.processes[0].labels(), ["a0", "a1", "a2", "a3a", "a3b", "cs", "a4"]);
        assert_eq!(alg.variables.len(), 2);
    }

    #[test]
    fn missing_a1_label() {
        let text = PETERSON.replace("a1:   flag", "      flag");
        match parse_pluscal(&text) {
            Err(ParseError::UnlabeledStatement { line: 5, col: 11 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_goto() {
        let text = PETERSON.replace("goto a3b", "goto nowhere");
        assert!(matches!(parse_pluscal(&text), Err(ParseError::UnknownGotoTarget { .. })));
    }

    #[test]
    fn single_skip() {
        let alg = parse_pluscal("--algorithm A { process (p \\in {0}) { l0: skip } }").unwrap();
        assert_eq!(alg.processes[0].labels(), ["l0"]);
    }
}
