//! PlusCal-to-TLA translation in the in-lined style: `pc` bookkeeping, one
//! action per label, `proc(self)`, `Next`, `vars`, `Init`, and `Spec`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kernel::{DefEnv, Definition, Expr, Layout};
use crate::syntax::parser::extract_pluscal;
use crate::syntax::pluscal::{Process, Stmt, StmtKind};
use crate::syntax::printer::print_definition;
use crate::syntax::{parse_module, parse_pluscal, ParseError, PlusCalAlgorithm};

pub const BEGIN_MARKER: &str = "\\* BEGIN TRANSLATION";
pub const END_MARKER: &str = "\\* END TRANSLATION";

/// Control value after a process falls off the end of its body.
pub const DONE: &str = "Done";

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no --algorithm block found")]
    NoAlgorithm,
    #[error("{line}:{col}: statement follows an if in the same atomic action")]
    AssignmentAfterBranch { line: usize, col: usize },
    #[error("{line}:{col}: `{var}` is assigned twice in one atomic action")]
    MultipleAssignSameVarInOneAction { line: usize, col: usize, var: String },
    #[error("label `{0}` is used by more than one process")]
    DuplicateLabel(String),
    #[error("`{0}` clashes with a name generated by the translator")]
    ReservedName(String),
    #[error("{0} without matching {1}")]
    UnbalancedRegion(&'static str, &'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationOutput {
    /// User variables followed by `pc`.
    pub variables: Vec<String>,
    /// `vars`, `Init`, the actions, one `proc` per process, `Next`, `Spec`.
    pub definitions: Vec<Definition>,
    pub actions: usize,
}

impl TranslationOutput {
    pub fn summary(&self) -> String {
        format!("translated: {} actions, {} definitions", self.actions, self.definitions.len())
    }

    /// Text of the translation region, without the markers.
    pub fn render(&self) -> String {
        let mut out = format!("VARIABLES {}\n", self.variables.join(", "));
        for d in &self.definitions {
            out.push('\n');
            out.push_str(&print_definition(d));
            out.push('\n');
        }
        out
    }
}

/// `env` supplies user definitions referenced by the algorithm (for levels).
pub fn translate(alg: &PlusCalAlgorithm, env: &[Definition]) -> Result<TranslationOutput, TranslateError> {
    let user_vars: Vec<String> = alg.variables.iter().map(|(v, _)| v.clone()).collect();
    let mut variables = user_vars.clone();
    variables.push("pc".into());

    let mut generated: Vec<String> = vec!["vars".into(), "Init".into(), "Next".into(), "Spec".into()];
    let mut all_labels = BTreeSet::new();
    for p in &alg.processes {
        for l in p.labels() {
            if !all_labels.insert(l.clone()) {
                return Err(TranslateError::DuplicateLabel(l));
            }
        }
        generated.push(p.name.clone());
    }
    for n in generated.iter().chain(&all_labels).chain(&variables) {
        if env.iter().any(|d| &d.name == n) {
            return Err(TranslateError::ReservedName(n.clone()));
        }
    }

    let mut defs: Vec<Definition> = env.to_vec();
    let start = defs.len();
    let push = |defs: &mut Vec<Definition>, name: &str, params: Vec<String>, body: Expr| {
        let d = Definition::new(name, params, body, &*defs);
        defs.push(d);
    };

    push(&mut defs, "vars", vec![], Expr::Tuple(variables.iter().map(|v| Expr::var(v)).collect()));

    let mut init: Vec<Expr> = alg
        .variables
        .iter()
        .map(|(v, e)| Expr::eq(Expr::var(v), e.clone()))
        .collect();
    init.push(Expr::eq(Expr::var("pc"), pc_init(&alg.processes)));
    push(&mut defs, "Init", vec![], Expr::And(init, Layout::BULLETS));

    let mut actions = 0;
    for p in &alg.processes {
        let mut acts = vec![];
        compile_seq(&p.body, DONE, &user_vars, &mut acts)?;
        for (label, body) in &acts {
            push(&mut defs, label, vec!["self".into()], body.abstract_const("self"));
        }
        actions += acts.len();
        let disj = acts
            .iter()
            .map(|(l, _)| Expr::apply(l, vec![Expr::bound(0, "self")]))
            .collect();
        push(&mut defs, &p.name, vec!["self".into()], Expr::Or(disj, Layout::INLINE));
    }

    let mut next: Vec<Expr> = alg
        .processes
        .iter()
        .map(|p| Expr::exists("self", p.domain.clone(), Expr::apply(&p.name, vec![Expr::bound(0, "self")])))
        .collect();
    let next = if next.len() == 1 { next.remove(0) } else { Expr::Or(next, Layout::BULLETS) };
    push(&mut defs, "Next", vec![], next);
    let spec = Expr::and(vec![
        Expr::op("Init"),
        Expr::Always(Box::new(Expr::BoxAction(Box::new(Expr::op("Next")), Box::new(Expr::op("vars"))))),
    ]);
    push(&mut defs, "Spec", vec![], spec);

    Ok(TranslationOutput {
        variables,
        definitions: defs.split_off(start),
        actions,
    })
}

fn pc_init(procs: &[Process]) -> Expr {
    let first = |p: &Process| Expr::str(p.body.first().and_then(|s| s.label.as_deref()).unwrap_or(DONE));
    if let [p] = procs {
        return Expr::func_lit("self", p.domain.clone(), first(p));
    }
    let dom = procs
        .iter()
        .map(|p| p.domain.clone())
        .reduce(|a, b| Expr::bin(crate::kernel::BinOp::Cup, a, b))
        .unwrap_or_else(|| Expr::SetEnum(vec![]));
    // Nested IF on membership, last process in the ELSE.
    let mut body = first(procs.last().unwrap());
    for p in procs[..procs.len() - 1].iter().rev() {
        body = Expr::ite(Expr::member(Expr::bound(0, "self"), p.domain.shift(1, 0)), first(p), body);
    }
    Expr::func_lit("self", dom, body)
}

/// Compile a statement sequence whose control continues at `cont` once it
/// finishes. Appends `(label, action body)` pairs in source order.
fn compile_seq(
    stmts: &[Stmt],
    cont: &str,
    vars: &[String],
    out: &mut Vec<(String, Expr)>,
) -> Result<(), TranslateError> {
    let mut i = 0;
    while i < stmts.len() {
        let label = stmts[i].label.clone().expect("label rules checked by the parser");
        let mut j = i + 1;
        while j < stmts.len() && stmts[j].label.is_none() {
            j += 1;
        }
        let next = stmts.get(j).and_then(|s| s.label.as_deref()).unwrap_or(cont);
        let guard = Expr::eq(pc_at(Expr::var("pc")), Expr::str(&label));
        if let StmtKind::While { cond, body } = &stmts[i].kind {
            let first = body[0].label.as_deref().unwrap_or(cont);
            let go = if cond.is_true() {
                set_pc(first)
            } else {
                Expr::ite(cond.clone(), set_pc(first), set_pc(next))
            };
            let mut conj = vec![guard, go];
            conj.extend(unchanged(vars, &BTreeSet::new()));
            out.push((label.clone(), Expr::And(conj, Layout::BULLETS)));
            compile_seq(body, &label, vars, out)?;
        } else {
            let mut assigned = BTreeSet::new();
            let mut conj = vec![guard];
            conj.extend(atomic(&stmts[i..j], next, vars, &mut assigned)?);
            conj.extend(unchanged(vars, &assigned));
            out.push((label, Expr::And(conj, Layout::BULLETS)));
        }
        i = j;
    }
    Ok(())
}

/// Conjuncts for one atomic step: assignments in order, then the `pc'` update.
fn atomic(
    stmts: &[Stmt],
    cont: &str,
    vars: &[String],
    assigned: &mut BTreeSet<String>,
) -> Result<Vec<Expr>, TranslateError> {
    let mut conj = vec![];
    for (k, s) in stmts.iter().enumerate() {
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Goto(l) => {
                conj.push(set_pc(l));
                return Ok(conj);
            }
            StmtKind::Assign { var, index, value } => {
                if !assigned.insert(var.clone()) {
                    return Err(TranslateError::MultipleAssignSameVarInOneAction {
                        line: s.pos.line,
                        col: s.pos.col,
                        var: var.clone(),
                    });
                }
                let value = prime_assigned(value, assigned, var);
                let rhs = match index {
                    None => value,
                    Some(ix) => Expr::Except(
                        Box::new(Expr::var(var)),
                        vec![(prime_assigned(ix, assigned, var), value)],
                    ),
                };
                conj.push(Expr::eq(Expr::prime(Expr::var(var)), rhs));
            }
            StmtKind::If { cond, then, els } => {
                if let Some(bad) = stmts[k + 1..].iter().find(|s| s.kind != StmtKind::Skip) {
                    return Err(TranslateError::AssignmentAfterBranch {
                        line: bad.pos.line,
                        col: bad.pos.col,
                    });
                }
                let before = assigned.clone();
                let mut a_then = before.clone();
                let mut a_else = before.clone();
                let t = atomic(then, cont, vars, &mut a_then)?;
                let e = atomic(els, cont, vars, &mut a_else)?;
                let branch = |mut c: Vec<Expr>, mine: &BTreeSet<String>, other: &BTreeSet<String>| {
                    let missing: BTreeSet<String> = other.difference(mine).cloned().collect();
                    let keep: Vec<String> = vars.iter().filter(|v| missing.contains(*v)).cloned().collect();
                    c.extend(unchanged(&keep, &BTreeSet::new()));
                    if c.len() == 1 {
                        c.remove(0)
                    } else {
                        Expr::And(c, Layout::BULLETS)
                    }
                };
                let cond = prime_assigned(cond, &before, "");
                conj.push(Expr::ite(cond, branch(t, &a_then, &a_else), branch(e, &a_else, &a_then)));
                assigned.extend(a_then);
                assigned.extend(a_else);
                return Ok(conj);
            }
            StmtKind::While { .. } => unreachable!("while always starts a labeled action"),
        }
    }
    conj.push(set_pc(cont));
    Ok(conj)
}

/// Reads of variables already assigned in this action see the new value.
fn prime_assigned(e: &Expr, assigned: &BTreeSet<String>, current: &str) -> Expr {
    e.map_with_depth(0, &mut |x, _| match x {
        Expr::Var(v) if v != current && assigned.contains(v) => Some(Expr::prime(x.clone())),
        _ => None,
    })
}

fn pc_at(pc: Expr) -> Expr {
    Expr::app(pc, Expr::constant("self"))
}

fn set_pc(label: &str) -> Expr {
    Expr::eq(
        Expr::prime(Expr::var("pc")),
        Expr::Except(Box::new(Expr::var("pc")), vec![(Expr::constant("self"), Expr::str(label))]),
    )
}

fn unchanged(vars: &[String], assigned: &BTreeSet<String>) -> Option<Expr> {
    let rest: Vec<&String> = vars.iter().filter(|v| !assigned.contains(*v)).collect();
    match rest.as_slice() {
        [] => None,
        [v] => Some(Expr::eq(Expr::prime(Expr::var(v)), Expr::var(v))),
        _ => Some(Expr::Unchanged(Box::new(Expr::Tuple(rest.iter().map(|v| Expr::var(v)).collect())))),
    }
}

/// Definitions of `src` that precede the translation region.
fn prefix_definitions(src: &str) -> Result<Vec<Definition>, TranslateError> {
    let cut = src.find(BEGIN_MARKER).or_else(|| module_end(src)).unwrap_or(src.len());
    let m = parse_module(&format!("{}\n====\n", &src[..cut]))?;
    Ok(m.definitions)
}

fn module_end(src: &str) -> Option<usize> {
    let mut off = 0;
    for line in src.split_inclusive('\n') {
        if line.trim_start().starts_with("====") {
            return Some(off);
        }
        off += line.len();
    }
    None
}

/// Translate the algorithm embedded in module text and rewrite (or insert)
/// the translation region. Returns the new text.
pub fn translate_source(src: &str) -> Result<(String, TranslationOutput), TranslateError> {
    let block = extract_pluscal(src).ok_or(TranslateError::NoAlgorithm)?;
    let offset = src[..src.find("--algorithm").unwrap()].matches('\n').count();
    let alg = parse_pluscal(&block).map_err(|e| shift_error(e, offset))?;
    let env = prefix_definitions(src)?;
    let out = translate(&alg, &env)?;
    let region = format!("{BEGIN_MARKER}\n{}{END_MARKER}\n", out.render());
    let text = match (src.find(BEGIN_MARKER), src.find(END_MARKER)) {
        (Some(b), Some(e)) if b < e => {
            let end = src[e..].find('\n').map(|k| e + k + 1).unwrap_or(src.len());
            format!("{}{region}{}", &src[..b], &src[end..])
        }
        (Some(_), _) => return Err(TranslateError::UnbalancedRegion("BEGIN TRANSLATION", "END TRANSLATION")),
        (None, Some(_)) => return Err(TranslateError::UnbalancedRegion("END TRANSLATION", "BEGIN TRANSLATION")),
        (None, None) => {
            let at = module_end(src).unwrap_or(src.len());
            format!("{}{region}{}", &src[..at], &src[at..])
        }
    };
    Ok((text, out))
}

fn shift_error(e: ParseError, lines: usize) -> ParseError {
    use ParseError::*;
    match e {
        Syntax { line, col, msg } => Syntax { line: line + lines, col, msg },
        Scope { line, col, name } => Scope { line: line + lines, col, name },
        Order { line, col, name } => Order { line: line + lines, col, name },
        MissingQed { line, col } => MissingQed { line: line + lines, col },
        DanglingStepReference { line, col, label } => DanglingStepReference { line: line + lines, col, label },
        UnlabeledStatement { line, col } => UnlabeledStatement { line: line + lines, col },
        UnknownGotoTarget { line, col, label } => UnknownGotoTarget { line: line + lines, col, label },
    }
}

impl DefEnv for TranslationOutput {
    fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::printer::print_expr;

    fn tr(text: &str) -> Result<TranslationOutput, TranslateError> {
        translate(&parse_pluscal(text)?, &[])
    }

    #[test]
    fn single_skip() {
        let out = tr("--algorithm A { variables x = 0, y = 1; process (p \\in {0}) { l0: skip } }").unwrap();
        assert_eq!(out.actions, 1);
        let l0 = out.definition("l0").unwrap();
        assert_eq!(
            print_expr(&l0.body.instantiate(&[Expr::constant("self")])).split_whitespace().collect::<String>(),
            "/\\pc[self]=\"l0\"/\\pc'=[pcEXCEPT![self]=\"Done\"]/\\UNCHANGED<<x,y>>"
        );
        let next = out.definition("Next").unwrap();
        assert!(matches!(next.body, Expr::Quant(..)));
    }

    #[test]
    fn later_assignment_reads_primed_value() {
        let out = tr("--algorithm A { variables x = 0, y = 0; process (p \\in {0}) { l0: x := 1; y := x + 1 } }")
            .unwrap();
        let body = print_expr(&out.definition("l0").unwrap().body);
        assert!(body.contains("y' = x' + 1"), "{body}");
    }

    #[test]
    fn double_assignment_rejected() {
        let r = tr("--algorithm A { variables x = 0; process (p \\in {0}) { l0: x := 1; x := 2 } }");
        assert!(matches!(r, Err(TranslateError::MultipleAssignSameVarInOneAction { .. })));
    }

    #[test]
    fn assignment_after_if_rejected() {
        let r = tr("--algorithm A { variables x = 0; process (p \\in {0}) { l0: if (x = 0) { skip }; x := 2 } }");
        assert!(matches!(r, Err(TranslateError::AssignmentAfterBranch { .. })));
    }

    #[test]
    fn branch_assignments_balance_unchanged() {
        let out = tr(
            "--algorithm A { variables x = 0, y = 0; process (p \\in {0}) { l0: if (x = 0) { x := 1 } else { y := 1 } } }",
        )
        .unwrap();
        let body = print_expr(&out.definition("l0").unwrap().body);
        assert!(body.contains("y' = y") && body.contains("x' = x"), "{body}");
        assert!(!body.contains("UNCHANGED"), "{body}");
    }
}
