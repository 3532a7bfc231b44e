use std::sync::Arc;

use thiserror::Error;

use super::obligation::Obligation;
use crate::kernel::{Decl, Definition, Expr, SourcePos};
use crate::syntax::{AssumeProve, Assumption, FactRef, Proof, SpecModule, Statement, Step, StepKind, StepLabel};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("line {line}: unknown step reference {label}")]
    UnknownStepReference { label: String, line: usize },
    #[error("no theorem {0}")]
    NoSuchTheorem(String),
    #[error("no step {0}")]
    NoSuchStep(String),
}

/// A node of the step tree: the theorem itself (no label) or a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepNode {
    pub label: Option<StepLabel>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub obligations: Vec<usize>,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elaboration {
    pub theorem: usize,
    pub name: String,
    /// Pre-order; index 0 is the theorem.
    pub steps: Vec<StepNode>,
    pub obligations: Vec<Obligation>,
}

impl Elaboration {
    /// First step (in proof order) carrying `label`.
    pub fn find(&self, label: &StepLabel) -> Option<usize> {
        self.steps.iter().position(|s| s.label.as_ref() == Some(label))
    }

    /// `root` and all nodes below it.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut out = vec![root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.steps[out[i]].children.iter().copied());
            i += 1;
        }
        out.sort();
        out
    }
}

#[derive(Clone)]
struct Scope {
    decls: Vec<Decl>,
    implicit: Vec<Expr>,
    /// Facts reachable through step labels; later entries shadow earlier.
    labels: Vec<(StepLabel, Vec<Expr>)>,
    goal: Expr,
}

impl Scope {
    fn lookup(&self, l: &StepLabel) -> Option<&[Expr]> {
        self.labels.iter().rev().find(|(k, _)| k == l).map(|(_, f)| f.as_slice())
    }

    fn introduce(&mut self, ap: &AssumeProve) -> Vec<Expr> {
        let mut facts = vec![];
        for a in &ap.assumptions {
            match a {
                Assumption::New { name, domain } => {
                    self.decls.push(Decl::Constant(name.clone()));
                    if let Some(d) = domain {
                        self.implicit.push(Expr::member(Expr::constant(name), d.clone()));
                    }
                }
                Assumption::Fact(f) => facts.push(f.clone()),
            }
        }
        facts
    }
}

/// `ASSUME NEW x \in S, A PROVE G` as the formula `\A x \in S : A => G`.
/// A `NEW` without a domain stays free, which only weakens the formula.
pub fn sequent_formula(ap: &AssumeProve) -> Expr {
    let facts: Vec<Expr> = ap
        .assumptions
        .iter()
        .filter_map(|a| match a {
            Assumption::Fact(f) => Some(f.clone()),
            _ => None,
        })
        .collect();
    let mut body = match facts.len() {
        0 => ap.goal.clone(),
        1 => Expr::implies(facts[0].clone(), ap.goal.clone()),
        _ => Expr::implies(Expr::and(facts), ap.goal.clone()),
    };
    for a in ap.assumptions.iter().rev() {
        if let Assumption::New { name, domain: Some(d) } = a {
            body = Expr::forall(name, d.clone(), body.abstract_const(name));
        }
    }
    body
}

fn statement_parts(st: &Statement) -> AssumeProve {
    match st {
        Statement::Expr(e) => AssumeProve {
            assumptions: vec![],
            goal: e.clone(),
        },
        Statement::Sequent(ap) => ap.clone(),
    }
}

struct Walker {
    theorem: usize,
    env: Arc<Vec<Definition>>,
    steps: Vec<StepNode>,
    obligations: Vec<Obligation>,
}

/// Turn the proof of theorem `index` into obligations.
pub fn elaborate(module: &SpecModule, index: usize) -> Result<Elaboration, ElabError> {
    let th = module
        .theorems
        .get(index)
        .ok_or_else(|| ElabError::NoSuchTheorem(index.to_string()))?;
    let mut w = Walker {
        theorem: index,
        env: Arc::new(module.definitions[..th.defs_visible].to_vec()),
        steps: vec![StepNode {
            label: None,
            parent: None,
            children: vec![],
            obligations: vec![],
            depth: 0,
        }],
        obligations: vec![],
    };
    let mut sc = Scope {
        decls: module.variables.iter().map(|v| Decl::Variable(v.clone())).collect(),
        implicit: vec![],
        labels: vec![],
        goal: Expr::TRUE,
    };
    let ap = statement_parts(&th.statement);
    // Assumptions of the theorem itself cannot be cited by label.
    let facts = sc.introduce(&ap);
    sc.implicit.extend(facts);
    sc.goal = ap.goal;
    let name = th.name.clone().unwrap_or_else(|| (index + 1).to_string());
    w.proof(&th.proof, &sc, 0, &name, th.pos)?;
    Ok(Elaboration {
        theorem: index,
        name,
        steps: w.steps,
        obligations: w.obligations,
    })
}

/// Elaborate every theorem of the module.
pub fn elaborate_all(module: &SpecModule) -> Result<Vec<Elaboration>, ElabError> {
    (0..module.theorems.len()).map(|i| elaborate(module, i)).collect()
}

impl Walker {
    #[allow(clippy::too_many_arguments)]
    fn emit(&mut self, sc: &Scope, node: usize, id: String, facts: Vec<Expr>, goal: Expr, expand: Vec<String>, omitted: bool, pos: SourcePos) {
        let i = self.obligations.len();
        self.obligations.push(Obligation {
            id,
            theorem: self.theorem,
            step: node,
            decls: sc.decls.clone(),
            implicit: sc.implicit.clone(),
            facts,
            goal,
            expand,
            omitted,
            env: self.env.clone(),
            pos,
        });
        self.steps[node].obligations.push(i);
    }

    fn proof(&mut self, p: &Proof, sc: &Scope, node: usize, id: &str, pos: SourcePos) -> Result<(), ElabError> {
        match p {
            Proof::Obvious => self.emit(sc, node, id.into(), vec![], sc.goal.clone(), vec![], false, pos),
            Proof::Omitted { .. } => self.emit(sc, node, id.into(), vec![], sc.goal.clone(), vec![], true, pos),
            Proof::By(by) => {
                let mut facts = vec![];
                let mut formulas = vec![];
                for f in &by.facts {
                    match f {
                        FactRef::Step(l) => {
                            let found = sc.lookup(l).ok_or_else(|| ElabError::UnknownStepReference {
                                label: l.to_string(),
                                line: pos.line,
                            })?;
                            facts.extend(found.iter().cloned());
                        }
                        FactRef::Expr(e) => formulas.push(e.clone()),
                    }
                }
                for (k, e) in formulas.iter().enumerate() {
                    let side = format!("{id} fact {}", k + 1);
                    self.emit(sc, node, side, facts.clone(), e.clone(), by.defs.clone(), false, pos);
                }
                facts.extend(formulas);
                self.emit(sc, node, id.into(), facts, sc.goal.clone(), by.defs.clone(), false, pos);
            }
            Proof::Steps(steps) => {
                let mut cur = sc.clone();
                for s in steps {
                    self.step(s, &mut cur, node)?;
                }
            }
        }
        Ok(())
    }

    fn step(&mut self, s: &Step, cur: &mut Scope, parent: usize) -> Result<(), ElabError> {
        let node = self.steps.len();
        self.steps.push(StepNode {
            label: Some(s.label.clone()),
            parent: Some(parent),
            children: vec![],
            obligations: vec![],
            depth: self.steps[parent].depth + 1,
        });
        self.steps[parent].children.push(node);
        let id = s.label.to_string();
        let label = s.label.clone();
        match &s.kind {
            StepKind::Assert(st) => {
                let ap = statement_parts(st);
                let mut sub = cur.clone();
                let facts = sub.introduce(&ap);
                sub.labels.push((label.clone(), facts));
                sub.goal = ap.goal.clone();
                self.proof(&s.proof, &sub, node, &id, s.pos)?;
                cur.labels.push((label, vec![sequent_formula(&ap)]));
            }
            StepKind::Suffices(st) => {
                let ap = statement_parts(st);
                let mut sub = cur.clone();
                sub.implicit.push(sequent_formula(&ap));
                self.proof(&s.proof, &sub, node, &id, s.pos)?;
                let facts = cur.introduce(&ap);
                cur.labels.push((label, facts));
                cur.goal = ap.goal;
            }
            StepKind::Case(c) => {
                let mut sub = cur.clone();
                sub.labels.push((label.clone(), vec![c.clone()]));
                self.proof(&s.proof, &sub, node, &id, s.pos)?;
                let after = Expr::implies(c.clone(), cur.goal.clone());
                cur.labels.push((label, vec![after]));
            }
            StepKind::Pick { name, domain, body } => {
                let mut sub = cur.clone();
                sub.goal = Expr::exists(name, domain.clone(), body.abstract_const(name));
                self.proof(&s.proof, &sub, node, &id, s.pos)?;
                cur.decls.push(Decl::Constant(name.clone()));
                cur.implicit.push(Expr::member(Expr::constant(name), domain.clone()));
                cur.implicit.push(body.clone());
                cur.labels.push((label, vec![body.clone()]));
            }
            StepKind::Qed => {
                let sub = cur.clone();
                self.proof(&s.proof, &sub, node, &id, s.pos)?;
            }
        }
        Ok(())
    }
}
