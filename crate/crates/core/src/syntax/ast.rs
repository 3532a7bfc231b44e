//! Module, theorem and proof-tree structure.

use std::fmt;

use crate::kernel::{DefEnv, Definition, Expr, SourcePos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecModule {
    pub name: String,
    pub variables: Vec<String>,
    pub definitions: Vec<Definition>,
    pub theorems: Vec<Theorem>,
    /// Source order of declarations, used when printing.
    pub units: Vec<Unit>,
    /// Raw text of an embedded `--algorithm` block, if any.
    pub pluscal: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unit {
    Variables(Vec<String>),
    Definition(usize),
    Theorem(usize),
}

impl SpecModule {
    pub fn empty(name: &str) -> SpecModule {
        SpecModule {
            name: name.to_string(),
            variables: vec![],
            definitions: vec![],
            theorems: vec![],
            units: vec![],
            pluscal: None,
        }
    }

    pub fn definition_index(&self, name: &str) -> Option<usize> {
        self.definitions.iter().position(|d| d.name == name)
    }

    pub fn theorem(&self, name: &str) -> Option<&Theorem> {
        self.theorems.iter().find(|t| t.name.as_deref() == Some(name))
    }
}

impl DefEnv for SpecModule {
    fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theorem {
    pub name: Option<String>,
    pub statement: Statement,
    pub proof: Proof,
    /// Number of module definitions that precede the theorem.
    pub defs_visible: usize,
    pub pos: SourcePos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Expr(Expr),
    Sequent(AssumeProve),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssumeProve {
    pub assumptions: Vec<Assumption>,
    pub goal: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assumption {
    /// `NEW x` or `NEW x \in S`; later items refer to it as `Expr::Const`.
    New { name: String, domain: Option<Expr> },
    Fact(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proof {
    Obvious,
    /// `implicit` is set when the proof was simply left out.
    Omitted { implicit: bool },
    By(ByClause),
    Steps(Vec<Step>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefKeyword {
    Def,
    Defs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByClause {
    pub facts: Vec<FactRef>,
    pub defs: Vec<String>,
    pub keyword: DefKeyword,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactRef {
    Step(StepLabel),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepLabel {
    pub level: u32,
    pub name: String,
}

impl StepLabel {
    pub fn new(level: u32, name: &str) -> Self {
        StepLabel {
            level,
            name: name.to_string(),
        }
    }

    /// Accepts `<1>2` (with or without a trailing dot).
    pub fn parse(s: &str) -> Option<StepLabel> {
        let s = s.trim().trim_end_matches('.');
        let rest = s.strip_prefix('<')?;
        let (lvl, name) = rest.split_once('>')?;
        let level = lvl.parse().ok()?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
            return None;
        }
        Some(StepLabel::new(level, name))
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>{}", self.level, self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: StepLabel,
    pub kind: StepKind,
    pub proof: Proof,
    pub pos: SourcePos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    Assert(Statement),
    Suffices(Statement),
    Case(Expr),
    /// `PICK x \in S : P`; `body` mentions the new constant as `Expr::Const`.
    Pick { name: String, domain: Expr, body: Expr },
    Qed,
}

impl Proof {
    pub fn steps(&self) -> &[Step] {
        match self {
            Proof::Steps(s) => s,
            _ => &[],
        }
    }
}
