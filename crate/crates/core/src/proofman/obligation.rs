use std::sync::Arc;

use crate::kernel::{expand_definitions, BinOp, Decl, DefEnv, Definition, Expr, KernelError, Level, SourcePos};
use crate::syntax::printer::Printer;
use crate::syntax::StepLabel;

/// One proof obligation: the context in force at a leaf proof, the facts it
/// cites, the definitions it may open, and the goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    /// Printable name: the step label, or the theorem for a top-level leaf,
    /// with a suffix for citation side obligations.
    pub id: String,
    pub theorem: usize,
    /// Index of the owning node in [`super::Elaboration::steps`].
    pub step: usize,
    pub decls: Vec<Decl>,
    /// Facts usable without citation: `NEW` domains and `PICK` facts.
    pub implicit: Vec<Expr>,
    pub facts: Vec<Expr>,
    pub goal: Expr,
    pub expand: Vec<String>,
    pub omitted: bool,
    pub env: Arc<Vec<Definition>>,
    pub pos: SourcePos,
}

impl Obligation {
    pub fn hypotheses(&self) -> Vec<Expr> {
        self.implicit.iter().chain(&self.facts).cloned().collect()
    }

    pub fn is_temporal(&self) -> bool {
        self.goal.level(&*self.env) == Level::Temporal
    }

    /// Hypotheses and goal with the expand set opened.
    pub fn expanded(&self) -> Result<(Vec<Expr>, Expr), KernelError> {
        let env: &dyn DefEnv = &*self.env;
        let hyps = self
            .hypotheses()
            .iter()
            .map(|h| expand_definitions(h, &self.expand, env))
            .collect::<Result<_, _>>()?;
        Ok((hyps, expand_definitions(&self.goal, &self.expand, env)?))
    }

    pub fn label(&self) -> Option<StepLabel> {
        StepLabel::parse(self.id.split(' ').next().unwrap_or(""))
    }
}

/// Render in `ASSUME ... PROVE ...` form with the expand set opened.
pub fn print_obligation(ob: &Obligation) -> String {
    let (hyps, goal) = ob.expanded().unwrap_or_else(|_| (ob.hypotheses(), ob.goal.clone()));
    let mut used = vec![false; hyps.len()];
    let mut items: Vec<Item> = vec![];
    for d in &ob.decls {
        match d {
            Decl::Variable(n) => items.push(Item::Text(format!("NEW VARIABLE {n}"))),
            Decl::Constant(n) => {
                let dom = hyps.iter().enumerate().find_map(|(i, h)| match h {
                    Expr::Bin(BinOp::In, x, s) if !used[i] && matches!(&**x, Expr::Const(c) if c == n) => {
                        Some((i, (**s).clone()))
                    }
                    _ => None,
                });
                match dom {
                    Some((i, s)) => {
                        used[i] = true;
                        items.push(Item::Domain(n.clone(), s));
                    }
                    None => items.push(Item::Text(format!("NEW CONSTANT {n}"))),
                }
            }
        }
    }
    for (h, u) in hyps.into_iter().zip(used) {
        if !u {
            items.push(Item::Fact(h));
        }
    }
    let mut p = Printer::new();
    if items.is_empty() {
        p.write("PROVE ");
        p.expr_top(&goal);
        return p.finish();
    }
    p.write("ASSUME ");
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            p.write(",");
            p.newline(7);
        }
        match it {
            Item::Text(t) => p.write(t),
            Item::Domain(n, s) => {
                p.write(&format!("NEW CONSTANT {n} \\in "));
                p.expr_top(s);
            }
            Item::Fact(e) => p.expr_top(e),
        }
    }
    p.newline(0);
    p.write("PROVE  ");
    p.expr_top(&goal);
    p.finish()
}

enum Item {
    Text(String),
    Domain(String, Expr),
    Fact(Expr),
}
