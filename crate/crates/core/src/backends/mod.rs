//! Back-end provers: ground evaluation, the temporal rule matcher, and an
//! SMT-LIB exporter.

pub mod ground;
pub mod smtlib;
pub mod temporal;

use std::fmt;

use crate::kernel::{distribute_prime, Expr, KernelError};
use crate::proofman::Obligation;

pub use ground::{Failure, Limits, Valuation, DEFAULT_BUDGET};
pub use smtlib::{export_formulas, export_smtlib, run_solver};
pub use temporal::apply_temporal_rules;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProverResult {
    Proved,
    Failed(Failure),
    Unsupported(String),
    Canceled,
}

impl fmt::Display for ProverResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProverResult::Proved => f.write_str("proved"),
            ProverResult::Failed(r) => write!(f, "failed: {r}"),
            ProverResult::Unsupported(r) => write!(f, "unsupported: {r}"),
            ProverResult::Canceled => f.write_str("canceled"),
        }
    }
}

fn unchanged(v: &Expr) -> Expr {
    match v {
        Expr::Tuple(items) => Expr::and(items.iter().map(|x| Expr::eq(Expr::prime(x.clone()), x.clone())).collect()),
        _ => Expr::eq(Expr::prime(v.clone()), v.clone()),
    }
}

/// Rewrite `[N]_v` to `N \/ UNCHANGED v` and `UNCHANGED` to equalities,
/// outside temporal operators.
pub fn lower_actions(e: &Expr) -> Expr {
    e.map_with_depth(0, &mut |node, _| match node {
        Expr::Always(_) => Some(node.clone()),
        Expr::BoxAction(a, v) => Some(Expr::or(vec![lower_actions(a), unchanged(&lower_actions(v))])),
        Expr::Unchanged(v) => Some(unchanged(&lower_actions(v))),
        _ => None,
    })
}

/// Hypotheses and goal in the form the ground prover and exporter take:
/// expand set opened, action abbreviations rewritten, primes distributed.
pub fn prepare(ob: &Obligation) -> Result<(Vec<Expr>, Expr), KernelError> {
    let (hyps, goal) = ob.expanded()?;
    let env = &*ob.env;
    let fix = |e: &Expr| distribute_prime(&lower_actions(e), env);
    Ok((hyps.iter().map(fix).collect::<Result<_, _>>()?, fix(&goal)?))
}

pub fn prove_ground(ob: &Obligation, limits: Limits) -> ProverResult {
    if ob.is_temporal() {
        return ProverResult::Unsupported("temporal goal".into());
    }
    let (hyps, goal) = match prepare(ob) {
        Ok(x) => x,
        Err(e) => return ProverResult::Unsupported(format!("non-normal form: {e}")),
    };
    match ground::prove(&hyps, &goal, limits) {
        ground::GroundOutcome::Proved => ProverResult::Proved,
        ground::GroundOutcome::Failed(f) => ProverResult::Failed(f),
        ground::GroundOutcome::Unsupported(r) => ProverResult::Unsupported(r),
        ground::GroundOutcome::Canceled => ProverResult::Canceled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::print_expr;

    #[test]
    fn box_action_lowers_to_disjunction() {
        let v = Expr::Tuple(vec![Expr::var("x"), Expr::var("y")]);
        let e = Expr::BoxAction(Box::new(Expr::apply("N", vec![])), Box::new(v));
        assert_eq!(print_expr(&lower_actions(&e)), "N \\/ x' = x /\\ y' = y");
    }
}
