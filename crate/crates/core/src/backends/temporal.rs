//! The one temporal proof rule supported: from `Init => I`,
//! `I /\ [N]_v => I'` and `I => P` conclude `Init /\ [][N]_v => []P`.

use super::{Failure, ProverResult};
use crate::kernel::{expand_definitions, DefEnv, Expr, Level};

/// Open temporal-level definitions until none remain.
fn unfold_temporal(e: &Expr, env: &dyn DefEnv) -> Expr {
    let mut cur = e.clone();
    for _ in 0..32 {
        let names: Vec<String> = cur
            .free_symbols()
            .into_iter()
            .filter(|n| env.definition(n).is_some_and(|d| d.level == Level::Temporal))
            .collect();
        if names.is_empty() {
            break;
        }
        match expand_definitions(&cur, &names, env) {
            Ok(x) => cur = x,
            Err(_) => break,
        }
    }
    cur
}

fn decline(why: &str) -> ProverResult {
    ProverResult::Failed(Failure::Declined(format!("temporal reasoning unsupported: {why}")))
}

pub fn apply_temporal_rules(facts: &[Expr], goal: &Expr, env: &dyn DefEnv) -> ProverResult {
    let goal = unfold_temporal(goal, env);
    let Expr::Implies(ante, cons) = &goal else {
        return decline("goal is not an implication");
    };
    let Expr::Always(p) = &**cons else {
        return decline("conclusion is not []P");
    };
    let Expr::And(parts, _) = &**ante else {
        return decline("hypothesis is not Init /\\ [][N]_v");
    };
    let [init, boxed] = parts.as_slice() else {
        return decline("hypothesis is not Init /\\ [][N]_v");
    };
    let Expr::Always(step) = boxed else {
        return decline("hypothesis is not Init /\\ [][N]_v");
    };
    if !matches!(**step, Expr::BoxAction(..)) {
        return decline("hypothesis is not Init /\\ [][N]_v");
    }
    for f in facts {
        let Expr::Implies(a, inv) = f else { continue };
        if **a != *init {
            continue;
        }
        let inductive = Expr::implies(
            Expr::and(vec![(**inv).clone(), (**step).clone()]),
            Expr::prime((**inv).clone()),
        );
        if !facts.contains(&inductive) {
            continue;
        }
        if **inv == **p || facts.contains(&Expr::implies((**inv).clone(), (**p).clone())) {
            return ProverResult::Proved;
        }
    }
    decline("cited facts do not match the invariance rule")
}
