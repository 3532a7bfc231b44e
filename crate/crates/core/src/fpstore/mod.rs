//! Obligation fingerprints and the on-disk status store.

mod store;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use sha2::{Digest, Sha256};

pub use store::{Status, StatusRecord, Store, StoreError};

use crate::kernel::{canonicalize, expand_definitions, Decl, DefEnv, Expr, Sequent};
use crate::proofman::Obligation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    /// The 16-character prefix shown in reports.
    pub fn short(&self) -> String {
        self.hex()[..16].to_string()
    }

    pub fn parse(s: &str) -> Option<Fingerprint> {
        let bytes = hex::decode(s).ok()?;
        Some(Fingerprint(bytes.try_into().ok()?))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

fn expand(e: &Expr, ob: &Obligation) -> Expr {
    expand_definitions(e, &ob.expand, &*ob.env).unwrap_or_else(|_| e.clone())
}

/// Add `names` and, through definition bodies, everything they reach.
fn close_over(names: Vec<String>, set: &mut HashSet<String>, env: &dyn DefEnv) {
    let mut work = names;
    while let Some(n) = work.pop() {
        if !set.insert(n.clone()) {
            continue;
        }
        if let Some(d) = env.definition(&n) {
            work.extend(d.body.free_symbols());
        }
    }
}

/// Drop the declarations, definitions and implicit facts that the goal and
/// cited facts cannot reach. Implicit facts survive when they mention a
/// reachable symbol, or mention no symbol at all.
pub fn minimize(ob: &Obligation) -> Obligation {
    let env: &dyn DefEnv = &*ob.env;
    let mut reach = HashSet::new();
    let mut seeds = expand(&ob.goal, ob).free_symbols();
    for f in &ob.facts {
        seeds.extend(expand(f, ob).free_symbols());
    }
    close_over(seeds, &mut reach, env);
    let implicit: Vec<(Expr, Vec<String>)> = ob.implicit.iter().map(|h| (h.clone(), expand(h, ob).free_symbols())).collect();
    let mut keep = vec![false; implicit.len()];
    loop {
        let mut changed = false;
        for (i, (_, syms)) in implicit.iter().enumerate() {
            if !keep[i] && (syms.is_empty() || syms.iter().any(|s| reach.contains(s))) {
                keep[i] = true;
                changed = true;
                close_over(syms.clone(), &mut reach, env);
            }
        }
        if !changed {
            break;
        }
    }
    let mut m = ob.clone();
    m.decls.retain(|d| reach.contains(d.name()));
    m.implicit = implicit.into_iter().zip(keep).filter(|(_, k)| *k).map(|((h, _), _)| h).collect();
    let expand: BTreeSet<&String> = ob.expand.iter().collect();
    m.env = std::sync::Arc::new(
        ob.env
            .iter()
            .filter(|d| reach.contains(&d.name) || expand.contains(&d.name))
            .cloned()
            .collect(),
    );
    m
}

/// The closed sequent that is hashed: expanded hypotheses and goal, plus
/// the bodies of every definition they still mention.
pub fn sequent(ob: &Obligation) -> Sequent {
    let m = minimize(ob);
    let hyps: Vec<Expr> = m.hypotheses().iter().map(|h| expand(h, &m)).collect();
    let goal = expand(&m.goal, &m);
    let mut reach = HashSet::new();
    let mut seeds = goal.free_symbols();
    for h in &hyps {
        seeds.extend(h.free_symbols());
    }
    close_over(seeds, &mut reach, &*m.env);
    Sequent {
        decls: m.decls.iter().filter(|d| reach.contains(d.name())).cloned().collect::<Vec<Decl>>(),
        defs: m.env.iter().filter(|d| reach.contains(&d.name)).cloned().collect(),
        hyps,
        goal,
    }
}

pub fn fingerprint(ob: &Obligation) -> Fingerprint {
    let bytes = canonicalize(&sequent(ob));
    Fingerprint(Sha256::digest(&bytes).into())
}
