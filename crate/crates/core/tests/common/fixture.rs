use std::collections::BTreeMap;

use petrel::fpstore::{fingerprint, Fingerprint};
use petrel::pluscal::translate_source;
use petrel::proofman::elaborate;
use petrel::syntax::parse_module;

pub const FIXTURE: &str = include_str!("../../examples/peterson.tla");

pub fn text() -> String {
    translate_source(FIXTURE).unwrap().0
}

pub fn replace(src: &str, from: &str, to: &str) -> String {
    assert!(src.contains(from), "missing {from:?}");
    src.replace(from, to)
}

/// Obligation id to fingerprint, for theorem 1 of `src`.
pub fn fps(src: &str) -> BTreeMap<String, Fingerprint> {
    let m = parse_module(src).unwrap();
    elaborate(&m, 0).unwrap().obligations.iter().map(|o| (o.id.clone(), fingerprint(o))).collect()
}

pub fn rename_bound(t: &str) -> String {
    let r = replace(t, "I == \\A i \\in {0, 1} :", "I == \\A q \\in {0, 1} :");
    let r = replace(&r, "pc[i]", "pc[q]");
    let r = replace(&r, "flag[i]", "flag[q]");
    let r = replace(&r, "pc[Not(i)]", "pc[Not(q)]");
    replace(&r, "turn = i\n", "turn = q\n")
}

pub fn rename_new(t: &str) -> String {
    let r = replace(t, "NEW j \\in", "NEW k \\in");
    let r = replace(&r, "I!(j)'", "I!(k)'");
    let r = replace(&r, "CASE i = j", "CASE i = k");
    replace(&r, "CASE i # j", "CASE i # k")
}

pub fn move_sibling(t: &str) -> String {
    let a = t.find("  <2>2. TypeOK'").unwrap();
    let b = t.find("  <2>3. I'").unwrap();
    let c = t.find("  <2>4. QED").unwrap();
    format!("{}{}{}{}", &t[..a], &t[b..c], &t[a..b], &t[c..])
}

pub fn add_unused(t: &str) -> String {
    replace(t, "Inv == TypeOK /\\ I", "Junk == 42\n\nInv == TypeOK /\\ I")
}

pub fn relayout(t: &str) -> String {
    let r = replace(t, "THEOREM Spec", "\\* a comment\n(* and another *)\n\n\nTHEOREM   Spec");
    replace(&r, "BY <2>1 DEFS", "BY   <2>1\n    DEFS")
}

pub fn edit_i(t: &str) -> String {
    replace(t, "=> turn = i\n", "=> turn = i /\\ TRUE\n")
}

/// Each axis of the stability matrix: its name, whether fingerprints should
/// stay equal, and whether they did. Invariance axes compare every
/// obligation; variance axes compare the obligation the edit targets.
pub fn matrix() -> Vec<(&'static str, bool, bool)> {
    let t = text();
    let base = fps(&t);
    let same = |edited: &str| fps(edited) == base;
    let differs_at = |edited: &str, id: &str| fps(edited)[id] != base[id];
    vec![
        ("rename bound variables", true, same(&rename_bound(&t))),
        ("rename NEW constant", true, same(&rename_new(&t))),
        ("reorder independent steps", true, same(&move_sibling(&t))),
        ("insert unused definition", true, same(&add_unused(&t))),
        ("whitespace and comments", true, same(&relayout(&t))),
        ("change goal", false, !differs_at(&replace(&t, "<2>2. TypeOK'", "<2>2. I'"), "<2>2")),
        ("drop cited fact", false, !differs_at(&replace(&t, "BY <2>1, <3>2, <3>3 DEFS", "BY <2>1, <3>3 DEFS"), "<3>3")),
        ("edit used definition", false, !differs_at(&edit_i(&t), "<1>3")),
    ]
}
