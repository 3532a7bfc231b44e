use petrel::backends::{prove_ground, Failure, Limits, ProverResult};
use petrel::fpstore::Store;
use petrel::pluscal::translate_source;
use petrel::proofman::{check, elaborate, print_obligation, CheckOptions, ElabError, StepStatus, Target};
use petrel::syntax::{parse_module, SpecModule, StepLabel};

const FIXTURE: &str = include_str!("../examples/peterson.tla");

fn peterson_text() -> String {
    translate_source(FIXTURE).unwrap().0
}

fn module(text: &str) -> SpecModule {
    parse_module(text).unwrap()
}

fn edited(from: &str, to: &str) -> SpecModule {
    let t = peterson_text();
    assert!(t.contains(from), "fixture lacks {from:?}");
    module(&t.replacen(from, to, 1))
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn step(label: &str) -> Target {
    Target::Step(None, StepLabel::parse(label).unwrap())
}

#[test]
fn fig5_obligations() {
    let e = elaborate(&module(&peterson_text()), 0).unwrap();
    let ids: Vec<&str> = e.obligations.iter().map(|o| o.id.as_str()).collect();
    assert_eq!(ids, ["<1>1", "<2>1", "<2>2", "<3>1", "<3>2", "<3>3", "<3>4", "<3>5", "<2>4", "<1>3", "<1>4"]);
    let omitted: Vec<bool> = e.obligations.iter().map(|o| o.omitted).collect();
    assert_eq!(omitted.iter().filter(|x| **x).count(), 1);
    assert!(e.obligations[10].omitted);
    assert!(e.obligations[10].is_temporal());
}

#[test]
fn full_proof_with_omitted_qed() {
    let r = check(&module(&peterson_text()), &Target::File, None, &CheckOptions::default()).unwrap();
    assert_eq!(r.count(StepStatus::Proved), 10, "{}", r.render(true, false));
    assert_eq!(r.count(StepStatus::Omitted), 1);
    assert_eq!(r.theorems[0].status, StepStatus::Omitted);
    assert_eq!(r.step("<1>2").unwrap().status, StepStatus::Proved);
    assert_eq!(r.exit_code(), 2);
    let text = r.render(false, false);
    assert!(text.lines().any(|l| l.starts_with("STEP <2>3 proved backend=- time=")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("STEP <3>3 proved backend=ground time=") && l.split("fp=").nth(1).unwrap().len() == 16));
}

#[test]
fn single_step_target() {
    let r = check(&module(&peterson_text()), &step("<1>2"), None, &CheckOptions::default()).unwrap();
    let labels: Vec<&str> = r.theorems[0].steps.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["<1>2", "<2>1", "<2>2", "<2>3", "<3>1", "<3>2", "<3>3", "<3>4", "<3>5", "<2>4"]);
    assert_eq!(r.backend_calls, 8);
    assert_eq!(r.count(StepStatus::Proved), 8);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn second_run_is_all_cache_hits() {
    let m = module(&peterson_text());
    let mut store = Store::new();
    let opts = CheckOptions::default();
    let first = check(&m, &Target::File, Some(&mut store), &opts).unwrap();
    assert_eq!(first.backend_calls, 10);
    let second = check(&m, &Target::File, Some(&mut store), &opts).unwrap();
    assert_eq!(second.backend_calls, 0);
    assert_eq!(second.cache_hits, 10);
    assert_eq!(second.count(StepStatus::Proved), 10);
    let forced = check(&m, &Target::File, Some(&mut store), &CheckOptions { force: true, ..opts }).unwrap();
    assert_eq!(forced.backend_calls, 10);
}

#[test]
fn missing_definitions_fail_with_full_display() {
    let m = edited("BY DEFS Init, Inv, TypeOK, I", "BY DEF Init, Inv");
    let r = check(&m, &step("<1>1"), None, &CheckOptions::default()).unwrap();
    let s = r.step("<1>1").unwrap();
    assert_eq!(s.status, StepStatus::Failed);
    assert_eq!(r.exit_code(), 5);
    let ob = &r.theorems[0].obligations[0];
    assert_eq!(ob.reason.as_deref(), Some("unexpanded-opaque-atom: TypeOK"));

    let e = elaborate(&m, 0).unwrap();
    let shown = print_obligation(&e.obligations[0]);
    let expected = r#"
ASSUME NEW VARIABLE flag,
       NEW VARIABLE turn,
       NEW VARIABLE pc
PROVE  (/\ flag  =  [i \in {0, 1} |-> FALSE]
        /\ turn  =  0
        /\ pc  =  [self \in {0, 1} |-> "a0"])
        =>  TypeOK  /\  I
"#;
    assert_eq!(squash(&shown), squash(expected), "\n{shown}");
    assert!(shown.starts_with("ASSUME NEW VARIABLE flag,\n       NEW VARIABLE turn,"));
    match prove_ground(&e.obligations[0], Limits::default()) {
        ProverResult::Failed(Failure::OpaqueAtom(n)) => assert_eq!(n, "TypeOK"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn whole_step_two_by_ground_evaluation() {
    let proof_start = "  <2>1. SUFFICES";
    let t = peterson_text();
    let a = t.find(proof_start).unwrap();
    let b = t.find("<1>3. Inv => MutualExclusion").unwrap();
    let by = "  BY DEFS Inv, TypeOK, I, Next, proc, a0, a1, a2, a3a, a3b, cs, a4, vars, Not\n";
    let m = module(&format!("{}{by}{}", &t[..a], &t[b..]));
    let e = elaborate(&m, 0).unwrap();
    let ob = e.obligations.iter().find(|o| o.id == "<1>2").unwrap();
    assert_eq!(prove_ground(ob, Limits::default()), ProverResult::Proved);
    assert!(print_obligation(ob).lines().count() > 20);
}

#[test]
fn temporal_qed() {
    let m = edited("<1>4. QED\n  PROOF OMITTED", "<1>4. QED\n  BY <1>1, <1>2, <1>3");
    let r = check(&m, &Target::File, None, &CheckOptions::default()).unwrap();
    assert_eq!(r.step("<1>4").unwrap().backend, "temporal");
    assert_eq!(r.theorems[0].status, StepStatus::Proved, "{}", r.render(true, false));
    assert_eq!(r.exit_code(), 0);

    let m = edited("<1>4. QED\n  PROOF OMITTED", "<1>4. QED\n  BY <1>1, <1>3");
    let r = check(&m, &step("<1>4"), None, &CheckOptions::default()).unwrap();
    let ob = &r.theorems[0].obligations[0];
    assert_eq!(ob.status, StepStatus::Failed);
    assert!(ob.reason.as_deref().unwrap().starts_with("temporal reasoning unsupported"));
}

#[test]
fn trivial_theorem() {
    let m = module("---- MODULE T ----\nTHEOREM TRUE\n  OBVIOUS\n====\n");
    let e = elaborate(&m, 0).unwrap();
    assert_eq!(e.obligations.len(), 1);
    assert!(e.obligations[0].decls.is_empty());
    assert_eq!(print_obligation(&e.obligations[0]), "PROVE TRUE");
    let r = check(&m, &Target::File, None, &CheckOptions::default()).unwrap();
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn case_and_pick_facts() {
    let src = r#"---- MODULE C ----
THEOREM ASSUME NEW x \in {1, 2, 3} PROVE x < 4
<1>1. CASE x = 1
  BY <1>1
<1>2. CASE x # 1
  <2>1. PICK y \in {1, 2} : y + 1 = x
    BY <1>2
  <2>2. QED
    OBVIOUS
<1>3. QED
  BY <1>1, <1>2
====
"#;
    let m = module(src);
    let e = elaborate(&m, 0).unwrap();
    let ids: Vec<&str> = e.obligations.iter().map(|o| o.id.as_str()).collect();
    assert_eq!(ids, ["<1>1", "<2>1", "<2>2", "<1>3"]);
    // PICK facts are usable by default after the step.
    let qed = &e.obligations[2];
    assert_eq!(qed.implicit.len(), 3);
    let r = check(&m, &Target::File, None, &CheckOptions::default()).unwrap();
    assert_eq!(r.count(StepStatus::Proved), 4, "{}", r.render(true, false));
}

#[test]
fn suffices_assumptions_are_not_visible_in_own_proof() {
    let src = r#"---- MODULE S ----
THEOREM ASSUME NEW x \in {1, 2} PROVE x > 0
<1>1. SUFFICES ASSUME x # 0 PROVE x > 0
  BY <1>1
<1>2. QED
  BY <1>1
====
"#;
    assert!(parse_module(src).is_err() || {
        let e = elaborate(&module(src), 0);
        matches!(e, Err(ElabError::UnknownStepReference { .. }))
    });
}

#[test]
fn unknown_theorem_and_step() {
    let m = module(&peterson_text());
    let r = check(&m, &Target::Theorem("Nope".into()), None, &CheckOptions::default());
    assert!(matches!(r, Err(ElabError::NoSuchTheorem(_))));
    let r = check(&m, &step("<9>9"), None, &CheckOptions::default());
    assert!(matches!(r, Err(ElabError::NoSuchStep(_))));
}

#[test]
fn elaboration_is_deterministic() {
    let m = module(&peterson_text());
    assert_eq!(elaborate(&m, 0).unwrap(), elaborate(&m, 0).unwrap());
}

#[test]
fn uncited_case_fact_is_hidden() {
    let src = r#"---- MODULE H ----
THEOREM ASSUME NEW x \in {1, 2} PROVE x > 0
<1>1. CASE x # 1
  <2>1. PICK y \in {1} : y + 1 = x
    OBVIOUS
  <2>2. QED
    OBVIOUS
<1>2. QED
  OBVIOUS
====
"#;
    let r = check(&module(src), &step("<2>1"), None, &CheckOptions::default()).unwrap();
    let ob = &r.theorems[0].obligations[0];
    assert_eq!(ob.status, StepStatus::Failed);
    assert_eq!(ob.reason.as_deref(), Some("counter-valuation: x = 1"));
}
