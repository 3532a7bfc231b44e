use petrel::kernel::{Expr, Value};
use petrel::mcheck::{
    check_inductive, check_invariant, eval, initial_states, successors, CheckOutcome, InductiveOutcome, State,
    DEFAULT_LIMIT,
};
use petrel::pluscal::translate_source;
use petrel::syntax::{parse_expr, parse_module, SpecModule};

fn peterson() -> SpecModule {
    let (text, _) = translate_source(include_str!("../examples/peterson.tla")).unwrap();
    parse_module(&text).unwrap()
}

fn x(m: &SpecModule, s: &str) -> Expr {
    parse_expr(s, m).unwrap()
}

#[test]
fn single_initial_state() {
    let m = peterson();
    let (states, _) = initial_states(&Expr::op("Init"), &m.variables, &m).unwrap();
    assert_eq!(states.len(), 1);
    let s = &states[0];
    assert_eq!(s.get("turn"), Some(&Value::Int(0)));
    let pc = eval(&x(&m, "pc = [i \\in {0, 1} |-> \"a0\"]"), &m, s, None).unwrap();
    assert_eq!(pc, Value::Bool(true));
}

#[test]
fn two_successors_from_init() {
    let m = peterson();
    let (states, _) = initial_states(&Expr::op("Init"), &m.variables, &m).unwrap();
    let succ = successors(&states[0], &Expr::op("Next"), &m.variables, &m).unwrap();
    let names: Vec<&str> = succ.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["a0(0)", "a0(1)"]);
    // Brute-force oracle: evaluate every action instance against each successor.
    for (_, t) in &succ {
        let mut enabled = 0;
        for a in ["a0", "a1", "a2", "a3a", "a3b", "cs", "a4"] {
            for i in 0..2 {
                let act = Expr::apply(a, vec![Expr::from(i as i64)]);
                if eval(&act, &m, &states[0], Some(t)) == Ok(Value::Bool(true)) {
                    enabled += 1;
                }
            }
        }
        assert_eq!(enabled, 1);
        assert_ne!(t, &states[0]);
    }
}

#[test]
fn both_in_cs_synthetic_state() {
    let m = peterson();
    let (init, _) = initial_states(&Expr::op("Init"), &m.variables, &m).unwrap();
    let pc = eval(&x(&m, "[i \\in {0, 1} |-> \"cs\"]"), &m, &State::default(), None).unwrap();
    let s = init[0].clone().with("pc", pc);
    let succ = successors(&s, &Expr::op("Next"), &m.variables, &m).unwrap();
    let names: Vec<&str> = succ.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["cs(0)", "cs(1)"]);
}

#[test]
fn fifty_eight_states() {
    let m = peterson();
    let r = check_invariant(&m, &m.variables, &Expr::op("Init"), &Expr::op("Next"), &Expr::op("MutualExclusion"), DEFAULT_LIMIT);
    assert_eq!(r, Ok(CheckOutcome::Ok { states: 58 }));
    let r = check_invariant(&m, &m.variables, &Expr::op("Init"), &Expr::op("Next"), &Expr::TRUE, DEFAULT_LIMIT);
    assert_eq!(r, Ok(CheckOutcome::Ok { states: 58 }));
}

#[test]
fn shortest_violation_trace() {
    let m = peterson();
    let inv = x(&m, "pc[0] # \"cs\"");
    let r = check_invariant(&m, &m.variables, &Expr::op("Init"), &Expr::op("Next"), &inv, DEFAULT_LIMIT).unwrap();
    let CheckOutcome::Violation { trace, .. } = r else { panic!("{r:?}") };
    assert_eq!(trace.states.len(), 5);
    assert_eq!(trace.actions, ["a0(0)", "a1(0)", "a2(0)", "a3a(0)"]);
}

#[test]
fn inv_is_inductive_over_392_candidates() {
    let m = peterson();
    let r = check_inductive(&m, &m.variables, &Expr::op("Inv"), &Expr::op("Next"), DEFAULT_LIMIT).unwrap();
    assert!(matches!(r, InductiveOutcome::Ok { candidates: 392, .. }), "{r:?}");
    let r = check_inductive(&m, &m.variables, &Expr::op("TypeOK"), &Expr::op("Next"), DEFAULT_LIMIT).unwrap();
    assert!(matches!(r, InductiveOutcome::Ok { candidates: 392, states: 392 }), "{r:?}");
}

#[test]
fn mutual_exclusion_has_genuine_cti() {
    let m = peterson();
    let inv = x(&m, "TypeOK /\\ MutualExclusion");
    let r = check_inductive(&m, &m.variables, &inv, &Expr::op("Next"), DEFAULT_LIMIT).unwrap();
    let InductiveOutcome::Cti { state, next, candidates, .. } = r else { panic!("{r:?}") };
    assert_eq!(candidates, 392);
    assert_eq!(eval(&inv, &m, &state, None), Ok(Value::Bool(true)));
    assert_eq!(eval(&Expr::op("Next"), &m, &state, Some(&next)), Ok(Value::Bool(true)));
    assert_eq!(eval(&inv, &m, &next, None), Ok(Value::Bool(false)));
}

#[test]
fn typeok_count_oracle() {
    // 7^2 pc functions, 2 turns, 2^2 flag functions.
    assert_eq!(7u32.pow(2) * 2 * 2u32.pow(2), 392);
}
