use std::collections::BTreeMap;

use petrel::backends::{ground, Failure};
use petrel::kernel::{BinOp, Definition, Expr, Value};
use petrel::mcheck::eval::Ctx;
use petrel::mcheck::State;
use proptest::prelude::*;

// A small universe: x, y and x' range over 0..2, c over {0, 1}, and f is a
// function from {0, 1} to {0, 1}.

pub fn x() -> Expr {
    Expr::var("x")
}
pub fn y() -> Expr {
    Expr::var("y")
}
pub fn xp() -> Expr {
    Expr::prime(x())
}
pub fn c() -> Expr {
    Expr::constant("c")
}
pub fn f() -> Expr {
    Expr::var("f")
}

pub fn bounds(with_f: bool) -> Vec<Expr> {
    let mut b = vec![
        Expr::member(x(), Expr::int_set(&[0, 1, 2])),
        Expr::member(y(), Expr::bin(BinOp::Range, 0.into(), 2.into())),
        Expr::member(xp(), Expr::int_set(&[0, 1, 2])),
        Expr::member(c(), Expr::int_set(&[0, 1])),
    ];
    if with_f {
        b.push(Expr::member(f(), Expr::FuncSet(Box::new(Expr::int_set(&[0, 1])), Box::new(Expr::int_set(&[0, 1])))));
    }
    b
}

pub fn term(with_f: bool) -> impl Strategy<Value = Expr> {
    let mut leaves = vec![x(), y(), xp(), c(), 0.into(), 1.into(), 2.into()];
    if with_f {
        leaves.push(Expr::app(f(), c()));
    }
    let leaf = proptest::sample::select(leaves);
    leaf.prop_recursive(1, 4, 2, |t| {
        prop_oneof![
            (t.clone(), t.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
            (t.clone(), t).prop_map(|(a, b)| Expr::bin(BinOp::Sub, a, b)),
        ]
    })
}

pub fn atom(with_f: bool) -> impl Strategy<Value = Expr> {
    let op = proptest::sample::select(vec![BinOp::Eq, BinOp::Neq, BinOp::Lt, BinOp::Le]);
    prop_oneof![
        4 => (op.clone(), term(with_f), term(with_f)).prop_map(|(o, a, b)| Expr::bin(o, a, b)),
        1 => Just(Expr::TRUE),
        1 => Just(Expr::FALSE),
        1 => (op, term(with_f)).prop_map(|(o, t)| Expr::exists("z", Expr::int_set(&[0, 1, 2]), Expr::bin(o, Expr::bound(0, "z"), t))),
    ]
}

pub fn formula(with_f: bool) -> impl Strategy<Value = Expr> {
    atom(with_f).prop_recursive(3, 16, 3, |p| {
        prop_oneof![
            p.clone().prop_map(Expr::not),
            proptest::collection::vec(p.clone(), 2..4).prop_map(Expr::and),
            proptest::collection::vec(p.clone(), 2..4).prop_map(Expr::or),
            (p.clone(), p.clone()).prop_map(|(a, b)| Expr::implies(a, b)),
            (p.clone(), p.clone(), p.clone()).prop_map(|(a, b, e)| Expr::ite(a, b, e)),
            (p.clone(), term(false)).prop_map(|(b, t)| Expr::forall("w", Expr::int_set(&[0, 1]), Expr::and(vec![
                Expr::bin(BinOp::Le, Expr::bound(0, "w"), t),
                b,
            ]))),
        ]
    })
}

pub struct World {
    cur: State,
    next: State,
    consts: BTreeMap<String, Value>,
}

pub fn worlds(with_f: bool) -> Vec<World> {
    let fs: Vec<Option<Value>> = if with_f {
        (0..4)
            .map(|k| Some(Value::Func([(Value::Int(0), Value::Int(k & 1)), (Value::Int(1), Value::Int(k >> 1))].into())))
            .collect()
    } else {
        vec![None]
    };
    let mut out = vec![];
    for xv in 0..3 {
        for yv in 0..3 {
            for xn in 0..3 {
                for cv in 0..2 {
                    for fv in &fs {
                        let mut cur = State::default().with("x", Value::Int(xv)).with("y", Value::Int(yv));
                        if let Some(fv) = fv {
                            cur = cur.with("f", fv.clone());
                        }
                        out.push(World {
                            cur,
                            next: State::default().with("x", Value::Int(xn)),
                            consts: [("c".to_string(), Value::Int(cv))].into(),
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn holds(e: &Expr, cur: &State, next: &State, consts: &BTreeMap<String, Value>) -> bool {
    let env: Vec<Definition> = vec![];
    Ctx::new(&env, cur, Some(next), consts).bool(e).expect("evaluable")
}

/// Brute force over every world: is `hyps => goal` valid?
pub fn valid(hyps: &[Expr], goal: &Expr, with_f: bool) -> bool {
    worlds(with_f)
        .iter()
        .all(|w| !hyps.iter().all(|h| holds(h, &w.cur, &w.next, &w.consts)) || holds(goal, &w.cur, &w.next, &w.consts))
}

pub fn check_against_oracle(extra: Vec<Expr>, goal: Expr, with_f: bool) -> Result<(), TestCaseError> {
    let mut hyps = bounds(with_f);
    hyps.extend(extra);
    let expect = valid(&hyps, &goal, with_f);
    match ground::prove(&hyps, &goal, ground::Limits::default()) {
        ground::GroundOutcome::Proved => prop_assert!(expect, "proved an invalid obligation"),
        ground::GroundOutcome::Failed(Failure::CounterValuation(v)) => {
            prop_assert!(!expect, "refuted a valid obligation with {v}");
            let (cur, next) = v.states();
            let consts = v.consts();
            for h in &hyps {
                prop_assert!(holds(h, &cur, &next, &consts), "hypothesis fails under {v}");
            }
            prop_assert!(!holds(&goal, &cur, &next, &consts), "goal holds under {v}");
        }
        other => prop_assert!(false, "unexpected {other:?}"),
    }
    Ok(())
}

