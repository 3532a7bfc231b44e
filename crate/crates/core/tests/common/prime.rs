use petrel::kernel::{distribute_prime, BinOp, Expr, Quant, Value};
use petrel::mcheck::{eval, State};
use petrel::syntax::{parse_module, SpecModule};
use proptest::prelude::*;

pub const MODULE: &str = "---- MODULE K ----
VARIABLES x, y, f
Inc(a) == a + 1
S == x + y
Pick(g, k) == g[k]
====
";

pub fn module() -> SpecModule {
    parse_module(MODULE).unwrap()
}

pub fn state_term(depth: u32) -> BoxedStrategy<Expr> {
    // `depth` counts enclosing binders, so `Bound(0)` is available inside one.
    let mut leaves: Vec<Expr> = vec![Expr::var("x"), Expr::var("y"), 0.into(), 1.into(), 2.into(), Expr::op("S")];
    if depth > 0 {
        leaves.push(Expr::bound(0, "i"));
    }
    let leaf = proptest::sample::select(leaves);
    leaf.prop_recursive(3, 12, 3, move |t| {
        prop_oneof![
            (t.clone(), t.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
            t.clone().prop_map(|a| Expr::apply("Inc", vec![a])),
            (0i64..2).prop_map(|k| Expr::app(Expr::var("f"), k.into())),
            (0i64..2).prop_map(|k| Expr::apply("Pick", vec![Expr::var("f"), k.into()])),
            (t.clone(), t.clone(), t.clone()).prop_map(|(c, a, b)| Expr::ite(Expr::bin(BinOp::Lt, c, 2.into()), a, b)),
            (0i64..2, t.clone()).prop_map(|(k, v)| Expr::app(
                Expr::Except(Box::new(Expr::var("f")), vec![(k.into(), v)]),
                Expr::from(1 - k)
            )),
        ]
    })
    .boxed()
}

pub fn quantified(depth: u32) -> BoxedStrategy<Expr> {
    (proptest::bool::ANY, state_term(depth + 1), state_term(depth + 1))
        .prop_map(|(all, a, b)| {
            let q = if all { Quant::Forall } else { Quant::Exists };
            Expr::quant(q, "i", Expr::int_set(&[0, 1]), Expr::bin(BinOp::Le, Expr::app(Expr::var("f"), Expr::bound(0, "i")), Expr::bin(BinOp::Add, a, b)))
        })
        .boxed()
}

/// An action formula mixing primed state terms and unprimed ones.
pub fn action() -> impl Strategy<Value = Expr> {
    let primed = prop_oneof![
        state_term(0).prop_map(Expr::prime),
        quantified(0).prop_map(Expr::prime),
        Just(Expr::prime(Expr::var("f"))).prop_map(|f| Expr::app(f, 0.into())),
    ];
    (primed, state_term(0), proptest::sample::select(vec![BinOp::Eq, BinOp::Lt, BinOp::Le, BinOp::Neq]))
        .prop_map(|(p, s, op)| match p {
            Expr::Prime(inner) if matches!(*inner, Expr::Quant(..)) => Expr::and(vec![Expr::Prime(inner), Expr::bin(op, s, 1.into())]),
            p => Expr::bin(op, p, s),
        })
}

pub fn state() -> impl Strategy<Value = State> {
    (0i64..3, 0i64..3, 0i64..3, 0i64..3).prop_map(|(x, y, f0, f1)| {
        State::default()
            .with("x", Value::Int(x))
            .with("y", Value::Int(y))
            .with("f", Value::Func([(Value::Int(0), Value::Int(f0)), (Value::Int(1), Value::Int(f1))].into()))
    })
}

/// Evaluating `a` and its prime-distributed form agree on every pair.
pub fn check_distribution(a: &Expr, pairs: &[(State, State)]) -> Result<(), TestCaseError> {
    let m = module();
    let d = distribute_prime(a, &m).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for (s, t) in pairs {
        let before = eval(a, &m, s, Some(t));
        let after = eval(&d, &m, s, Some(t));
        prop_assert_eq!(before.is_ok(), after.is_ok());
        if let (Ok(b), Ok(c)) = (before, after) {
            prop_assert_eq!(b, c);
        }
    }
    Ok(())
}
