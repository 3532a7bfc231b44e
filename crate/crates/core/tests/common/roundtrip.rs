use petrel::kernel::{BinOp, Expr, Quant};
use petrel::syntax::{parse_module, print_expr, print_module};
use proptest::prelude::*;

pub fn term(depth: u32) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<Expr> = vec![
        Expr::var("x"),
        Expr::var("y"),
        Expr::op("D0"),
        0.into(),
        7.into(),
        Expr::str("a"),
        Expr::prime(Expr::var("x")),
    ];
    if depth > 0 {
        leaves.push(Expr::bound(0, "i"));
    }
    if depth > 1 {
        leaves.push(Expr::bound(1, "j"));
    }
    proptest::sample::select(leaves)
        .prop_recursive(3, 16, 3, move |t| {
            prop_oneof![
                (proptest::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Range, BinOp::Cup, BinOp::Cap]), t.clone(), t.clone())
                    .prop_map(|(o, a, b)| Expr::bin(o, a, b)),
                proptest::collection::vec(t.clone(), 0..3).prop_map(Expr::SetEnum),
                proptest::collection::vec(t.clone(), 2..3).prop_map(Expr::Tuple),
                (t.clone(), t.clone()).prop_map(|(f, a)| Expr::app(f, a)),
                (t.clone(), t.clone(), t.clone()).prop_map(|(f, k, v)| Expr::Except(Box::new(f), vec![(k, v)])),
                (t.clone(), t.clone()).prop_map(|(a, b)| Expr::FuncSet(Box::new(a), Box::new(b))),
                t.clone().prop_map(|a| Expr::Domain(Box::new(a))),
                t.clone().prop_map(|a| Expr::apply("Inc", vec![a])),
            ]
        })
        .boxed()
}

pub fn formula(depth: u32) -> BoxedStrategy<Expr> {
    let atom = (
        proptest::sample::select(vec![BinOp::Eq, BinOp::Neq, BinOp::Lt, BinOp::Le, BinOp::In, BinOp::NotIn, BinOp::Subseteq]),
        term(depth),
        term(depth),
    )
        .prop_map(|(o, a, b)| Expr::bin(o, a, b));
    let inner = if depth < 2 { Some(formula(depth + 1)) } else { None };
    let leaf = prop_oneof![4 => atom, 1 => Just(Expr::TRUE), 1 => Just(Expr::op("P"))];
    leaf.prop_recursive(2, 12, 3, move |p| {
        let mut choices: Vec<BoxedStrategy<Expr>> = vec![
            p.clone().prop_map(Expr::not).boxed(),
            proptest::collection::vec(p.clone(), 2..4).prop_map(Expr::and).boxed(),
            proptest::collection::vec(p.clone(), 2..4).prop_map(Expr::or).boxed(),
            (p.clone(), p.clone()).prop_map(|(a, b)| Expr::implies(a, b)).boxed(),
            (p.clone(), p.clone(), p.clone()).prop_map(|(a, b, c)| Expr::ite(a, b, c)).boxed(),
            (p.clone(), term(depth)).prop_map(|(a, v)| Expr::BoxAction(Box::new(a), Box::new(v))).boxed(),
            p.clone().prop_map(|a| Expr::Always(Box::new(a))).boxed(),
            term(depth).prop_map(|v| Expr::Unchanged(Box::new(v))).boxed(),
        ];
        if let Some(inner) = &inner {
            let name = if depth == 0 { "i" } else { "j" };
            choices.push(
                (proptest::bool::ANY, term(depth), inner.clone())
                    .prop_map(move |(all, d, b)| Expr::quant(if all { Quant::Forall } else { Quant::Exists }, name, d, b))
                    .boxed(),
            );
            choices.push(
                (term(depth), term(depth + 1))
                    .prop_map(move |(d, b)| Expr::eq(Expr::func_lit(name, d, b), Expr::var("y")))
                    .boxed(),
            );
        }
        proptest::strategy::Union::new(choices)
    })
    .boxed()
}

pub fn module_text(defs: &[Expr]) -> String {
    let mut s = String::from("---- MODULE F ----\nVARIABLES x, y\nInc(a) == a + 1\nD0 == 1\nP == x = y\n");
    for (k, d) in defs.iter().enumerate() {
        s.push_str(&format!("E{k} == {}\n", print_expr(d)));
    }
    s.push_str("THEOREM T == E0\n<1>1. TRUE\n  OBVIOUS\n<1>2. QED\n  BY <1>1 DEF E0\n====\n");
    s
}

/// Parsing recovers every generated definition body, and printing then
/// reparsing the module is the identity.
pub fn check_round_trip(defs: &[Expr]) -> Result<(), TestCaseError> {
    let src = module_text(defs);
    let m = parse_module(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
    for (k, d) in defs.iter().enumerate() {
        let parsed = &m.definitions.iter().find(|x| x.name == format!("E{k}")).unwrap().body;
        prop_assert_eq!(parsed, d, "\n{}", src);
    }
    let printed = print_module(&m);
    let again = parse_module(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
    prop_assert_eq!(&m, &again);
    Ok(())
}
