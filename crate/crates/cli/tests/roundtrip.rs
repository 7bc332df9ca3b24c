mod support;

use diffspace_cli::ast::{Expr, Func, Stmt, FnDef};
use diffspace_cli::{parse_program, print_program, FloatFormat, Report};
use proptest::prelude::*;

const PRELUDE: &str = "space M = R^2 minus {(0, 0)}; gen x = pi(1), y = pi(2);";

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-5i32..=5).prop_map(f64::from),
        -1e3f64..1e3,
        1e-12f64..1e-3,
        (1e6f64..1e15).prop_map(|v| -v),
    ]
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(number(), 2)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        number().prop_map(Expr::Num),
        Just(Expr::Name("x".into())),
        Just(Expr::Name("y".into())),
        (1usize..=2).prop_map(Expr::Pi),
        (vec2(), 1e-3f64..10.0).prop_map(|(c, r)| Expr::Bump(c, r)),
        vec2().prop_map(Expr::Dist2),
    ]
}

/// Trees the parser can produce: a minus sign in front of a literal is part of the literal.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(6, 64, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_filter_map("negated literal", |e| match e {
                Expr::Num(_) => None,
                e => Some(Expr::Neg(Box::new(e))),
            }),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Add(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Sub(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Mul(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Div(b(a), b(c))),
            (inner.clone(), -64i32..=64).prop_map(move |(a, n)| Expr::Pow(b(a), n)),
            (inner, prop_oneof![Just(Func::Exp), Just(Func::Sin), Just(Func::Cos), Just(Func::Cutoff)])
                .prop_map(move |(a, f)| Expr::Call(f, b(a))),
        ]
    })
}

fn only_fn(src: &str) -> Expr {
    let p = parse_program(src).unwrap_or_else(|d| panic!("{d}\n{src}"));
    match &p.stmts.last().unwrap().node {
        Stmt::Fn { def: FnDef::Expr(e), .. } => e.clone(),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printed_expressions_reparse(e in expr()) {
        let src = format!("{PRELUDE} fn f = {e};");
        prop_assert_eq!(only_fn(&src), e);
    }

    #[test]
    fn printed_programs_reparse(es in proptest::collection::vec(expr(), 1..5), p in vec2(), tol in 1e-6f64..1.0) {
        let mut src = PRELUDE.to_string();
        for (i, e) in es.iter().enumerate() {
            src.push_str(&format!("\nfn f{i} = {e};\neval f{i} at ({}, {});", p[0], p[1]));
        }
        src.push_str(&format!("\nassign A = {{x: {}, y: {}}};\nclassify A;\ndensity A tol {tol} family {{x, f0}} budget 10;", p[0], p[1]));
        let first = parse_program(&src).unwrap();
        let printed = print_program(&first);
        let second = parse_program(&printed).unwrap();
        prop_assert_eq!(&second, &first);
        prop_assert_eq!(print_program(&second), printed);
    }
}

#[test]
fn shipped_scripts_round_trip() {
    for (stem, src) in support::scripts() {
        let first = parse_program(&src).unwrap();
        let printed = print_program(&first);
        let second = parse_program(&printed).unwrap_or_else(|d| panic!("{stem}: {d}\n{printed}"));
        assert_eq!(second, first, "{stem}");
        assert_eq!(print_program(&second), printed, "{stem}");
    }
}

#[test]
fn reports_round_trip() {
    for (stem, src) in support::scripts() {
        let report = diffspace_cli::run_source(&src, 3).unwrap();
        let hex = report.to_json_lines(FloatFormat::Hex);
        assert_eq!(Report::from_json_lines(&hex, FloatFormat::Hex).unwrap(), report, "{stem}");
        let dec = report.to_json_lines(FloatFormat::Decimal);
        let back = Report::from_json_lines(&dec, FloatFormat::Decimal).unwrap();
        assert_eq!(back.to_json_lines(FloatFormat::Decimal), dec, "{stem}");
    }
}

#[test]
fn fragments_that_reparse_the_same() {
    // a minus in front of a literal belongs to the literal
    assert_eq!(only_fn(&format!("{PRELUDE} fn f = -(2);")), Expr::Num(-2.0));
    assert_eq!(only_fn(&format!("{PRELUDE} fn f = (-2)^2;")), Expr::Pow(Box::new(Expr::Num(-2.0)), 2));
    let neg_pow = only_fn(&format!("{PRELUDE} fn f = -2^2;"));
    assert_eq!(neg_pow, Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Num(2.0)), 2))));
    assert_eq!(neg_pow.to_string(), "-2^2");
}
