use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;

use super::*;

fn p(s: &str) -> Expr {
    parse_open(s).unwrap()
}

fn assert_same(a: &Expr, b: &Expr) {
    assert_eq!(is_zero(&(a - b)), ZeroTest::Zero, "{a}  vs  {b}");
}

#[test]
fn parse_string_hamiltonian() {
    let h = p("p_t^2/(2*rho) - p_x^2/(2*tau) - gamma(t)*s_t");
    assert_eq!(h.num_terms(), 3);
    assert_eq!(h.functions().get("gamma"), Some(&1));
    assert_eq!(p("0"), Expr::zero());
    let prod = p("y_1_0 * s_0");
    assert!(prod.is_monomial());
    assert_eq!(is_zero(&prod), ZeroTest::NonZero);
}

#[test]
fn parse_errors_carry_position_and_name() {
    struct Only;
    impl Scope for Only {
        fn is_symbol(&self, n: &str) -> bool {
            n == "x"
        }
        fn function_arity(&self, n: &str) -> Option<usize> {
            (n == "g").then_some(1)
        }
    }
    assert_eq!(parse("x + y", &Only), Err(ExprError::Undeclared("y".into())));
    assert_eq!(parse("h(x)", &Only), Err(ExprError::Undeclared("h".into())));
    assert!(matches!(parse("x + * x", &Only), Err(ExprError::Syntax { pos: 4, .. })));
    assert!(matches!(parse("g(x, x)", &Only), Err(ExprError::Syntax { .. })));
    assert!(parse("g'(x) + g''(x)", &Only).is_ok());
}

#[test]
fn differentiate_examples() {
    assert_eq!(p("p_t^2/(2*rho)").diff("p_t"), p("p_t/rho"));
    assert_eq!(p("H - gamma(t)*s_t").diff("s_t"), p("-gamma(t)"));
    assert_eq!(p("gamma(t)*s_t").diff("t"), p("gamma'(t)*s_t"));
    assert_eq!(p("gamma(t)").diff("x"), Expr::zero());
    assert_eq!(p("gamma'(t)").diff("t"), p("gamma''(t)"));
    assert_eq!(p("f(x, y)").diff("x").diff("y"), p("f'[0,1](x, y)"));
    assert_eq!(p("f(x, y)").diff("y").diff("x"), p("f'[0,1](x, y)"));
}

#[test]
fn evaluate_examples() {
    let b: HashMap<String, f64> = [("p_t".to_string(), 2.0), ("rho".to_string(), 1.0)].into();
    assert_eq!(p("p_t^2/(2*rho)").eval(&b, &NoFunctions).unwrap(), 2.0);
    let g = |name: &str, d: &[u32], _: &[f64]| (name == "gamma" && d == [0]).then_some(0.1);
    let b: HashMap<String, f64> = [("t".to_string(), 0.0), ("s".to_string(), 3.0)].into();
    assert!((p("gamma(t)*s").eval(&b, &g).unwrap() - 0.3).abs() < 1e-15);
    let e_l = p("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t");
    let b: HashMap<String, f64> = [("u_t", 1.0), ("u_x", 0.0), ("rho", 1.0), ("tau", 1.0), ("s_t", 0.0), ("t", 0.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let zero_gamma = |_: &str, _: &[u32], _: &[f64]| Some(0.0);
    assert_eq!(e_l.eval(&b, &zero_gamma).unwrap(), 0.5);
}

#[test]
fn evaluate_errors() {
    let empty = HashMap::new();
    assert_eq!(p("x").eval(&empty, &NoFunctions), Err(ExprError::Unbound("x".into())));
    let b: HashMap<String, f64> = [("x".to_string(), -1.0)].into();
    assert!(matches!(p("log(x)").eval(&b, &NoFunctions), Err(ExprError::Domain(_))));
    let b: HashMap<String, f64> = [("x".to_string(), 1.0)].into();
    assert!(matches!(p("1/(x - 1)").eval(&b, &NoFunctions), Err(ExprError::Domain(_))));
}

#[test]
fn zero_test_examples() {
    assert_eq!(is_zero(&p("(a+b)^2 - a^2 - 2*a*b - b^2")), ZeroTest::Zero);
    assert_ne!(is_zero(&p("sin(x)^2 + cos(x)^2 - 1")), ZeroTest::NonZero);
    assert_eq!(is_zero(&p("exp(a)*exp(b) - exp(a+b)")), ZeroTest::Zero);
    assert_eq!(is_zero(&p("x/(x+y) + y/(x+y) - 1")), ZeroTest::Zero);
    assert_eq!(is_zero(&p("sqrt(x)^2 - x")), ZeroTest::Zero);
    assert_eq!(is_zero(&p("x + y")), ZeroTest::NonZero);
    assert_eq!(is_zero(&p("sin(x) - x")), ZeroTest::NonZero);
    assert_eq!(is_zero(&p("cosh(x)^2 - sinh(x)^2 - 1")), ZeroTest::Zero);
}

#[test]
fn zero_test_resamples_domain_errors() {
    // log of a negative sample forces a resample; half the points are valid.
    assert_eq!(is_zero(&p("log(x) + log(y) - log(x) - y")), ZeroTest::NonZero);
    assert_eq!(is_zero(&p("log(x)*y - log(x)*z")), ZeroTest::NonZero);
}

#[test]
fn probe_is_seeded() {
    let cfg = ProbeConfig { seed: 7, ..ProbeConfig::default() };
    let e = p("x*y - y*x + 1e-20*(z + w)");
    assert_eq!(is_zero_with(&e, &cfg), is_zero_with(&e, &cfg));
    assert_eq!(is_zero_with(&e, &cfg), ZeroTest::Unknown);
}

#[test]
fn printing_is_parseable() {
    for s in [
        "p_t^2/(2*rho) - p_x^2/(2*tau) - gamma(t)*s_t",
        "3*x/(2*y^2) + 1/(x + y) - (x + 2*y)^-2",
        "sqrt(x + 1) + x^(2/3) - exp(2*x)*sin(x)",
        "gamma''(t) + f'[0,1](x, y)/z",
    ] {
        let e = p(s);
        assert_eq!(p(&e.to_string()), e, "{s} printed as {e}");
    }
    assert_eq!(p("0").to_string(), "0");
}

#[test]
fn latex_output() {
    let e = p("p_t^2/(2*rho)");
    assert_eq!(e.to_latex(), "\\frac{p_{t}^{2}}{2 \\rho}");
    assert_eq!(latex_name("u_t_x"), "u_{t x}");
    assert_eq!(latex_name("mu0"), "\\mu_{0}");
}

#[test]
fn linear_algebra() {
    let m = SymMatrix::from_rows(vec![
        vec![p("1"), p("x"), p("0")],
        vec![p("2"), p("2*x"), p("0")],
        vec![p("0"), p("0"), p("y")],
    ]);
    assert_eq!(m.rank(), 2);
    let ns = m.nullspace();
    assert_eq!(ns.len(), 1);
    for r in 0..3 {
        let dot = Expr::sum(m.row(r).iter().zip(&ns[0]).map(|(a, b)| a * b).collect::<Vec<_>>().iter());
        assert_eq!(is_zero(&dot), ZeroTest::Zero);
    }
    let sol = m.solve(&[p("1"), p("2"), p("y")]).unwrap();
    assert_eq!(sol.free.len(), 1);
    assert!(m.solve(&[p("1"), p("3"), p("0")]).is_none());
    assert_same(&SymMatrix::from_rows(vec![vec![p("a"), p("b")], vec![p("c"), p("d")]]).determinant(), &p("a*d - b*c"));
    assert_eq!(m.numeric_rank(&ProbePoint::new(3)), Some(2));
}

#[test]
fn subs_commutes_with_independent_diff() {
    let e = p("x^2*y + sin(x*z) + f(x)");
    let mut map = BTreeMap::new();
    map.insert("z".to_string(), p("y^2 + 1"));
    assert_eq!(e.subs(&map).diff("x"), e.diff("x").subs(&map));
}

// Random expression trees over x, y, z and a declared g.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i64..4).prop_map(Expr::int),
        Just(Expr::symbol("x")),
        Just(Expr::symbol("y")),
        Just(Expr::symbol("z")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(|a| Expr::exp(a.scale(&Rational::new(1.into(), 4.into())))),
            inner.clone().prop_map(|a| Expr::call("g", vec![a])),
            inner.prop_map(|a| (&a * &a + Expr::int(1)).recip().unwrap()),
        ]
    })
}

fn probe(e: &Expr, x: f64, y: f64, z: f64) -> f64 {
    let pt = ProbePoint::new(11);
    e.eval_with(&|s| match s {
        "x" => Some(x),
        "y" => Some(y),
        "z" => Some(z),
        _ => None,
    }, &pt)
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diff_is_linear_and_leibniz(a in arb_expr(), b in arb_expr()) {
        prop_assert_ne!(is_zero(&((&a + &b).diff("x") - a.diff("x") - b.diff("x"))), ZeroTest::NonZero);
        let lhs = (&a * &b).diff("x");
        let rhs = &a.diff("x") * &b + &a * &b.diff("x");
        prop_assert_ne!(is_zero(&(lhs - rhs)), ZeroTest::NonZero);
    }

    #[test]
    fn diff_matches_finite_differences(a in arb_expr(), x in 0.5f64..1.5, y in -1.5f64..-0.5, z in 0.5f64..1.5) {
        let h = 1e-5;
        let fd = (probe(&a, x + h, y, z) - probe(&a, x - h, y, z)) / (2.0 * h);
        let exact = probe(&a.diff("x"), x, y, z);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} {} {}", a, fd, exact);
    }

    #[test]
    fn subs_then_diff(a in arb_expr(), b in arb_expr()) {
        // z -> b(y) is independent of x.
        let b = b.subs1("x", &Expr::symbol("y")).subs1("z", &Expr::symbol("y"));
        let lhs = a.subs1("z", &b).diff("x");
        let rhs = a.diff("x").subs1("z", &b);
        prop_assert_ne!(is_zero(&(lhs - rhs)), ZeroTest::NonZero);
    }

    #[test]
    fn simplify_idempotent_and_print_roundtrip(a in arb_expr()) {
        prop_assert_eq!(a.simplify().simplify(), a.simplify());
        prop_assert_eq!(parse_open(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn opaque_diff_by_non_argument_is_zero(a in arb_expr()) {
        let g = Expr::call("g", vec![a.subs1("w", &Expr::int(0))]);
        prop_assert!(g.diff("w").is_zero_canonical());
    }
}
