use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::corpus::random_quadratic;
use crate::equations::normalized;
use crate::geometry::ChartSpec;
use crate::structure::{dissipation_form, is_variational};
use crate::symexpr::{parse, parse_open};

fn string_chart() -> Chart {
    ChartSpec::new(&["t", "x"], &["u"])
        .lagrangian_chart()
        .unwrap()
        .with_parameters(["rho", "tau"])
        .unwrap()
        .with_function("gamma", 1)
        .unwrap()
}

const STRING_L: &str = "rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t";

fn oscillator_chart() -> Chart {
    let mut spec = ChartSpec::new(&["t"], &["q"]);
    spec.velocities = Some(vec!["v".into()]);
    spec.contact = Some(vec!["s".into()]);
    spec.lagrangian_chart().unwrap().with_parameters(["gamma"]).unwrap()
}

const OSCILLATOR_L: &str = "v^2/2 - q^2/2 - gamma*s";

fn e(s: &str, c: &Chart) -> Expr {
    parse(s, c).unwrap()
}

fn zero(a: &Expr, b: &Expr) -> bool {
    is_zero(&(a - b)) == ZeroTest::Zero
}

/// Maxwell chart: base `x0..x3`, potentials `A0..A3`, velocities `A{a}_{mu}`
/// for `∂_mu A_a`, contact `s_0..s_3`, diagonal metric `g0..g3`.
fn maxwell() -> (Chart, Expr) {
    let base = ["x0", "x1", "x2", "x3"];
    let mut spec = ChartSpec::new(&base, &["A0", "A1", "A2", "A3"]).with_suffixes(&["0", "1", "2", "3"]);
    spec.contact = Some((0..4).map(|mu| format!("s_{mu}")).collect());
    let mut chart = spec.lagrangian_chart().unwrap().with_parameters(["mu0", "g0", "g1", "g2", "g3"]).unwrap();
    for mu in 0..4 {
        chart = chart.with_function(&format!("J{mu}"), 4).unwrap().with_function(&format!("gamma{mu}"), 4).unwrap();
    }
    let args = base.join(",");
    let mut terms = Vec::new();
    for mu in 0..4 {
        for nu in 0..4 {
            terms.push(format!("-1/(4*mu0)*g{mu}*g{nu}*(A{nu}_{mu} - A{mu}_{nu})^2"));
        }
        terms.push(format!("-A{mu}*J{mu}({args})"));
        terms.push(format!("-gamma{mu}({args})*s_{mu}"));
    }
    let l = e(&terms.join(" + "), &chart);
    (chart, l)
}

#[test]
fn string_theta_and_energy() {
    let c = string_chart();
    let sys = LagrangianSystem::new(e(STRING_L, &c), c.clone()).unwrap();
    let (t, x, u, st, sx) = (0, 1, 2, c.index("s_t").unwrap(), c.index("s_x").unwrap());
    let th = sys.theta();
    assert!(zero(&th.coefficient(&[u, x]), &e("-rho*u_t", &c)));
    // d^1x_x = −dt, so −(∂L/∂u_x) du∧(−dt) stored on dt∧du.
    assert!(zero(&th.coefficient(&[t, u]), &e("tau*u_x", &c)));
    assert!(zero(&th.coefficient(&[t, x]), &e("rho*u_t^2/2 - tau*u_x^2/2 + gamma(t)*s_t", &c)));
    assert_eq!(th.coefficient(&[st, x]), Expr::one());
    assert_eq!(th.coefficient(&[t, sx]), Expr::one());
    assert!(zero(sys.energy(), &e("rho*u_t^2/2 - tau*u_x^2/2 + gamma(t)*s_t", &c)));
    assert!(is_variational(th, &c));
}

#[test]
fn zero_lagrangian_is_pure_contact() {
    let c = string_chart();
    let th = build_theta_l(&Expr::zero(), &c).unwrap();
    let expected = Form::parse("ds_t^dx - ds_x^dt", &c).unwrap();
    assert_eq!(th.sub(&expected).is_zero(), ZeroTest::Zero);
}

#[test]
fn chart_roles_are_checked() {
    let h = ChartSpec::new(&["t", "x"], &["u"]).hamiltonian_chart().unwrap();
    match build_theta_l(&Expr::zero(), &h) {
        Err(LagrangianError::MissingRoles(missing)) => {
            assert_eq!(missing, ["velocity of u along t", "velocity of u along x"]);
        }
        other => panic!("{other:?}"),
    }
    let c = string_chart();
    assert_eq!(build_theta_l(&parse_open("k*u").unwrap(), &c), Err(LagrangianError::UnknownSymbol("k".into())));
}

#[test]
fn regularity_examples() {
    let c = string_chart();
    let sys = LagrangianSystem::new(e(STRING_L, &c), c.clone()).unwrap();
    assert_eq!(sys.hessian().get(0, 0), &e("rho", &c));
    assert_eq!(sys.hessian().get(1, 1), &e("-tau", &c));
    assert!(sys.hessian().get(0, 1).is_zero_canonical());
    let check = sys.regularity_check();
    assert_eq!(check.verdict, Regularity::Regular);
    assert_eq!(check.classified, Some(Verdict::Multicontact));

    let coupling = e("u_t*s_t + u_x*s_x", &c);
    let check = regularity(&coupling, &c).unwrap();
    assert_eq!(check.verdict, Regularity::Singular { rank: 0, size: 2 });
    assert_eq!(check.classified, None);
    let reason = LagrangianSystem::new(coupling, c).unwrap().structure().classification().verdict.clone();
    assert_eq!(reason, Verdict::NotMulticontact(crate::structure::Reason::NoReebDistribution));
}

#[test]
fn string_equation_is_damped_wave() {
    let c = string_chart();
    let eqs = herglotz_el_equations(&e(STRING_L, &c), &c).unwrap();
    assert_eq!(eqs.len(), 2);
    let wave = normalized(&eqs.get("u").unwrap().residual, "u_t_t").unwrap();
    let expected = parse_open("u_t_t - tau/rho*u_x_x + gamma(t)*u_t").unwrap();
    assert!(zero(&wave, &expected));
    let contact = &eqs.get("s").unwrap().residual;
    assert!(zero(contact, &parse_open("s_t_t + s_x_x - (rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t)").unwrap()));
}

#[test]
fn oscillator_equations() {
    let c = oscillator_chart();
    let eqs = herglotz_el_equations(&e(OSCILLATOR_L, &c), &c).unwrap();
    assert!(zero(&eqs.get("q").unwrap().residual, &parse_open("q_t_t + q + gamma*v").unwrap()));
    assert!(zero(&eqs.get("s").unwrap().residual, &parse_open("s_t - (v^2/2 - q^2/2 - gamma*s)").unwrap()));
}

#[test]
fn maxwell_lagrangian() {
    let (c, l) = maxwell();
    let sys = LagrangianSystem::new(l, c.clone()).unwrap();
    assert_eq!(sys.regularity(), Regularity::Singular { rank: 6, size: 16 });

    // −∂L/∂A_{a,mu} = (1/mu0) g_a g_mu F_{mu a}, F_{mu a} = ∂_mu A_a − ∂_a A_mu.
    let th = sys.theta();
    for a in 0..4 {
        for mu in 0..4 {
            let dv = Form::dz(c.field(a)).wedge(&Form::base_volume_minus(&c, mu));
            let (idx, sign) = dv.terms().next().map(|(i, s)| (i.clone(), s.clone())).unwrap();
            let expected = e(&format!("g{a}*g{mu}/mu0*(A{a}_{mu} - A{mu}_{a})"), &c) * sign;
            assert!(zero(&th.coefficient(&idx), &expected), "a={a} mu={mu}");
        }
    }

    let structure = sys.structure();
    let cl = structure.classification();
    assert_eq!(cl.verdict, Verdict::Premulticontact(10));
    assert_eq!(cl.ranks.reeb, 14);
    assert_eq!(cl.ranks.characteristic, 10);
    for mu in 0..4 {
        let ds = VectorField::coordinate(c.contact(mu).unwrap());
        assert_eq!(structure.reeb_distribution().contains(&ds), crate::symexpr::Tristate::True);
    }
    let args = "x0,x1,x2,x3";
    let mut expected = Form::zero(1);
    for mu in 0..4 {
        expected = expected.add(&Form::dz(c.base(mu)).scale(&e(&format!("gamma{mu}({args})"), &c)));
    }
    assert_eq!(structure.sigma().unwrap().sub(&expected).is_zero(), ZeroTest::Zero);

    // mu0 J^a = g_a Σ_mu g_mu (∂_mu F_{mu a} + gamma_mu F_{mu a}).
    let eqs = sys.equations();
    for a in 0..4 {
        let mut rhs = Vec::new();
        for mu in 0..4 {
            let (lo, hi) = if a <= mu { (a, mu) } else { (mu, a) };
            rhs.push(format!("g{a}*g{mu}*(A{a}_{mu}_{mu} - A{mu}_{lo}_{hi} + gamma{mu}({args})*(A{a}_{mu} - A{mu}_{a}))"));
        }
        let expected = parse_open(&format!("mu0*J{a}({args}) - ({})", rhs.join(" + "))).unwrap();
        let got = &eqs.get(&format!("A{a}")).unwrap().residual * &e("mu0", &c);
        assert!(zero(&got, &expected), "a={a}");
    }
}

#[test]
fn oscillator_sopde_is_unique() {
    let c = oscillator_chart();
    let sys = LagrangianSystem::new(e(OSCILLATOR_L, &c), c.clone()).unwrap();
    let sol = sys.sopde_coefficients();
    assert!(sol.notice.is_none(), "{:?}", sol.notice);
    assert!(sol.free.is_empty());
    assert_eq!(sol.semi_holonomic, ZeroTest::Zero);
    let coeff = |name: &str| sol.coefficients[&(0, c.index(name).unwrap())].clone();
    assert!(zero(&coeff("q"), &e("v", &c)));
    assert!(zero(&coeff("v"), &e("-q - gamma*v", &c)));
    assert!(zero(&coeff("s"), &e(OSCILLATOR_L, &c)));
}

#[test]
fn string_sopde_family() {
    let c = string_chart();
    let sys = LagrangianSystem::new(e(STRING_L, &c), c.clone()).unwrap();
    let sol = sys.sopde_coefficients();
    assert!(sol.notice.is_none(), "{:?}", sol.notice);
    assert_eq!(sol.semi_holonomic, ZeroTest::Zero);
    let coeff = |rho: usize, name: &str| sol.coefficients[&(rho, c.index(name).unwrap())].clone();
    let trace = coeff(0, "s_t") + coeff(1, "s_x");
    assert!(zero(&trace, &e(STRING_L, &c)));
    let wave = e("rho", &c) * coeff(0, "u_t") - e("tau", &c) * coeff(1, "u_x") + e("gamma(t)*rho*u_t", &c);
    assert_eq!(is_zero(&wave), ZeroTest::Zero);
    // Three of the four contact coefficients and three of the four second-order ones stay free.
    assert_eq!(sol.free.len(), 6, "{:?}", sol.free);
    let residuals = crate::structure::mvf_residuals_with(sys.theta(), sys.sigma(), &sol.multivector(&c), &c);
    assert_eq!(residuals.is_zero(), ZeroTest::Zero);
}

#[test]
fn singular_sopde_is_left_unsolved() {
    let c = string_chart();
    let sys = LagrangianSystem::new(e("u_t*s_t + u_x*s_x", &c), c).unwrap();
    let sol = sys.sopde_coefficients();
    assert!(sol.notice.unwrap().starts_with("singular Lagrangian"));
    assert!(!sol.unsolved.is_empty());
}

#[test]
fn s_independent_equations_are_classical() {
    let c = string_chart();
    let l = e("rho*u_t^2/2 - tau*u_x^2/2 + u*u_x - u^3", &c);
    let eqs = herglotz_el_equations(&l, &c).unwrap();
    let mut classical = -l.diff("u");
    for mu in 0..2 {
        classical = classical + crate::equations::total_derivative(&l.diff(c.name(c.velocity(0, mu).unwrap())), mu, &c);
    }
    assert_eq!(eqs.get("u").unwrap().residual, classical);
    let sys = LagrangianSystem::new(l, c.clone()).unwrap();
    assert_eq!(sys.structure().sigma().unwrap().is_zero(), ZeroTest::Zero);
}

fn reeb_agree(sys: &LagrangianSystem) -> bool {
    let formula = sys.reeb_formula().expect("regular and small");
    let basis = sys.structure().reeb_basis().expect("multicontact");
    formula.iter().zip(basis).all(|(a, b)| {
        let mut diff = a.clone();
        for (i, c) in b.components() {
            diff.add_component(*i, -c.clone());
        }
        diff.is_zero() == ZeroTest::Zero
    })
}

#[test]
fn reeb_formula_on_coupled_example() {
    let c = string_chart();
    let l = e("rho*u_t^2/2 - tau*u_x^2/2 + (u_t + 2*u_x)*s_t - u*s_x", &c);
    let sys = LagrangianSystem::new(l, c).unwrap();
    assert!(reeb_agree(&sys));
    let r = sys.reeb_formula().unwrap();
    // W = diag(1/rho, −1/tau), ∂²L/∂s_t∂(u_t, u_x) = (1, 2).
    let chart = sys.chart();
    assert!(zero(&r[0].component(chart.index("u_t").unwrap()), &e("-1/rho", chart)));
    assert!(zero(&r[0].component(chart.index("u_x").unwrap()), &e("2/tau", chart)));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn random_lagrangians_satisfy_structure_identities(seed in 0u64..10_000) {
        let sample = random_quadratic(seed);
        let sys = LagrangianSystem::new(sample.lagrangian.clone(), sample.chart.clone()).unwrap();
        prop_assert_eq!(sys.regularity(), Regularity::Regular);
        prop_assert!(is_variational(sys.theta(), sys.chart()));
        let sigma = dissipation_form(sys.theta(), sys.chart()).unwrap();
        prop_assert_eq!(sigma.sub(sys.sigma()).is_zero(), ZeroTest::Zero);
        prop_assert_eq!(sys.structure().classification().verdict.clone(), Verdict::Multicontact);
        prop_assert!(reeb_agree(&sys));
        let sol = sys.sopde_coefficients();
        prop_assert!(sol.notice.is_none());
        prop_assert_eq!(sol.semi_holonomic, ZeroTest::Zero);
        let m = sys.chart().m();
        prop_assert_eq!(sol.free.is_empty(), m == 1);
    }
}

#[test]
fn momenta_table() {
    let c = string_chart();
    let sys = LagrangianSystem::new(e(STRING_L, &c), c.clone()).unwrap();
    let p: BTreeMap<_, _> = sys.momenta();
    assert_eq!(p[&(0, 0)], e("rho*u_t", &c));
    assert_eq!(p[&(0, 1)], e("-tau*u_x", &c));
}
