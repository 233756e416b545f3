use super::*;
use crate::corpus::random_quadratic;
use crate::geometry::ChartSpec;
use crate::symexpr::parse;

fn string_charts() -> (Chart, Chart) {
    let spec = ChartSpec::new(&["t", "x"], &["u"]);
    let decorate = |c: Chart| c.with_parameters(["rho", "tau"]).unwrap().with_function("gamma", 1).unwrap();
    (decorate(spec.lagrangian_chart().unwrap()), decorate(spec.hamiltonian_chart().unwrap()))
}

fn assert_all_pass(m: &CheckMatrix) {
    assert!(m.all_pass(), "\n{}", m.to_text());
}

#[test]
fn string_lagrangian_passes() {
    let (lc, _) = string_charts();
    let l = parse("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &lc).unwrap();
    let m = lagrangian_checks(&LagrangianSystem::new(l, lc).unwrap());
    assert_all_pass(&m);
    assert_eq!(m.get("reeb_involutive").unwrap().outcome, Outcome::Pass);
}

#[test]
fn string_hamiltonian_passes() {
    let (_, hc) = string_charts();
    let h = parse("p_t^2/(2*rho) - p_x^2/(2*tau) + gamma(t)*s_t", &hc).unwrap();
    assert_all_pass(&hamiltonian_checks(&HamiltonianSystem::new(h, hc).unwrap()));
}

#[test]
fn oscillator_passes_on_both_sides() {
    let mut spec = ChartSpec::new(&["t"], &["q"]);
    spec.velocities = Some(vec!["v".into()]);
    spec.momenta = Some(vec!["p".into()]);
    spec.contact = Some(vec!["s".into()]);
    let lc = spec.lagrangian_chart().unwrap().with_parameters(["gamma"]).unwrap();
    let hc = spec.hamiltonian_chart().unwrap().with_parameters(["gamma"]).unwrap();
    let l = parse("v^2/2 - q^2/2 - gamma*s", &lc).unwrap();
    assert_all_pass(&lagrangian_checks(&LagrangianSystem::new(l, lc).unwrap()));
    let h = parse("p^2/2 + q^2/2 + gamma*s", &hc).unwrap();
    assert_all_pass(&hamiltonian_checks(&HamiltonianSystem::new(h, hc).unwrap()));
}

#[test]
fn wrong_equations_are_caught() {
    let (lc, _) = string_charts();
    let l = parse("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &lc).unwrap();
    let sys = LagrangianSystem::new(l, lc.clone()).unwrap();
    let mut eqs = sys.equations();
    eqs.equations[0].residual = eqs.equations[0].residual.clone() + Expr::symbol("u");
    let m = formulation_checks(sys.theta(), sys.sigma(), &lc, &eqs);
    assert_eq!(m.get("multivector_equations").unwrap().outcome, Outcome::Fail);
    assert_eq!(m.get("section_equations").unwrap().outcome, Outcome::Fail);
}

#[test]
fn degenerate_form_skips_reeb_checks() {
    let mut spec = ChartSpec::new(&["t"], &["y"]);
    spec.contact = Some(vec!["s".into()]);
    let lc = spec.lagrangian_chart().unwrap();
    let l = parse("y_t*s", &lc).unwrap();
    let m = structure_checks(LagrangianSystem::new(l, lc).unwrap().structure());
    assert_eq!(m.get("reeb_involutive").unwrap().outcome, Outcome::Skipped);
    assert_eq!(m.get("dissipation_unique").unwrap().outcome, Outcome::Skipped);
}

#[test]
fn sign_matching() {
    let (a, b) = (Expr::symbol("a"), Expr::symbol("b"));
    assert_eq!(match_up_to_sign(&[-a.clone(), b.clone(), Expr::zero()], &[a.clone(), b.clone()]), ZeroTest::Zero);
    assert_eq!(match_up_to_sign(std::slice::from_ref(&a), &[a.clone(), b.clone()]), ZeroTest::NonZero);
    assert_eq!(match_up_to_sign(&[a.clone() + b.clone()], std::slice::from_ref(&a)), ZeroTest::NonZero);
    // One found residual covers every expected equation equal to it.
    assert_eq!(match_up_to_sign(std::slice::from_ref(&a), &[a.clone(), -a.clone()]), ZeroTest::Zero);
}

#[test]
fn coincident_equations_match() {
    let mut spec = ChartSpec::new(&["t"], &["y"]);
    spec.contact = Some(vec!["s".into()]);
    let chart = spec.lagrangian_chart().unwrap();
    let l = parse("y_t*s", &chart).unwrap();
    let m = lagrangian_checks(&LagrangianSystem::new(l, chart).unwrap());
    for name in ["multivector_equations", "connection_equations", "section_equations"] {
        assert_eq!(m.get(name).unwrap().outcome, Outcome::Pass, "{name}:\n{}", m.to_text());
    }
}

#[test]
fn random_corpus_passes() {
    for seed in 0..12 {
        let sample = random_quadratic(seed);
        let m = lagrangian_checks(&LagrangianSystem::new(sample.lagrangian, sample.chart).unwrap());
        assert!(m.all_pass(), "seed {seed} ({}):\n{}", sample.label, m.to_text());
    }
}


#[test]
fn maxwell_passes() {
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
    let l = parse(&terms.join(" + "), &chart).unwrap();
    let start = std::time::Instant::now();
    let m = lagrangian_checks(&LagrangianSystem::new(l, chart).unwrap());
    assert_all_pass(&m);
    assert!(m.get("reeb_involutive").unwrap().detail.contains("lie in C"));
    eprintln!("maxwell checks in {:?}", start.elapsed());
}
