//! Fixtures shared by the benchmarks in `benches/`.

use std::collections::BTreeMap;

use multicontact::simulate::{GridState, OdeState};
use multicontact::simulate::Grid;
use multicontact::{parse, Bindings, Chart, ChartSpec, Expr, LagrangianSystem};

/// Damped oscillator `v²/2 − q²/2 − γs` with `γ = 0.2`.
pub fn oscillator() -> (LagrangianSystem, Bindings, OdeState) {
    let mut spec = ChartSpec::new(&["t"], &["q"]);
    spec.velocities = Some(vec!["v".into()]);
    spec.contact = Some(vec!["s".into()]);
    let chart = spec.lagrangian_chart().unwrap().with_parameters(["gamma"]).unwrap();
    let l = parse("v^2/2 - q^2/2 - gamma*s", &chart).unwrap();
    let initial = OdeState { t: 0.0, values: [("q", 1.0), ("v", 0.0), ("s", 0.0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect() };
    (LagrangianSystem::new(l, chart).unwrap(), Bindings::new().with("gamma", 0.2), initial)
}

/// Damped string with `ρ = τ = 1`, `γ = 0.3`, started from `sin x` at rest on a periodic grid.
pub fn string(points: usize) -> (LagrangianSystem, Bindings, GridState) {
    let spec = ChartSpec::new(&["t", "x"], &["u"]);
    let chart = spec.lagrangian_chart().unwrap().with_parameters(["rho", "tau"]).unwrap().with_function("gamma", 1).unwrap();
    let l = parse("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &chart).unwrap();
    let bindings = Bindings::new().with("rho", 1.0).with("tau", 1.0).with_function("gamma", &["a"], Expr::frac(3, 10));
    let grid = Grid::periodic(0.0, std::f64::consts::TAU, points);
    let u: Vec<f64> = (0..points).map(|j| grid.x(j).sin()).collect();
    let fields = BTreeMap::from([("u".to_string(), u), ("u_t".to_string(), vec![0.0; points])]);
    (LagrangianSystem::new(l, chart).unwrap(), bindings, GridState { t: 0.0, grid, fields })
}

/// Maxwell Lagrangian with sources and dissipation on `dim` base coordinates.
pub fn maxwell(dim: usize) -> (Expr, Chart) {
    let base: Vec<String> = (0..dim).map(|mu| format!("x{mu}")).collect();
    let fields: Vec<String> = (0..dim).map(|mu| format!("A{mu}")).collect();
    let suffixes: Vec<String> = (0..dim).map(|mu| mu.to_string()).collect();
    let mut spec = ChartSpec::new(&base, &fields).with_suffixes(&suffixes);
    spec.contact = Some((0..dim).map(|mu| format!("s_{mu}")).collect());
    let metric: Vec<String> = (0..dim).map(|mu| format!("g{mu}")).collect();
    let mut chart = spec.lagrangian_chart().unwrap().with_parameters(std::iter::once("mu0".to_string()).chain(metric)).unwrap();
    for mu in 0..dim {
        chart = chart.with_function(&format!("J{mu}"), dim).unwrap().with_function(&format!("gamma{mu}"), dim).unwrap();
    }
    let args = base.join(",");
    let mut terms = Vec::new();
    for mu in 0..dim {
        for nu in 0..dim {
            terms.push(format!("-1/(4*mu0)*g{mu}*g{nu}*(A{nu}_{mu} - A{mu}_{nu})^2"));
        }
        terms.push(format!("-A{mu}*J{mu}({args})"));
        terms.push(format!("-gamma{mu}({args})*s_{mu}"));
    }
    let l = parse(&terms.join(" + "), &chart).unwrap();
    (l, chart)
}
