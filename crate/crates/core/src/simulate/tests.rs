use std::collections::BTreeMap;

use super::*;
use crate::geometry::{Chart, ChartSpec};
use crate::hamiltonian::{hamiltonian_from_lagrangian_on, HamiltonianSystem};
use crate::lagrangian::LagrangianSystem;
use crate::symexpr::parse;

fn oscillator_charts() -> (Chart, Chart) {
    let mut spec = ChartSpec::new(&["t"], &["q"]);
    spec.velocities = Some(vec!["v".into()]);
    spec.momenta = Some(vec!["p".into()]);
    spec.contact = Some(vec!["s".into()]);
    let decorate = |c: Chart| c.with_parameters(["gamma"]).unwrap();
    (decorate(spec.lagrangian_chart().unwrap()), decorate(spec.hamiltonian_chart().unwrap()))
}

fn string_charts() -> (Chart, Chart) {
    let spec = ChartSpec::new(&["t", "x"], &["u"]);
    let decorate = |c: Chart| c.with_parameters(["rho", "tau"]).unwrap().with_function("gamma", 1).unwrap();
    (decorate(spec.lagrangian_chart().unwrap()), decorate(spec.hamiltonian_chart().unwrap()))
}

fn e(s: &str, c: &Chart) -> Expr {
    parse(s, c).unwrap()
}

/// Underdamped `q'' + γq' + q = 0` from `q = 1, q' = 0`.
fn damped(gamma: f64, t: f64) -> f64 {
    let w = (1.0 - gamma * gamma / 4.0).sqrt();
    (-gamma * t / 2.0).exp() * ((w * t).cos() + gamma / (2.0 * w) * (w * t).sin())
}

fn oscillator_run(gamma: f64) -> (LagrangianSystem, OdeSystem, OdeTrajectory, Bindings) {
    let (lc, _) = oscillator_charts();
    let sys = LagrangianSystem::new(e("v^2/2 - q^2/2 - gamma*s", &lc), lc).unwrap();
    let bindings = Bindings::new().with("gamma", gamma);
    let ode = OdeSystem::lagrangian(&sys, &bindings).unwrap();
    let initial = OdeState { t: 0.0, values: [("q", 1.0), ("v", 0.0), ("s", 0.0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect() };
    let traj = integrate_ode(&ode, &initial, 20.0, 1e-3).unwrap();
    (sys, ode, traj, bindings)
}

#[test]
fn oscillator_matches_closed_form() {
    let (_, _, traj, _) = oscillator_run(0.2);
    let q = traj.column("q").unwrap();
    let err = traj.times.iter().zip(&q).map(|(t, q)| (q - damped(0.2, *t)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
    assert_eq!(traj.steps(), 20_000);
}

#[test]
fn oscillator_energy_law_and_action() {
    let (sys, ode, traj, _) = oscillator_run(0.2);
    let c = sys.chart();
    let energy = sys.energy().clone();
    let rate = e("-gamma", c) * energy.clone();
    assert!(balance_residual(&traj, &ode, &energy, &rate).unwrap() < 1e-9);
    assert!(action_identity_ode(&traj, &ode) < 1e-9);
    assert!(lagrangian_quadrature_error(&traj, &ode) < 1e-9);
    // Dropping the dissipative term must break the balance.
    let undamped = e("0", c);
    assert!(balance_residual(&traj, &ode, &energy, &undamped).unwrap() > 1e-2);
}

#[test]
fn hamiltonian_oscillator_agrees() {
    let (lc, hc) = oscillator_charts();
    let dual = hamiltonian_from_lagrangian_on(&e("v^2/2 - q^2/2 - gamma*s", &lc), &lc, hc).unwrap();
    let bindings = Bindings::new().with("gamma", 0.2);
    let ode = OdeSystem::hamiltonian(&dual.system, &bindings).unwrap();
    let initial = OdeState { t: 0.0, values: [("q", 1.0), ("p", 0.0), ("s", 0.0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect() };
    let traj = integrate_ode(&ode, &initial, 10.0, 1e-3).unwrap();
    let q = traj.column("q").unwrap();
    let err = traj.times.iter().zip(&q).map(|(t, q)| (q - damped(0.2, *t)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
    let h = dual.system.hamiltonian().clone();
    let rate = e("-gamma", dual.system.chart()) * h.clone();
    assert!(balance_residual(&traj, &ode, &h, &rate).unwrap() < 1e-9);
    assert!(action_identity_ode(&traj, &ode) < 1e-9);
}

#[test]
fn herglotz_variation_vanishes_on_solutions_only() {
    let (sys, _, traj, bindings) = oscillator_run(0.2);
    let bump = Bump { field: 0, center: 5.0, half_width: 2.0, amplitude: 1.0 };
    let on_shell = herglotz_variation_check(&sys, &traj, &bump, &bindings).unwrap();
    assert!(on_shell < 1e-6, "{on_shell}");
    // A trajectory of the wrong damping is not stationary for the true action.
    let (_, _, wrong, _) = oscillator_run(0.5);
    let off_shell = herglotz_variation_check(&sys, &wrong, &bump, &bindings).unwrap();
    assert!(off_shell > 1e-3, "{off_shell}");
}

#[test]
fn bump_is_smooth_and_compact() {
    let b = Bump { field: 0, center: 0.0, half_width: 1.0, amplitude: 2.0 };
    assert_eq!(b.value(0.0), 2.0);
    assert_eq!(b.value(1.0), 0.0);
    let h = 1e-6;
    let fd = (b.value(0.3 + h) - b.value(0.3 - h)) / (2.0 * h);
    assert!((fd - b.derivative(0.3)).abs() < 1e-8);
}

fn string_bindings(gamma: i64) -> Bindings {
    Bindings::new().with("rho", 1.0).with("tau", 1.0).with_function("gamma", &["a"], Expr::frac(gamma, 10))
}

fn sine_state(grid: Grid, rate: &str) -> GridState {
    let u: Vec<f64> = (0..grid.points).map(|j| grid.x(j).sin()).collect();
    let fields = [("u".to_string(), u), (rate.to_string(), vec![0.0; grid.points])].into_iter().collect();
    GridState { t: 0.0, grid, fields }
}

/// Mode-one amplitude of damped `u_tt + γu_t = u_xx` from `sin x` at rest.
fn envelope(gamma: f64, t: f64) -> f64 {
    let w = (1.0 - gamma * gamma / 4.0).sqrt();
    (-gamma * t / 2.0).exp() * ((w * t).cos() + gamma / (2.0 * w) * (w * t).sin())
}

fn string_run(points: usize, t_end: f64) -> (WaveSystem, GridTrajectory, LagrangianSystem, Bindings) {
    let (lc, _) = string_charts();
    let sys = LagrangianSystem::new(e("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &lc), lc).unwrap();
    let bindings = string_bindings(3);
    let wave = WaveSystem::lagrangian(&sys, &bindings).unwrap();
    let grid = Grid::periodic(0.0, std::f64::consts::TAU, points);
    let traj = integrate_wave(&wave, &sine_state(grid, "u_t"), t_end, 0.5 * grid.dx, 4).unwrap();
    (wave, traj, sys, bindings)
}

fn max_error(traj: &GridTrajectory) -> f64 {
    let k = traj.index("u").unwrap();
    let mut worst = 0.0f64;
    for (n, t) in traj.times.iter().enumerate() {
        let a = envelope(0.3, *t);
        for j in 0..traj.grid.points {
            worst = worst.max((traj.snapshots[n][k][j] - a * traj.grid.x(j).sin()).abs());
        }
    }
    worst
}

#[test]
fn string_mode_decays_with_the_damped_envelope() {
    let (wave, traj, _, _) = string_run(128, 10.0);
    assert!((wave.speed() - 1.0).abs() < 1e-15);
    let last = traj.times.len() - 1;
    let a = traj.projection(last, "u", f64::sin).unwrap() / std::f64::consts::PI;
    assert!((a - envelope(0.3, 10.0)).abs() < 1e-3, "{a}");
    assert!(traj.max_energy_increase() <= 1e-14);
    assert!(action_identity_wave(&traj, &wave) < 1e-4);
}

#[test]
fn string_converges_at_second_order() {
    let errors: Vec<f64> = [64, 128].iter().map(|&j| max_error(&string_run(j, 2.0).1)).collect();
    let order = (errors[0] / errors[1]).log2();
    assert!((order - 2.0).abs() < 0.2, "{errors:?} {order}");
}

#[test]
fn string_residuals_are_small_and_exact_residual_vanishes() {
    let (_, traj, sys, bindings) = string_run(128, 2.0);
    let norms = residual_norms(&traj, &sys.equations(), sys.chart(), &bindings).unwrap();
    assert_eq!(norms.len(), 2);
    for series in &norms {
        assert!(series.max_linf() < 5e-3, "{} {}", series.label, series.max_linf());
    }
    let c = sys.chart();
    let w = (1.0f64 - 0.0225).sqrt();
    let u = e(&format!("exp(-3*t/20)*(cos({w}*t) + 3/(20*{w})*sin({w}*t))*sin(x)"), c);
    let exact: BTreeMap<String, Expr> = [("u".to_string(), u)].into_iter().collect();
    let field = crate::equations::EquationSet { equations: vec![sys.equations().equations[0].clone()] };
    let grid = Grid::periodic(0.0, std::f64::consts::TAU, 32);
    let series = exact_residual_norms(&field, c, &exact, &grid, &[0.0, 1.0, 2.5], &bindings).unwrap();
    assert!(series[0].max_linf() < 1e-12, "{}", series[0].max_linf());
}

#[test]
fn hamiltonian_string_matches_lagrangian_run() {
    let (_, hc) = string_charts();
    let h = e("p_t^2/(2*rho) - p_x^2/(2*tau) + gamma(t)*s_t", &hc);
    let sys = HamiltonianSystem::new(h, hc).unwrap();
    let bindings = string_bindings(3);
    let wave = WaveSystem::hamiltonian(&sys, &bindings).unwrap();
    let grid = Grid::periodic(0.0, std::f64::consts::TAU, 128);
    let traj = integrate_wave(&wave, &sine_state(grid, "p_t"), 2.0, 0.5 * grid.dx, 4).unwrap();
    let (_, reference, _, _) = string_run(128, 2.0);
    let (k, r) = (traj.index("u").unwrap(), reference.index("u").unwrap());
    let last = traj.snapshots.len() - 1;
    let diff = traj.snapshots[last][k].iter().zip(&reference.snapshots[last][r]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
    assert!(traj.max_energy_increase() <= 1e-14);
    assert!(action_identity_wave(&traj, &wave) < 1e-4);
    let norms = residual_norms(&traj, &sys.equations(), sys.chart(), &bindings).unwrap();
    assert!(norms.iter().all(|s| s.max_linf() < 5e-3), "{norms:?}");
}

#[test]
fn dirichlet_grid_holds_the_ends() {
    let (lc, _) = string_charts();
    let sys = LagrangianSystem::new(e("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &lc), lc).unwrap();
    let bindings = string_bindings(0);
    let wave = WaveSystem::lagrangian(&sys, &bindings).unwrap();
    let grid = Grid::dirichlet(0.0, std::f64::consts::PI, 63);
    let traj = integrate_wave(&wave, &sine_state(grid, "u_t"), 3.0, 0.5 * grid.dx, 10).unwrap();
    let drift = (traj.energy.last().unwrap() - traj.energy[0]).abs() / traj.energy[0];
    assert!(drift < 1e-6, "{drift}");
    let last = traj.snapshots.len() - 1;
    let mid = traj.snapshots[last][0][31];
    assert!((mid - 3.0f64.cos()).abs() < 1e-3, "{mid}");
}

#[test]
fn cfl_violation_refuses_to_start() {
    let (lc, _) = string_charts();
    let sys = LagrangianSystem::new(e("rho*u_t^2/2 - tau*u_x^2/2 - gamma(t)*s_t", &lc), lc).unwrap();
    let wave = WaveSystem::lagrangian(&sys, &string_bindings(3)).unwrap();
    let grid = Grid::periodic(0.0, std::f64::consts::TAU, 64);
    let err = integrate_wave(&wave, &sine_state(grid, "u_t"), 1.0, 2.0 * grid.dx, 1).unwrap_err();
    assert!(matches!(err, SimulationError::Cfl { .. }) && err.is_instability(), "{err}");
}

#[test]
fn missing_parameter_is_a_setup_error() {
    let (lc, _) = oscillator_charts();
    let sys = LagrangianSystem::new(e("v^2/2 - q^2/2 - gamma*s", &lc), lc).unwrap();
    let err = OdeSystem::lagrangian(&sys, &Bindings::new()).unwrap_err();
    assert!(matches!(err, SimulationError::Setup(_)), "{err}");
}

#[test]
fn csv_and_report_are_deterministic() {
    let (_, ode, traj, _) = oscillator_run(0.2);
    let csv = traj.to_csv();
    assert!(csv.starts_with("t,q,v,s\n0,1,0,0\n"), "{}", &csv[..40]);
    assert_eq!(ode.state_names(), ["q", "v", "s"]);
    let report = RunReport { system: "oscillator".into(), times: vec![0.0, 0.1], ..Default::default() };
    assert_eq!(report.to_json(), report.clone().to_json());
}

