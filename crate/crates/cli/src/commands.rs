//! The five commands. Each returns its stdout text, the files it would write
//! under `--out`, and an exit code.

use std::collections::BTreeMap;

use multicontact::hamiltonian::{hamiltonian_from_lagrangian_on, HamiltonianError, LegendreMap, LegendreTable};
use multicontact::invariants::{hamiltonian_checks, lagrangian_checks};
use multicontact::simulate::{
    action_identity_ode, action_identity_wave, balance_residual, integrate_ode, integrate_wave, lagrangian_quadrature_error,
    residual_norms, to_canonical_json, GridState, OdeState, OdeSystem, ResidualSeries, RunReport, SolverMetadata, WaveSide, WaveSystem,
};
use multicontact::structure::Report;
use multicontact::{CheckMatrix, EquationSet, Expr, HamiltonianSystem, LagrangianSystem, Outcome, Regularity, SimulationError, Structure, Verdict};
use serde::Serialize;
use thiserror::Error;

use crate::system::{Density, Simulation, System};

/// Largest accepted `|ds/dt − L|` along an ODE run.
pub const ODE_IDENTITY_TOLERANCE: f64 = 1e-6;
/// Largest accepted energy-balance residual along an ODE run.
pub const ODE_BALANCE_TOLERANCE: f64 = 1e-6;
/// Largest accepted `|∂_mu s^mu − L|` on a field run.
pub const WAVE_IDENTITY_TOLERANCE: f64 = 1e-3;
/// Largest accepted step-to-step energy increase on a field run.
pub const ENERGY_INCREASE_TOLERANCE: f64 = 1e-10;
/// Largest accepted `L∞` norm of a finite-difference equation residual.
pub const WAVE_RESIDUAL_TOLERANCE: f64 = 1e-2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STRUCTURE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Latex,
    Json,
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Structure(String),
    #[error("{0}")]
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Structure(_) => EXIT_STRUCTURE,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        match e {
            e if e.is_instability() => Failure::Numeric(e.to_string()),
            SimulationError::Unsupported(_) => Failure::Structure(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Output {
    pub stdout: String,
    /// `(file name, contents)` written under the output directory.
    pub files: Vec<(String, String)>,
    pub code: i32,
}

enum Built {
    Lagrangian(LagrangianSystem),
    Hamiltonian(HamiltonianSystem),
}

impl Built {
    fn structure(&self) -> &Structure {
        match self {
            Built::Lagrangian(s) => s.structure(),
            Built::Hamiltonian(s) => s.structure(),
        }
    }

    fn equations(&self) -> EquationSet {
        match self {
            Built::Lagrangian(s) => s.equations(),
            Built::Hamiltonian(s) => s.equations(),
        }
    }
}

fn build(sys: &System) -> Result<Built, Failure> {
    match &sys.density {
        Density::Lagrangian(l) => {
            LagrangianSystem::new(l.clone(), sys.chart.clone()).map(Built::Lagrangian).map_err(|e| Failure::Input(e.to_string()))
        }
        Density::Hamiltonian(h) => {
            HamiltonianSystem::new(h.clone(), sys.chart.clone()).map(Built::Hamiltonian).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn text_or_json(format: Format, command: &str) -> Result<bool, Failure> {
    match format {
        Format::Text => Ok(false),
        Format::Json => Ok(true),
        Format::Latex => Err(Failure::Input(format!("`{command}` supports --format text or json"))),
    }
}

#[derive(Serialize)]
struct Classified<'a> {
    system: &'a str,
    #[serde(flatten)]
    report: Report,
}

/// One-line verdict: `Multicontact`, `Premulticontact k=N` or `NotMulticontact: reason`.
pub fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::Multicontact => "Multicontact".into(),
        Verdict::Premulticontact(k) => format!("Premulticontact k={k}"),
        Verdict::NotMulticontact(r) => format!("NotMulticontact: {r}"),
    }
}

pub fn classify(sys: &System, format: Format) -> Result<Output, Failure> {
    let json = text_or_json(format, "classify")?;
    let built = build(sys)?;
    let s = built.structure();
    let c = s.classification();
    let report = s.report();
    let body = to_canonical_json(&Classified { system: &sys.name, report: report.clone() });
    let stdout = if json {
        body.clone()
    } else {
        let mut t = format!("system: {}\nverdict: {}\n", sys.name, verdict_line(&c.verdict));
        t += &format!("ranks: ker ω {}, Reeb {}, characteristic {}\n", c.ranks.kernel, c.ranks.reeb, c.ranks.characteristic);
        t += &format!("conditions: {:?}\nvariational: {}\n", c.conditions, report.variational);
        for (mu, r) in report.reeb.iter().enumerate() {
            t += &format!("reeb[{mu}]: {r}\n");
        }
        if let Some(sigma) = &report.sigma {
            t += &format!("sigma: {sigma}\n");
        }
        for w in &report.warnings {
            t += &format!("warning: {w}\n");
        }
        t
    };
    let code = if c.verdict.is_structure() { EXIT_OK } else { EXIT_STRUCTURE };
    Ok(Output { stdout, files: vec![("classification.json".into(), body)], code })
}

pub fn derive(sys: &System, format: Format) -> Result<Output, Failure> {
    let eqs = build(sys)?.equations();
    let (text, file) = match format {
        Format::Text => (eqs.to_text(), "equations.txt"),
        Format::Latex => (eqs.to_latex(), "equations.tex"),
        Format::Json => (to_canonical_json(&eqs.to_json()), "equations.json"),
    };
    Ok(Output { stdout: text.clone(), files: vec![(file.into(), text)], code: EXIT_OK })
}

#[derive(Serialize)]
struct LegendreReport {
    system: String,
    map: LegendreTable,
    hamiltonian: Option<String>,
    pullback_check: Option<String>,
    equations_agree: Option<String>,
    note: Option<String>,
}

pub fn legendre(sys: &System, format: Format) -> Result<Output, Failure> {
    let json = text_or_json(format, "legendre")?;
    let Density::Lagrangian(l) = &sys.density else {
        return Err(Failure::Input("`legendre` needs a system given by a lagrangian".into()));
    };
    let map = LegendreMap::new(l, &sys.chart, sys.dual_chart.clone()).map_err(|e| Failure::Input(e.to_string()))?;
    let mut report =
        LegendreReport { system: sys.name.clone(), map: map.table(), hamiltonian: None, pullback_check: None, equations_agree: None, note: None };
    let mut code = EXIT_OK;
    match hamiltonian_from_lagrangian_on(l, &sys.chart, sys.dual_chart.clone()) {
        Ok(dual) => {
            report.hamiltonian = Some(dual.system.hamiltonian().to_string());
            report.pullback_check = Some(format!("{:?}", dual.pullback_check));
            report.equations_agree = Some(format!("{:?}", dual.equations_agree()));
        }
        Err(HamiltonianError::NumericOnly) => report.note = Some(HamiltonianError::NumericOnly.to_string()),
        Err(e @ (HamiltonianError::NotRegular(_) | HamiltonianError::PullbackMismatch)) => {
            report.note = Some(e.to_string());
            code = EXIT_STRUCTURE;
        }
        Err(e) => return Err(Failure::Input(e.to_string())),
    }
    let body = to_canonical_json(&report);
    let stdout = if json {
        body.clone()
    } else {
        let mut t = format!("system: {}\nregularity: {:?}\n", sys.name, report.map.regularity);
        for (k, v) in report.map.forward.iter().chain(report.map.inverse.iter().flatten()).filter(|(k, v)| k != v) {
            t += &format!("{k} = {v}\n");
        }
        if let Some(h) = &report.hamiltonian {
            t += &format!("H = {h}\n");
        }
        if let (Some(p), Some(q)) = (&report.pullback_check, &report.equations_agree) {
            t += &format!("pullback Θ_H − Θ_L: {p}\nequations agree: {q}\n");
        }
        if let Some(n) = &report.note {
            t += &format!("note: {n}\n");
        }
        t
    };
    Ok(Output { stdout, files: vec![("legendre.json".into(), body)], code })
}

/// A finished run: its report and CSV.
pub struct Run {
    pub report: RunReport,
    pub csv: String,
}

fn evaluate(e: &Expr, sys: &System, point: &[(&str, f64)]) -> Result<f64, Failure> {
    let mut slots: Vec<&str> = point.iter().map(|(n, _)| *n).collect();
    let mut values: Vec<f64> = point.iter().map(|(_, v)| *v).collect();
    for (k, v) in &sys.bindings.parameters {
        slots.push(k);
        values.push(*v);
    }
    let compiled = e.compile(&slots, &sys.bindings.functions).map_err(|err| Failure::Input(format!("initial value {e}: {err}")))?;
    Ok(compiled.eval(&values))
}

fn run_ode(sys: &System, built: &Built, sim: &Simulation) -> Result<Run, Failure> {
    let (ode, energy, rate) = match built {
        Built::Lagrangian(l) => {
            let ode = OdeSystem::lagrangian(l, &sys.bindings)?;
            let e = l.energy().clone();
            let lag = l.lagrangian();
            let s = l.chart().name(l.chart().contact(0).expect("lagrangian chart"));
            let rate = lag.diff(s) * e.clone() - lag.diff(ode.base());
            (ode, e, rate)
        }
        Built::Hamiltonian(h) => {
            let ode = OdeSystem::hamiltonian(h, &sys.bindings)?;
            let ham = h.hamiltonian().clone();
            let s = h.chart().name(h.chart().contact(0).expect("hamiltonian chart"));
            let rate = ham.diff(ode.base()) - ham.diff(s) * ham.clone();
            (ode, ham, rate)
        }
    };
    let dt = sim.dt.ok_or_else(|| Failure::Input("`simulation.dt` is required for one base coordinate".into()))?;
    let base = ode.base().to_string();
    let mut values = BTreeMap::new();
    for name in ode.state_names() {
        let v = match sim.initial.get(name) {
            Some(e) => evaluate(e, sys, &[(&base, sim.t_start)])?,
            None if sys.chart.index(name).is_some_and(|i| sys.chart.coords()[i].role.is_contact()) => 0.0,
            None => return Err(Failure::Input(format!("no initial value for `{name}`"))),
        };
        values.insert(name.clone(), v);
    }
    let traj = integrate_ode(&ode, &OdeState { t: sim.t_start, values }, sim.t_end, dt)?;
    let s_name = ode.state_names().iter().find(|n| sys.chart.index(n).is_some_and(|i| sys.chart.coords()[i].role.is_contact())).cloned();
    let mut checks = BTreeMap::new();
    checks.insert("action_identity".to_string(), action_identity_ode(&traj, &ode));
    checks.insert("action_quadrature".to_string(), lagrangian_quadrature_error(&traj, &ode));
    checks.insert("energy_balance".to_string(), balance_residual(&traj, &ode, &energy, &rate)?);
    let report = RunReport {
        system: sys.name.clone(),
        solver: SolverMetadata {
            method: "rk4".into(),
            dt: traj.dt,
            steps: traj.steps(),
            t_start: sim.t_start,
            t_end: sim.t_end,
            ..Default::default()
        },
        times: traj.times.clone(),
        energy: ode.observable(&energy)?.series(&traj),
        action: s_name.and_then(|s| traj.column(&s)).unwrap_or_default(),
        residuals: Vec::new(),
        checks,
    };
    Ok(Run { report, csv: traj.to_csv() })
}

fn run_wave(sys: &System, built: &Built, sim: &Simulation) -> Result<Run, Failure> {
    let grid = sim.grid.ok_or_else(|| Failure::Input("`simulation.grid` is required for two base coordinates".into()))?;
    let wave = match built {
        Built::Lagrangian(l) => WaveSystem::lagrangian(l, &sys.bindings)?,
        Built::Hamiltonian(h) => WaveSystem::hamiltonian(h, &sys.bindings)?,
    };
    let [field, rate, contact, _] = wave.names().clone();
    let base: Vec<String> = (0..2).map(|mu| sys.chart.name(sys.chart.base(mu)).to_string()).collect();
    let mut fields = BTreeMap::new();
    for (name, required) in [(&field, true), (&rate, true), (&contact, false)] {
        let Some(e) = sim.initial.get(name) else {
            if required {
                return Err(Failure::Input(format!("no initial value for `{name}`")));
            }
            continue;
        };
        let values = (0..grid.points)
            .map(|j| evaluate(e, sys, &[(&base[0], sim.t_start), (&base[1], grid.x(j))]))
            .collect::<Result<Vec<_>, _>>()?;
        fields.insert(name.clone(), values);
    }
    let dt = sim.dt.unwrap_or(0.5 * grid.dx / wave.speed());
    let traj = integrate_wave(&wave, &GridState { t: sim.t_start, grid, fields }, sim.t_end, dt, sim.record_every)?;
    let residuals: Vec<ResidualSeries> = residual_norms(&traj, &built.equations(), &sys.chart, &sys.bindings)?;
    let mut checks = BTreeMap::new();
    checks.insert("action_identity".to_string(), action_identity_wave(&traj, &wave));
    checks.insert("max_energy_increase".to_string(), traj.max_energy_increase());
    for r in &residuals {
        checks.insert(format!("residual_{}", r.label), r.max_linf());
    }
    let boundary = match grid.boundary {
        multicontact::simulate::Boundary::Periodic => "periodic",
        multicontact::simulate::Boundary::Dirichlet0 => "dirichlet",
    };
    let method = match wave.side() {
        WaveSide::Lagrangian => "mol-central2-rk4-lagrangian",
        WaveSide::Hamiltonian => "mol-central2-rk4-hamiltonian",
    };
    let report = RunReport {
        system: sys.name.clone(),
        solver: SolverMetadata {
            method: method.into(),
            dt: traj.dt,
            steps: traj.steps,
            t_start: sim.t_start,
            t_end: sim.t_end,
            dx: Some(grid.dx),
            points: Some(grid.points),
            boundary: Some(boundary.into()),
            cfl: Some(traj.cfl),
        },
        times: traj.step_times.clone(),
        energy: traj.energy.clone(),
        action: traj.action.clone(),
        residuals,
        checks,
    };
    Ok(Run { report, csv: traj.to_csv() })
}

/// Integrates the `[simulation]` block.
pub fn run(sys: &System) -> Result<Run, Failure> {
    let sim = sys.simulation.as_ref().ok_or_else(|| Failure::Input("no [simulation] block".into()))?;
    let built = build(sys)?;
    match sys.chart.m() {
        1 => run_ode(sys, &built, sim),
        2 => run_wave(sys, &built, sim),
        m => Err(Failure::Structure(format!("simulation supports one or two base coordinates, found {m}"))),
    }
}

pub fn simulate(sys: &System) -> Result<Output, Failure> {
    let run = run(sys)?;
    let body = run.report.to_json();
    Ok(Output { stdout: body.clone(), files: vec![("trajectory.csv".into(), run.csv), ("report.json".into(), body)], code: EXIT_OK })
}

/// Symbolic invariants, the Legendre identities and, with a `[simulation]`
/// block, the numerical identities of a run.
pub fn checks(sys: &System) -> Result<CheckMatrix, Failure> {
    let built = build(sys)?;
    let mut m = CheckMatrix::default();
    let verdict = &built.structure().classification().verdict;
    m.push("classification", verdict.is_structure(), verdict_line(verdict));
    m.extend(match &built {
        Built::Lagrangian(l) => lagrangian_checks(l),
        Built::Hamiltonian(h) => hamiltonian_checks(h),
    });
    match &built {
        Built::Lagrangian(l) if l.regularity() == Regularity::Regular => {
            match hamiltonian_from_lagrangian_on(l.lagrangian(), &sys.chart, sys.dual_chart.clone()) {
                Ok(dual) => {
                    m.push("legendre_pullback", dual.pullback_check, "FL*Θ_H = Θ_L");
                    m.push("legendre_equations", dual.equations_agree(), "HDW equations pull back to Herglotz equations");
                }
                Err(HamiltonianError::NumericOnly) => m.push("legendre_pullback", Outcome::Skipped, "no closed-form inverse"),
                Err(e) => m.push("legendre_pullback", Outcome::Fail, e.to_string()),
            }
        }
        Built::Lagrangian(l) => m.push("legendre_pullback", Outcome::Skipped, format!("Hessian {:?}", l.regularity())),
        Built::Hamiltonian(_) => m.push("legendre_pullback", Outcome::Skipped, "system given by a hamiltonian"),
    }
    if sys.simulation.is_none() {
        m.push("simulation", Outcome::Skipped, "no [simulation] block");
        return Ok(m);
    }
    match run(sys) {
        Ok(run) => {
            let (identity, residual) = if sys.chart.m() == 1 { (ODE_IDENTITY_TOLERANCE, ODE_BALANCE_TOLERANCE) } else { (WAVE_IDENTITY_TOLERANCE, WAVE_RESIDUAL_TOLERANCE) };
            for (name, value) in &run.report.checks {
                let tol = match name.as_str() {
                    "action_identity" | "action_quadrature" => identity,
                    "max_energy_increase" => ENERGY_INCREASE_TOLERANCE,
                    _ => residual,
                };
                m.push(&format!("simulation_{name}"), *value <= tol, format!("{value:.3e} <= {tol:.0e}"));
            }
        }
        Err(e) => m.push("simulation", Outcome::Fail, e.to_string()),
    }
    Ok(m)
}

pub fn verify(sys: &System, format: Format) -> Result<Output, Failure> {
    let json = text_or_json(format, "verify")?;
    let m = checks(sys)?;
    let body = to_canonical_json(&m);
    let stdout = if json { body.clone() } else { m.to_text() };
    let code = if m.all_pass() { EXIT_OK } else { EXIT_STRUCTURE };
    Ok(Output { stdout, files: vec![("verify.json".into(), body)], code })
}
