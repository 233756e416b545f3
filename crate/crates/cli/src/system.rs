//! System description files: TOML with one `lagrangian` or `hamiltonian`
//! expression, a `[chart]` table, numeric `[parameters]`, `[functions.NAME]`
//! definitions and an optional `[simulation]` table.

use std::collections::BTreeMap;
use std::path::Path;

use multicontact::geometry::ChartSpec;
use multicontact::simulate::{Bindings, Grid};
use multicontact::symexpr::{parse_open, FunctionTable};
use multicontact::{parse, Chart, Expr};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed system file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> SystemError {
    SystemError::Invalid(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    name: Option<String>,
    lagrangian: Option<String>,
    hamiltonian: Option<String>,
    chart: RawChart,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    #[serde(default)]
    functions: BTreeMap<String, RawFunction>,
    simulation: Option<RawSimulation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    base: Vec<String>,
    fields: Vec<String>,
    suffixes: Option<Vec<String>>,
    velocities: Option<Vec<String>>,
    momenta: Option<Vec<String>>,
    contact: Option<Vec<String>>,
    #[serde(default)]
    gauge: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    args: Vec<String>,
    body: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    t_start: Option<f64>,
    t_end: f64,
    dt: Option<f64>,
    record_every: Option<usize>,
    grid: Option<RawGrid>,
    initial: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: f64,
    length: f64,
    points: usize,
    boundary: String,
}

/// The density that defines the system.
#[derive(Clone, Debug)]
pub enum Density {
    Lagrangian(Expr),
    Hamiltonian(Expr),
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub t_start: f64,
    pub t_end: f64,
    /// Time step; field runs default to half the grid spacing.
    pub dt: Option<f64>,
    pub record_every: usize,
    pub grid: Option<Grid>,
    /// Initial values as expressions in the base coordinates and parameters.
    pub initial: BTreeMap<String, Expr>,
}

/// A parsed and checked system description.
#[derive(Clone, Debug)]
pub struct System {
    pub name: String,
    pub chart: Chart,
    /// The chart of the other side of the Legendre map.
    pub dual_chart: Chart,
    pub density: Density,
    pub bindings: Bindings,
    pub simulation: Option<Simulation>,
}

impl System {
    pub fn load(path: &Path) -> Result<System, SystemError> {
        let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io { path: path.display().to_string(), source })?;
        let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        System::from_toml(&text, &fallback)
    }

    pub fn from_toml(text: &str, fallback_name: &str) -> Result<System, SystemError> {
        let raw: RawFile = toml::from_str(text)?;
        let spec = ChartSpec {
            base: raw.chart.base,
            suffixes: raw.chart.suffixes,
            fields: raw.chart.fields,
            velocities: raw.chart.velocities,
            momenta: raw.chart.momenta,
            contact: raw.chart.contact,
            gauge: raw.chart.gauge,
            generic: Vec::new(),
        };
        let decorate = |chart: Chart| -> Result<Chart, SystemError> {
            let mut chart = chart.with_parameters(raw.parameters.keys()).map_err(|e| invalid(e.to_string()))?;
            for (name, f) in &raw.functions {
                chart = chart.with_function(name, f.args.len()).map_err(|e| invalid(e.to_string()))?;
            }
            Ok(chart)
        };
        let lagrangian_chart = || spec.lagrangian_chart().map_err(|e| invalid(e.to_string())).and_then(decorate);
        let hamiltonian_chart = || spec.hamiltonian_chart().map_err(|e| invalid(e.to_string())).and_then(decorate);
        let (chart, dual_chart, source) = match (&raw.lagrangian, &raw.hamiltonian) {
            (Some(l), None) => (lagrangian_chart()?, hamiltonian_chart()?, l),
            (None, Some(h)) => (hamiltonian_chart()?, lagrangian_chart()?, h),
            _ => return Err(invalid("exactly one of `lagrangian` and `hamiltonian` is required")),
        };
        let expr = parse(source, &chart).map_err(|e| invalid(format!("density: {e}")))?;
        let density = if raw.lagrangian.is_some() { Density::Lagrangian(expr) } else { Density::Hamiltonian(expr) };

        let mut functions = FunctionTable::new();
        for (name, f) in &raw.functions {
            let body = parse_open(&f.body).map_err(|e| invalid(format!("function `{name}`: {e}")))?;
            if let Some(s) = body.free_symbols().into_iter().find(|s| !f.args.contains(s) && !raw.parameters.contains_key(s)) {
                return Err(invalid(format!("function `{name}` uses `{s}`, which is neither an argument nor a parameter")));
            }
            functions.define(name, f.args.clone(), body);
        }
        let bindings = Bindings { parameters: raw.parameters.clone(), functions };

        let simulation = raw.simulation.map(|sim| simulation(sim, &chart)).transpose()?;
        Ok(System { name: raw.name.unwrap_or_else(|| fallback_name.to_string()), chart, dual_chart, density, bindings, simulation })
    }

    pub fn density_expr(&self) -> &Expr {
        match &self.density {
            Density::Lagrangian(e) | Density::Hamiltonian(e) => e,
        }
    }

    pub fn is_lagrangian(&self) -> bool {
        matches!(self.density, Density::Lagrangian(_))
    }
}

fn simulation(sim: RawSimulation, chart: &Chart) -> Result<Simulation, SystemError> {
    let grid = match sim.grid {
        None => None,
        Some(g) => {
            if g.points < 3 || !(g.length > 0.0) {
                return Err(invalid("grid needs at least 3 points and a positive length"));
            }
            Some(match g.boundary.as_str() {
                "periodic" => Grid::periodic(g.start, g.length, g.points),
                "dirichlet" => Grid::dirichlet(g.start, g.length, g.points),
                other => return Err(invalid(format!("unknown boundary `{other}`; expected periodic or dirichlet"))),
            })
        }
    };
    let mut initial = BTreeMap::new();
    for (name, text) in sim.initial {
        if chart.index(&name).is_none() {
            return Err(invalid(format!("initial value for unknown coordinate `{name}`")));
        }
        let e = parse(&text, chart).map_err(|e| invalid(format!("initial `{name}`: {e}")))?;
        initial.insert(name, e);
    }
    if let Some(dt) = sim.dt {
        if !(dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
    }
    let t_start = sim.t_start.unwrap_or(0.0);
    if !(sim.t_end > t_start) {
        return Err(invalid("t_end must exceed t_start"));
    }
    Ok(Simulation { t_start, t_end: sim.t_end, dt: sim.dt, record_every: sim.record_every.unwrap_or(1).max(1), grid, initial })
}
