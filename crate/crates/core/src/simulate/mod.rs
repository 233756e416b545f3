//! Numerical integration of derived equations: RK4 for `m = 1` systems and
//! the method of lines for one-field, two-base-coordinate field theories.

mod ode;
mod report;
mod wave;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::symexpr::{Compiled, Expr, ExprError, FunctionTable};

pub use ode::{
    action_identity_ode, balance_residual, herglotz_variation_check, integrate_ode, lagrangian_quadrature_error, Bump, OdeState,
    OdeSystem, OdeTrajectory,
};
pub use report::{format_float, to_canonical_json, ResidualSeries, RunReport, SolverMetadata};
pub use wave::{
    action_identity_wave, exact_residual_norms, integrate_wave, residual_norms, Boundary, Grid, GridState, GridTrajectory, WaveSide,
    WaveSystem,
};

/// Largest accepted `c·Δt/Δx`.
pub const CFL_LIMIT: f64 = 0.9;
/// Growth of the state norm beyond this factor aborts a run.
pub const GROWTH_LIMIT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimulationError {
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("CFL number {cfl:.6} exceeds {limit}")]
    Cfl { cfl: f64, limit: f64 },
    #[error("instability: state norm grew by more than {GROWTH_LIMIT:e} at step {step}")]
    Unstable { step: usize },
    #[error("unsupported system: {0}")]
    Unsupported(String),
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl SimulationError {
    /// CFL refusals and blow-ups, as opposed to malformed input.
    pub fn is_instability(&self) -> bool {
        matches!(self, SimulationError::Cfl { .. } | SimulationError::Unstable { .. } | SimulationError::NonFinite { .. })
    }
}

/// Numeric values for parameters and definitions for declared functions.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pub parameters: BTreeMap<String, f64>,
    pub functions: FunctionTable,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn with_function(mut self, name: &str, params: &[&str], body: Expr) -> Self {
        self.functions.define(name, params.iter().map(|s| s.to_string()).collect(), body);
        self
    }

    fn layout<S: AsRef<str>>(&self, dynamic: &[S]) -> Layout {
        let mut names: Vec<String> = dynamic.iter().map(|s| s.as_ref().to_string()).collect();
        let mut template = vec![0.0; names.len()];
        for (k, v) in &self.parameters {
            names.push(k.clone());
            template.push(*v);
        }
        Layout { names, template }
    }
}

/// Slot layout: dynamic values first, then parameter values.
#[derive(Clone, Debug)]
struct Layout {
    names: Vec<String>,
    template: Vec<f64>,
}

impl Layout {
    fn compile(&self, e: &Expr, bindings: &Bindings) -> Result<Compiled, SimulationError> {
        let slots: Vec<&str> = self.names.iter().map(|s| s.as_str()).collect();
        e.compile(&slots, &bindings.functions).map_err(|err| match err {
            ExprError::Unbound(name) => SimulationError::Setup(format!("no value for `{name}` in {e}")),
            other => SimulationError::Expr(other),
        })
    }

    fn buffer(&self) -> Vec<f64> {
        self.template.clone()
    }
}

#[cfg(test)]
mod tests;
