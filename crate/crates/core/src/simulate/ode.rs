//! First-order systems over one base coordinate, integrated by classical RK4.

use std::collections::BTreeMap;

use super::report::format_float;
use super::{Bindings, Layout, SimulationError};
use crate::geometry::{Chart, Role, VectorField};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::LagrangianSystem;
use crate::symexpr::{Compiled, Expr};

/// `dz/dt = X^z(t, z)` for the non-base coordinates `z`, together with the
/// Lagrangian density along the flow.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    base: String,
    state: Vec<String>,
    rhs: Vec<Compiled>,
    lagrangian: Compiled,
    contact: usize,
    layout: Layout,
    bindings: Bindings,
}

impl OdeSystem {
    /// `x` must have unit component along the base coordinate.
    pub fn from_vector_field(x: &VectorField, chart: &Chart, lagrangian: &Expr, bindings: &Bindings) -> Result<Self, SimulationError> {
        if chart.m() != 1 {
            return Err(SimulationError::Unsupported(format!("{} base coordinates; expected 1", chart.m())));
        }
        let t = chart.base(0);
        if x.component(t) != Expr::one() {
            return Err(SimulationError::Unsupported("vector field is not normalized along the base".into()));
        }
        let contact = chart.contact(0).ok_or_else(|| SimulationError::Unsupported("no contact coordinate".into()))?;
        let vertical = chart.vertical();
        let state: Vec<String> = vertical.iter().map(|&i| chart.name(i).to_string()).collect();
        let mut dynamic = vec![chart.name(t).to_string()];
        dynamic.extend(state.iter().cloned());
        let layout = bindings.layout(&dynamic);
        let rhs = vertical.iter().map(|&i| layout.compile(&x.component(i), bindings)).collect::<Result<_, _>>()?;
        let lagrangian = layout.compile(lagrangian, bindings)?;
        let contact = vertical.iter().position(|&i| i == contact).expect("contact is vertical");
        Ok(OdeSystem { base: chart.name(t).to_string(), state, rhs, lagrangian, contact, layout, bindings: bindings.clone() })
    }

    /// Cocontact flow `X_H`; the Lagrangian density is `p_i ∂H/∂p_i − H`.
    pub fn hamiltonian(sys: &HamiltonianSystem, bindings: &Bindings) -> Result<Self, SimulationError> {
        let chart = sys.chart();
        let x = sys.cocontact_vector_field().map_err(|e| SimulationError::Unsupported(e.to_string()))?;
        let h = sys.hamiltonian();
        let mut l = -h.clone();
        for (i, c) in chart.coords().iter().enumerate() {
            if matches!(c.role, Role::Momentum { .. }) {
                l = l + chart.symbol(i) * h.diff(&c.name);
            }
        }
        Self::from_vector_field(&x, chart, &l, bindings)
    }

    /// The unique second-order field solving the Lagrangian equations when `m = 1`.
    pub fn lagrangian(sys: &LagrangianSystem, bindings: &Bindings) -> Result<Self, SimulationError> {
        let chart = sys.chart();
        if chart.m() != 1 {
            return Err(SimulationError::Unsupported(format!("{} base coordinates; expected 1", chart.m())));
        }
        let sol = sys.sopde_coefficients();
        if let Some(notice) = sol.notice {
            return Err(SimulationError::Unsupported(notice));
        }
        if !sol.free.is_empty() {
            return Err(SimulationError::Unsupported(format!("free coefficients {:?}", sol.free)));
        }
        let x = sol.multivector(chart).witness().expect("decomposable")[0].clone();
        Self::from_vector_field(&x, chart, sys.lagrangian(), bindings)
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn state_names(&self) -> &[String] {
        &self.state
    }

    fn fill(&self, buf: &mut [f64], t: f64, y: &[f64]) {
        buf[0] = t;
        buf[1..1 + y.len()].copy_from_slice(y);
    }

    fn eval_rhs(&self, buf: &mut [f64], t: f64, y: &[f64], out: &mut [f64]) {
        self.fill(buf, t, y);
        for (o, f) in out.iter_mut().zip(&self.rhs) {
            *o = f.eval(buf);
        }
    }

    /// Compiles a function of the base and state coordinates and parameters.
    pub fn observable(&self, e: &Expr) -> Result<Observable, SimulationError> {
        Ok(Observable { compiled: self.layout.compile(e, &self.bindings)?, layout: self.layout.clone() })
    }

    fn lagrangian_at(&self, buf: &mut [f64], t: f64, y: &[f64]) -> f64 {
        self.fill(buf, t, y);
        self.lagrangian.eval(buf)
    }
}

/// A compiled function along an ODE trajectory.
#[derive(Clone, Debug)]
pub struct Observable {
    compiled: Compiled,
    layout: Layout,
}

impl Observable {
    pub fn series(&self, traj: &OdeTrajectory) -> Vec<f64> {
        let mut buf = self.layout.buffer();
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(t, y)| {
                buf[0] = *t;
                buf[1..1 + y.len()].copy_from_slice(y);
                self.compiled.eval(&buf)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeState {
    pub t: f64,
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    pub base: String,
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl OdeTrajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[k]).collect())
    }

    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Header `base,coordinates…`, one row per recorded time.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.base, self.names.join(","));
        for (t, y) in self.times.iter().zip(&self.states) {
            out.push_str(&format_float(*t));
            for v in y {
                out.push(',');
                out.push_str(&format_float(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn rk4_step(sys: &OdeSystem, buf: &mut [f64], t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    sys.eval_rhs(buf, t, y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    sys.eval_rhs(buf, t + 0.5 * h, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    sys.eval_rhs(buf, t + 0.5 * h, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    sys.eval_rhs(buf, t + h, &tmp, &mut k4);
    (0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// Classical RK4 from `initial.t` to `t_end` with the step shrunk to divide the span.
pub fn integrate_ode(sys: &OdeSystem, initial: &OdeState, t_end: f64, dt: f64) -> Result<OdeTrajectory, SimulationError> {
    if !(dt > 0.0) || !(t_end > initial.t) {
        return Err(SimulationError::Setup(format!("need dt > 0 and t_end > t0, got dt = {dt}, span [{}, {t_end}]", initial.t)));
    }
    let mut y = Vec::with_capacity(sys.state.len());
    for name in &sys.state {
        let v = initial.values.get(name).ok_or_else(|| SimulationError::Setup(format!("no initial value for `{name}`")))?;
        y.push(*v);
    }
    let span = t_end - initial.t;
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut buf = sys.layout.buffer();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(initial.t);
    states.push(y.clone());
    for step in 1..=steps {
        let t = initial.t + (step - 1) as f64 * h;
        y = rk4_step(sys, &mut buf, t, &y, h);
        let t_next = initial.t + step as f64 * h;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFinite { step, t: t_next });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(OdeTrajectory { base: sys.base.clone(), names: sys.state.clone(), times, states, dt: h })
}

/// Fourth-order central difference of `f` at interior samples.
fn derivative4(f: &[f64], h: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    (2..f.len().saturating_sub(2)).map(move |n| (n, (f[n - 2] - 8.0 * f[n - 1] + 8.0 * f[n + 1] - f[n + 2]) / (12.0 * h)))
}

/// `max |d/dt quantity − rate|` over the trajectory interior.
pub fn balance_residual(traj: &OdeTrajectory, sys: &OdeSystem, quantity: &Expr, rate: &Expr) -> Result<f64, SimulationError> {
    let q = sys.observable(quantity)?.series(traj);
    let r = sys.observable(rate)?.series(traj);
    Ok(derivative4(&q, traj.dt).map(|(n, d)| (d - r[n]).abs()).fold(0.0, f64::max))
}

/// `max |ds/dt − L|` along the trajectory.
pub fn action_identity_ode(traj: &OdeTrajectory, sys: &OdeSystem) -> f64 {
    let mut buf = sys.layout.buffer();
    let s: Vec<f64> = traj.states.iter().map(|y| y[sys.contact]).collect();
    derivative4(&s, traj.dt)
        .map(|(n, d)| (d - sys.lagrangian_at(&mut buf, traj.times[n], &traj.states[n])).abs())
        .fold(0.0, f64::max)
}

/// `|s(T) − s(t0) − ∫ L dt|` with composite Simpson quadrature.
pub fn lagrangian_quadrature_error(traj: &OdeTrajectory, sys: &OdeSystem) -> f64 {
    let mut buf = sys.layout.buffer();
    let l: Vec<f64> = traj.times.iter().zip(&traj.states).map(|(t, y)| sys.lagrangian_at(&mut buf, *t, y)).collect();
    let n = l.len() - 1;
    let even = n - n % 2;
    let mut integral = 0.0;
    for k in (0..even).step_by(2) {
        integral += traj.dt / 3.0 * (l[k] + 4.0 * l[k + 1] + l[k + 2]);
    }
    if even < n {
        integral += traj.dt / 2.0 * (l[n - 1] + l[n]);
    }
    let s0 = traj.states[0][sys.contact];
    let s1 = traj.states[n][sys.contact];
    (s1 - s0 - integral).abs()
}

/// Smooth bump `amplitude·e·exp(−1/(1−r²))`, `r = (t − center)/half_width`,
/// peaking at `amplitude` and vanishing outside `|r| < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub field: usize,
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, t: f64) -> f64 {
        let r = (t - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let r = (t - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - r * r;
        self.value(t) * (-2.0 * r / (w * w)) / self.half_width
    }
}

/// Central step for the variation in the perturbation amplitude.
pub const VARIATION_STEP: f64 = 1e-5;

/// `|dA/dε|` at `ε = 0` for the Herglotz action `A = s(T)` along
/// `q + ε·bump`, re-integrating `ds/dt = L(t, q, q̇, s)` by RK4 over sample pairs.
pub fn herglotz_variation_check(sys: &LagrangianSystem, traj: &OdeTrajectory, bump: &Bump, bindings: &Bindings) -> Result<f64, SimulationError> {
    let chart = sys.chart();
    if chart.m() != 1 {
        return Err(SimulationError::Unsupported(format!("{} base coordinates; expected 1", chart.m())));
    }
    if bump.field >= chart.n() {
        return Err(SimulationError::Setup(format!("no field {}", bump.field)));
    }
    let n = chart.n();
    let mut dynamic = vec![chart.name(chart.base(0)).to_string()];
    for i in 0..n {
        dynamic.push(chart.name(chart.field(i)).to_string());
    }
    for i in 0..n {
        dynamic.push(chart.name(chart.velocity(i, 0).expect("lagrangian chart")).to_string());
    }
    let s_name = chart.name(chart.contact(0).expect("lagrangian chart")).to_string();
    let columns: Vec<usize> = dynamic[1..]
        .iter()
        .map(|name| traj.names.iter().position(|x| x == name).ok_or_else(|| SimulationError::Setup(format!("trajectory lacks `{name}`"))))
        .collect::<Result<_, _>>()?;
    dynamic.push(s_name);
    let layout = bindings.layout(&dynamic);
    let l = layout.compile(sys.lagrangian(), bindings)?;
    let mut buf = layout.buffer();

    let mut action = |eps: f64| -> Result<f64, SimulationError> {
        let eval = |k: usize, s: f64, buf: &mut [f64]| {
            let t = traj.times[k];
            buf[0] = t;
            for (slot, &c) in columns.iter().enumerate() {
                buf[1 + slot] = traj.states[k][c];
            }
            buf[1 + bump.field] += eps * bump.value(t);
            buf[1 + n + bump.field] += eps * bump.derivative(t);
            buf[1 + 2 * n] = s;
            l.eval(buf)
        };
        let s_col = traj.names.iter().position(|x| *x == dynamic[1 + 2 * n]).ok_or_else(|| SimulationError::Setup("trajectory lacks the contact variable".into()))?;
        let mut s = traj.states[0][s_col];
        let last = traj.times.len() - 1;
        for k in (0..last - last % 2).step_by(2) {
            let h = traj.times[k + 2] - traj.times[k];
            let k1 = eval(k, s, &mut buf);
            let k2 = eval(k + 1, s + 0.5 * h * k1, &mut buf);
            let k3 = eval(k + 1, s + 0.5 * h * k2, &mut buf);
            let k4 = eval(k + 2, s + h * k3, &mut buf);
            s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !s.is_finite() {
                return Err(SimulationError::NonFinite { step: k + 2, t: traj.times[k + 2] });
            }
        }
        Ok(s)
    };
    let plus = action(VARIATION_STEP)?;
    let minus = action(-VARIATION_STEP)?;
    Ok(((plus - minus) / (2.0 * VARIATION_STEP)).abs())
}
