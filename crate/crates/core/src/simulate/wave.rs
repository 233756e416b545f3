//! Method of lines for one field over two base coordinates `(t, x)`:
//! second-order central differences in `x`, classical RK4 in `t`.
//!
//! The contact divergence equation `∂_t s^t + ∂_x s^x = L` is closed by the
//! gauge choice `s^x ≡ 0`, with `s^t(0, ·) = 0` unless given.

use std::collections::BTreeMap;

use serde::Serialize;

use super::report::{format_float, ResidualSeries};
use super::{Bindings, Layout, SimulationError, CFL_LIMIT, GROWTH_LIMIT};
use crate::equations::{normalized, EquationSet};
use crate::geometry::{Chart, Role};
use crate::hamiltonian::{hdw_equations, HamiltonianSystem};
use crate::lagrangian::LagrangianSystem;
use crate::symexpr::{Compiled, Expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Homogeneous Dirichlet: the field and its rate vanish at both ends.
    Dirichlet0,
}

/// Points `x_j = x0 + j·dx`, `j ∈ [0, points)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub points: usize,
    pub boundary: Boundary,
}

impl Grid {
    /// `points` cells covering `[start, start + length)`.
    pub fn periodic(start: f64, length: f64, points: usize) -> Grid {
        Grid { x0: start, dx: length / points as f64, points, boundary: Boundary::Periodic }
    }

    /// `points` interior nodes of `[start, start + length]`, the ends held at zero.
    pub fn dirichlet(start: f64, length: f64, points: usize) -> Grid {
        let dx = length / (points + 1) as f64;
        Grid { x0: start + dx, dx, points, boundary: Boundary::Dirichlet0 }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    /// Value at `j + offset`, with `vanishing` selecting the Dirichlet ghost rule.
    fn at(&self, f: &[f64], j: usize, offset: isize, vanishing: bool) -> f64 {
        let n = self.points as isize;
        let k = j as isize + offset;
        if (0..n).contains(&k) {
            return f[k as usize];
        }
        match self.boundary {
            Boundary::Periodic => f[k.rem_euclid(n) as usize],
            Boundary::Dirichlet0 if vanishing => 0.0,
            Boundary::Dirichlet0 => f[k.clamp(0, n - 1) as usize],
        }
    }

    /// Indices where centered stencils need no ghost values.
    fn interior(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.points,
            Boundary::Dirichlet0 => 1..self.points.saturating_sub(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub grid: Grid,
    /// Arrays by coordinate name: the field, its rate (velocity or time
    /// momentum) and optionally the time contact variable.
    pub fields: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveSide {
    /// State `(u, u_t, s^t)`; `u_tt` from the normalized field equation.
    Lagrangian,
    /// State `(u, p^t, s^t)`; `p^x` from the `u_x` equation at half points.
    Hamiltonian,
}

// Slot order shared by every kernel.
const T: usize = 0;
const X: usize = 1;
const U: usize = 2;
const W: usize = 3;
const UX: usize = 4;
const UXX: usize = 5;
const WX: usize = 6;
const FLUX: usize = 7;
const ST: usize = 8;
const SX: usize = 9;

/// A `(t, x)` system with one field, reduced to first order in time.
#[derive(Clone, Debug)]
pub struct WaveSystem {
    side: WaveSide,
    names: [String; 4],
    stored: Vec<String>,
    layout: Layout,
    /// Lagrangian: `u_tt`; Hamiltonian: `∂H/∂p^t`.
    first: Compiled,
    /// Hamiltonian only: `−(∂H/∂u + p^mu ∂H/∂s^mu)`.
    source: Option<Compiled>,
    /// Hamiltonian only: `p^x` solving `u_x = ∂H/∂p^x`.
    flux: Option<Compiled>,
    lagrangian: Compiled,
    energy: Compiled,
    speed: f64,
}

fn stored_names(chart: &Chart, rate: usize) -> [String; 4] {
    [
        chart.name(chart.field(0)).to_string(),
        chart.name(rate).to_string(),
        chart.name(chart.contact(0).expect("checked chart")).to_string(),
        chart.name(chart.contact(1).expect("checked chart")).to_string(),
    ]
}

fn check_shape(chart: &Chart) -> Result<(), SimulationError> {
    if chart.m() != 2 || chart.n() != 1 {
        return Err(SimulationError::Unsupported(format!("{} fields over {} base coordinates; expected 1 over 2", chart.n(), chart.m())));
    }
    if let Some(c) = chart.coords().iter().find(|c| matches!(c.role, Role::Gauge | Role::Generic)) {
        return Err(SimulationError::Unsupported(format!("auxiliary coordinate `{}`", c.name)));
    }
    Ok(())
}

fn constant_speed(c2: &Expr, chart: &Chart, layout: &Layout, bindings: &Bindings) -> Result<f64, SimulationError> {
    if c2.free_symbols().iter().any(|s| chart.index(s).is_some()) || !c2.functions().is_empty() {
        return Err(SimulationError::Unsupported(format!("wave speed squared {c2} is not constant")));
    }
    let v = layout.compile(c2, bindings)?.eval(&layout.buffer());
    if !(v > 0.0) {
        return Err(SimulationError::Unsupported(format!("wave speed squared {c2} = {v} is not positive")));
    }
    Ok(v.sqrt())
}

impl WaveSystem {
    pub fn lagrangian(sys: &LagrangianSystem, bindings: &Bindings) -> Result<Self, SimulationError> {
        let chart = sys.chart();
        check_shape(chart)?;
        let vt = chart.velocity(0, 0).expect("lagrangian chart");
        let vx = chart.velocity(0, 1).expect("lagrangian chart");
        let names = stored_names(chart, vt);
        let utt = chart.jet_name(vt, 0);
        let uxx = chart.jet_name(vx, 1);
        let utx = chart.jet_name(vt, 1);
        let slots = [
            chart.name(chart.base(0)).to_string(),
            chart.name(chart.base(1)).to_string(),
            names[0].clone(),
            names[1].clone(),
            chart.name(vx).to_string(),
            uxx.clone(),
            utx,
            "#flux".to_string(),
            names[2].clone(),
            names[3].clone(),
        ];
        let layout = bindings.layout(&slots);
        let residual = &sys.equations().equations[0].residual;
        let norm = normalized(residual, &utt).ok_or_else(|| SimulationError::Unsupported(format!("field equation is not affine in {utt}")))?;
        let accel = Expr::symbol(&utt) - norm;
        let speed = constant_speed(&accel.diff(&uxx), chart, &layout, bindings)?;
        let l = sys.lagrangian();
        let zero_s: BTreeMap<String, Expr> = [(names[2].clone(), Expr::zero()), (names[3].clone(), Expr::zero())].into_iter().collect();
        let energy = (Expr::symbol(&names[1]) * l.diff(&names[1]) - l.clone()).subs(&zero_s);
        Ok(WaveSystem {
            side: WaveSide::Lagrangian,
            stored: names.to_vec(),
            first: layout.compile(&accel, bindings)?,
            source: None,
            flux: None,
            lagrangian: layout.compile(l, bindings)?,
            energy: layout.compile(&energy, bindings)?,
            names,
            layout,
            speed,
        })
    }

    pub fn hamiltonian(sys: &HamiltonianSystem, bindings: &Bindings) -> Result<Self, SimulationError> {
        let chart = sys.chart();
        check_shape(chart)?;
        let pt = chart.momentum(0, 0).expect("hamiltonian chart");
        let px = chart.momentum(0, 1).expect("hamiltonian chart");
        let names = stored_names(chart, pt);
        let (pt_name, px_name) = (chart.name(pt).to_string(), chart.name(px).to_string());
        let ux = chart.jet_name(chart.field(0), 1);
        let slots = [
            chart.name(chart.base(0)).to_string(),
            chart.name(chart.base(1)).to_string(),
            names[0].clone(),
            names[1].clone(),
            ux.clone(),
            "#uxx".to_string(),
            "#wx".to_string(),
            px_name.clone(),
            names[2].clone(),
            names[3].clone(),
        ];
        let layout = bindings.layout(&slots);
        let h = sys.hamiltonian();
        let eqs = hdw_equations(h, chart).map_err(|e| SimulationError::Unsupported(e.to_string()))?;
        let spatial = &eqs.get(&ux).expect("field equation along x").residual;
        let solved = normalized(spatial, &px_name).ok_or_else(|| SimulationError::Unsupported(format!("{ux} equation is not affine in {px_name}")))?;
        let flux = Expr::symbol(&px_name) - solved;
        let hpp = h.diff(&px_name).diff(&px_name);
        let c2 = -(h.diff(&pt_name).diff(&pt_name)).checked_div(&hpp).map_err(|e| SimulationError::Unsupported(e.to_string()))?;
        let speed = constant_speed(&c2, chart, &layout, bindings)?;
        let (st, sx) = (&names[2], &names[3]);
        let source = -(h.diff(&names[0]) + Expr::symbol(&pt_name) * h.diff(st) + Expr::symbol(&px_name) * h.diff(sx));
        let lagrangian = Expr::symbol(&pt_name) * h.diff(&pt_name) + Expr::symbol(&px_name) * h.diff(&px_name) - h.clone();
        let zero_s: BTreeMap<String, Expr> = [(st.clone(), Expr::zero()), (sx.clone(), Expr::zero())].into_iter().collect();
        let energy = (h.clone() - Expr::symbol(&px_name) * h.diff(&px_name)).subs(&zero_s);
        let mut stored = names.to_vec();
        stored.push(px_name);
        Ok(WaveSystem {
            side: WaveSide::Hamiltonian,
            stored,
            first: layout.compile(&h.diff(&pt_name), bindings)?,
            source: Some(layout.compile(&source, bindings)?),
            flux: Some(layout.compile(&flux, bindings)?),
            lagrangian: layout.compile(&lagrangian, bindings)?,
            energy: layout.compile(&energy, bindings)?,
            names,
            layout,
            speed,
        })
    }

    pub fn side(&self) -> WaveSide {
        self.side
    }

    /// Characteristic speed `c`, used for the CFL number `c·dt/dx`.
    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Field, rate, time contact and space contact names.
    pub fn names(&self) -> &[String; 4] {
        &self.names
    }

    fn fill(&self, buf: &mut [f64], t: f64, x: f64, u: f64, w: f64, st: f64) {
        buf[T] = t;
        buf[X] = x;
        buf[U] = u;
        buf[W] = w;
        buf[ST] = st;
        buf[SX] = 0.0;
    }

    /// Hamiltonian fluxes at `j + 1/2` for `j ∈ [−1, J)`, index shifted by one.
    fn fluxes(&self, buf: &mut [f64], grid: &Grid, t: f64, state: &[Vec<f64>; 3]) -> Vec<f64> {
        let flux = self.flux.as_ref().expect("hamiltonian system");
        let [u, w, s] = state;
        (0..=grid.points)
            .map(|k| {
                let j = k as isize - 1;
                let lr = |f: &[f64], vanish: bool| (grid.at(f, 0, j, vanish), grid.at(f, 0, j + 1, vanish));
                let (ul, ur) = lr(u, true);
                let (wl, wr) = lr(w, true);
                let (sl, sr) = lr(s, false);
                self.fill(buf, t, grid.x0 + (j as f64 + 0.5) * grid.dx, 0.5 * (ul + ur), 0.5 * (wl + wr), 0.5 * (sl + sr));
                buf[UX] = (ur - ul) / grid.dx;
                flux.eval(buf)
            })
            .collect()
    }

    /// Time derivatives of `(u, rate, s^t)`, plus `p^x` at the nodes on the Hamiltonian side.
    fn rhs(&self, buf: &mut [f64], grid: &Grid, t: f64, state: &[Vec<f64>; 3], out: &mut [Vec<f64>; 3]) -> Option<Vec<f64>> {
        let [u, w, s] = state;
        let dx = grid.dx;
        match self.side {
            WaveSide::Lagrangian => {
                for j in 0..grid.points {
                    self.fill(buf, t, grid.x(j), u[j], w[j], s[j]);
                    let (ul, ur) = (grid.at(u, j, -1, true), grid.at(u, j, 1, true));
                    buf[UX] = (ur - ul) / (2.0 * dx);
                    buf[UXX] = (ur - 2.0 * u[j] + ul) / (dx * dx);
                    buf[WX] = (grid.at(w, j, 1, true) - grid.at(w, j, -1, true)) / (2.0 * dx);
                    out[0][j] = w[j];
                    out[1][j] = self.first.eval(buf);
                    out[2][j] = self.lagrangian.eval(buf);
                }
                None
            }
            WaveSide::Hamiltonian => {
                let p = self.fluxes(buf, grid, t, state);
                let source = self.source.as_ref().expect("hamiltonian system");
                let mut nodal = Vec::with_capacity(grid.points);
                for j in 0..grid.points {
                    self.fill(buf, t, grid.x(j), u[j], w[j], s[j]);
                    buf[UX] = (grid.at(u, j, 1, true) - grid.at(u, j, -1, true)) / (2.0 * dx);
                    buf[FLUX] = 0.5 * (p[j] + p[j + 1]);
                    nodal.push(buf[FLUX]);
                    out[0][j] = self.first.eval(buf);
                    out[1][j] = -(p[j + 1] - p[j]) / dx + source.eval(buf);
                    out[2][j] = self.lagrangian.eval(buf);
                }
                Some(nodal)
            }
        }
    }

    /// `Σ e Δx` with the energy density `e = u_t ∂L/∂u_t − L` at `s = 0`,
    /// gradients taken forward so the sum is the semi-discrete invariant.
    fn energy(&self, buf: &mut [f64], grid: &Grid, t: f64, state: &[Vec<f64>; 3]) -> f64 {
        let [u, w, _] = state;
        let first = match grid.boundary {
            Boundary::Periodic => 0,
            Boundary::Dirichlet0 => -1,
        };
        let fluxes = if self.side == WaveSide::Hamiltonian { Some(self.fluxes(buf, grid, t, state)) } else { None };
        let mut total = 0.0;
        for j in first..grid.points as isize {
            let (uj, wj) = (grid.at(u, 0, j, true), grid.at(w, 0, j, true));
            self.fill(buf, t, grid.x0 + j as f64 * grid.dx, uj, wj, 0.0);
            buf[UX] = (grid.at(u, 0, j + 1, true) - uj) / grid.dx;
            if let Some(p) = &fluxes {
                buf[FLUX] = p[(j + 1) as usize];
            }
            total += self.energy.eval(buf) * grid.dx;
        }
        total
    }
}

/// Recorded snapshots of a method-of-lines run with per-step monitors.
#[derive(Clone, Debug)]
pub struct GridTrajectory {
    pub grid: Grid,
    pub side: WaveSide,
    /// Stored arrays: field, rate, `s^t`, `s^x`, and `p^x` on the Hamiltonian side.
    pub names: Vec<String>,
    pub base: [String; 2],
    pub times: Vec<f64>,
    /// `[snapshot][name][point]`.
    pub snapshots: Vec<Vec<Vec<f64>>>,
    pub dt: f64,
    pub record_every: usize,
    pub steps: usize,
    pub cfl: f64,
    pub step_times: Vec<f64>,
    /// Discrete energy after every accepted step, starting with the initial state.
    pub energy: Vec<f64>,
    /// `Σ s^t Δx` after every accepted step.
    pub action: Vec<f64>,
}

impl GridTrajectory {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Spacing between snapshots.
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.record_every as f64
    }

    /// `Σ_j f(x_j) g(x_j) Δx` for the named array at a snapshot.
    pub fn projection(&self, snapshot: usize, name: &str, g: impl Fn(f64) -> f64) -> Option<f64> {
        let k = self.index(name)?;
        Some(self.snapshots[snapshot][k].iter().enumerate().map(|(j, v)| v * g(self.grid.x(j)) * self.grid.dx).sum())
    }

    /// Largest one-step energy increase (non-positive when the energy never grows).
    pub fn max_energy_increase(&self) -> f64 {
        self.energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Header `t,x,arrays…`, one row per snapshot and grid point.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{},{}\n", self.base[0], self.base[1], self.names.join(","));
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            for j in 0..self.grid.points {
                out.push_str(&format_float(*t));
                out.push(',');
                out.push_str(&format_float(self.grid.x(j)));
                for arr in snap {
                    out.push(',');
                    out.push_str(&format_float(arr[j]));
                }
                out.push('\n');
            }
        }
        out
    }
}

fn axpy(base: &[Vec<f64>; 3], k: &[Vec<f64>; 3], h: f64) -> [Vec<f64>; 3] {
    std::array::from_fn(|f| base[f].iter().zip(&k[f]).map(|(a, b)| a + h * b).collect())
}

fn snapshot(state: &[Vec<f64>; 3], nodal: Option<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut snap = vec![state[0].clone(), state[1].clone(), state[2].clone(), vec![0.0; state[0].len()]];
    if let Some(p) = nodal {
        snap.push(p);
    }
    snap
}

/// RK4 in time; refuses to start above the CFL limit and aborts on blow-up.
pub fn integrate_wave(sys: &WaveSystem, initial: &GridState, t_end: f64, dt: f64, record_every: usize) -> Result<GridTrajectory, SimulationError> {
    let grid = initial.grid;
    if !(dt > 0.0) || !(t_end > initial.t) || record_every == 0 || grid.points < 3 {
        return Err(SimulationError::Setup("need dt > 0, t_end > t0, record_every ≥ 1 and at least 3 points".into()));
    }
    let fetch = |name: &str, required: bool| -> Result<Vec<f64>, SimulationError> {
        match initial.fields.get(name) {
            Some(v) if v.len() == grid.points => Ok(v.clone()),
            Some(v) => Err(SimulationError::Setup(format!("`{name}` has {} values for {} points", v.len(), grid.points))),
            None if required => Err(SimulationError::Setup(format!("no initial data for `{name}`"))),
            None => Ok(vec![0.0; grid.points]),
        }
    };
    let names = &sys.names;
    let mut state = [fetch(&names[0], true)?, fetch(&names[1], true)?, fetch(&names[2], false)?];
    let span = t_end - initial.t;
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let cfl = sys.speed * h / grid.dx;
    if cfl > CFL_LIMIT {
        return Err(SimulationError::Cfl { cfl, limit: CFL_LIMIT });
    }
    let mut buf = sys.layout.buffer();
    let mut k: [[Vec<f64>; 3]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; grid.points]));
    let norm = |s: &[Vec<f64>; 3]| s[0].iter().chain(&s[1]).fold(0.0f64, |a, v| a.max(v.abs()));
    let limit = GROWTH_LIMIT * norm(&state).max(f64::MIN_POSITIVE);
    let action = |s: &[Vec<f64>; 3]| s[2].iter().sum::<f64>() * grid.dx;

    let nodal = sys.rhs(&mut buf, &grid, initial.t, &state, &mut k[0]);
    let mut traj = GridTrajectory {
        grid,
        side: sys.side,
        names: sys.stored.clone(),
        base: [sys.layout.names[T].clone(), sys.layout.names[X].clone()],
        times: vec![initial.t],
        snapshots: vec![snapshot(&state, nodal)],
        dt: h,
        record_every,
        steps,
        cfl,
        step_times: vec![initial.t],
        energy: vec![sys.energy(&mut buf, &grid, initial.t, &state)],
        action: vec![action(&state)],
    };
    for step in 1..=steps {
        let t = initial.t + (step - 1) as f64 * h;
        let [k1, k2, k3, k4] = &mut k;
        sys.rhs(&mut buf, &grid, t, &state, k1);
        sys.rhs(&mut buf, &grid, t + 0.5 * h, &axpy(&state, k1, 0.5 * h), k2);
        sys.rhs(&mut buf, &grid, t + 0.5 * h, &axpy(&state, k2, 0.5 * h), k3);
        sys.rhs(&mut buf, &grid, t + h, &axpy(&state, k3, h), k4);
        for f in 0..3 {
            for j in 0..grid.points {
                state[f][j] += h / 6.0 * (k1[f][j] + 2.0 * k2[f][j] + 2.0 * k3[f][j] + k4[f][j]);
            }
        }
        let t_next = initial.t + step as f64 * h;
        if state.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SimulationError::NonFinite { step, t: t_next });
        }
        if norm(&state) > limit {
            return Err(SimulationError::Unstable { step });
        }
        traj.step_times.push(t_next);
        traj.energy.push(sys.energy(&mut buf, &grid, t_next, &state));
        traj.action.push(action(&state));
        if step % record_every == 0 || step == steps {
            let mut scratch: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.points]);
            let nodal = sys.rhs(&mut buf, &grid, t_next, &state, &mut scratch);
            traj.times.push(t_next);
            traj.snapshots.push(snapshot(&state, nodal));
        }
    }
    Ok(traj)
}

/// Whether snapshots `n − radius ..= n + radius` are evenly spaced.
fn uniform(traj: &GridTrajectory, n: usize, radius: usize) -> bool {
    let h = traj.snapshot_dt();
    n >= radius && n + radius < traj.times.len() && (n - radius..n + radius).all(|k| (traj.times[k + 1] - traj.times[k] - h).abs() <= 1e-9 * h)
}

/// `max |∂_t s^t + ∂_x s^x − L|` over interior snapshots and points, with a
/// fourth-order central time difference between snapshots.
pub fn action_identity_wave(traj: &GridTrajectory, sys: &WaveSystem) -> f64 {
    let grid = traj.grid;
    let mut buf = sys.layout.buffer();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.points]);
    let h = traj.snapshot_dt();
    let mut worst = 0.0f64;
    for n in (0..traj.snapshots.len()).filter(|&n| uniform(traj, n, 2)) {
        let snap = &traj.snapshots[n];
        let state = [snap[0].clone(), snap[1].clone(), snap[2].clone()];
        sys.rhs(&mut buf, &grid, traj.times[n], &state, &mut out);
        let s = |k: usize, j: usize| traj.snapshots[k][2][j];
        for j in grid.interior() {
            let dst = (s(n - 2, j) - 8.0 * s(n - 1, j) + 8.0 * s(n + 1, j) - s(n + 2, j)) / (12.0 * h);
            worst = worst.max((dst - out[2][j]).abs());
        }
    }
    worst
}

/// How a symbol is read off the stored arrays: `(array, time order, space order)`.
type Stencil = (usize, u32, u32);

fn resolve(name: &str, chart: &Chart, stored: &[String]) -> Option<Stencil> {
    if let Some(k) = stored.iter().position(|s| s == name) {
        return Some((k, 0, 0));
    }
    let order = |mu: usize| if mu == 0 { (1, 0) } else { (0, 1) };
    let position = |i: usize| stored.iter().position(|s| s == chart.name(i));
    let mut candidates = Vec::new();
    for i in chart.vertical() {
        for mu in 0..2 {
            let (a, b) = order(mu);
            if chart.jet_name(i, mu) == name {
                if let Some(k) = position(i) {
                    candidates.push((k, a, b));
                }
                if let Role::Velocity { field, base } = chart.role(i) {
                    let (c, d) = order(base);
                    if let Some(k) = position(chart.field(field)) {
                        candidates.push((k, a + c, b + d));
                    }
                }
            }
        }
        if let Role::Velocity { field, base } = chart.role(i) {
            if chart.name(i) == name {
                let (a, b) = order(base);
                if let Some(k) = position(chart.field(field)) {
                    candidates.push((k, a, b));
                }
            }
        }
    }
    candidates.into_iter().min_by_key(|&(_, a, b)| a + b)
}

fn stencil_value(traj: &GridTrajectory, (k, nt, nx): Stencil, n: usize, j: usize) -> f64 {
    let grid = traj.grid;
    let space = |snap: usize| {
        let f = &traj.snapshots[snap][k];
        match nx {
            0 => f[j],
            1 => (grid.at(f, j, 1, false) - grid.at(f, j, -1, false)) / (2.0 * grid.dx),
            _ => (grid.at(f, j, 1, false) - 2.0 * f[j] + grid.at(f, j, -1, false)) / (grid.dx * grid.dx),
        }
    };
    let h = traj.snapshot_dt();
    match nt {
        0 => space(n),
        1 => (space(n + 1) - space(n - 1)) / (2.0 * h),
        _ => (space(n + 1) - 2.0 * space(n) + space(n - 1)) / (h * h),
    }
}

/// Per-snapshot `L∞` and `L²` norms of each equation, jets replaced by
/// central differences of the stored arrays.
pub fn residual_norms(traj: &GridTrajectory, eqs: &EquationSet, chart: &Chart, bindings: &Bindings) -> Result<Vec<ResidualSeries>, SimulationError> {
    let grid = traj.grid;
    let mut out = Vec::new();
    for eq in &eqs.equations {
        let symbols: Vec<String> = eq.residual.free_symbols().into_iter().filter(|s| !bindings.parameters.contains_key(s)).collect();
        let mut stencils = Vec::new();
        let mut dynamic = vec![traj.base[0].clone(), traj.base[1].clone()];
        for s in &symbols {
            if *s == traj.base[0] || *s == traj.base[1] {
                continue;
            }
            let st = resolve(s, chart, &traj.names).ok_or_else(|| SimulationError::Setup(format!("cannot evaluate `{s}` from the trajectory")))?;
            if st.1 + st.2 > 2 {
                return Err(SimulationError::Unsupported(format!("`{s}` needs a third derivative")));
            }
            stencils.push(st);
            dynamic.push(s.clone());
        }
        let layout = bindings.layout(&dynamic);
        let kernel = layout.compile(&eq.residual, bindings)?;
        let mut buf = layout.buffer();
        let mut series = ResidualSeries { label: eq.label.clone(), times: Vec::new(), linf: Vec::new(), l2: Vec::new() };
        for n in (0..traj.snapshots.len()).filter(|&n| uniform(traj, n, 1)) {
            let (mut linf, mut l2) = (0.0f64, 0.0);
            for j in grid.interior() {
                buf[0] = traj.times[n];
                buf[1] = grid.x(j);
                for (slot, st) in stencils.iter().enumerate() {
                    buf[2 + slot] = stencil_value(traj, *st, n, j);
                }
                let r = kernel.eval(&buf);
                linf = linf.max(r.abs());
                l2 += r * r * grid.dx;
            }
            series.times.push(traj.times[n]);
            series.linf.push(linf);
            series.l2.push(l2.sqrt());
        }
        out.push(series);
    }
    Ok(out)
}

/// Norms of each equation with jets taken from exact expressions of the
/// stored coordinates in `(t, x)`.
pub fn exact_residual_norms(
    eqs: &EquationSet,
    chart: &Chart,
    solution: &BTreeMap<String, Expr>,
    grid: &Grid,
    times: &[f64],
    bindings: &Bindings,
) -> Result<Vec<ResidualSeries>, SimulationError> {
    let base: Vec<String> = (0..chart.m()).map(|mu| chart.name(chart.base(mu)).to_string()).collect();
    let mut map: BTreeMap<String, Expr> = BTreeMap::new();
    for i in chart.vertical() {
        let name = chart.name(i);
        let value = match (solution.get(name), chart.role(i)) {
            (Some(v), _) => v.clone(),
            (None, Role::Velocity { field, base: nu }) => match solution.get(chart.name(chart.field(field))) {
                Some(f) => f.diff(&base[nu]),
                None => continue,
            },
            _ => continue,
        };
        for (mu, b) in base.iter().enumerate() {
            map.entry(chart.jet_name(i, mu)).or_insert_with(|| value.diff(b));
        }
        map.insert(name.to_string(), value);
    }
    let layout = bindings.layout(&base);
    let mut out = Vec::new();
    for eq in &eqs.equations {
        let kernel = layout.compile(&eq.residual.subs(&map), bindings)?;
        let mut buf = layout.buffer();
        let mut series = ResidualSeries { label: eq.label.clone(), times: Vec::new(), linf: Vec::new(), l2: Vec::new() };
        for &t in times {
            let (mut linf, mut l2) = (0.0f64, 0.0);
            for j in 0..grid.points {
                buf[0] = t;
                buf[1] = grid.x(j);
                let r = kernel.eval(&buf);
                linf = linf.max(r.abs());
                l2 += r * r * grid.dx;
            }
            series.times.push(t);
            series.linf.push(linf);
            series.l2.push(l2.sqrt());
        }
        out.push(series);
    }
    Ok(out)
}
