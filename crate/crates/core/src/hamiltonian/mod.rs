//! Hamiltonian side: Legendre map and its inverse, `Θ_H`, the
//! Hamilton–de Donder–Weyl equations with dissipation, and the cocontact
//! vector field for `m = 1`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::equations::{jet_symbol, total_derivative, EquationSet};
use crate::geometry::{pullback_map, Chart, ChartError, ChartSpec, Form, Role, VectorField};
use crate::lagrangian::{build_theta_l, hessian, LagrangianError, LagrangianSystem, Regularity};
use crate::structure::{adapted_form, adapted_sigma, Structure};
use crate::symexpr::{is_zero, Compiled, Expr, ExprError, FunctionTable, Scope, SymMatrix, ZeroTest};

/// Newton stopping rule for the numeric Legendre inverse.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("chart is missing roles: {}", .0.join(", "))]
    MissingRoles(Vec<String>),
    #[error("chart has a velocity coordinate `{0}`; expected a Hamiltonian chart")]
    UnexpectedRole(String),
    #[error("`{0}` is neither a chart coordinate nor a declared parameter or function")]
    UnknownSymbol(String),
    #[error("the cocontact vector field needs one base coordinate, found {0}")]
    NotOneDimensional(usize),
    #[error("Legendre map is not invertible: velocity Hessian is {0:?}")]
    NotRegular(Regularity),
    #[error("Legendre map has no closed-form inverse; use the Newton inverse for numeric values")]
    NumericOnly,
    #[error("Newton iteration did not converge: residual {residual:e} at {iterate:?}")]
    Newton { iterate: Vec<f64>, residual: f64 },
    #[error("pulled-back Hamiltonian form differs from the Lagrangian form")]
    PullbackMismatch,
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn check_chart(h: &Expr, chart: &Chart) -> Result<(), HamiltonianError> {
    let mut missing = Vec::new();
    if chart.m() == 0 {
        missing.push("base".to_string());
    }
    if chart.n() == 0 {
        missing.push("field".to_string());
    }
    for i in 0..chart.n() {
        for mu in 0..chart.m() {
            if chart.momentum(i, mu).is_none() {
                missing.push(format!("momentum of {} along {}", chart.name(chart.field(i)), chart.suffix(mu)));
            }
        }
    }
    for mu in 0..chart.m() {
        if chart.contact(mu).is_none() {
            missing.push(format!("contact along {}", chart.suffix(mu)));
        }
    }
    if !missing.is_empty() {
        return Err(HamiltonianError::MissingRoles(missing));
    }
    if let Some(c) = chart.coords().iter().find(|c| matches!(c.role, Role::Velocity { .. })) {
        return Err(HamiltonianError::UnexpectedRole(c.name.clone()));
    }
    for s in h.free_symbols() {
        if !chart.is_symbol(&s) {
            return Err(HamiltonianError::UnknownSymbol(s));
        }
    }
    for (f, arity) in h.functions() {
        if chart.function_arity(&f) != Some(arity) {
            return Err(HamiltonianError::UnknownSymbol(f));
        }
    }
    Ok(())
}

fn momentum(chart: &Chart, i: usize, mu: usize) -> usize {
    chart.momentum(i, mu).expect("checked chart")
}

fn contact(chart: &Chart, mu: usize) -> usize {
    chart.contact(mu).expect("checked chart")
}

fn theta_unchecked(h: &Expr, chart: &Chart) -> Form {
    let mut f = BTreeMap::new();
    for i in 0..chart.n() {
        for mu in 0..chart.m() {
            f.insert((chart.field(i), mu), -chart.symbol(momentum(chart, i, mu)));
        }
    }
    adapted_form(chart, h, &f)
}

/// `Θ_H = −p_i^mu dy^i∧d^{m−1}x_mu + H d^m x + ds^mu∧d^{m−1}x_mu`.
pub fn build_theta_h(h: &Expr, chart: &Chart) -> Result<Form, HamiltonianError> {
    check_chart(h, chart)?;
    Ok(theta_unchecked(h, chart))
}

/// Hamilton–de Donder–Weyl equations in jet symbols, three families:
/// `field`: `∂y^i/∂x^mu − ∂H/∂p_i^mu`;
/// `momentum`: `Σ ∂p_i^mu/∂x^mu + ∂H/∂y^i + p_i^mu ∂H/∂s^mu`;
/// `contact`: `Σ ∂s^mu/∂x^mu − (p_i^mu ∂H/∂p_i^mu − H)`.
pub fn hdw_equations(h: &Expr, chart: &Chart) -> Result<EquationSet, HamiltonianError> {
    check_chart(h, chart)?;
    let (n, m) = (chart.n(), chart.m());
    let mut set = EquationSet::default();
    for i in 0..n {
        for mu in 0..m {
            let y = chart.field(i);
            set.push("field", chart.jet_name(y, mu), jet_symbol(chart, y, mu) - h.diff(chart.name(momentum(chart, i, mu))));
        }
    }
    for i in 0..n {
        let y = chart.field(i);
        let mut r = h.diff(chart.name(y));
        for mu in 0..m {
            let p = momentum(chart, i, mu);
            r = r + jet_symbol(chart, p, mu) + chart.symbol(p) * h.diff(chart.name(contact(chart, mu)));
        }
        set.push("momentum", chart.name(y), r);
    }
    let mut r = h.clone();
    for mu in 0..m {
        r = r + jet_symbol(chart, contact(chart, mu), mu);
        for i in 0..n {
            let p = momentum(chart, i, mu);
            r = r - chart.symbol(p) * h.diff(chart.name(p));
        }
    }
    set.push("contact", "s", r);
    Ok(set)
}

/// `X_H = ∂_t + H_{p_i} ∂_{q^i} − (H_{q^i} + p_i H_s) ∂_{p_i} + (p_i H_{p_i} − H) ∂_s`.
pub fn cocontact_vector_field(h: &Expr, chart: &Chart) -> Result<VectorField, HamiltonianError> {
    if chart.m() != 1 {
        return Err(HamiltonianError::NotOneDimensional(chart.m()));
    }
    check_chart(h, chart)?;
    let s = contact(chart, 0);
    let hs = h.diff(chart.name(s));
    let mut x = VectorField::coordinate(chart.base(0));
    let mut ds = -h.clone();
    for i in 0..chart.n() {
        let (q, p) = (chart.field(i), momentum(chart, i, 0));
        let hp = h.diff(chart.name(p));
        ds = ds + chart.symbol(p) * &hp;
        x.add_component(q, hp);
        x.add_component(p, -(h.diff(chart.name(q)) + chart.symbol(p) * &hs));
    }
    x.add_component(s, ds);
    Ok(x)
}

/// The three cocontact identities `i(X)τ − 1`, `i(X)η + H` and
/// `i(X)dη − (dH − H_s η − H_t τ)`, with `τ = dt`, `η = ds − p_i dq^i`.
pub fn cocontact_residuals(h: &Expr, x: &VectorField, chart: &Chart) -> Result<(Expr, Expr, Form), HamiltonianError> {
    if chart.m() != 1 {
        return Err(HamiltonianError::NotOneDimensional(chart.m()));
    }
    check_chart(h, chart)?;
    let t = chart.base(0);
    let s = contact(chart, 0);
    let tau = Form::dz(t);
    let mut eta = Form::dz(s);
    for i in 0..chart.n() {
        eta = eta.sub(&Form::dz(chart.field(i)).scale(&chart.symbol(momentum(chart, i, 0))));
    }
    let dh = Form::scalar(h.clone()).d(chart);
    let first = x.contract(&tau).as_scalar() - Expr::one();
    let second = x.contract(&eta).as_scalar() + h.clone();
    let rhs = dh.sub(&eta.scale(&h.diff(chart.name(s)))).sub(&tau.scale(&h.diff(chart.name(t))));
    let third = x.contract(&eta.d(chart)).sub(&rhs);
    Ok((first, second, third))
}

/// Hamiltonian system built directly from `H`.
#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    chart: Chart,
    hamiltonian: Expr,
    theta: Form,
    sigma: Form,
    structure: OnceLock<Structure>,
}

impl HamiltonianSystem {
    pub fn new(hamiltonian: Expr, chart: Chart) -> Result<Self, HamiltonianError> {
        check_chart(&hamiltonian, &chart)?;
        let theta = theta_unchecked(&hamiltonian, &chart);
        let sigma = adapted_sigma(&chart, &hamiltonian);
        Ok(HamiltonianSystem { chart, hamiltonian, theta, sigma, structure: OnceLock::new() })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn theta(&self) -> &Form {
        &self.theta
    }

    /// `(∂H/∂s^mu) dx^mu`, read off the Hamiltonian.
    pub fn sigma(&self) -> &Form {
        &self.sigma
    }

    pub fn structure(&self) -> &Structure {
        self.structure.get_or_init(|| Structure::analyze(&self.theta, &self.chart))
    }

    pub fn equations(&self) -> EquationSet {
        hdw_equations(&self.hamiltonian, &self.chart).expect("chart checked on construction")
    }

    pub fn cocontact_vector_field(&self) -> Result<VectorField, HamiltonianError> {
        cocontact_vector_field(&self.hamiltonian, &self.chart)
    }
}

/// Hamiltonian chart over the same base, fields, contact and auxiliary
/// coordinates as a Lagrangian chart, with default momentum names.
pub fn hamiltonian_chart_for(lagrangian_chart: &Chart) -> Result<Chart, HamiltonianError> {
    let c = lagrangian_chart;
    let names = |role: fn(Role) -> bool| c.coords().iter().filter(|x| role(x.role)).map(|x| x.name.clone()).collect::<Vec<_>>();
    let spec = ChartSpec {
        base: names(|r| r == Role::Base),
        suffixes: Some(c.suffixes().to_vec()),
        fields: names(|r| r == Role::Field),
        velocities: None,
        momenta: None,
        contact: Some((0..c.m()).map(|mu| c.contact(mu).map(|s| c.name(s).to_string())).collect::<Option<_>>().ok_or_else(|| {
            HamiltonianError::MissingRoles(vec!["contact".into()])
        })?),
        gauge: names(|r| r == Role::Gauge),
        generic: names(|r| r == Role::Generic),
    };
    let mut chart = spec.hamiltonian_chart()?.with_parameters(c.parameters().iter())?;
    for (f, arity) in c.functions() {
        chart = chart.with_function(f, *arity)?;
    }
    Ok(chart)
}

/// `𝓕L: (x, y, y_mu, s) ↦ (x, y, ∂L/∂y_mu, s)` between a Lagrangian and a Hamiltonian chart.
#[derive(Clone, Debug)]
pub struct LegendreMap {
    lagrangian: Expr,
    source: Chart,
    target: Chart,
    /// `p_i^mu` as functions on the Lagrangian chart, keyed by `(field, base)`.
    momenta: BTreeMap<(usize, usize), Expr>,
}

/// Legendre maps serialize as coordinate tables.
#[derive(Clone, Debug, Serialize)]
pub struct LegendreTable {
    pub forward: BTreeMap<String, String>,
    pub inverse: Option<BTreeMap<String, String>>,
    pub regularity: Regularity,
}

pub fn legendre_map(l: &Expr, chart: &Chart) -> Result<LegendreMap, HamiltonianError> {
    LegendreMap::new(l, chart, hamiltonian_chart_for(chart)?)
}

/// Inverse of the Legendre map on the velocities.
#[derive(Clone, Debug)]
pub enum LegendreInverse {
    /// `y^i_mu` as functions on the Hamiltonian chart, keyed by `(field, base)`.
    ClosedForm(BTreeMap<(usize, usize), Expr>),
    Numeric(NewtonInverse),
}

pub fn invert_legendre(l: &Expr, chart: &Chart, funcs: &FunctionTable) -> Result<LegendreInverse, HamiltonianError> {
    let map = legendre_map(l, chart)?;
    if map.regularity() != Regularity::Regular {
        return Err(HamiltonianError::NotRegular(map.regularity()));
    }
    match map.closed_form_inverse() {
        Some(inv) => Ok(LegendreInverse::ClosedForm(inv)),
        None => Ok(LegendreInverse::Numeric(map.newton(funcs)?)),
    }
}

impl LegendreMap {
    /// Matches coordinates of the two charts by role.
    pub fn new(l: &Expr, source: &Chart, target: Chart) -> Result<LegendreMap, HamiltonianError> {
        build_theta_l(l, source)?;
        check_chart(&Expr::zero(), &target)?;
        if source.m() != target.m() || source.n() != target.n() {
            return Err(HamiltonianError::MissingRoles(vec![format!(
                "{} base and {} field coordinates",
                source.m(),
                source.n()
            )]));
        }
        let (n, m) = (source.n(), source.m());
        let momenta = (0..n)
            .flat_map(|i| (0..m).map(move |mu| (i, mu)))
            .map(|(i, mu)| ((i, mu), l.diff(source.name(source.velocity(i, mu).expect("checked chart")))))
            .collect();
        Ok(LegendreMap { lagrangian: l.clone(), source: source.clone(), target, momenta })
    }

    pub fn lagrangian_chart(&self) -> &Chart {
        &self.source
    }

    pub fn hamiltonian_chart(&self) -> &Chart {
        &self.target
    }

    pub fn momenta(&self) -> &BTreeMap<(usize, usize), Expr> {
        &self.momenta
    }

    /// Jacobian regularity on the fibres, equal to the Lagrangian's.
    pub fn regularity(&self) -> Regularity {
        LagrangianSystem::new(self.lagrangian.clone(), self.source.clone()).expect("checked chart").regularity()
    }

    /// Images of the Hamiltonian coordinates as functions on the Lagrangian chart.
    pub fn images(&self) -> BTreeMap<String, Expr> {
        let (s, t) = (&self.source, &self.target);
        let mut out = BTreeMap::new();
        for mu in 0..t.m() {
            out.insert(t.name(t.base(mu)).to_string(), s.symbol(s.base(mu)));
            out.insert(t.name(contact(t, mu)).to_string(), s.symbol(s.contact(mu).expect("checked chart")));
        }
        for i in 0..t.n() {
            out.insert(t.name(t.field(i)).to_string(), s.symbol(s.field(i)));
        }
        for ((i, mu), p) in &self.momenta {
            out.insert(t.name(momentum(t, *i, *mu)).to_string(), p.clone());
        }
        for (k, c) in t.coords().iter().enumerate() {
            if matches!(c.role, Role::Gauge | Role::Generic) {
                out.insert(c.name.clone(), t.symbol(k));
            }
        }
        out
    }

    /// Pullback of a form on the Hamiltonian chart.
    pub fn pull_back(&self, a: &Form) -> Form {
        pullback_map(a, &self.target, &self.images(), &self.source)
    }

    /// Pullback of a function on the Hamiltonian chart.
    pub fn pull_back_expr(&self, e: &Expr) -> Expr {
        e.subs(&self.images())
    }

    /// Renames the non-momentum Lagrangian coordinates to their Hamiltonian names.
    fn rename_to_target(&self) -> BTreeMap<String, Expr> {
        let (s, t) = (&self.source, &self.target);
        let mut out = BTreeMap::new();
        for mu in 0..s.m() {
            out.insert(s.name(s.base(mu)).to_string(), t.symbol(t.base(mu)));
            out.insert(s.name(s.contact(mu).expect("checked chart")).to_string(), t.symbol(contact(t, mu)));
        }
        for i in 0..s.n() {
            out.insert(s.name(s.field(i)).to_string(), t.symbol(t.field(i)));
        }
        out
    }

    /// Velocities as functions of the Hamiltonian coordinates when `L` is at
    /// most quadratic in the velocities.
    pub fn closed_form_inverse(&self) -> Option<BTreeMap<(usize, usize), Expr>> {
        let (n, m) = (self.source.n(), self.source.m());
        let hess = hessian(&self.lagrangian, &self.source);
        let velocities: Vec<String> = (0..n * m).map(|k| self.source.name(self.source.velocity(k / m, k % m).expect("checked chart")).to_string()).collect();
        for r in 0..n * m {
            for c in 0..n * m {
                if velocities.iter().any(|v| hess.get(r, c).contains_symbol(v)) {
                    return None;
                }
            }
        }
        let zeros: BTreeMap<String, Expr> = velocities.iter().map(|v| (v.clone(), Expr::zero())).collect();
        let rename = self.rename_to_target();
        let renamed = SymMatrix::from_rows((0..n * m).map(|r| (0..n * m).map(|c| hess.get(r, c).subs(&rename)).collect()).collect());
        let rhs: Vec<Expr> = (0..n * m)
            .map(|k| {
                let p = self.target.symbol(momentum(&self.target, k / m, k % m));
                p - self.momenta[&(k / m, k % m)].subs(&zeros).subs(&rename)
            })
            .collect();
        let sol = renamed.solve(&rhs)?;
        if !sol.free.is_empty() {
            return None;
        }
        Some(sol.particular.into_iter().enumerate().map(|(k, v)| ((k / m, k % m), v)).collect())
    }

    /// Newton solver for the velocities at given Hamiltonian coordinates.
    pub fn newton(&self, funcs: &FunctionTable) -> Result<NewtonInverse, HamiltonianError> {
        let (n, m) = (self.source.n(), self.source.m());
        let s = &self.source;
        let velocities: Vec<String> = (0..n * m).map(|k| s.name(s.velocity(k / m, k % m).expect("checked chart")).to_string()).collect();
        let rename = self.rename_to_target();
        let mut slots: Vec<String> = velocities.clone();
        let mut inputs = Vec::new();
        for c in self.target.coords() {
            if !matches!(c.role, Role::Momentum { .. }) {
                slots.push(c.name.clone());
                inputs.push(c.name.clone());
            }
        }
        slots.extend(s.parameters().iter().cloned());
        let slot_refs: Vec<&str> = slots.iter().map(|x| x.as_str()).collect();
        let hess = hessian(&self.lagrangian, s);
        let mut momenta = Vec::with_capacity(n * m);
        let mut jacobian = Vec::with_capacity(n * m * n * m);
        for r in 0..n * m {
            momenta.push(self.momenta[&(r / m, r % m)].subs(&rename).compile(&slot_refs, funcs)?);
            for c in 0..n * m {
                jacobian.push(hess.get(r, c).subs(&rename).compile(&slot_refs, funcs)?);
            }
        }
        let lagrangian = self.lagrangian.subs(&rename).compile(&slot_refs, funcs)?;
        let momentum_names = (0..n * m).map(|k| self.target.name(momentum(&self.target, k / m, k % m)).to_string()).collect();
        Ok(NewtonInverse { size: n * m, slots, inputs, momentum_names, momenta, jacobian, lagrangian })
    }

    pub fn table(&self) -> LegendreTable {
        let mut forward = BTreeMap::new();
        for (name, e) in self.images() {
            forward.insert(name, e.to_string());
        }
        let inverse = self.closed_form_inverse().map(|inv| {
            inv.iter()
                .map(|(&(i, mu), v)| (self.source.name(self.source.velocity(i, mu).expect("checked chart")).to_string(), v.to_string()))
                .collect()
        });
        LegendreTable { forward, inverse, regularity: self.regularity() }
    }
}

/// Numeric inverse of `p = ∂L/∂v` by Newton's method on the velocities.
#[derive(Clone, Debug)]
pub struct NewtonInverse {
    size: usize,
    /// Velocities, then non-momentum Hamiltonian coordinates, then parameters.
    slots: Vec<String>,
    inputs: Vec<String>,
    momentum_names: Vec<String>,
    momenta: Vec<Compiled>,
    jacobian: Vec<Compiled>,
    lagrangian: Compiled,
}

impl NewtonInverse {
    fn layout(&self, values: &BTreeMap<String, f64>) -> Result<(Vec<f64>, Vec<f64>), HamiltonianError> {
        let mut slots = vec![0.0; self.slots.len()];
        for (k, name) in self.slots.iter().enumerate().skip(self.size) {
            slots[k] = *values.get(name).ok_or_else(|| ExprError::Unbound(name.clone()))?;
        }
        let target = self
            .momentum_names
            .iter()
            .map(|p| values.get(p).copied().ok_or_else(|| ExprError::Unbound(p.clone()).into()))
            .collect::<Result<Vec<f64>, HamiltonianError>>()?;
        Ok((slots, target))
    }

    /// Velocities solving `∂L/∂v = p` at the Hamiltonian point `values`
    /// (coordinates and parameters by name), starting from `guess` or zero.
    pub fn solve(&self, values: &BTreeMap<String, f64>, guess: Option<&[f64]>) -> Result<Vec<f64>, HamiltonianError> {
        let (mut slots, target) = self.layout(values)?;
        if let Some(g) = guess {
            slots[..self.size].copy_from_slice(g);
        }
        let k = self.size;
        let mut residual = f64::INFINITY;
        for _ in 0..=NEWTON_MAX_ITERATIONS {
            let f = DVector::from_iterator(k, (0..k).map(|r| self.momenta[r].eval(&slots) - target[r]));
            residual = f.amax();
            if !residual.is_finite() {
                break;
            }
            if residual <= NEWTON_TOLERANCE {
                return Ok(slots[..k].to_vec());
            }
            let j = DMatrix::from_fn(k, k, |r, c| self.jacobian[r * k + c].eval(&slots));
            let Some(step) = j.lu().solve(&f) else { break };
            for r in 0..k {
                slots[r] -= step[r];
            }
        }
        Err(HamiltonianError::Newton { iterate: slots[..k].to_vec(), residual })
    }

    /// `H = p·v − L` at the inverted velocities.
    pub fn hamiltonian_value(&self, values: &BTreeMap<String, f64>) -> Result<f64, HamiltonianError> {
        let v = self.solve(values, None)?;
        let (mut slots, target) = self.layout(values)?;
        slots[..self.size].copy_from_slice(&v);
        Ok(target.iter().zip(&v).map(|(p, v)| p * v).sum::<f64>() - self.lagrangian.eval(&slots))
    }

    /// Names of the non-momentum inputs expected by [`NewtonInverse::solve`].
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }
}

/// Hamiltonian obtained from a regular Lagrangian, with the Legendre data
/// and the pullback check `𝓕L*Θ_H = Θ_L`.
#[derive(Clone, Debug)]
pub struct LegendreDual {
    pub system: HamiltonianSystem,
    pub legendre: LegendreMap,
    pub inverse: BTreeMap<(usize, usize), Expr>,
    pub pullback_check: ZeroTest,
}

/// `H = p_i^mu y^i_mu − L` with velocities from the closed-form inverse.
pub fn hamiltonian_from_lagrangian(l: &Expr, chart: &Chart) -> Result<LegendreDual, HamiltonianError> {
    hamiltonian_from_lagrangian_on(l, chart, hamiltonian_chart_for(chart)?)
}

pub fn hamiltonian_from_lagrangian_on(l: &Expr, chart: &Chart, target: Chart) -> Result<LegendreDual, HamiltonianError> {
    let legendre = LegendreMap::new(l, chart, target)?;
    let regularity = legendre.regularity();
    if regularity != Regularity::Regular {
        return Err(HamiltonianError::NotRegular(regularity));
    }
    let inverse = legendre.closed_form_inverse().ok_or(HamiltonianError::NumericOnly)?;
    let (s, t) = (legendre.lagrangian_chart(), legendre.hamiltonian_chart());
    let mut to_h = legendre.rename_to_target();
    for (&(i, mu), v) in &inverse {
        to_h.insert(s.name(s.velocity(i, mu).expect("checked chart")).to_string(), v.clone());
    }
    let mut h = -l.subs(&to_h);
    for (&(i, mu), v) in &inverse {
        h = h + t.symbol(momentum(t, i, mu)) * v;
    }
    let system = HamiltonianSystem::new(h, t.clone())?;
    let theta_l = build_theta_l(l, s)?;
    let pullback_check = legendre.pull_back(system.theta()).sub(&theta_l).is_zero();
    if pullback_check == ZeroTest::NonZero {
        return Err(HamiltonianError::PullbackMismatch);
    }
    Ok(LegendreDual { system, legendre, inverse, pullback_check })
}

impl LegendreDual {
    /// HDW equations carried to the Lagrangian side: momenta become `∂L/∂y_mu`,
    /// their jets total derivatives, and field jets the velocities.
    pub fn pulled_back_equations(&self) -> EquationSet {
        let (s, t) = (self.legendre.lagrangian_chart(), self.legendre.hamiltonian_chart());
        let mut map = self.legendre.images();
        for mu in 0..t.m() {
            for i in 0..t.n() {
                map.insert(t.jet_name(t.field(i), mu), s.symbol(s.velocity(i, mu).expect("checked chart")));
                for nu in 0..t.m() {
                    let p = momentum(t, i, nu);
                    map.insert(t.jet_name(p, mu), total_derivative(&self.legendre.momenta()[&(i, nu)], mu, s));
                }
            }
            for nu in 0..t.m() {
                map.insert(t.jet_name(contact(t, nu), mu), jet_symbol(s, s.contact(nu).expect("checked chart"), mu));
            }
        }
        self.system.equations().subs(&map)
    }

    /// Agreement of the pulled-back HDW equations with the Herglotz–Euler–Lagrange
    /// equations: `field` residuals vanish, `momentum` and `contact` match.
    pub fn equations_agree(&self) -> ZeroTest {
        let s = self.legendre.lagrangian_chart();
        let hel = crate::lagrangian::herglotz_el_equations(&self.legendre.lagrangian, s).expect("checked chart");
        let pulled = self.pulled_back_equations();
        let mut verdict = ZeroTest::Zero;
        for e in &pulled.equations {
            let diff = match e.family.as_str() {
                "field" => e.residual.clone(),
                "momentum" => &e.residual - &hel.family("field").find(|h| h.label == e.label).expect("same fields").residual,
                _ => &e.residual - &hel.get("s").expect("contact equation").residual,
            };
            verdict = match (verdict, is_zero(&diff)) {
                (ZeroTest::NonZero, _) | (_, ZeroTest::NonZero) => ZeroTest::NonZero,
                (ZeroTest::Unknown, _) | (_, ZeroTest::Unknown) => ZeroTest::Unknown,
                _ => ZeroTest::Zero,
            };
        }
        verdict
    }
}
