//! Lagrangian side: `Θ_L`, energy, Hessian regularity, Herglotz–Euler–Lagrange
//! equations and second-order (SOPDE) coefficient solves.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::equations::{jet_symbol, total_derivative, EquationSet};
use crate::geometry::{Chart, Form, MultiVector, Role, VectorField};
use crate::structure::{mvf_residuals_with, Structure, Verdict};
use crate::symexpr::{is_zero, Expr, Scope, SymMatrix, ZeroTest};

/// Largest `n·m` for which the Hessian is inverted symbolically.
pub const SYMBOLIC_INVERSE_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LagrangianError {
    #[error("chart is missing roles: {}", .0.join(", "))]
    MissingRoles(Vec<String>),
    #[error("chart has a momentum coordinate `{0}`; expected a Lagrangian chart")]
    UnexpectedRole(String),
    #[error("`{0}` is neither a chart coordinate nor a declared parameter or function")]
    UnknownSymbol(String),
}

/// Regularity of the velocity Hessian `∂²L/∂y^i_mu ∂y^j_nu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    Singular { rank: usize, size: usize },
    Unknown,
}

impl Regularity {
    pub fn deficiency(&self) -> Option<usize> {
        match self {
            Regularity::Singular { rank, size } => Some(size - rank),
            _ => None,
        }
    }
}

/// Regularity verdict with the structural cross-check run on regular input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityCheck {
    pub verdict: Regularity,
    /// `classify(Θ_L)` when the Hessian is regular.
    pub classified: Option<Verdict>,
}

impl RegularityCheck {
    /// Regular Hessians must give multicontact forms.
    pub fn consistent(&self) -> bool {
        match (&self.verdict, &self.classified) {
            (Regularity::Regular, Some(v)) => *v == Verdict::Multicontact,
            _ => true,
        }
    }
}

/// Coefficients of a multivector field solving the Lagrangian field equations.
#[derive(Clone, Debug)]
pub struct SopdeSolution {
    /// Coefficient of `X_rho` along coordinate `a`, keyed by `(rho, a)`.
    pub coefficients: BTreeMap<(usize, usize), Expr>,
    /// Names of the coefficients left free by the equations.
    pub free: Vec<String>,
    /// Every field coefficient equals the matching velocity.
    pub semi_holonomic: ZeroTest,
    /// Equations left unsolved: nonempty only for singular Lagrangians.
    pub unsolved: Vec<Expr>,
    pub notice: Option<String>,
}

impl SopdeSolution {
    /// The solution as a decomposable multivector, free coefficients kept symbolic.
    pub fn multivector(&self, chart: &Chart) -> MultiVector {
        MultiVector::decomposable(
            (0..chart.m())
                .map(|rho| {
                    let mut v = VectorField::coordinate(chart.base(rho));
                    for ((r, a), c) in &self.coefficients {
                        if *r == rho {
                            v.add_component(*a, c.clone());
                        }
                    }
                    v
                })
                .collect(),
        )
    }
}

/// Name of the unknown coefficient of `X_rho` along coordinate `a`.
pub fn coefficient_name(chart: &Chart, rho: usize, a: usize) -> String {
    format!("X_{}_{}", chart.suffix(rho), chart.name(a))
}

fn check_chart(l: &Expr, chart: &Chart) -> Result<(), LagrangianError> {
    let mut missing = Vec::new();
    if chart.m() == 0 {
        missing.push("base".to_string());
    }
    if chart.n() == 0 {
        missing.push("field".to_string());
    }
    for i in 0..chart.n() {
        for mu in 0..chart.m() {
            if chart.velocity(i, mu).is_none() {
                missing.push(format!("velocity of {} along {}", chart.name(chart.field(i)), chart.suffix(mu)));
            }
        }
    }
    for mu in 0..chart.m() {
        if chart.contact(mu).is_none() {
            missing.push(format!("contact along {}", chart.suffix(mu)));
        }
    }
    if !missing.is_empty() {
        return Err(LagrangianError::MissingRoles(missing));
    }
    if let Some(c) = chart.coords().iter().find(|c| matches!(c.role, Role::Momentum { .. })) {
        return Err(LagrangianError::UnexpectedRole(c.name.clone()));
    }
    for s in l.free_symbols() {
        if !chart.is_symbol(&s) {
            return Err(LagrangianError::UnknownSymbol(s));
        }
    }
    for (f, arity) in l.functions() {
        if chart.function_arity(&f) != Some(arity) {
            return Err(LagrangianError::UnknownSymbol(f));
        }
    }
    Ok(())
}

fn velocity_name(chart: &Chart, i: usize, mu: usize) -> &str {
    chart.name(chart.velocity(i, mu).expect("checked chart"))
}

fn contact_name(chart: &Chart, mu: usize) -> &str {
    chart.name(chart.contact(mu).expect("checked chart"))
}

/// `Σ y^i_mu ∂L/∂y^i_mu − L`.
pub fn lagrangian_energy(l: &Expr, chart: &Chart) -> Expr {
    let mut e = -l.clone();
    for i in 0..chart.n() {
        for mu in 0..chart.m() {
            let v = velocity_name(chart, i, mu);
            e = e + Expr::symbol(v) * l.diff(v);
        }
    }
    e
}

fn theta_unchecked(l: &Expr, chart: &Chart) -> Form {
    let mut theta = Form::volume(chart).scale(&lagrangian_energy(l, chart));
    for mu in 0..chart.m() {
        let rest = Form::base_volume_minus(chart, mu);
        theta = theta.add(&Form::dz(chart.contact(mu).expect("checked chart")).wedge(&rest));
        for i in 0..chart.n() {
            let p = l.diff(velocity_name(chart, i, mu));
            if !p.is_zero_canonical() {
                theta = theta.sub(&Form::dz(chart.field(i)).wedge(&rest).scale(&p));
            }
        }
    }
    theta
}

/// `Θ_L = −(∂L/∂y^i_mu) dy^i∧d^{m−1}x_mu + E_L d^m x + ds^mu∧d^{m−1}x_mu`.
pub fn build_theta_l(l: &Expr, chart: &Chart) -> Result<Form, LagrangianError> {
    check_chart(l, chart)?;
    Ok(theta_unchecked(l, chart))
}

/// `−(∂L/∂s^mu) dx^mu`.
pub fn lagrangian_sigma(l: &Expr, chart: &Chart) -> Form {
    let mut sigma = Form::zero(1);
    for mu in 0..chart.m() {
        let c = l.diff(contact_name(chart, mu));
        if !c.is_zero_canonical() {
            sigma = sigma.sub(&Form::dz(chart.base(mu)).scale(&c));
        }
    }
    sigma
}

/// Velocity Hessian with rows and columns ordered field-major, `(i, mu) ↦ i·m + mu`.
pub fn hessian(l: &Expr, chart: &Chart) -> SymMatrix {
    let (n, m) = (chart.n(), chart.m());
    let first: Vec<Expr> = (0..n * m).map(|k| l.diff(velocity_name(chart, k / m, k % m))).collect();
    let mut h = SymMatrix::zeros(n * m, n * m);
    for r in 0..n * m {
        for c in r..n * m {
            let e = first[r].diff(velocity_name(chart, c / m, c % m));
            h.set(r, c, e.clone());
            h.set(c, r, e);
        }
    }
    h
}

fn regularity_of(h: &SymMatrix) -> Regularity {
    let ech = h.echelon();
    let size = h.rows();
    if ech.rank() == size {
        Regularity::Regular
    } else if ech.indeterminate {
        Regularity::Unknown
    } else {
        Regularity::Singular { rank: ech.rank(), size }
    }
}

pub fn regularity(l: &Expr, chart: &Chart) -> Result<RegularityCheck, LagrangianError> {
    Ok(LagrangianSystem::new(l.clone(), chart.clone())?.regularity_check())
}

/// Herglotz–Euler–Lagrange equations in jet symbols:
/// `D_mu(∂L/∂y^i_mu) − ∂L/∂y^i − (∂L/∂s^mu)(∂L/∂y^i_mu)` and `Σ ∂s^mu/∂x^mu − L`.
pub fn herglotz_el_equations(l: &Expr, chart: &Chart) -> Result<EquationSet, LagrangianError> {
    check_chart(l, chart)?;
    let mut set = EquationSet::default();
    for i in 0..chart.n() {
        let y = chart.field(i);
        let mut r = -l.diff(chart.name(y));
        for mu in 0..chart.m() {
            let p = l.diff(velocity_name(chart, i, mu));
            r = r + total_derivative(&p, mu, chart) - l.diff(contact_name(chart, mu)) * p;
        }
        set.push("field", chart.name(y), r);
    }
    let mut r = -l.clone();
    for mu in 0..chart.m() {
        r = r + jet_symbol(chart, chart.contact(mu).expect("checked chart"), mu);
    }
    set.push("contact", "s", r);
    Ok(set)
}

/// Lagrangian system with derived objects computed on first use.
#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    chart: Chart,
    lagrangian: Expr,
    theta: Form,
    energy: Expr,
    sigma: Form,
    hessian: SymMatrix,
    regularity: Regularity,
    structure: OnceLock<Structure>,
}

impl LagrangianSystem {
    pub fn new(lagrangian: Expr, chart: Chart) -> Result<Self, LagrangianError> {
        check_chart(&lagrangian, &chart)?;
        let theta = theta_unchecked(&lagrangian, &chart);
        let energy = lagrangian_energy(&lagrangian, &chart);
        let sigma = lagrangian_sigma(&lagrangian, &chart);
        let hessian = hessian(&lagrangian, &chart);
        let regularity = regularity_of(&hessian);
        Ok(LagrangianSystem { chart, lagrangian, theta, energy, sigma, hessian, regularity, structure: OnceLock::new() })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn theta(&self) -> &Form {
        &self.theta
    }

    pub fn energy(&self) -> &Expr {
        &self.energy
    }

    /// `−(∂L/∂s^mu) dx^mu`, read off the Lagrangian.
    pub fn sigma(&self) -> &Form {
        &self.sigma
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn structure(&self) -> &Structure {
        self.structure.get_or_init(|| Structure::analyze(&self.theta, &self.chart))
    }

    pub fn regularity_check(&self) -> RegularityCheck {
        let classified = (self.regularity == Regularity::Regular).then(|| self.structure().classification().verdict.clone());
        RegularityCheck { verdict: self.regularity, classified }
    }

    pub fn equations(&self) -> EquationSet {
        herglotz_el_equations(&self.lagrangian, &self.chart).expect("chart checked on construction")
    }

    /// `p_i^mu = ∂L/∂y^i_mu`, keyed by `(field, base)`.
    pub fn momenta(&self) -> BTreeMap<(usize, usize), Expr> {
        let (n, m) = (self.chart.n(), self.chart.m());
        (0..n)
            .flat_map(|i| (0..m).map(move |mu| (i, mu)))
            .map(|(i, mu)| ((i, mu), self.lagrangian.diff(velocity_name(&self.chart, i, mu))))
            .collect()
    }

    /// Closed-form Reeb fields `∂/∂s^mu − W (∂²L/∂s^mu∂y_nu) ∂/∂y_nu`, `W` the
    /// inverse Hessian; `None` when singular or above the symbolic size limit.
    pub fn reeb_formula(&self) -> Option<Vec<VectorField>> {
        let (n, m) = (self.chart.n(), self.chart.m());
        if self.regularity != Regularity::Regular || n * m > SYMBOLIC_INVERSE_LIMIT {
            return None;
        }
        let mut out = Vec::with_capacity(m);
        for mu in 0..m {
            let s = contact_name(&self.chart, mu);
            let rhs: Vec<Expr> = (0..n * m).map(|k| self.lagrangian.diff(velocity_name(&self.chart, k / m, k % m)).diff(s)).collect();
            let sol = self.hessian.solve(&rhs)?;
            if !sol.free.is_empty() {
                return None;
            }
            let mut r = VectorField::coordinate(self.chart.contact(mu).expect("checked chart"));
            for (k, c) in sol.particular.iter().enumerate() {
                if !c.is_zero_canonical() {
                    r.add_component(self.chart.velocity(k / m, k % m).expect("checked chart"), -c.clone());
                }
            }
            out.push(r);
        }
        Some(out)
    }

    /// Solves `i(X)Θ_L = 0`, `i(X)d̄Θ_L = 0` for a transversal decomposable
    /// `X = ∧(∂_rho + Σ X_rho^a ∂_a)`: first the velocity components, which
    /// force semi-holonomy, then the remaining linear system.
    pub fn sopde_coefficients(&self) -> SopdeSolution {
        let chart = &self.chart;
        let m = chart.m();
        let vertical = chart.vertical();
        let unknown = |rho: usize, a: usize| Expr::symbol(&coefficient_name(chart, rho, a));
        let x = MultiVector::decomposable(
            (0..m)
                .map(|rho| {
                    let mut v = VectorField::coordinate(chart.base(rho));
                    for &a in &vertical {
                        v.add_component(a, unknown(rho, a));
                    }
                    v
                })
                .collect(),
        );
        let res = mvf_residuals_with(&self.theta, &self.sigma, &x, chart);
        let component = |a: usize| res.one_form.coefficient(&[a]);
        let velocity_eqs: Vec<Expr> = vertical.iter().filter(|&&a| matches!(chart.role(a), Role::Velocity { .. })).map(|&a| component(a)).collect();
        let mut rest: Vec<Expr> = vec![res.scalar.as_scalar()];
        rest.extend(chart.coords().iter().enumerate().filter(|(_, c)| !matches!(c.role, Role::Velocity { .. })).map(|(a, _)| component(a)));

        let field_unknowns: Vec<(usize, usize)> = (0..m).flat_map(|rho| chart.field_indices().iter().map(move |&a| (rho, a))).collect();
        let other_unknowns: Vec<(usize, usize)> = (0..m)
            .flat_map(|rho| vertical.iter().filter(|&&a| chart.role(a) != Role::Field).map(move |&a| (rho, a)))
            .collect();

        if self.regularity != Regularity::Regular {
            let mut unsolved = velocity_eqs;
            unsolved.extend(rest);
            unsolved.retain(|e| !e.is_zero_canonical());
            let notice = match self.regularity {
                Regularity::Singular { rank, size } => format!("singular Lagrangian: Hessian rank {rank} of {size}; equations left unsolved"),
                _ => "Hessian regularity undecided; equations left unsolved".to_string(),
            };
            return SopdeSolution {
                coefficients: BTreeMap::new(),
                free: Vec::new(),
                semi_holonomic: ZeroTest::Unknown,
                unsolved,
                notice: Some(notice),
            };
        }

        let mut coefficients = BTreeMap::new();
        let mut free = Vec::new();
        let mut unsolved = Vec::new();
        let mut subs = BTreeMap::new();
        let mut semi_holonomic = ZeroTest::Zero;
        match solve_linear(&velocity_eqs, &field_unknowns, chart) {
            Some((values, params)) => {
                for (&(rho, a), v) in field_unknowns.iter().zip(values) {
                    let field = chart.field_indices().iter().position(|&f| f == a).expect("field index");
                    let expected = Expr::symbol(velocity_name(chart, field, rho));
                    semi_holonomic = worst(semi_holonomic, is_zero(&(&v - &expected)));
                    subs.insert(coefficient_name(chart, rho, a), v.clone());
                    coefficients.insert((rho, a), v);
                }
                free.extend(params);
            }
            None => {
                semi_holonomic = ZeroTest::NonZero;
                unsolved.extend(velocity_eqs);
            }
        }
        let rest: Vec<Expr> = rest.iter().map(|e| e.subs(&subs)).collect();
        match solve_linear(&rest, &other_unknowns, chart) {
            Some((values, params)) => {
                for (&key, v) in other_unknowns.iter().zip(values) {
                    coefficients.insert(key, v);
                }
                free.extend(params);
            }
            None => unsolved.extend(rest.into_iter().filter(|e| !e.is_zero_canonical())),
        }
        let notice = (!unsolved.is_empty()).then(|| "coefficient equations are not linear or not consistent".to_string());
        SopdeSolution { coefficients, free, semi_holonomic, unsolved, notice }
    }
}

fn worst(a: ZeroTest, b: ZeroTest) -> ZeroTest {
    match (a, b) {
        (ZeroTest::NonZero, _) | (_, ZeroTest::NonZero) => ZeroTest::NonZero,
        (ZeroTest::Unknown, _) | (_, ZeroTest::Unknown) => ZeroTest::Unknown,
        _ => ZeroTest::Zero,
    }
}

/// Solves equations affine in the named unknowns. Free unknowns stay as their
/// own symbols and are returned by name; `None` if nonlinear or inconsistent.
fn solve_linear(eqs: &[Expr], unknowns: &[(usize, usize)], chart: &Chart) -> Option<(Vec<Expr>, Vec<String>)> {
    let names: Vec<String> = unknowns.iter().map(|&(rho, a)| coefficient_name(chart, rho, a)).collect();
    let zeros: BTreeMap<String, Expr> = names.iter().map(|n| (n.clone(), Expr::zero())).collect();
    let eqs: Vec<&Expr> = eqs.iter().filter(|e| !e.is_zero_canonical()).collect();
    let mut a = SymMatrix::zeros(eqs.len(), names.len());
    let mut rhs = Vec::with_capacity(eqs.len());
    for (r, e) in eqs.iter().enumerate() {
        for (c, n) in names.iter().enumerate() {
            let coeff = e.diff(n);
            if names.iter().any(|u| coeff.contains_symbol(u)) {
                return None;
            }
            a.set(r, c, coeff);
        }
        rhs.push(-e.subs(&zeros));
    }
    let sol = a.solve(&rhs)?;
    let mut values = sol.particular;
    for (f, h) in sol.free.iter().zip(&sol.homogeneous) {
        let p = Expr::symbol(&names[*f]);
        for (v, hc) in values.iter_mut().zip(h) {
            if !hc.is_zero_canonical() {
                *v = &*v + &(&p * hc);
            }
        }
    }
    Some((values, sol.free.iter().map(|&f| names[f].clone()).collect()))
}

#[cfg(test)]
mod tests;
