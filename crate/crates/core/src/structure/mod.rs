//! The multicontact layer for a pair `(Θ, ω)` with `ω = d^m x`.
//!
//! `ker ω` is spanned by the non-base coordinate fields. Every distribution is
//! the kernel of a linear condition matrix over those fields, computed by
//! symbolic elimination and cross-checked numerically at probe points.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{dbar, pullback, Chart, Form, MultiVector, Section, VectorField};
use crate::symexpr::{is_zero, probe_seed, Expr, ProbePoint, SymMatrix, Tristate, ZeroTest};


const RANK_PROBES: u64 = 5;

/// A distribution inside `ker ω`, given by a basis over expressions.
#[derive(Clone, Debug)]
pub struct Distribution {
    pub basis: Vec<VectorField>,
    pub generic_rank: usize,
    /// Whether the rank agrees at every probe point.
    pub constant_rank: Tristate,
}

impl Distribution {
    pub fn rank(&self) -> usize {
        self.generic_rank
    }

    /// Membership of `v` in the span of the basis, over functions.
    pub fn contains(&self, v: &VectorField) -> Tristate {
        if v.is_zero() == ZeroTest::Zero {
            return Tristate::True;
        }
        if self.basis.is_empty() {
            return match v.is_zero() {
                ZeroTest::NonZero => Tristate::False,
                _ => Tristate::Unknown,
            };
        }
        let coords: BTreeSet<usize> = self
            .basis
            .iter()
            .chain(std::iter::once(v))
            .flat_map(|b| b.components().map(|(i, _)| *i).collect::<Vec<_>>())
            .collect();
        let rows: Vec<Vec<Expr>> = coords.iter().map(|&i| self.basis.iter().map(|b| b.component(i)).collect()).collect();
        let rhs: Vec<Expr> = coords.iter().map(|&i| v.component(i)).collect();
        match SymMatrix::from_rows(rows).solve(&rhs) {
            None => Tristate::False,
            Some(s) if s.indeterminate => Tristate::Unknown,
            Some(_) => Tristate::True,
        }
    }

    /// Whether every pairwise bracket of basis fields stays in the distribution.
    pub fn is_involutive(&self, chart: &Chart) -> Tristate {
        let mut out = Tristate::True;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                match self.contains(&a.lie_bracket(b, chart)) {
                    Tristate::False => return Tristate::False,
                    Tristate::Unknown => out = Tristate::Unknown,
                    Tristate::True => {}
                }
            }
        }
        out
    }
}

fn rank_seed(tag: &str, k: u64) -> u64 {
    let mut h = probe_seed() ^ 0x9e37_79b9_7f4a_7c15;
    for b in tag.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
    }
    h.wrapping_add(k.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Kernel of `rows` acting on the coordinate fields `cols`.
fn kernel(rows: Vec<Vec<Expr>>, cols: &[usize], tag: &str) -> Distribution {
    let n = cols.len();
    let coordinate_basis = || cols.iter().map(|&c| VectorField::coordinate(c)).collect::<Vec<_>>();
    if rows.is_empty() {
        return Distribution { basis: coordinate_basis(), generic_rank: n, constant_rank: Tristate::True };
    }
    let m = SymMatrix::from_rows(rows);
    let ech = m.echelon();
    let basis: Vec<VectorField> = ech
        .nullspace(n)
        .into_iter()
        .map(|v| VectorField::from_components(cols.iter().copied().zip(v)))
        .collect();
    let nullities: Vec<usize> = (0..RANK_PROBES)
        .filter_map(|k| m.numeric_rank(&ProbePoint::new(rank_seed(tag, k))))
        .map(|r| n - r)
        .collect();
    let symbolic = basis.len();
    if ech.indeterminate {
        let generic = nullities.iter().copied().min().unwrap_or(symbolic);
        return Distribution { basis, generic_rank: generic, constant_rank: Tristate::Unknown };
    }
    let constant = if nullities.iter().all(|&r| r == symbolic) { Tristate::True } else { Tristate::False };
    Distribution { basis, generic_rank: symbolic, constant_rank: constant }
}

/// One row per index set accepted by `keep`, one column per form.
fn stack(forms: &[Form], keep: impl Fn(&[usize]) -> bool) -> Vec<Vec<Expr>> {
    let keys: BTreeSet<Vec<usize>> = forms
        .iter()
        .flat_map(|f| f.terms().map(|(k, _)| k.clone()).collect::<Vec<_>>())
        .filter(|k| keep(k))
        .collect();
    keys.iter().map(|k| forms.iter().map(|f| f.coefficient(k)).collect()).collect()
}

fn contractions(f: &Form, cols: &[usize]) -> Vec<Form> {
    cols.iter().map(|&a| f.contract_coordinate(a)).collect()
}

/// `ker ω`: all non-base coordinate fields.
pub fn vertical_distribution(chart: &Chart) -> Distribution {
    kernel(Vec::new(), &chart.vertical(), "vertical")
}

fn reeb_from_differential(dtheta: &Form, chart: &Chart) -> Distribution {
    let vertical = chart.vertical();
    let is_vertical: BTreeSet<usize> = vertical.iter().copied().collect();
    let rows = stack(&contractions(dtheta, &vertical), |k| k.iter().any(|i| is_vertical.contains(i)));
    kernel(rows, &vertical, "reeb")
}

fn characteristic_from(theta: &Form, dtheta: &Form, chart: &Chart) -> Distribution {
    let vertical = chart.vertical();
    let mut rows = stack(&contractions(theta, &vertical), |_| true);
    rows.extend(stack(&contractions(dtheta, &vertical), |_| true));
    kernel(rows, &vertical, "characteristic")
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("form has degree {found}, the base has dimension {expected}")]
    Degree { expected: usize, found: usize },
    #[error("not a (pre)multicontact structure: {0}")]
    NotMulticontact(Reason),
    #[error("dissipation form does not exist")]
    NoDissipationForm,
}

/// Why a pair fails to be (pre)multicontact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Error)]
pub enum Reason {
    #[error("form has degree {found}, the base has dimension {expected}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("no Reeb distribution")]
    NoReebDistribution,
    #[error("Reeb distribution has rank {reeb}, expected {expected}")]
    RankMismatch { reeb: usize, expected: usize },
    #[error("rank indeterminate")]
    RankIndeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Multicontact,
    Premulticontact(usize),
    NotMulticontact(Reason),
}

impl Verdict {
    pub fn is_structure(&self) -> bool {
        !matches!(self, Verdict::NotMulticontact(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Ranks {
    pub kernel: usize,
    pub reeb: usize,
    pub characteristic: usize,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub ranks: Ranks,
    /// The four defining conditions, in order.
    pub conditions: [bool; 4],
    /// Solutions of `i(R_mu)Θ = d^{m-1}x_mu`, or the first `mu` without one.
    pub reeb: Result<Vec<VectorField>, usize>,
    pub constant_rank: Tristate,
    pub warnings: Vec<String>,
}

/// A pair `(Θ, d^m x)` with its derived objects.
#[derive(Clone, Debug)]
pub struct Structure {
    chart: Chart,
    theta: Form,
    dtheta: Form,
    reeb_distribution: Distribution,
    characteristic: Distribution,
    classification: Classification,
    sigma: Result<Form, StructureError>,
}

fn worst(a: Tristate, b: Tristate) -> Tristate {
    match (a, b) {
        (Tristate::Unknown, _) | (_, Tristate::Unknown) => Tristate::Unknown,
        (Tristate::False, _) | (_, Tristate::False) => Tristate::False,
        _ => Tristate::True,
    }
}

/// Solves `i(R)Θ = d^{m-1}x_mu` for `R` in the span of `basis`, free coefficients zero.
fn solve_reeb(theta: &Form, basis: &[VectorField], chart: &Chart) -> Result<Vec<VectorField>, usize> {
    let images: Vec<Form> = basis.iter().map(|b| b.contract(theta)).collect();
    let targets: Vec<Form> = (0..chart.m()).map(|mu| Form::base_volume_minus(chart, mu)).collect();
    let keys: BTreeSet<Vec<usize>> = images
        .iter()
        .chain(targets.iter())
        .flat_map(|f| f.terms().map(|(k, _)| k.clone()).collect::<Vec<_>>())
        .collect();
    let matrix = SymMatrix::from_rows(keys.iter().map(|k| images.iter().map(|f| f.coefficient(k)).collect()).collect());
    let mut out = Vec::with_capacity(chart.m());
    for (mu, target) in targets.iter().enumerate() {
        if basis.is_empty() {
            return Err(mu);
        }
        let rhs: Vec<Expr> = keys.iter().map(|k| target.coefficient(k)).collect();
        let sol = matrix.solve(&rhs).ok_or(mu)?;
        let r = basis
            .iter()
            .zip(&sol.particular)
            .fold(VectorField::zero(), |acc, (b, c)| acc.add(&b.scale(c)));
        if r.contract(theta).sub(target).is_zero() == ZeroTest::NonZero {
            return Err(mu);
        }
        out.push(r);
    }
    Ok(out)
}

impl Structure {
    pub fn analyze(theta: &Form, chart: &Chart) -> Structure {
        let m = chart.m();
        let n = chart.vertical().len();
        let dtheta = theta.d(chart);
        let empty = Distribution { basis: Vec::new(), generic_rank: 0, constant_rank: Tristate::Unknown };
        if theta.degree() != m {
            let reason = Reason::DegreeMismatch { expected: m, found: theta.degree() };
            let classification = Classification {
                verdict: Verdict::NotMulticontact(reason.clone()),
                ranks: Ranks { kernel: n, reeb: 0, characteristic: 0 },
                conditions: [true, false, false, false],
                reeb: Err(0),
                constant_rank: Tristate::Unknown,
                warnings: Vec::new(),
            };
            return Structure {
                chart: chart.clone(),
                theta: theta.clone(),
                dtheta,
                reeb_distribution: empty.clone(),
                characteristic: empty,
                classification,
                sigma: Err(StructureError::NotMulticontact(reason)),
            };
        }
        let reeb_distribution = reeb_from_differential(&dtheta, chart);
        let characteristic = characteristic_from(theta, &dtheta, chart);
        let ranks = Ranks { kernel: n, reeb: reeb_distribution.generic_rank, characteristic: characteristic.generic_rank };
        let k = ranks.characteristic;
        let reeb = solve_reeb(theta, &reeb_distribution.basis, chart);
        let conditions = [true, ranks.reeb == m + k, k + m <= n, reeb.is_ok()];
        let constant_rank = worst(reeb_distribution.constant_rank, characteristic.constant_rank);
        let mut warnings = Vec::new();
        if constant_rank == Tristate::False {
            warnings.push("rank differs between probe points; constant rank is assumed".to_string());
        }
        let verdict = if constant_rank == Tristate::Unknown {
            Verdict::NotMulticontact(Reason::RankIndeterminate)
        } else if !conditions[3] {
            Verdict::NotMulticontact(Reason::NoReebDistribution)
        } else if !conditions[1] || !conditions[2] {
            Verdict::NotMulticontact(Reason::RankMismatch { reeb: ranks.reeb, expected: m + k })
        } else if k == 0 {
            Verdict::Multicontact
        } else {
            Verdict::Premulticontact(k)
        };
        let sigma = match (&verdict, &reeb) {
            (Verdict::NotMulticontact(r), _) => Err(StructureError::NotMulticontact(r.clone())),
            (_, Ok(fields)) => dissipation_from(&dtheta, fields, chart, &mut warnings),
            (_, Err(_)) => Err(StructureError::NotMulticontact(Reason::NoReebDistribution)),
        };
        let classification = Classification { verdict, ranks, conditions, reeb, constant_rank, warnings };
        Structure { chart: chart.clone(), theta: theta.clone(), dtheta, reeb_distribution, characteristic, classification, sigma }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn theta(&self) -> &Form {
        &self.theta
    }

    pub fn dtheta(&self) -> &Form {
        &self.dtheta
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn reeb_distribution(&self) -> &Distribution {
        &self.reeb_distribution
    }

    pub fn characteristic(&self) -> &Distribution {
        &self.characteristic
    }

    pub fn reeb_basis(&self) -> Result<&[VectorField], StructureError> {
        match (&self.classification.verdict, &self.classification.reeb) {
            (Verdict::NotMulticontact(r), _) => Err(StructureError::NotMulticontact(r.clone())),
            (_, Ok(fields)) => Ok(fields),
            (_, Err(_)) => Err(StructureError::NotMulticontact(Reason::NoReebDistribution)),
        }
    }

    pub fn sigma(&self) -> Result<&Form, StructureError> {
        self.sigma.as_ref().map_err(Clone::clone)
    }

    pub fn dbar(&self, a: &Form) -> Result<Form, StructureError> {
        Ok(dbar(a, self.sigma()?, &self.chart))
    }

    pub fn mvf_residuals(&self, x: &MultiVector) -> Result<MvfResiduals, StructureError> {
        Ok(mvf_residuals_with(&self.theta, self.sigma()?, x, &self.chart))
    }

    pub fn section_residuals(&self, psi: &Section) -> Result<SectionResiduals, StructureError> {
        Ok(section_residuals_with(&self.theta, self.sigma()?, psi, &self.chart))
    }

    pub fn connection_residuals(&self, table: &ConnectionTable) -> Result<ConnectionResiduals, StructureError> {
        Ok(connection_residuals_with(&self.theta, self.sigma()?, table, &self.chart))
    }

    /// `i(X) d̄ξ`; vanishes along solutions when `ξ` is dissipated.
    pub fn dissipated_quantity_residual(&self, x: &MultiVector, xi: &Form) -> Result<Form, StructureError> {
        Ok(x.contract(&self.dbar(xi)?))
    }

    pub fn report(&self) -> Report {
        let c = &self.classification;
        let (verdict, k, reason) = match &c.verdict {
            Verdict::Multicontact => ("multicontact", Some(0), None),
            Verdict::Premulticontact(k) => ("premulticontact", Some(*k), None),
            Verdict::NotMulticontact(r) => ("not multicontact", None, Some(r.to_string())),
        };
        Report {
            verdict: verdict.to_string(),
            k,
            reason,
            ranks: c.ranks,
            conditions: c.conditions,
            constant_rank: c.constant_rank,
            variational: is_variational(&self.theta, &self.chart),
            reeb: c.reeb.as_ref().map(|r| r.iter().map(|v| v.display(&self.chart)).collect()).unwrap_or_default(),
            sigma: self.sigma.as_ref().ok().map(|s| s.display(&self.chart)),
            warnings: c.warnings.clone(),
        }
    }
}

fn dissipation_from(dtheta: &Form, reeb: &[VectorField], chart: &Chart, warnings: &mut Vec<String>) -> Result<Form, StructureError> {
    let vol = Form::volume(chart);
    let vol_idx = chart.base_indices().to_vec();
    let mut sigma = Form::zero(1);
    for (mu, r) in reeb.iter().enumerate() {
        let image = r.contract(dtheta);
        let gamma = image.coefficient(&vol_idx);
        match image.sub(&vol.scale(&gamma)).is_zero() {
            ZeroTest::NonZero => return Err(StructureError::NoDissipationForm),
            ZeroTest::Unknown => warnings.push(format!("dissipation component {mu} not verified")),
            ZeroTest::Zero => {}
        }
        sigma = sigma.add(&Form::dz(chart.base(mu)).scale(&gamma));
    }
    Ok(sigma)
}

/// Residuals of the multivector field equations.
#[derive(Clone, Debug)]
pub struct MvfResiduals {
    /// `i(X)Θ`.
    pub scalar: Form,
    /// `i(X)d̄Θ`.
    pub one_form: Form,
    /// `i(X)ω`; transversal fields have this nonzero.
    pub transversality: Expr,
}

impl MvfResiduals {
    pub fn is_zero(&self) -> ZeroTest {
        match (self.scalar.is_zero(), self.one_form.is_zero()) {
            (ZeroTest::Zero, ZeroTest::Zero) => ZeroTest::Zero,
            (ZeroTest::NonZero, _) | (_, ZeroTest::NonZero) => ZeroTest::NonZero,
            _ => ZeroTest::Unknown,
        }
    }
}

/// One scalar field equation obtained from a section.
#[derive(Clone, Debug)]
pub struct SectionEquation {
    pub label: String,
    pub residual: Expr,
    /// No derivative of the section appears: a constraint, not a PDE.
    pub algebraic: bool,
}

#[derive(Clone, Debug)]
pub struct SectionResiduals {
    /// `i(ψ^(m))(Θ∘ψ)`.
    pub first: Form,
    /// `i(ψ^(m))(d̄Θ∘ψ)`.
    pub second: Form,
    pub equations: Vec<SectionEquation>,
    /// Agreement with the pullback formulation `ψ*Θ`, `ψ* i(∂_a)d̄Θ`.
    pub formulations_agree: ZeroTest,
}

/// Connection coefficients keyed by (base position, non-base chart index):
/// the horizontal lift of `∂_mu` is `∂_mu + Σ Γ ∂_a`.
pub type ConnectionTable = BTreeMap<(usize, usize), Expr>;

pub fn horizontal_lifts(table: &ConnectionTable, chart: &Chart) -> Vec<VectorField> {
    (0..chart.m())
        .map(|mu| {
            let mut v = VectorField::coordinate(chart.base(mu));
            for ((nu, a), c) in table {
                if *nu == mu {
                    v.add_component(*a, c.clone());
                }
            }
            v
        })
        .collect()
}

/// `i(∇)β = Σ dx^mu ∧ i(H_mu)β` for the connection with horizontal lifts `H_mu`.
pub fn connection_contract(lifts: &[VectorField], beta: &Form, chart: &Chart) -> Form {
    lifts
        .iter()
        .enumerate()
        .fold(Form::zero(beta.degree()), |acc, (mu, h)| acc.add(&Form::dz(chart.base(mu)).wedge(&h.contract(beta))))
}

#[derive(Clone, Debug)]
pub struct ConnectionResiduals {
    /// `i(∇)Θ − (m−1)Θ`.
    pub first: Form,
    /// `i(∇)d̄Θ − (m−1)d̄Θ`.
    pub second: Form,
    pub agrees_with_multivector: Tristate,
}

/// Serializable classification summary.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub verdict: String,
    pub k: Option<usize>,
    pub reason: Option<String>,
    pub ranks: Ranks,
    pub conditions: [bool; 4],
    pub constant_rank: Tristate,
    pub variational: bool,
    pub reeb: Vec<String>,
    pub sigma: Option<String>,
    pub warnings: Vec<String>,
}

/// The adapted shape `H d^m x + Σ f_{a,mu} dz^a∧d^{m-1}x_mu + ds^mu∧d^{m-1}x_mu`,
/// with `f` keyed by (chart index, base position).
pub fn adapted_form(chart: &Chart, h: &Expr, f: &BTreeMap<(usize, usize), Expr>) -> Form {
    let mut theta = Form::volume(chart).scale(h);
    for mu in 0..chart.m() {
        let minus = Form::base_volume_minus(chart, mu);
        if let Some(s) = chart.contact(mu) {
            theta = theta.add(&Form::dz(s).wedge(&minus));
        }
    }
    for ((a, mu), c) in f {
        theta = theta.add(&Form::dz(*a).wedge(&Form::base_volume_minus(chart, *mu)).scale(c));
    }
    theta
}

/// `(i(X)Θ, i(X)d̄Θ)` for a given `σ`, together with `i(X)ω`.
pub fn mvf_residuals_with(theta: &Form, sigma: &Form, x: &MultiVector, chart: &Chart) -> MvfResiduals {
    let dbar_theta = dbar(theta, sigma, chart);
    let transversality = x.contract(&Form::volume(chart)).as_scalar();
    MvfResiduals { scalar: x.contract(theta), one_form: x.contract(&dbar_theta), transversality }
}

/// Section equations for a given `σ`, checked against the pullback formulation.
pub fn section_residuals_with(theta: &Form, sigma: &Form, psi: &Section, chart: &Chart) -> SectionResiduals {
    let dbar_theta = dbar(theta, sigma, chart);
    let map = psi.substitution(chart);
    let prolongation = psi.prolongation(chart);
    let first = prolongation.contract(&theta.map(|c| c.subs(&map)));
    let second = prolongation.contract(&dbar_theta.map(|c| c.subs(&map)));
    let vol: Vec<usize> = chart.base_indices().to_vec();
    let section_names: Vec<&str> = chart.vertical().into_iter().map(|i| chart.name(i)).collect();
    let algebraic = |e: &Expr| section_names.iter().all(|n| e.call_order(n).unwrap_or(0) == 0);

    let scalar = first.as_scalar();
    let mut agree = ZeroTest::Zero;
    let mut note = |t: ZeroTest| match t {
        ZeroTest::NonZero => agree = ZeroTest::NonZero,
        ZeroTest::Unknown if agree == ZeroTest::Zero => agree = ZeroTest::Unknown,
        _ => {}
    };
    note(is_zero(&(&scalar - &pullback(psi, theta, chart).coefficient(&vol))));
    let mut equations = vec![SectionEquation { label: "scalar".into(), algebraic: algebraic(&scalar), residual: scalar }];
    // Moving i(∂_a) past the m prolongation factors costs (-1)^m.
    let sign = if chart.m() % 2 == 1 { Expr::int(-1) } else { Expr::one() };
    for a in chart.vertical() {
        let residual = second.coefficient(&[a]);
        let pulled = pullback(psi, &dbar_theta.contract_coordinate(a), chart).coefficient(&vol);
        note(is_zero(&(&residual - &(&sign * &pulled))));
        if residual.is_zero_canonical() {
            continue;
        }
        equations.push(SectionEquation { label: chart.name(a).to_string(), algebraic: algebraic(&residual), residual });
    }
    SectionResiduals { first, second, equations, formulations_agree: agree }
}

/// Connection equations for a given `σ`, checked against the associated multivector.
pub fn connection_residuals_with(theta: &Form, sigma: &Form, table: &ConnectionTable, chart: &Chart) -> ConnectionResiduals {
    let m1 = Expr::int(chart.m() as i64 - 1);
    let dbar_theta = dbar(theta, sigma, chart);
    let lifts = horizontal_lifts(table, chart);
    let first = connection_contract(&lifts, theta, chart).sub(&theta.scale(&m1));
    let second = connection_contract(&lifts, &dbar_theta, chart).sub(&dbar_theta.scale(&m1));
    let x = MultiVector::decomposable(lifts);
    let mvf = mvf_residuals_with(theta, sigma, &x, chart);
    let a = x.contract(&first).sub(&mvf.scalar).is_zero();
    let b = x.contract(&second).sub(&mvf.one_form).is_zero();
    let agree = match (a, b) {
        (ZeroTest::Zero, ZeroTest::Zero) => Tristate::True,
        (ZeroTest::NonZero, _) | (_, ZeroTest::NonZero) => Tristate::False,
        _ => Tristate::Unknown,
    };
    ConnectionResiduals { first, second, agrees_with_multivector: agree }
}

/// `σ = (∂H/∂s^mu) dx^mu`, the dissipation form of the adapted shape.
pub fn adapted_sigma(chart: &Chart, h: &Expr) -> Form {
    (0..chart.m()).fold(Form::zero(1), |acc, mu| match chart.contact(mu) {
        Some(s) => acc.add(&Form::dz(chart.base(mu)).scale(&h.diff(chart.name(s)))),
        None => acc,
    })
}

fn check_degree(theta: &Form, chart: &Chart) -> Result<(), StructureError> {
    if theta.degree() == chart.m() {
        Ok(())
    } else {
        Err(StructureError::Degree { expected: chart.m(), found: theta.degree() })
    }
}

pub fn reeb_distribution(theta: &Form, chart: &Chart) -> Result<Distribution, StructureError> {
    check_degree(theta, chart)?;
    Ok(reeb_from_differential(&theta.d(chart), chart))
}

/// `C = ker ω ∩ ker Θ ∩ ker dΘ`.
pub fn characteristic_distribution(theta: &Form, chart: &Chart) -> Result<Distribution, StructureError> {
    check_degree(theta, chart)?;
    Ok(characteristic_from(theta, &theta.d(chart), chart))
}

pub fn classify(theta: &Form, chart: &Chart) -> Classification {
    Structure::analyze(theta, chart).classification
}

pub fn dissipation_form(theta: &Form, chart: &Chart) -> Result<Form, StructureError> {
    Structure::analyze(theta, chart).sigma
}

pub fn reeb_basis(theta: &Form, chart: &Chart) -> Result<Vec<VectorField>, StructureError> {
    Structure::analyze(theta, chart).reeb_basis().map(<[_]>::to_vec)
}

/// Zero test of `i(X)i(Y)Θ` over all vertical coordinate pairs.
pub fn variational_test(theta: &Form, chart: &Chart) -> ZeroTest {
    let base: BTreeSet<usize> = chart.base_indices().iter().copied().collect();
    let mut out = ZeroTest::Zero;
    for (idx, c) in theta.terms() {
        if idx.iter().filter(|i| !base.contains(i)).count() < 2 {
            continue;
        }
        match is_zero(c) {
            ZeroTest::NonZero => return ZeroTest::NonZero,
            ZeroTest::Unknown => out = ZeroTest::Unknown,
            ZeroTest::Zero => {}
        }
    }
    out
}

/// True only when the bivertical part provably vanishes.
pub fn is_variational(theta: &Form, chart: &Chart) -> bool {
    variational_test(theta, chart) == ZeroTest::Zero
}

pub fn field_residuals_mvf(theta: &Form, x: &MultiVector, chart: &Chart) -> Result<MvfResiduals, StructureError> {
    Structure::analyze(theta, chart).mvf_residuals(x)
}

pub fn field_residuals_section(theta: &Form, psi: &Section, chart: &Chart) -> Result<SectionResiduals, StructureError> {
    Structure::analyze(theta, chart).section_residuals(psi)
}

pub fn connection_residuals(theta: &Form, table: &ConnectionTable, chart: &Chart) -> Result<ConnectionResiduals, StructureError> {
    Structure::analyze(theta, chart).connection_residuals(table)
}

pub fn dissipated_quantity_residual(theta: &Form, x: &MultiVector, xi: &Form, chart: &Chart) -> Result<Form, StructureError> {
    Structure::analyze(theta, chart).dissipated_quantity_residual(x, xi)
}
