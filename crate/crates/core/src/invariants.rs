//! Pass/fail checks of the structural identities of one system: Reeb
//! brackets, the characteristic rank, the dissipation form and agreement of
//! the section, multivector and connection forms of the field equations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::equations::{jet_symbol, normalized, section_map, EquationSet};
use crate::geometry::{dbar, Chart, Form, MultiVector, Section, VectorField};
use crate::hamiltonian::HamiltonianSystem;
use crate::lagrangian::LagrangianSystem;
use crate::structure::{connection_residuals_with, mvf_residuals_with, section_residuals_with, ConnectionTable, Structure, Verdict};
use crate::symexpr::{is_zero, Expr, SymMatrix, Tristate, ZeroTest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Neither proved nor refuted.
    Unknown,
    /// Not applicable to this system.
    Skipped,
}

impl From<ZeroTest> for Outcome {
    fn from(z: ZeroTest) -> Self {
        match z {
            ZeroTest::Zero => Outcome::Pass,
            ZeroTest::NonZero => Outcome::Fail,
            ZeroTest::Unknown => Outcome::Unknown,
        }
    }
}

impl From<Tristate> for Outcome {
    fn from(t: Tristate) -> Self {
        match t {
            Tristate::True => Outcome::Pass,
            Tristate::False => Outcome::Fail,
            Tristate::Unknown => Outcome::Unknown,
        }
    }
}

impl From<bool> for Outcome {
    fn from(b: bool) -> Self {
        if b {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckMatrix {
    pub checks: Vec<Check>,
}

impl CheckMatrix {
    pub fn push(&mut self, name: &str, outcome: impl Into<Outcome>, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), outcome: outcome.into(), detail: detail.into() });
    }

    pub fn extend(&mut self, other: CheckMatrix) {
        self.checks.extend(other.checks);
    }

    /// Checks that failed or stayed undecided.
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| matches!(c.outcome, Outcome::Fail | Outcome::Unknown)).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        self.checks
            .iter()
            .map(|c| {
                let tag = match c.outcome {
                    Outcome::Pass => "PASS",
                    Outcome::Fail => "FAIL",
                    Outcome::Unknown => "UNKNOWN",
                    Outcome::Skipped => "SKIP",
                };
                format!("{tag:<7} {:<width$}  {}\n", c.name, c.detail)
            })
            .collect()
    }
}

fn worst(a: ZeroTest, b: ZeroTest) -> ZeroTest {
    match (a, b) {
        (ZeroTest::NonZero, _) | (_, ZeroTest::NonZero) => ZeroTest::NonZero,
        (ZeroTest::Unknown, _) | (_, ZeroTest::Unknown) => ZeroTest::Unknown,
        _ => ZeroTest::Zero,
    }
}

/// Brackets of Reeb fields: zero for multicontact, inside `C` for premulticontact.
fn reeb_brackets(s: &Structure) -> (Outcome, String) {
    let verdict = &s.classification().verdict;
    let Ok(reeb) = s.reeb_basis() else {
        return (Outcome::Skipped, format!("no Reeb fields ({verdict:?})"));
    };
    let chart = s.chart();
    let mut outcome = Outcome::Pass;
    let mut pairs = 0;
    for (i, a) in reeb.iter().enumerate() {
        for b in &reeb[i + 1..] {
            pairs += 1;
            let bracket = a.lie_bracket(b, chart);
            let here: Outcome = match verdict {
                Verdict::Multicontact => bracket.is_zero().into(),
                _ => s.characteristic().contains(&bracket).into(),
            };
            if here != Outcome::Pass && outcome != Outcome::Fail {
                outcome = here;
            }
        }
    }
    let target = if matches!(verdict, Verdict::Multicontact) { "vanish" } else { "lie in C" };
    (outcome, format!("brackets {target} ({pairs} pairs)"))
}

fn coefficient_rows(forms: &[Form]) -> Vec<Vec<Expr>> {
    let keys: BTreeSet<Vec<usize>> = forms.iter().flat_map(|f| f.terms().map(|(k, _)| k.clone()).collect::<Vec<_>>()).collect();
    keys.iter().map(|k| forms.iter().map(|f| f.coefficient(k)).collect()).collect()
}

fn rank(rows: Vec<Vec<Expr>>) -> Option<usize> {
    if rows.is_empty() {
        return Some(0);
    }
    let ech = SymMatrix::from_rows(rows).echelon();
    (!ech.indeterminate).then(|| ech.rank())
}

/// `rk C` against `dim(D^R ∩ ker Θ)` computed from the Reeb basis.
fn characteristic_rank(s: &Structure) -> (Outcome, String) {
    let basis = &s.reeb_distribution().basis;
    let images: Vec<Form> = basis.iter().map(|b| b.contract(s.theta())).collect();
    let Some(r) = rank(coefficient_rows(&images)) else {
        return (Outcome::Unknown, "rank of Θ on D^R undecided".into());
    };
    let intersection = basis.len() - r;
    let c = s.characteristic().rank();
    ((intersection == c).into(), format!("rk C = {c}, dim(D^R ∩ ker Θ) = {intersection}"))
}

/// `σ∧i(R_mu)Θ = i(R_mu)dΘ` holds, and no nonzero 1-form annihilates every `i(R_mu)Θ`.
fn dissipation_unique(s: &Structure) -> (Outcome, String) {
    let (Ok(sigma), Ok(reeb)) = (s.sigma(), s.reeb_basis()) else {
        return (Outcome::Skipped, "no dissipation form".into());
    };
    let chart = s.chart();
    let images: Vec<Form> = reeb.iter().map(|r| r.contract(s.theta())).collect();
    let mut defining = ZeroTest::Zero;
    for (r, image) in reeb.iter().zip(&images) {
        defining = worst(defining, sigma.wedge(image).sub(&r.contract(s.dtheta())).is_zero());
    }
    // Column A stacks dz^A ∧ i(R_mu)Θ over all mu.
    let dim = chart.coords().len();
    let mut rows = Vec::new();
    for image in &images {
        let columns: Vec<Form> = (0..dim).map(|a| Form::dz(a).wedge(image)).collect();
        rows.extend(coefficient_rows(&columns));
    }
    let injective = match rank(rows) {
        Some(r) if r == dim => ZeroTest::Zero,
        Some(_) => ZeroTest::NonZero,
        None => ZeroTest::Unknown,
    };
    let outcome = Outcome::from(worst(defining, injective));
    (outcome, format!("defining identity {defining:?}, kernel trivial {:?}", injective == ZeroTest::Zero))
}

/// Structural checks that need only `(Θ, ω)`.
pub fn structure_checks(s: &Structure) -> CheckMatrix {
    let mut out = CheckMatrix::default();
    let (o, d) = reeb_brackets(s);
    out.push("reeb_involutive", o, d);
    let (o, d) = characteristic_rank(s);
    out.push("characteristic_rank", o, d);
    let (o, d) = dissipation_unique(s);
    out.push("dissipation_unique", o, d);
    let variational = crate::structure::variational_test(s.theta(), s.chart());
    out.push("variational", variational, "i(X)i(Y)Θ = 0 for vertical X, Y");
    if let Ok(sigma) = s.sigma() {
        let chart = s.chart();
        let twice = dbar(&dbar(s.theta(), sigma, chart), sigma, chart);
        let curvature = sigma.d(chart).wedge(s.theta());
        out.push("dbar_square", twice.sub(&curvature).is_zero(), "d̄d̄Θ = dσ∧Θ");
    }
    out
}

fn signed_match(a: &Expr, b: &Expr) -> ZeroTest {
    match is_zero(&(a - b)) {
        ZeroTest::Zero => ZeroTest::Zero,
        first => match (first, is_zero(&(a + b))) {
            (_, ZeroTest::Zero) => ZeroTest::Zero,
            (ZeroTest::Unknown, _) | (_, ZeroTest::Unknown) => ZeroTest::Unknown,
            _ => ZeroTest::NonZero,
        },
    }
}

/// Every nonzero `found` equals `±` an expected residual and every expected
/// residual is matched.
pub fn match_up_to_sign(found: &[Expr], expected: &[Expr]) -> ZeroTest {
    match_modulo(found, expected, &|e| e.clone())
}

/// As [`match_up_to_sign`], also accepting pairs that agree after `reduce`
/// eliminates the solved jets (a nonzero found residual must stay nonzero).
pub fn match_modulo(found: &[Expr], expected: &[Expr], reduce: &dyn Fn(&Expr) -> Expr) -> ZeroTest {
    let found: Vec<&Expr> = found.iter().filter(|e| !e.is_zero_canonical()).collect();
    let reduced_expected: Vec<Expr> = expected.iter().map(reduce).collect();
    let mut matched = vec![false; expected.len()];
    let mut out = ZeroTest::Zero;
    for f in found {
        let reduced = reduce(f);
        let mut best = ZeroTest::NonZero;
        for (k, e) in expected.iter().enumerate() {
            let mut t = signed_match(f, e);
            if t != ZeroTest::Zero && !reduced.is_zero_canonical() {
                t = match signed_match(&reduced, &reduced_expected[k]) {
                    ZeroTest::Zero => ZeroTest::Zero,
                    r if t == ZeroTest::Unknown || r == ZeroTest::Unknown => ZeroTest::Unknown,
                    r => r,
                };
            }
            match t {
                ZeroTest::Zero => {
                    matched[k] = true;
                    best = ZeroTest::Zero;
                }
                ZeroTest::Unknown if best != ZeroTest::Zero => best = ZeroTest::Unknown,
                ZeroTest::Unknown => {}
                ZeroTest::NonZero => {}
            }
        }
        out = worst(out, best);
    }
    if expected.iter().zip(&matched).any(|(e, m)| !m && !e.is_zero_canonical()) {
        out = ZeroTest::NonZero;
    }
    out
}

/// `z_mu = value` from equations labelled by a jet they are affine in, such
/// as the Hamiltonian field equations `y_mu − ∂H/∂p^mu`.
fn jet_rules(eqs: &EquationSet, chart: &Chart) -> BTreeMap<String, Expr> {
    eqs.equations
        .iter()
        .filter(|e| chart.index(&e.label).is_none() && e.residual.contains_symbol(&e.label))
        .filter_map(|e| normalized(&e.residual, &e.label).map(|n| (e.label.clone(), Expr::symbol(&e.label) - n)))
        .collect()
}

/// `X_mu = ∂_mu + Σ_a z^a_mu ∂_a` with jet symbols as coefficients: the
/// first prolongation of a generic section.
pub fn holonomic_multivector(chart: &Chart) -> MultiVector {
    MultiVector::decomposable(
        (0..chart.m())
            .map(|mu| {
                let mut v = VectorField::coordinate(chart.base(mu));
                for a in chart.vertical() {
                    v.add_component(a, jet_symbol(chart, a, mu));
                }
                v
            })
            .collect(),
    )
}

/// The field equations read off sections, multivector fields and
/// connections, each compared with the derived equation set.
pub fn formulation_checks(theta: &Form, sigma: &Form, chart: &Chart, eqs: &EquationSet) -> CheckMatrix {
    let mut out = CheckMatrix::default();
    let expected: Vec<Expr> = eqs.equations.iter().map(|e| e.residual.clone()).collect();

    let x = holonomic_multivector(chart);
    let mvf = mvf_residuals_with(theta, sigma, &x, chart);
    let mut found = vec![mvf.scalar.as_scalar()];
    found.extend(chart.vertical().into_iter().map(|a| mvf.one_form.coefficient(&[a])));
    let rules = jet_rules(eqs, chart);
    let reduce = |e: &Expr| e.subs(&rules);
    out.push("multivector_equations", match_modulo(&found, &expected, &reduce), format!("{} derived equations", expected.len()));

    let mut table = ConnectionTable::new();
    for (mu, h) in x.witness().expect("decomposable").iter().enumerate() {
        for (a, c) in h.components() {
            if !chart.role(*a).is_base() {
                table.insert((mu, *a), c.clone());
            }
        }
    }
    let conn = connection_residuals_with(theta, sigma, &table, chart);
    out.push("connection_equations", conn.agrees_with_multivector, "i(∇) route equals the multivector route");

    let map = section_map(chart);
    let values = chart.vertical().into_iter().map(|a| (chart.name(a).to_string(), map[chart.name(a)].clone())).collect();
    match Section::new(chart, &values) {
        Ok(psi) => {
            let sec = section_residuals_with(theta, sigma, &psi, chart);
            let found: Vec<Expr> = sec.equations.iter().map(|q| q.residual.clone()).collect();
            let on_sections: Vec<Expr> = eqs.on_sections(chart).equations.into_iter().map(|e| e.residual).collect();
            let agree = worst(sec.formulations_agree, match_modulo(&found, &on_sections, &|e| reduce_on_sections(e, &rules, chart)));
            out.push("section_equations", agree, "holonomic sections, both pullback routes");
        }
        Err(e) => out.push("section_equations", Outcome::Fail, e.to_string()),
    }
    out
}

/// Applies jet rules to section expressions, where `z_mu` is `∂_mu z(x)`.
fn reduce_on_sections(e: &Expr, rules: &BTreeMap<String, Expr>, chart: &Chart) -> Expr {
    if rules.is_empty() {
        return e.clone();
    }
    let map = section_map(chart);
    let mut by_call: BTreeMap<(String, Vec<u32>), Expr> = BTreeMap::new();
    for a in chart.vertical() {
        for mu in 0..chart.m() {
            if let Some(value) = rules.get(&chart.jet_name(a, mu)) {
                let mut derivs = vec![0; chart.m()];
                derivs[mu] = 1;
                by_call.insert((chart.name(a).to_string(), derivs), value.subs(&map));
            }
        }
    }
    e.try_replace_calls(&|name, derivs, _| by_call.get(&(name.to_string(), derivs.to_vec())).map(|v| Ok(v.clone())))
        .unwrap_or_else(|_| e.clone())
}

/// Structural and formulation checks plus the closed-form `σ = −(∂L/∂s^mu) dx^mu`.
pub fn lagrangian_checks(sys: &LagrangianSystem) -> CheckMatrix {
    let mut out = structure_checks(sys.structure());
    match sys.structure().sigma() {
        Ok(sigma) => out.push("sigma_formula", sigma.sub(sys.sigma()).is_zero(), "σ = −(∂L/∂s^mu) dx^mu"),
        Err(e) => out.push("sigma_formula", Outcome::Skipped, e.to_string()),
    }
    out.extend(formulation_checks(sys.theta(), sys.sigma(), sys.chart(), &sys.equations()));
    out
}

/// Structural and formulation checks plus the closed-form `σ = (∂H/∂s^mu) dx^mu`.
pub fn hamiltonian_checks(sys: &HamiltonianSystem) -> CheckMatrix {
    let mut out = structure_checks(sys.structure());
    match sys.structure().sigma() {
        Ok(sigma) => out.push("sigma_formula", sigma.sub(sys.sigma()).is_zero(), "σ = (∂H/∂s^mu) dx^mu"),
        Err(e) => out.push("sigma_formula", Outcome::Skipped, e.to_string()),
    }
    out.extend(formulation_checks(sys.theta(), sys.sigma(), sys.chart(), &sys.equations()));
    out
}

#[cfg(test)]
mod tests;
