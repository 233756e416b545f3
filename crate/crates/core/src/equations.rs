//! Field equations as named residuals over jet symbols.
//!
//! A section unknown `z(x)` is represented by its coordinate symbol `z`, and
//! its derivatives by jet symbols named with [`Chart::jet_name`]: on a
//! Lagrangian chart the first jet of a field is its velocity coordinate and
//! second jets are symmetric (`u_t_x` = `u_x_t`).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geometry::{Chart, Role};
use crate::symexpr::{Expr, ExprError, FunctionTable};

/// `z_mu` for the coordinate at chart index `i`.
pub fn jet_symbol(chart: &Chart, i: usize, mu: usize) -> Expr {
    Expr::symbol(&chart.jet_name(i, mu))
}

/// Total derivative `D_mu f = ∂f/∂x^mu + Σ_z z_mu ∂f/∂z` over the non-base coordinates.
pub fn total_derivative(f: &Expr, mu: usize, chart: &Chart) -> Expr {
    let mut out = f.diff(chart.name(chart.base(mu)));
    for i in chart.vertical() {
        let d = f.diff(chart.name(i));
        if !d.is_zero_canonical() {
            out = out + jet_symbol(chart, i, mu) * d;
        }
    }
    out
}

/// Substitution sending every coordinate and jet symbol of `chart` to a
/// derivative of an unknown function of the base coordinates.
pub fn section_map(chart: &Chart) -> BTreeMap<String, Expr> {
    let args = chart.base_symbols();
    let base: Vec<String> = chart.base_indices().iter().map(|&b| chart.name(b).to_string()).collect();
    let mut map = BTreeMap::new();
    let field_call = |i: usize| Expr::call(chart.name(i), args.clone());
    for i in chart.vertical() {
        match chart.role(i) {
            Role::Velocity { field, base: nu } => {
                let f = field_call(chart.field(field));
                let first = f.diff(&base[nu]);
                for (mu, b) in base.iter().enumerate() {
                    map.insert(chart.jet_name(i, mu), first.diff(b));
                }
                map.insert(chart.name(i).to_string(), first);
            }
            _ => {
                let f = field_call(i);
                for (mu, b) in base.iter().enumerate() {
                    map.entry(chart.jet_name(i, mu)).or_insert_with(|| f.diff(b));
                }
                map.insert(chart.name(i).to_string(), f);
            }
        }
    }
    map
}

/// One residual `r = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    /// Equation family, e.g. `field`, `momentum`, `contact`.
    pub family: String,
    pub label: String,
    pub residual: Expr,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquationSet {
    pub equations: Vec<Equation>,
}

#[derive(Serialize)]
struct EquationRecord<'a> {
    family: &'a str,
    label: &'a str,
    residual: String,
    latex: String,
}

impl EquationSet {
    pub fn push(&mut self, family: &str, label: impl Into<String>, residual: Expr) {
        self.equations.push(Equation { family: family.to_string(), label: label.into(), residual });
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.label == label)
    }

    pub fn family<'a>(&'a self, family: &'a str) -> impl Iterator<Item = &'a Equation> + 'a {
        self.equations.iter().filter(move |e| e.family == family)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> EquationSet {
        EquationSet {
            equations: self
                .equations
                .iter()
                .map(|e| Equation { family: e.family.clone(), label: e.label.clone(), residual: f(&e.residual) })
                .collect(),
        }
    }

    pub fn subs(&self, map: &BTreeMap<String, Expr>) -> EquationSet {
        self.map(|e| e.subs(map))
    }

    /// Jets replaced by derivatives of unknown functions of the base.
    pub fn on_sections(&self, chart: &Chart) -> EquationSet {
        self.subs(&section_map(chart))
    }

    /// Parameter functions replaced by their definitions.
    pub fn inline(&self, funcs: &FunctionTable) -> Result<EquationSet, ExprError> {
        let equations = self
            .equations
            .iter()
            .map(|e| Ok(Equation { family: e.family.clone(), label: e.label.clone(), residual: funcs.inline(&e.residual)? }))
            .collect::<Result<_, ExprError>>()?;
        Ok(EquationSet { equations })
    }

    pub fn to_text(&self) -> String {
        self.equations.iter().map(|e| format!("[{}] {}: {} = 0\n", e.family, e.label, e.residual)).collect()
    }

    pub fn to_latex(&self) -> String {
        let mut out = String::from("\\begin{align}\n");
        let lines: Vec<String> = self.equations.iter().map(|e| format!("  {} &= 0", e.residual.to_latex())).collect();
        out.push_str(&lines.join(" \\\\\n"));
        out.push_str("\n\\end{align}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let records: Vec<EquationRecord> = self
            .equations
            .iter()
            .map(|e| EquationRecord { family: &e.family, label: &e.label, residual: e.residual.to_string(), latex: e.residual.to_latex() })
            .collect();
        serde_json::to_value(records).expect("equation records serialize")
    }
}

/// `r / (∂r/∂jet)` when `r` is affine in `jet` with a nonzero coefficient.
pub fn normalized(residual: &Expr, jet: &str) -> Option<Expr> {
    if residual.degree_in(jet) != Some(1) {
        return None;
    }
    let lead = residual.diff(jet);
    if lead.contains_symbol(jet) {
        return None;
    }
    residual.checked_div(&lead).ok()
}
