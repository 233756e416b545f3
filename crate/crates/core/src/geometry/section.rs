//! Symbolic sections, pullbacks and canonical prolongations.

use std::collections::BTreeMap;

use thiserror::Error;

use super::chart::Chart;
use super::form::Form;
use super::vector::{MultiVector, VectorField};
use crate::symexpr::Expr;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SectionError {
    #[error("section component for '{coord}' mentions fiber coordinate '{fiber}'")]
    FiberSymbol { coord: String, fiber: String },
    #[error("'{0}' is not a non-base coordinate of the chart")]
    NotFiber(String),
}

/// Every non-base coordinate as an expression in the base coordinates.
#[derive(Clone, Debug)]
pub struct Section {
    comps: BTreeMap<usize, Expr>,
}

impl Section {
    /// Components named by coordinate; unnamed fiber coordinates default to 0.
    pub fn new(chart: &Chart, values: &BTreeMap<String, Expr>) -> Result<Section, SectionError> {
        let vertical = chart.vertical();
        for name in values.keys() {
            match chart.index(name) {
                Some(i) if vertical.contains(&i) => {}
                _ => return Err(SectionError::NotFiber(name.clone())),
            }
        }
        let mut comps = BTreeMap::new();
        for &i in &vertical {
            let e = values.get(chart.name(i)).cloned().unwrap_or_else(Expr::zero);
            for s in e.free_symbols() {
                if let Some(j) = chart.index(&s) {
                    if !chart.role(j).is_base() {
                        return Err(SectionError::FiberSymbol { coord: chart.name(i).into(), fiber: s });
                    }
                }
            }
            comps.insert(i, e);
        }
        Ok(Section { comps })
    }

    /// Unknown functions `z(x^0,…,x^{m-1})` named after each coordinate.
    pub fn generic(chart: &Chart) -> Section {
        let args = chart.base_symbols();
        let comps = chart
            .vertical()
            .into_iter()
            .map(|i| (i, Expr::call(chart.name(i), args.clone())))
            .collect();
        Section { comps }
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[&i]
    }

    /// Substitution map sending each fiber coordinate to its component.
    pub fn substitution(&self, chart: &Chart) -> BTreeMap<String, Expr> {
        self.comps.iter().map(|(i, e)| (chart.name(*i).to_string(), e.clone())).collect()
    }

    /// `∂ψ^A/∂x^mu`.
    pub fn derivative(&self, i: usize, mu: usize, chart: &Chart) -> Expr {
        self.comps[&i].diff(chart.name(chart.base(mu)))
    }

    /// Canonical prolongation `∧_mu (∂_mu + ∂ψ^A/∂x^mu ∂_A)`.
    pub fn prolongation(&self, chart: &Chart) -> MultiVector {
        let fields = (0..chart.m())
            .map(|mu| {
                let mut v = VectorField::coordinate(chart.base(mu));
                for &i in self.comps.keys() {
                    v.add_component(i, self.derivative(i, mu, chart));
                }
                v
            })
            .collect();
        MultiVector::decomposable(fields)
    }
}

/// Pullback along a coordinate map. `images` gives, for coordinates of
/// `source`, their expression on `target`; absent names map to the target
/// coordinate of the same name.
pub fn pullback_map(a: &Form, source: &Chart, images: &BTreeMap<String, Expr>, target: &Chart) -> Form {
    let mut diffs: BTreeMap<usize, Form> = BTreeMap::new();
    let mut out = Form::zero(a.degree());
    for (idx, c) in a.terms() {
        let mut term = Form::scalar(c.subs(images));
        for &j in idx {
            let dj = diffs.entry(j).or_insert_with(|| {
                let name = source.name(j);
                match images.get(name) {
                    Some(img) => Form::scalar(img.clone()).d(target),
                    None => Form::dz(target.index(name).expect("coordinate present in target chart")),
                }
            });
            term = term.wedge(dj);
            if term.is_zero_canonical() {
                break;
            }
        }
        out = out.add(&term);
    }
    out
}

/// `ψ* a`, a form in the base differentials.
pub fn pullback(psi: &Section, a: &Form, chart: &Chart) -> Form {
    pullback_map(a, chart, &psi.substitution(chart), chart)
}

/// `i(ψ^{(m)})(a∘ψ)`.
pub fn prolong_contract(psi: &Section, a: &Form, chart: &Chart) -> Form {
    let map = psi.substitution(chart);
    psi.prolongation(chart).contract(&a.map(|c| c.subs(&map)))
}
