//! Vector fields, multivector fields and interior contraction.

use std::collections::BTreeMap;

use super::chart::Chart;
use super::form::{sort_with_sign, Form};
use crate::symexpr::{is_zero, Expr, ZeroTest};

/// A vector field `Σ X^j ∂_j`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VectorField {
    comps: BTreeMap<usize, Expr>,
}

impl VectorField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(i: usize) -> Self {
        Self::from_components([(i, Expr::one())])
    }

    pub fn from_components(comps: impl IntoIterator<Item = (usize, Expr)>) -> Self {
        let mut v = VectorField::zero();
        for (i, c) in comps {
            v.add_component(i, c);
        }
        v
    }

    pub fn add_component(&mut self, i: usize, c: Expr) {
        let s = self.component(i) + c;
        if s.is_zero_canonical() {
            self.comps.remove(&i);
        } else {
            self.comps.insert(i, s);
        }
    }

    pub fn component(&self, i: usize) -> Expr {
        self.comps.get(&i).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (&usize, &Expr)> {
        self.comps.iter()
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        Self::from_components(self.comps.iter().map(|(i, c)| (*i, f(c))))
    }

    pub fn add(&self, other: &VectorField) -> Self {
        let mut out = self.clone();
        for (i, c) in &other.comps {
            out.add_component(*i, c.clone());
        }
        out
    }

    pub fn scale(&self, e: &Expr) -> Self {
        self.map(|c| c * e)
    }

    pub fn is_zero(&self) -> ZeroTest {
        let mut result = ZeroTest::Zero;
        for c in self.comps.values() {
            match is_zero(c) {
                ZeroTest::NonZero => return ZeroTest::NonZero,
                ZeroTest::Unknown => result = ZeroTest::Unknown,
                ZeroTest::Zero => {}
            }
        }
        result
    }

    /// `X(f) = Σ X^j ∂f/∂z^j`.
    pub fn apply(&self, f: &Expr, chart: &Chart) -> Expr {
        let parts: Vec<Expr> = self.comps.iter().map(|(j, c)| c * &f.diff(chart.name(*j))).collect();
        Expr::sum(parts.iter())
    }

    /// `[X, Y]^k = X(Y^k) − Y(X^k)`.
    pub fn lie_bracket(&self, other: &VectorField, chart: &Chart) -> VectorField {
        let mut out = VectorField::zero();
        let keys: std::collections::BTreeSet<usize> = self.comps.keys().chain(other.comps.keys()).copied().collect();
        for k in keys {
            let c = self.apply(&other.component(k), chart) - other.apply(&self.component(k), chart);
            out.add_component(k, c);
        }
        out
    }

    /// `i(X) a`.
    pub fn contract(&self, a: &Form) -> Form {
        let mut out = Form::zero(a.degree().saturating_sub(1));
        if a.degree() == 0 {
            return out;
        }
        for (idx, c) in a.terms() {
            for (pos, j) in idx.iter().enumerate() {
                let Some(x) = self.comps.get(j) else { continue };
                let mut rest = idx.clone();
                rest.remove(pos);
                let v = c * x;
                out.add_term(rest, if pos % 2 == 1 { -v } else { v });
            }
        }
        out
    }

    /// Text such as `∂t + p*∂q`.
    pub fn display(&self, chart: &Chart) -> String {
        if self.comps.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(i, c)| {
                let name = chart.name(*i);
                if c == &Expr::one() {
                    format!("d/d{name}")
                } else if c.is_monomial() {
                    format!("{c}*d/d{name}")
                } else {
                    format!("({c})*d/d{name}")
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// A degree-`k` multivector field with an optional decomposable witness.
#[derive(Clone, Debug)]
pub struct MultiVector {
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
    witness: Option<Vec<VectorField>>,
}

impl MultiVector {
    /// Wedge of the given vector fields, keeping them as witness.
    pub fn decomposable(fields: Vec<VectorField>) -> Self {
        let mut terms: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
        terms.insert(Vec::new(), Expr::one());
        for x in &fields {
            let mut next: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
            for (idx, c) in &terms {
                for (j, xj) in x.components() {
                    if idx.contains(j) {
                        continue;
                    }
                    let mut new_idx = idx.clone();
                    new_idx.push(*j);
                    let sign = sort_with_sign(&mut new_idx).expect("fresh index");
                    let v = c * xj;
                    let v = if sign < 0 { -v } else { v };
                    let slot = next.entry(new_idx).or_insert_with(Expr::zero);
                    *slot = &*slot + &v;
                }
            }
            next.retain(|_, c| !c.is_zero_canonical());
            terms = next;
        }
        MultiVector { degree: fields.len(), terms, witness: Some(fields) }
    }

    /// From expanded terms; no witness.
    pub fn from_terms(degree: usize, terms: impl IntoIterator<Item = (Vec<usize>, Expr)>) -> Self {
        let mut out: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
        for (mut idx, c) in terms {
            assert_eq!(idx.len(), degree, "term degree");
            let Some(sign) = sort_with_sign(&mut idx) else { continue };
            let c = if sign < 0 { -c } else { c };
            let slot = out.entry(idx).or_insert_with(Expr::zero);
            *slot = &*slot + &c;
        }
        out.retain(|_, c| !c.is_zero_canonical());
        MultiVector { degree, terms: out, witness: None }
    }

    /// The coordinate multivector `∂_{b_0}∧…∧∂_{b_{m-1}}` over the base.
    pub fn base(chart: &Chart) -> Self {
        MultiVector::decomposable(chart.base_indices().iter().map(|&b| VectorField::coordinate(b)).collect())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn witness(&self) -> Option<&[VectorField]> {
        self.witness.as_deref()
    }

    pub fn without_witness(&self) -> Self {
        MultiVector { degree: self.degree, terms: self.terms.clone(), witness: None }
    }

    /// `i(X) a` with `i(X_1∧…∧X_k) = i(X_k)…i(X_1)`.
    pub fn contract(&self, a: &Form) -> Form {
        if self.degree > a.degree() {
            return Form::zero(0);
        }
        if let Some(w) = &self.witness {
            return w.iter().fold(a.clone(), |acc, x| x.contract(&acc));
        }
        let mut out = Form::zero(a.degree() - self.degree);
        for (idx, c) in &self.terms {
            let r = idx.iter().fold(a.clone(), |acc, &j| acc.contract_coordinate(j));
            out = out.add(&r.scale(c));
        }
        out
    }
}

/// `d̄a = da + σ∧a`.
pub fn dbar(a: &Form, sigma: &Form, chart: &Chart) -> Form {
    assert_eq!(sigma.degree(), 1, "σ must be a 1-form");
    a.d(chart).add(&sigma.wedge(a))
}
