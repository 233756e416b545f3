//! Differential forms with sparse expression coefficients.

use std::collections::BTreeMap;

use thiserror::Error;

use super::chart::Chart;
use crate::symexpr::{is_zero, parse, Expr, ExprError, ZeroTest};

/// A degree-`k` form `Σ c_I dz^{i_1}∧…∧dz^{i_k}` with strictly increasing `I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `idx` in place and returns the permutation sign, or `None` on a repeat.
pub(crate) fn sort_with_sign(idx: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn negligible(c: &Expr) -> bool {
    c.is_zero_canonical() || (c.has_recip() && is_zero(c) == ZeroTest::Zero)
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FormParseError {
    #[error("in term '{term}': {source}")]
    Expr { term: String, source: ExprError },
    #[error("terms of different degree: {0} and {1}")]
    MixedDegree(usize, usize),
    #[error("empty form")]
    Empty,
}

impl Form {
    pub fn zero(degree: usize) -> Form {
        Form { degree, terms: BTreeMap::new() }
    }

    pub fn scalar(e: Expr) -> Form {
        Form::term(e, vec![])
    }

    /// `coeff dz^{idx[0]}∧…`, reordered with sign.
    pub fn term(coeff: Expr, mut idx: Vec<usize>) -> Form {
        let degree = idx.len();
        let mut f = Form::zero(degree);
        if let Some(sign) = sort_with_sign(&mut idx) {
            let c = if sign < 0 { -coeff } else { coeff };
            f.add_term(idx, c);
        }
        f
    }

    /// The differential `dz^i`.
    pub fn dz(i: usize) -> Form {
        Form::term(Expr::one(), vec![i])
    }

    /// The volume form `dx^0∧…∧dx^{m-1}` of the base.
    pub fn volume(chart: &Chart) -> Form {
        Form::term(Expr::one(), chart.base_indices().to_vec())
    }

    /// `i(∂_mu) d^m x`, never stored separately.
    pub fn base_volume_minus(chart: &Chart, mu: usize) -> Form {
        Form::volume(chart).contract_coordinate(chart.base(mu))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            None => Expr::zero(),
            Some(sign) => {
                let c = self.terms.get(&sorted).cloned().unwrap_or_else(Expr::zero);
                if sign < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    pub(crate) fn add_term(&mut self, idx: Vec<usize>, c: Expr) {
        debug_assert_eq!(idx.len(), self.degree);
        if c.is_zero_canonical() {
            return;
        }
        let entry = self.terms.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !negligible(&c) {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if negligible(&s) {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// True when every coefficient is canonically zero.
    pub fn is_zero_canonical(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero test over all coefficients.
    pub fn is_zero(&self) -> ZeroTest {
        let mut result = ZeroTest::Zero;
        for c in self.terms.values() {
            match is_zero(c) {
                ZeroTest::NonZero => return ZeroTest::NonZero,
                ZeroTest::Unknown => result = ZeroTest::Unknown,
                ZeroTest::Zero => {}
            }
        }
        result
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.map(|c| -c)
    }

    pub fn scale(&self, e: &Expr) -> Form {
        self.map(|c| c * e)
    }

    /// Applies `f` to every coefficient.
    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        let mut out = Form::zero(self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), f(c));
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero(self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                if ia.iter().any(|i| ib.contains(i)) {
                    continue;
                }
                let mut idx: Vec<usize> = ia.iter().chain(ib.iter()).copied().collect();
                let sign = sort_with_sign(&mut idx).expect("disjoint indices");
                let c = ca * cb;
                out.add_term(idx, if sign < 0 { -c } else { c });
            }
        }
        out
    }

    /// Exterior derivative; coefficients are differentiated in the chart coordinates.
    pub fn d(&self, chart: &Chart) -> Form {
        let mut out = Form::zero(self.degree + 1);
        for (idx, c) in &self.terms {
            for name in c.free_symbols() {
                let Some(j) = chart.index(&name) else { continue };
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.diff(&name);
                let mut full = Vec::with_capacity(idx.len() + 1);
                full.push(j);
                full.extend_from_slice(idx);
                let sign = sort_with_sign(&mut full).expect("fresh index");
                out.add_term(full, if sign < 0 { -dc } else { dc });
            }
        }
        out
    }

    /// `i(∂_j) self`.
    pub fn contract_coordinate(&self, j: usize) -> Form {
        let mut out = Form::zero(self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (idx, c) in &self.terms {
            if let Some(pos) = idx.iter().position(|&k| k == j) {
                let mut rest = idx.clone();
                rest.remove(pos);
                out.add_term(rest, if pos % 2 == 1 { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// The unique coefficient of a degree-0 form.
    pub fn as_scalar(&self) -> Expr {
        assert_eq!(self.degree, 0, "not a 0-form");
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Expr::zero)
    }

    /// Canonical text, e.g. `H * dx0^dx1 + ds0^dx1 - ds1^dx0`.
    pub fn display(&self, chart: &Chart) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (idx, c)) in self.terms.iter().enumerate() {
            let wedge: Vec<String> = idx.iter().map(|&i| format!("d{}", chart.name(i))).collect();
            let wedge = wedge.join("^");
            let (neg, body) = if c.is_monomial() {
                let text = c.to_string();
                match text.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, text),
                }
            } else {
                (false, format!("({c})"))
            };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if idx.is_empty() {
                out.push_str(&body);
            } else if body == "1" {
                out.push_str(&wedge);
            } else {
                out.push_str(&body);
                out.push_str(" * ");
                out.push_str(&wedge);
            }
        }
        out
    }

    /// Parses the text produced by [`Form::display`].
    pub fn parse(text: &str, chart: &Chart) -> Result<Form, FormParseError> {
        let pieces = split_top_level(text);
        if pieces.is_empty() {
            return Err(FormParseError::Empty);
        }
        let mut out: Option<Form> = None;
        for (negative, piece) in pieces {
            let term = parse_term(&piece, chart)?;
            let term = if negative { term.neg() } else { term };
            out = Some(match out {
                None => term,
                Some(acc) if acc.degree != term.degree => {
                    return Err(FormParseError::MixedDegree(acc.degree, term.degree))
                }
                Some(acc) => acc.add(&term),
            });
        }
        Ok(out.unwrap())
    }
}

fn split_top_level(text: &str) -> Vec<(bool, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut negative = false;
    let mut prev: Option<char> = None;
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        let exponent_sign = prev == Some('e') && i >= 2 && chars[..i - 1].iter().rev().find(|c| !c.is_whitespace()).is_some_and(|c| c.is_ascii_digit());
        let is_split = depth == 0
            && (c == '+' || c == '-')
            && !matches!(prev, Some('^') | Some('*') | Some('/') | Some('(') | Some(','))
            && !exponent_sign;
        if is_split {
            if !cur.trim().is_empty() {
                out.push((negative, cur.trim().to_string()));
            }
            negative = c == '-';
            cur.clear();
            prev = Some(c);
            continue;
        }
        cur.push(c);
        if !c.is_whitespace() {
            prev = Some(c);
        }
    }
    if !cur.trim().is_empty() {
        out.push((negative, cur.trim().to_string()));
    }
    out
}

fn split_factors(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if c == '*' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    out.push(cur.trim().to_string());
    out
}

fn wedge_indices(factor: &str, chart: &Chart) -> Option<Vec<usize>> {
    factor
        .split('^')
        .map(|p| p.trim().strip_prefix('d').and_then(|name| chart.index(name)))
        .collect()
}

fn parse_term(piece: &str, chart: &Chart) -> Result<Form, FormParseError> {
    let factors = split_factors(piece);
    let err = |source| FormParseError::Expr { term: piece.to_string(), source };
    if let Some(idx) = factors.last().and_then(|f| wedge_indices(f, chart)) {
        let coeff = if factors.len() == 1 {
            Expr::one()
        } else {
            parse(&factors[..factors.len() - 1].join("*"), chart).map_err(err)?
        };
        return Ok(Form::term(coeff, idx));
    }
    Ok(Form::scalar(parse(piece, chart).map_err(err)?))
}
