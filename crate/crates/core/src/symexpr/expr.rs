//! Canonical expression representation.
//!
//! An [`Expr`] is an expanded Laurent polynomial with exact rational
//! coefficients over atoms. Atoms are symbols, opaque parameter functions,
//! the elementary functions, reciprocals of non-monomial polynomials and
//! radicals. Every constructor returns the canonical form, so structural
//! equality is a sound (but incomplete) equality test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ExprError;

pub type Rational = BigRational;

/// Elementary functions kept as atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

/// Application of a user-declared function, possibly differentiated.
///
/// `derivs[k]` counts how often the function was differentiated with respect
/// to its `k`-th argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpaqueCall {
    pub name: Arc<str>,
    pub derivs: Vec<u32>,
    pub args: Vec<Expr>,
}

impl OpaqueCall {
    pub fn order(&self) -> u32 {
        self.derivs.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Arc<str>),
    Opaque(Arc<OpaqueCall>),
    Func(Func, Expr),
    /// `1/P` for a non-monomial `P` whose first coefficient is 1.
    Recip(Expr),
    /// `P^(1/n)`, `n >= 2`; stored powers stay in `1..n`.
    Root(Expr, u32),
}

pub(crate) type Monomial = Vec<(Atom, i32)>;
pub(crate) type Terms = BTreeMap<Monomial, Rational>;

/// Immutable, cheaply clonable canonical expression.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(pub(crate) Arc<Terms>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

fn add_term(terms: &mut Terms, mono: Monomial, coeff: Rational) {
    if coeff.is_zero() {
        return;
    }
    match terms.entry(mono) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(coeff);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get() + coeff;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

fn merge_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn needs_normalization(m: &Monomial) -> bool {
    let mut exps = 0;
    for (atom, e) in m {
        match atom {
            Atom::Func(Func::Exp, _) => {
                exps += 1;
                if *e != 1 || exps > 1 {
                    return true;
                }
            }
            Atom::Func(Func::Cos, _) if *e >= 2 => return true,
            Atom::Recip(_) if *e < 0 => return true,
            Atom::Root(_, n) if *e < 0 || *e >= *n as i32 => return true,
            _ => {}
        }
    }
    false
}

/// Rewrites a monomial with out-of-range powers into canonical terms.
fn normalize_monomial(m: Monomial) -> Terms {
    let mut kept: Monomial = Vec::with_capacity(m.len());
    let mut factors: Vec<Expr> = Vec::new();
    let mut exp_arg = Expr::zero();
    let mut has_exp = false;
    for (atom, e) in m {
        match &atom {
            Atom::Func(Func::Exp, a) => {
                has_exp = true;
                exp_arg = &exp_arg + &(a * &Expr::int(e as i64));
            }
            Atom::Func(Func::Cos, a) if e >= 2 => {
                let s = Expr::sin(a.clone());
                let one_minus = &Expr::one() - &(&s * &s);
                factors.push(one_minus.powi((e / 2) as i64));
                if e % 2 == 1 {
                    kept.push((atom, 1));
                }
            }
            Atom::Recip(p) if e < 0 => {
                factors.push(p.powi(-e as i64));
            }
            Atom::Root(p, n) if e < 0 || e >= *n as i32 => {
                let n = *n as i32;
                let q = e.div_euclid(n);
                let r = e.rem_euclid(n);
                factors.push(p.powi(q as i64));
                if r > 0 {
                    kept.push((atom, r));
                }
            }
            _ => kept.push((atom, e)),
        }
    }
    if has_exp {
        factors.push(Expr::exp(exp_arg));
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let mut base = Terms::new();
    base.insert(kept, Rational::one());
    let mut acc = Expr(Arc::new(base));
    for f in factors {
        acc = &acc * &f;
    }
    Arc::try_unwrap(acc.0).unwrap_or_else(|a| (*a).clone())
}

fn mul_terms(a: &Terms, b: &Terms) -> Terms {
    let mut out = Terms::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let merged = merge_monomials(ma, mb);
            let c = ca * cb;
            if needs_normalization(&merged) {
                for (m, c2) in normalize_monomial(merged) {
                    add_term(&mut out, m, &c * c2);
                }
            } else {
                add_term(&mut out, merged, c);
            }
        }
    }
    out
}

fn exact_root(x: &BigInt, n: u32) -> Option<BigInt> {
    if x.is_negative() {
        if n % 2 == 0 {
            return None;
        }
        return exact_root(&-x, n).map(|r| -r);
    }
    let r = x.nth_root(n);
    if num_traits::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

impl Expr {
    pub(crate) fn from_terms(terms: Terms) -> Expr {
        Expr(Arc::new(terms))
    }

    pub(crate) fn terms(&self) -> &Terms {
        &self.0
    }

    /// Builds `coeff * mono` from a possibly non-canonical monomial.
    pub(crate) fn from_monomial(mono: Monomial, coeff: Rational) -> Expr {
        if coeff.is_zero() {
            return Expr::zero();
        }
        let mut mono: Monomial = mono.into_iter().filter(|(_, e)| *e != 0).collect();
        mono.sort_by(|a, b| a.0.cmp(&b.0));
        let terms = if needs_normalization(&mono) {
            normalize_monomial(mono)
        } else {
            let mut t = Terms::new();
            t.insert(mono, Rational::one());
            t
        };
        Expr::from_terms(terms).scale(&coeff)
    }

    pub(crate) fn from_atom(atom: Atom) -> Expr {
        Expr::from_monomial(vec![(atom, 1)], Rational::one())
    }

    pub fn zero() -> Expr {
        Expr::from_terms(Terms::new())
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(v: i64) -> Expr {
        Expr::rational(Rational::from_integer(BigInt::from(v)))
    }

    pub fn frac(num: i64, den: i64) -> Expr {
        Expr::rational(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn rational(r: Rational) -> Expr {
        let mut t = Terms::new();
        add_term(&mut t, Vec::new(), r);
        Expr::from_terms(t)
    }

    pub fn symbol(name: &str) -> Expr {
        Expr::from_atom(Atom::Sym(Arc::from(name)))
    }

    /// Undifferentiated application `name(args)`.
    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        let derivs = vec![0; args.len()];
        Expr::call_derivative(name, derivs, args)
    }

    /// Partial derivative of a declared function; `derivs` counts per argument.
    pub fn call_derivative(name: &str, derivs: Vec<u32>, args: Vec<Expr>) -> Expr {
        assert_eq!(derivs.len(), args.len(), "derivative multi-index must match arity");
        Expr::from_atom(Atom::Opaque(Arc::new(OpaqueCall {
            name: Arc::from(name),
            derivs,
            args,
        })))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        match f {
            Func::Sin => Expr::sin(arg),
            Func::Cos => Expr::cos(arg),
            Func::Exp => Expr::exp(arg),
            Func::Log => Expr::log(arg),
        }
    }

    pub fn sin(arg: Expr) -> Expr {
        if arg.is_zero_canonical() {
            return Expr::zero();
        }
        if arg.leading_negative() {
            return -Expr::from_atom(Atom::Func(Func::Sin, -arg));
        }
        Expr::from_atom(Atom::Func(Func::Sin, arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        if arg.is_zero_canonical() {
            return Expr::one();
        }
        if arg.leading_negative() {
            return Expr::from_atom(Atom::Func(Func::Cos, -arg));
        }
        Expr::from_atom(Atom::Func(Func::Cos, arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        if arg.is_zero_canonical() {
            return Expr::one();
        }
        Expr::from_atom(Atom::Func(Func::Exp, arg))
    }

    pub fn log(arg: Expr) -> Expr {
        if arg.as_rational().is_some_and(|r| r.is_one()) {
            return Expr::zero();
        }
        Expr::from_atom(Atom::Func(Func::Log, arg))
    }

    pub fn sqrt(arg: Expr) -> Expr {
        arg.root(2)
    }

    /// Principal `n`-th root.
    pub fn root(&self, n: u32) -> Expr {
        assert!(n >= 1, "root index must be positive");
        if n == 1 || self.is_zero_canonical() {
            return self.clone();
        }
        if let Some(r) = self.as_rational() {
            if let (Some(a), Some(b)) = (exact_root(r.numer(), n), exact_root(r.denom(), n)) {
                return Expr::rational(Rational::new(a, b));
            }
        }
        Expr::from_atom(Atom::Root(self.clone(), n))
    }

    pub fn is_zero_canonical(&self) -> bool {
        self.0.is_empty()
    }

    /// The value if the expression is a rational constant.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        self.as_rational().and_then(|r| r.to_f64())
    }

    /// The symbol name if the expression is exactly one symbol.
    pub fn as_symbol(&self) -> Option<&str> {
        if self.0.len() != 1 {
            return None;
        }
        let (m, c) = self.0.iter().next().unwrap();
        match (m.as_slice(), c.is_one()) {
            ([(Atom::Sym(s), 1)], true) => Some(s),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_rational().is_some()
    }

    /// True for a single term `c * atoms`.
    pub fn is_monomial(&self) -> bool {
        self.0.len() == 1
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    fn leading_negative(&self) -> bool {
        self.0.values().next().is_some_and(|c| c.is_negative())
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr::from_terms(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    pub fn powi(&self, n: i64) -> Expr {
        if n < 0 {
            return self
                .recip()
                .expect("negative power of an identically zero expression")
                .powi(-n);
        }
        let mut result = Expr::one();
        let mut base = self.clone();
        let mut k = n as u64;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// General power; rational exponents use radicals, others go through `exp(e log b)`.
    pub fn pow(&self, exponent: &Expr) -> Result<Expr, ExprError> {
        if let Some(r) = exponent.as_rational() {
            if self.is_zero_canonical() {
                return if r.is_positive() {
                    Ok(Expr::zero())
                } else {
                    Err(ExprError::DivisionByZero)
                };
            }
            let p = r.numer().to_i64().ok_or(ExprError::Overflow)?;
            let q = r.denom().to_u32().ok_or(ExprError::Overflow)?;
            if q == 1 {
                return if p < 0 {
                    Ok(self.recip()?.powi(-p))
                } else {
                    Ok(self.powi(p))
                };
            }
            let root = self.root(q);
            return if p < 0 {
                Ok(root.recip()?.powi(-p))
            } else {
                Ok(root.powi(p))
            };
        }
        Ok(Expr::exp(exponent * &Expr::log(self.clone())))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        if self.is_zero_canonical() {
            return Err(ExprError::DivisionByZero);
        }
        if self.0.len() == 1 {
            let (m, c) = self.0.iter().next().unwrap();
            let inv: Monomial = m.iter().map(|(a, e)| (a.clone(), -e)).collect();
            return Ok(Expr::from_monomial(inv, c.recip()));
        }
        let lead = self.0.values().next().unwrap().clone();
        let normalized = self.scale(&lead.recip());
        Ok(Expr::from_monomial(vec![(Atom::Recip(normalized), 1)], lead.recip()))
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self * &other.recip()?)
    }

    /// Sum of many expressions with a single accumulator.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        let mut acc = Terms::new();
        for e in items {
            for (m, c) in e.0.iter() {
                add_term(&mut acc, m.clone(), c.clone());
            }
        }
        Expr::from_terms(acc)
    }

    /// Iterates `(coefficient, term)` pairs, each term a coefficient-one monomial.
    pub fn term_list(&self) -> Vec<(Rational, Expr)> {
        self.0
            .iter()
            .map(|(m, c)| {
                let mut t = Terms::new();
                t.insert(m.clone(), Rational::one());
                (c.clone(), Expr::from_terms(t))
            })
            .collect()
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        for m in self.0.keys() {
            for (atom, _) in m {
                match atom {
                    Atom::Sym(s) => {
                        if !out.contains(&**s) {
                            out.insert(s.to_string());
                        }
                    }
                    Atom::Opaque(call) => call.args.iter().for_each(|a| a.collect_symbols(out)),
                    Atom::Func(_, a) | Atom::Recip(a) | Atom::Root(a, _) => a.collect_symbols(out),
                }
            }
        }
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        self.0.keys().any(|m| {
            m.iter().any(|(atom, _)| match atom {
                Atom::Sym(s) => &**s == name,
                Atom::Opaque(call) => call.args.iter().any(|a| a.contains_symbol(name)),
                Atom::Func(_, a) | Atom::Recip(a) | Atom::Root(a, _) => a.contains_symbol(name),
            })
        })
    }

    /// Declared functions used, with their arities.
    pub fn functions(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.collect_functions(&mut out);
        out
    }

    fn collect_functions(&self, out: &mut BTreeMap<String, usize>) {
        for m in self.0.keys() {
            for (atom, _) in m {
                match atom {
                    Atom::Sym(_) => {}
                    Atom::Opaque(call) => {
                        out.insert(call.name.to_string(), call.args.len());
                        call.args.iter().for_each(|a| a.collect_functions(out));
                    }
                    Atom::Func(_, a) | Atom::Recip(a) | Atom::Root(a, _) => a.collect_functions(out),
                }
            }
        }
    }

    /// Highest total derivative order among calls to `name`; `None` if it is never called.
    pub fn call_order(&self, name: &str) -> Option<u32> {
        let mut best: Option<u32> = None;
        for m in self.0.keys() {
            for (atom, _) in m {
                let inner = match atom {
                    Atom::Sym(_) => None,
                    Atom::Opaque(call) => {
                        let own = (&*call.name == name).then(|| call.order());
                        call.args.iter().filter_map(|a| a.call_order(name)).chain(own).max()
                    }
                    Atom::Func(_, a) | Atom::Recip(a) | Atom::Root(a, _) => a.call_order(name),
                };
                best = best.max(inner);
            }
        }
        best
    }

    pub(crate) fn has_recip(&self) -> bool {
        self.0
            .keys()
            .any(|m| m.iter().any(|(a, _)| matches!(a, Atom::Recip(_))))
    }

    /// Canonical form is maintained eagerly, so this is the identity.
    pub fn simplify(&self) -> Expr {
        self.clone()
    }

    /// Polynomial degree in `name` if the expression is polynomial in it.
    pub fn degree_in(&self, name: &str) -> Option<u32> {
        let mut deg = 0u32;
        for m in self.0.keys() {
            for (atom, e) in m {
                match atom {
                    Atom::Sym(s) if &**s == name => {
                        if *e < 0 {
                            return None;
                        }
                        deg = deg.max(*e as u32);
                    }
                    Atom::Sym(_) => {}
                    Atom::Opaque(c) => {
                        if c.args.iter().any(|a| a.contains_symbol(name)) {
                            return None;
                        }
                    }
                    Atom::Func(_, a) | Atom::Recip(a) | Atom::Root(a, _) => {
                        if a.contains_symbol(name) {
                            return None;
                        }
                    }
                }
            }
        }
        Some(deg)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Self {
        Expr::rational(v)
    }
}

impl<'b> Add<&'b Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &'b Expr) -> Expr {
        if rhs.is_zero_canonical() {
            return self.clone();
        }
        if self.is_zero_canonical() {
            return rhs.clone();
        }
        let mut t = (*self.0).clone();
        for (m, c) in rhs.0.iter() {
            add_term(&mut t, m.clone(), c.clone());
        }
        Expr::from_terms(t)
    }
}

impl<'b> Sub<&'b Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &'b Expr) -> Expr {
        let mut t = (*self.0).clone();
        for (m, c) in rhs.0.iter() {
            add_term(&mut t, m.clone(), -c.clone());
        }
        Expr::from_terms(t)
    }
}

impl<'b> Mul<&'b Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &'b Expr) -> Expr {
        if self.is_zero_canonical() || rhs.is_zero_canonical() {
            return Expr::zero();
        }
        if let Some(c) = self.as_rational() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.as_rational() {
            return self.scale(&c);
        }
        Expr::from_terms(mul_terms(&self.0, &rhs.0))
    }
}

impl<'b> Div<&'b Expr> for &Expr {
    type Output = Expr;
    /// Panics when the divisor is identically zero; see [`Expr::checked_div`].
    fn div(self, rhs: &'b Expr) -> Expr {
        self.checked_div(rhs).expect("division by an identically zero expression")
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_terms(self.0.iter().map(|(m, c)| (m.clone(), -c.clone())).collect())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $f(self, rhs: &'a Expr) -> Expr {
                (&self).$f(rhs)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                self.$f(&rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let items: Vec<Expr> = iter.collect();
        Expr::sum(items.iter())
    }
}
