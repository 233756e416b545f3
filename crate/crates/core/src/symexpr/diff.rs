//! Differentiation and substitution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use super::expr::{Atom, Expr, Func, Monomial, Rational};
use super::ExprError;

fn atom_derivative(atom: &Atom, var: &str) -> Expr {
    match atom {
        Atom::Sym(s) => {
            if &**s == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Opaque(call) => {
            let mut parts = Vec::new();
            for (k, arg) in call.args.iter().enumerate() {
                let da = arg.diff(var);
                if da.is_zero_canonical() {
                    continue;
                }
                let mut derivs = call.derivs.clone();
                derivs[k] += 1;
                parts.push(&Expr::call_derivative(&call.name, derivs, call.args.clone()) * &da);
            }
            Expr::sum(parts.iter())
        }
        Atom::Func(f, a) => {
            let da = a.diff(var);
            if da.is_zero_canonical() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => Expr::cos(a.clone()),
                Func::Cos => -Expr::sin(a.clone()),
                Func::Exp => Expr::exp(a.clone()),
                Func::Log => a.recip().expect("log of zero"),
            };
            &outer * &da
        }
        Atom::Recip(p) => {
            let dp = p.diff(var);
            if dp.is_zero_canonical() {
                return Expr::zero();
            }
            let r = Expr::from_atom(atom.clone());
            -(&(&r * &r) * &dp)
        }
        Atom::Root(p, n) => {
            let dp = p.diff(var);
            if dp.is_zero_canonical() {
                return Expr::zero();
            }
            let r = Expr::from_atom(atom.clone());
            let scale = Rational::new(BigInt::one(), BigInt::from(*n));
            (&(&r * &dp) * &p.recip().expect("root of zero")).scale(&scale)
        }
    }
}

impl Expr {
    /// Exact partial derivative with respect to the symbol `var`.
    pub fn diff(&self, var: &str) -> Expr {
        if !self.contains_symbol(var) {
            return Expr::zero();
        }
        let mut parts = Vec::new();
        for (mono, c) in self.terms().iter() {
            for (k, (atom, e)) in mono.iter().enumerate() {
                let da = atom_derivative(atom, var);
                if da.is_zero_canonical() {
                    continue;
                }
                let mut rest: Monomial = mono.clone();
                rest[k].1 = e - 1;
                let coeff = c * Rational::from_integer(BigInt::from(*e));
                parts.push(&Expr::from_monomial(rest, coeff) * &da);
            }
        }
        Expr::sum(parts.iter())
    }

    /// Rebuilds the expression, letting `f` replace atoms; untouched atoms
    /// are rebuilt from their mapped children.
    pub(crate) fn map_atoms(
        &self,
        f: &mut dyn FnMut(&Atom) -> Option<Result<Expr, ExprError>>,
    ) -> Result<Expr, ExprError> {
        let mut parts = Vec::with_capacity(self.num_terms());
        for (mono, c) in self.terms().iter() {
            let mut kept: Monomial = Vec::new();
            let mut replaced: Vec<(Expr, i32)> = Vec::new();
            for (atom, e) in mono {
                match map_atom(atom, f)? {
                    None => kept.push((atom.clone(), *e)),
                    Some(x) => replaced.push((x, *e)),
                }
            }
            let mut term = Expr::from_monomial(kept, c.clone());
            for (x, e) in replaced {
                let p = if e < 0 { x.recip()?.powi(-e as i64) } else { x.powi(e as i64) };
                term = &term * &p;
            }
            parts.push(term);
        }
        Ok(Expr::sum(parts.iter()))
    }

    /// Substitutes symbols by expressions.
    pub fn try_subs(&self, map: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        self.map_atoms(&mut |atom| match atom {
            Atom::Sym(s) => map.get(&**s).cloned().map(Ok),
            _ => None,
        })
    }

    /// Substitutes symbols by expressions.
    ///
    /// Panics if a denominator becomes identically zero; use [`Expr::try_subs`]
    /// to handle that case.
    pub fn subs(&self, map: &BTreeMap<String, Expr>) -> Expr {
        self.try_subs(map).expect("substitution produced a zero denominator")
    }

    pub fn subs1(&self, name: &str, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(name.to_string(), value.clone());
        self.subs(&map)
    }

    /// Replaces declared-function applications via `f(name, derivs, args)`.
    pub fn try_replace_calls(
        &self,
        f: &dyn Fn(&str, &[u32], &[Expr]) -> Option<Result<Expr, ExprError>>,
    ) -> Result<Expr, ExprError> {
        self.map_atoms(&mut |atom| match atom {
            Atom::Opaque(call) => {
                let args: Result<Vec<Expr>, ExprError> =
                    call.args.iter().map(|a| a.try_replace_calls(f)).collect();
                let args = match args {
                    Ok(a) => a,
                    Err(e) => return Some(Err(e)),
                };
                match f(&call.name, &call.derivs, &args) {
                    Some(r) => Some(r),
                    None if args == call.args => None,
                    None => Some(Ok(Expr::call_derivative(&call.name, call.derivs.clone(), args))),
                }
            }
            _ => None,
        })
    }
}

/// `None` when the atom is unchanged.
fn map_atom(
    atom: &Atom,
    f: &mut dyn FnMut(&Atom) -> Option<Result<Expr, ExprError>>,
) -> Result<Option<Expr>, ExprError> {
    if let Some(r) = f(atom) {
        return r.map(Some);
    }
    Ok(match atom {
        Atom::Sym(_) => None,
        Atom::Opaque(call) => {
            let mut changed = false;
            let mut args = Vec::with_capacity(call.args.len());
            for a in &call.args {
                let m = a.map_atoms(f)?;
                changed |= &m != a;
                args.push(m);
            }
            changed.then(|| Expr::call_derivative(&call.name, call.derivs.clone(), args))
        }
        Atom::Func(func, a) => {
            let m = a.map_atoms(f)?;
            (&m != a).then(|| Expr::func(*func, m))
        }
        Atom::Recip(p) => {
            let m = p.map_atoms(f)?;
            if &m == p {
                None
            } else {
                Some(m.recip()?)
            }
        }
        Atom::Root(p, n) => {
            let m = p.map_atoms(f)?;
            (&m != p).then(|| m.root(*n))
        }
    })
}
