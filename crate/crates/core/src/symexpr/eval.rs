//! Numeric evaluation.

use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use super::expr::{Atom, Expr, Func, Rational};
use super::ExprError;

/// Numeric implementations of declared functions and their partials.
pub trait FunctionImpl {
    /// `None` when `name` (with the given derivative multi-index) is not provided.
    fn call(&self, name: &str, derivs: &[u32], args: &[f64]) -> Option<f64>;
}

/// No declared functions.
pub struct NoFunctions;

impl FunctionImpl for NoFunctions {
    fn call(&self, _: &str, _: &[u32], _: &[f64]) -> Option<f64> {
        None
    }
}

impl<F: Fn(&str, &[u32], &[f64]) -> Option<f64>> FunctionImpl for F {
    fn call(&self, name: &str, derivs: &[u32], args: &[f64]) -> Option<f64> {
        self(name, derivs, args)
    }
}

/// A function given by an expression in its formal parameters.
#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub params: Vec<String>,
    pub body: Expr,
}

/// Declared functions defined by expressions; partials are symbolic.
#[derive(Clone, Debug, Default)]
pub struct FunctionTable {
    defs: BTreeMap<String, FunctionDef>,
}

impl FunctionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, name: &str, params: Vec<String>, body: Expr) {
        self.defs.insert(name.to_string(), FunctionDef { params, body });
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    fn derivative_body(&self, name: &str, derivs: &[u32]) -> Option<Expr> {
        let def = self.defs.get(name)?;
        if def.params.len() != derivs.len() {
            return None;
        }
        let mut body = def.body.clone();
        for (k, &count) in derivs.iter().enumerate() {
            for _ in 0..count {
                body = body.diff(&def.params[k]);
            }
        }
        Some(body)
    }

    /// Replaces every call of a defined function by its body.
    pub fn inline(&self, e: &Expr) -> Result<Expr, ExprError> {
        e.try_replace_calls(&|name, derivs, args| {
            let def = self.defs.get(name)?;
            let body = self.derivative_body(name, derivs)?;
            let map: BTreeMap<String, Expr> =
                def.params.iter().cloned().zip(args.iter().cloned()).collect();
            Some(body.try_subs(&map))
        })
    }
}

impl FunctionImpl for FunctionTable {
    fn call(&self, name: &str, derivs: &[u32], args: &[f64]) -> Option<f64> {
        let def = self.defs.get(name)?;
        let body = self.derivative_body(name, derivs)?;
        let env: HashMap<&str, f64> =
            def.params.iter().map(|s| s.as_str()).zip(args.iter().copied()).collect();
        body.eval_with(&|s| env.get(s).copied(), &NoFunctions).ok()
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn check(v: f64, what: &dyn Fn() -> String) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain(what()))
    }
}

pub(crate) fn eval_atom(
    atom: &Atom,
    vars: &dyn Fn(&str) -> Option<f64>,
    funcs: &dyn FunctionImpl,
) -> Result<f64, ExprError> {
    match atom {
        Atom::Sym(s) => vars(s).ok_or_else(|| ExprError::Unbound(s.to_string())),
        Atom::Opaque(call) => {
            let args: Result<Vec<f64>, ExprError> =
                call.args.iter().map(|a| a.eval_with(vars, funcs)).collect();
            let args = args?;
            funcs
                .call(&call.name, &call.derivs, &args)
                .ok_or_else(|| ExprError::UnknownFunction(call.name.to_string()))
        }
        Atom::Func(f, a) => {
            let x = a.eval_with(vars, funcs)?;
            match f {
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Exp => check(x.exp(), &|| format!("exp({a})")),
                Func::Log => {
                    if x <= 0.0 {
                        Err(ExprError::Domain(format!("log({a})")))
                    } else {
                        Ok(x.ln())
                    }
                }
            }
        }
        Atom::Recip(p) => {
            let x = p.eval_with(vars, funcs)?;
            if x == 0.0 {
                Err(ExprError::Domain(format!("1/({p})")))
            } else {
                Ok(1.0 / x)
            }
        }
        Atom::Root(p, n) => {
            let x = p.eval_with(vars, funcs)?;
            if x < 0.0 && n % 2 == 0 {
                Err(ExprError::Domain(format!("({p})^(1/{n})")))
            } else if x < 0.0 {
                Ok(-(-x).powf(1.0 / *n as f64))
            } else {
                Ok(x.powf(1.0 / *n as f64))
            }
        }
    }
}

impl Expr {
    /// Evaluates with a symbol lookup and declared-function implementations.
    pub fn eval_with(
        &self,
        vars: &dyn Fn(&str) -> Option<f64>,
        funcs: &dyn FunctionImpl,
    ) -> Result<f64, ExprError> {
        Ok(self.eval_terms(vars, funcs)?.0)
    }

    /// Evaluates with a binding map.
    pub fn eval(
        &self,
        bindings: &HashMap<String, f64>,
        funcs: &dyn FunctionImpl,
    ) -> Result<f64, ExprError> {
        self.eval_with(&|s| bindings.get(s).copied(), funcs)
    }

    /// Returns the value and the sum of absolute term values.
    pub(crate) fn eval_terms(
        &self,
        vars: &dyn Fn(&str) -> Option<f64>,
        funcs: &dyn FunctionImpl,
    ) -> Result<(f64, f64), ExprError> {
        let mut total = 0.0;
        let mut scale = 0.0;
        for (mono, c) in self.terms().iter() {
            let mut v = rational_to_f64(c);
            for (atom, e) in mono {
                let x = eval_atom(atom, vars, funcs)?;
                if *e < 0 && x == 0.0 {
                    return Err(ExprError::Domain(format!("division by zero in {self}")));
                }
                v *= x.powi(*e);
            }
            total += v;
            scale += v.abs();
        }
        if !total.is_finite() {
            return Err(ExprError::Domain(format!("non-finite value of {self}")));
        }
        Ok((total, scale))
    }

    /// Compiles for repeated evaluation over a fixed symbol layout.
    ///
    /// Calls of functions in `funcs` are inlined; any other call is an error.
    pub fn compile(&self, slots: &[&str], funcs: &FunctionTable) -> Result<Compiled, ExprError> {
        let inlined = funcs.inline(self)?;
        let index: HashMap<&str, usize> = slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Compiled { root: compile_poly(&inlined, &index)? })
    }
}

#[derive(Clone, Debug)]
enum Node {
    Poly(Vec<(f64, Vec<(Node, i32)>)>),
    Slot(usize),
    Func(Func, Box<Node>),
    Recip(Box<Node>),
    Root(Box<Node>, u32),
}

/// Expression compiled against a slot layout.
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
}

fn compile_poly(e: &Expr, index: &HashMap<&str, usize>) -> Result<Node, ExprError> {
    let mut terms = Vec::with_capacity(e.num_terms());
    for (mono, c) in e.terms().iter() {
        let mut factors = Vec::with_capacity(mono.len());
        for (atom, k) in mono {
            factors.push((compile_atom(atom, index)?, *k));
        }
        terms.push((rational_to_f64(c), factors));
    }
    Ok(Node::Poly(terms))
}

fn compile_atom(atom: &Atom, index: &HashMap<&str, usize>) -> Result<Node, ExprError> {
    Ok(match atom {
        Atom::Sym(s) => Node::Slot(*index.get(&**s).ok_or_else(|| ExprError::Unbound(s.to_string()))?),
        Atom::Opaque(call) => return Err(ExprError::UnknownFunction(call.name.to_string())),
        Atom::Func(f, a) => Node::Func(*f, Box::new(compile_poly(a, index)?)),
        Atom::Recip(p) => Node::Recip(Box::new(compile_poly(p, index)?)),
        Atom::Root(p, n) => Node::Root(Box::new(compile_poly(p, index)?), *n),
    })
}

fn run(node: &Node, slots: &[f64]) -> f64 {
    match node {
        Node::Poly(terms) => terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, (n, k)| acc * run(n, slots).powi(*k)))
            .sum(),
        Node::Slot(i) => slots[*i],
        Node::Func(f, a) => {
            let x = run(a, slots);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x > 0.0 {
                        x.ln()
                    } else {
                        f64::NAN
                    }
                }
            }
        }
        Node::Recip(a) => 1.0 / run(a, slots),
        Node::Root(a, n) => {
            let x = run(a, slots);
            if x < 0.0 && n % 2 == 1 {
                -(-x).powf(1.0 / *n as f64)
            } else {
                x.powf(1.0 / *n as f64)
            }
        }
    }
}

impl Compiled {
    /// Evaluates at slot values; domain violations show up as non-finite results.
    pub fn eval(&self, slots: &[f64]) -> f64 {
        run(&self.root, slots)
    }
}
