//! Exact symbolic scalar expressions.
//!
//! Expressions are kept in a canonical expanded form with exact rational
//! coefficients; see [`Expr`]. Zero testing combines that canonical form
//! with a seeded numeric probe ([`is_zero`]).

mod diff;
mod eval;
mod expr;
mod matrix;
mod parse;
mod print;
mod zero;

use thiserror::Error;

pub use eval::{Compiled, FunctionDef, FunctionImpl, FunctionTable, NoFunctions};
pub use expr::{Atom, Expr, Func, OpaqueCall, Rational};
pub use matrix::{numeric_rank, Echelon, LinearSolution, SymMatrix, Tristate};
pub use parse::{parse, parse_open, OpenScope, Scope};
pub use print::latex_name;
pub use zero::{
    is_zero, is_zero_with, probe_seed, set_probe_seed, ProbeConfig, ProbePoint, ZeroTest,
    DEFAULT_PROBE_SEED,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared symbol '{0}'")]
    Undeclared(String),
    #[error("unbound symbol '{0}'")]
    Unbound(String),
    #[error("no implementation for function '{0}'")]
    UnknownFunction(String),
    #[error("domain error in {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent out of range")]
    Overflow,
}

#[cfg(test)]
mod tests;
