//! Infix expression parser.
//!
//! Grammar: `+ - * / ^`, parentheses, decimal and integer literals (read as
//! exact rationals), built-ins `sin cos tan exp log sqrt sinh cosh tanh`, and
//! declared functions `f(args)` with derivative marks `f'(t)`, `f''(t)` or
//! `f'[0,1](x,y)` (indices of the differentiated arguments).

use num_bigint::BigInt;
use num_traits::Zero;

use super::expr::{Expr, Rational};
use super::ExprError;

/// Names an expression may refer to.
pub trait Scope {
    fn is_symbol(&self, name: &str) -> bool;
    fn function_arity(&self, name: &str) -> Option<usize>;
    /// Whether calls of undeclared names are accepted as new functions.
    fn open_functions(&self) -> bool {
        false
    }
}

/// Accepts every identifier as a symbol and every call as a declared function.
pub struct OpenScope;

impl Scope for OpenScope {
    fn is_symbol(&self, _: &str) -> bool {
        true
    }
    fn function_arity(&self, _: &str) -> Option<usize> {
        None
    }
    fn open_functions(&self) -> bool {
        true
    }
}

const BUILTINS: &[&str] = &["sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut int_part = String::new();
            let mut frac_part = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                int_part.push(chars[i]);
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac_part.push(chars[i]);
                    i += 1;
                }
            }
            let mut exp10: i64 = 0;
            if i + 1 < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if chars[j] == '+' || chars[j] == '-' {
                    if chars[j] == '-' {
                        sign = -1;
                    }
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    let mut digits = String::new();
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        digits.push(chars[j]);
                        j += 1;
                    }
                    exp10 = sign * digits.parse::<i64>().map_err(|_| ExprError::Syntax {
                        pos: start,
                        msg: "exponent too large".into(),
                    })?;
                    i = j;
                }
            }
            let digits = format!("{int_part}{frac_part}");
            let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
            let scale = exp10 - frac_part.len() as i64;
            let ten = BigInt::from(10);
            let r = if scale >= 0 {
                Rational::from_integer(num * num_traits::pow(ten, scale as usize))
            } else {
                Rational::new(num, num_traits::pow(ten, (-scale) as usize))
            };
            out.push((Tok::Num(r), start));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
            }
            out.push((Tok::Ident(s), start));
        } else if "+-*/^(),'[]".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: i, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
    scope: &'a dyn Scope,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.here(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let pos = self.here();
                let rhs = self.unary()?;
                acc = acc.checked_div(&rhs).map_err(|_| ExprError::Syntax {
                    pos,
                    msg: "division by zero".into(),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            let pos = self.here();
            let exponent = self.unary()?;
            return base.pow(&exponent).map_err(|e| ExprError::Syntax { pos, msg: e.to_string() });
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(Expr::rational(r))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let mut marks: Vec<usize> = Vec::new();
                let mut primes = 0usize;
                while self.eat('\'') {
                    primes += 1;
                }
                if primes == 1 && self.eat('[') {
                    loop {
                        match self.peek().cloned() {
                            Some(Tok::Num(r)) if r.is_integer() => {
                                self.pos += 1;
                                marks.push(r.to_integer().try_into().map_err(|_| ExprError::Syntax {
                                    pos: start,
                                    msg: "bad derivative index".into(),
                                })?);
                            }
                            _ => return self.err("expected derivative index"),
                        }
                        if !self.eat(',') {
                            break;
                        }
                    }
                    self.expect(']')?;
                } else {
                    marks = vec![0; primes];
                }
                let is_call = self.peek() == Some(&Tok::Op('('));
                if !is_call {
                    if !marks.is_empty() {
                        return self.err("derivative marks need an argument list");
                    }
                    if BUILTINS.contains(&name.as_str()) {
                        return self.err(format!("'{name}' needs an argument"));
                    }
                    if !self.scope.is_symbol(&name) {
                        return Err(ExprError::Undeclared(name));
                    }
                    return Ok(Expr::symbol(&name));
                }
                let args = self.args()?;
                if BUILTINS.contains(&name.as_str()) {
                    if !marks.is_empty() {
                        return Err(ExprError::Syntax { pos: start, msg: format!("cannot mark built-in '{name}'") });
                    }
                    if args.len() != 1 {
                        return Err(ExprError::Syntax { pos: start, msg: format!("'{name}' takes one argument") });
                    }
                    return builtin(&name, args.into_iter().next().unwrap())
                        .map_err(|e| ExprError::Syntax { pos: start, msg: e.to_string() });
                }
                match self.scope.function_arity(&name) {
                    Some(arity) if arity != args.len() => {
                        return Err(ExprError::Syntax {
                            pos: start,
                            msg: format!("'{name}' takes {arity} argument(s), got {}", args.len()),
                        })
                    }
                    None if !self.scope.open_functions() => {
                        return Err(ExprError::Undeclared(name));
                    }
                    _ => {}
                }
                let mut derivs = vec![0u32; args.len()];
                for k in marks {
                    if k >= args.len() {
                        return Err(ExprError::Syntax { pos: start, msg: "derivative index out of range".into() });
                    }
                    derivs[k] += 1;
                }
                Ok(Expr::call_derivative(&name, derivs, args))
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }
}

fn builtin(name: &str, a: Expr) -> Result<Expr, ExprError> {
    let half = Expr::frac(1, 2);
    Ok(match name {
        "sin" => Expr::sin(a),
        "cos" => Expr::cos(a),
        "tan" => Expr::sin(a.clone()).checked_div(&Expr::cos(a))?,
        "exp" => Expr::exp(a),
        "log" => Expr::log(a),
        "sqrt" => Expr::sqrt(a),
        "sinh" => &(&Expr::exp(a.clone()) - &Expr::exp(-a)) * &half,
        "cosh" => &(&Expr::exp(a.clone()) + &Expr::exp(-a)) * &half,
        "tanh" => {
            let ep = Expr::exp(a.clone());
            let em = Expr::exp(-a);
            (&ep - &em).checked_div(&(&ep + &em))?
        }
        _ => unreachable!("not a built-in"),
    })
}

/// Parses `text`, resolving names through `scope`.
pub fn parse(text: &str, scope: &dyn Scope) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, len: text.len(), scope };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses with every identifier accepted.
pub fn parse_open(text: &str) -> Result<Expr, ExprError> {
    parse(text, &OpenScope)
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_open(s)
    }
}

