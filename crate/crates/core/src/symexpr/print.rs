//! Plain-text and LaTeX printers. The text form parses back to the same
//! canonical expression.

use std::fmt::{self, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::expr::{Atom, Expr, Func, OpaqueCall, Rational};

fn needs_parens(e: &Expr) -> bool {
    if e.num_terms() > 1 {
        return true;
    }
    match e.terms().iter().next() {
        None => false,
        Some((m, c)) => {
            let coeff_plain = c.is_one() || (m.is_empty() && c.is_integer() && !c.is_negative());
            !(coeff_plain && (m.len() <= 1 && m.iter().all(|(_, k)| *k == 1)))
        }
    }
}

fn write_call(out: &mut String, call: &OpaqueCall) {
    out.push_str(&call.name);
    let order = call.order();
    if order > 0 {
        if call.args.len() == 1 {
            for _ in 0..order {
                out.push('\'');
            }
        } else {
            let idx: Vec<String> = call
                .derivs
                .iter()
                .enumerate()
                .flat_map(|(k, &n)| std::iter::repeat(k.to_string()).take(n as usize))
                .collect();
            let _ = write!(out, "'[{}]", idx.join(","));
        }
    }
    out.push('(');
    for (i, a) in call.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{a}");
    }
    out.push(')');
}

/// Text of an atom raised to a positive power `k`.
fn atom_power(atom: &Atom, k: i32) -> String {
    let mut s = String::new();
    match atom {
        Atom::Sym(name) => s.push_str(name),
        Atom::Opaque(call) => write_call(&mut s, call),
        Atom::Func(f, a) => {
            let _ = write!(s, "{}({a})", f.name());
        }
        Atom::Recip(p) => {
            let _ = write!(s, "({p})^-{k}");
            return s;
        }
        Atom::Root(p, n) => {
            if *n == 2 && k == 1 {
                let _ = write!(s, "sqrt({p})");
            } else if needs_parens(p) {
                let _ = write!(s, "({p})^({k}/{n})");
            } else {
                let _ = write!(s, "{p}^({k}/{n})");
            }
            return s;
        }
    }
    if k != 1 {
        let _ = write!(s, "^{k}");
    }
    s
}

fn write_term(out: &mut String, mono: &[(Atom, i32)], c: &Rational, first: bool) {
    let neg = c.is_negative();
    if first {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    let c = c.abs();
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let mut recips: Vec<String> = Vec::new();
    if !c.numer().is_one() || mono.iter().all(|(a, k)| *k < 0 || matches!(a, Atom::Recip(_))) {
        num.push(c.numer().to_string());
    }
    if c.denom() != &BigInt::one() {
        den.push(c.denom().to_string());
    }
    for (atom, k) in mono {
        match atom {
            Atom::Recip(p) if *k == 1 => recips.push(format!("({p})")),
            Atom::Recip(_) => num.push(atom_power(atom, *k)),
            _ if *k > 0 => num.push(atom_power(atom, *k)),
            _ => den.push(atom_power(atom, -*k)),
        }
    }
    out.push_str(&num.join("*"));
    match den.len() {
        0 => {}
        1 => {
            let _ = write!(out, "/{}", den[0]);
        }
        _ => {
            let _ = write!(out, "/({})", den.join("*"));
        }
    }
    for r in recips {
        let _ = write!(out, "/{r}");
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero_canonical() {
            return f.write_str("0");
        }
        let mut out = String::new();
        for (i, (mono, c)) in self.terms().iter().enumerate() {
            write_term(&mut out, mono, c, i == 0);
        }
        f.write_str(&out)
    }
}

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda",
    "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega", "Gamma",
    "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Phi", "Psi", "Omega",
];

/// LaTeX for an identifier: `u_t_x` becomes `u_{t x}`, Greek names get macros.
pub fn latex_name(name: &str) -> String {
    let mut parts = name.split('_');
    let head = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.filter(|p| !p.is_empty()).collect();
    let split = head.find(|c: char| c.is_ascii_digit()).filter(|&i| i > 0);
    let (stem, digits) = match split {
        Some(i) => (&head[..i], &head[i..]),
        None => (head, ""),
    };
    let mut s = if GREEK.contains(&stem) { format!("\\{stem}") } else { stem.to_string() };
    let mut subs: Vec<String> = Vec::new();
    if !digits.is_empty() {
        subs.push(digits.to_string());
    }
    subs.extend(rest.iter().map(|p| latex_name(p)));
    if !subs.is_empty() {
        let _ = write!(s, "_{{{}}}", subs.join(" "));
    }
    s
}

fn latex_atom(atom: &Atom, k: i32) -> String {
    let base = match atom {
        Atom::Sym(name) => latex_name(name),
        Atom::Opaque(call) => {
            let mut s = latex_name(&call.name);
            let order = call.order();
            if order > 0 && call.args.len() == 1 {
                s.push_str(&"'".repeat(order as usize));
            } else if order > 0 {
                let idx: Vec<String> = call
                    .derivs
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &n)| std::iter::repeat(k.to_string()).take(n as usize))
                    .collect();
                let _ = write!(s, "_{{,{}}}", idx.join(""));
            }
            let args: Vec<String> = call.args.iter().map(|a| a.to_latex()).collect();
            let _ = write!(s, "({})", args.join(", "));
            s
        }
        Atom::Func(f, a) => {
            let name = match f {
                Func::Sin => "\\sin",
                Func::Cos => "\\cos",
                Func::Exp => "\\exp",
                Func::Log => "\\log",
            };
            format!("{name}\\left({}\\right)", a.to_latex())
        }
        Atom::Recip(p) => format!("\\left({}\\right)", p.to_latex()),
        Atom::Root(p, n) => {
            let inner = if *n == 2 {
                format!("\\sqrt{{{}}}", p.to_latex())
            } else {
                format!("\\sqrt[{n}]{{{}}}", p.to_latex())
            };
            if k == 1 {
                return inner;
            }
            return format!("{{{inner}}}^{{{k}}}");
        }
    };
    if k == 1 {
        base
    } else if matches!(atom, Atom::Func(..)) || matches!(atom, Atom::Opaque(..)) {
        format!("\\left({base}\\right)^{{{k}}}")
    } else {
        format!("{base}^{{{k}}}")
    }
}

impl Expr {
    pub fn to_latex(&self) -> String {
        if self.is_zero_canonical() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (mono, c)) in self.terms().iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let c = c.abs();
            let mut num: Vec<String> = Vec::new();
            let mut den: Vec<String> = Vec::new();
            for (atom, k) in mono {
                match atom {
                    Atom::Recip(_) => den.push(latex_atom(atom, *k)),
                    _ if *k > 0 => num.push(latex_atom(atom, *k)),
                    _ => den.push(latex_atom(atom, -*k)),
                }
            }
            if !c.numer().is_one() || num.is_empty() {
                num.insert(0, c.numer().to_string());
            }
            if c.denom() != &BigInt::one() {
                den.insert(0, c.denom().to_string());
            }
            let n = num.join(" ");
            if den.is_empty() {
                out.push_str(&n);
            } else {
                let _ = write!(out, "\\frac{{{n}}}{{{}}}", den.join(" "));
            }
        }
        out
    }
}
