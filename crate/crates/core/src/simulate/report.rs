//! Run reports and deterministic number formatting.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// `x` with 17 significant digits, trailing zeros trimmed (`%.17g` style).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => out.push_str(&i.to_string()),
            (_, Some(u), _) => out.push_str(&u.to_string()),
            (_, _, Some(f)) if f.is_finite() => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            for (k, (key, item)) in sorted.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < sorted.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and floats at 17 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverMetadata {
    pub method: String,
    pub dt: f64,
    pub steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub dx: Option<f64>,
    pub points: Option<usize>,
    pub boundary: Option<String>,
    pub cfl: Option<f64>,
}

/// Per-snapshot norms of one equation residual.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub linf: Vec<f64>,
    pub l2: Vec<f64>,
}

impl ResidualSeries {
    pub fn max_linf(&self) -> f64 {
        self.linf.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_l2(&self) -> f64 {
        self.l2.iter().cloned().fold(0.0, f64::max)
    }
}

/// Monitored scalars of a run with solver metadata and summary checks.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunReport {
    pub system: String,
    pub solver: SolverMetadata,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub action: Vec<f64>,
    pub residuals: Vec<ResidualSeries>,
    pub checks: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "0.10000000000000001");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(-2.5), "-2.5");
        assert_eq!(format_float(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_float(123456.0), "123456");
        assert_eq!(format_float(1e20), "1e20");
    }

    #[test]
    fn keys_are_sorted() {
        let v = serde_json::json!({"b": 1, "a": [0.5, null], "c": {}});
        assert_eq!(to_canonical_json(&v), "{\n  \"a\": [\n    0.5,\n    null\n  ],\n  \"b\": 1,\n  \"c\": {}\n}\n");
    }
}
