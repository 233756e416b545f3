//! Zero testing: exact canonical check, then a randomized numeric probe.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::FunctionImpl;
use super::expr::{Atom, Expr, Monomial, Rational, Terms};

/// Outcome of a zero test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZeroTest {
    Zero,
    NonZero,
    Unknown,
}

pub const DEFAULT_PROBE_SEED: u64 = 0x5eed_2024;

static PROBE_SEED: AtomicU64 = AtomicU64::new(DEFAULT_PROBE_SEED);

/// Sets the process-wide seed used by [`is_zero`].
pub fn set_probe_seed(seed: u64) {
    PROBE_SEED.store(seed, Ordering::Relaxed);
}

pub fn probe_seed() -> u64 {
    PROBE_SEED.load(Ordering::Relaxed)
}

/// Parameters of the numeric probe.
#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub points: usize,
    pub eps: f64,
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { points: 8, eps: 1e-9, seed: probe_seed(), max_retries: 16 }
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Random point plus random smooth functions for every declared function.
///
/// Symbols sample uniformly from `[-2,-0.5] ∪ [0.5,2]`; a function is a short
/// trigonometric sum so that all partial derivatives are exact.
#[derive(Clone, Debug)]
pub struct ProbePoint {
    seed: u64,
    values: HashMap<String, f64>,
}

impl ProbePoint {
    pub fn new(seed: u64) -> Self {
        ProbePoint { seed, values: HashMap::new() }
    }

    /// The sampled value of a symbol, drawn deterministically from its name.
    pub fn value(&self, name: &str) -> f64 {
        if let Some(v) = self.values.get(name) {
            return *v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(name.as_bytes()));
        let mag: f64 = rng.gen_range(0.5..2.0);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    pub fn eval(&self, e: &Expr) -> Result<f64, super::ExprError> {
        e.eval_with(&|s| Some(self.value(s)), self)
    }
}

impl FunctionImpl for ProbePoint {
    fn call(&self, name: &str, derivs: &[u32], args: &[f64]) -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed.rotate_left(17) ^ fnv1a(name.as_bytes()) ^ (args.len() as u64),
        );
        let order: u32 = derivs.iter().sum();
        let offset: f64 = rng.gen_range(0.5..1.5);
        let mut v = if order == 0 { offset } else { 0.0 };
        for _ in 0..3 {
            let amp: f64 = rng.gen_range(0.5..1.5);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let w: Vec<f64> = (0..args.len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let arg: f64 = w.iter().zip(args).map(|(a, b)| a * b).sum::<f64>() + phase;
            let factor: f64 = w.iter().zip(derivs).map(|(wk, d)| wk.powi(*d as i32)).product();
            v += amp * factor * (arg + order as f64 * std::f64::consts::FRAC_PI_2).sin();
        }
        Some(v)
    }
}

/// Multiplies through by the top-level reciprocal atoms.
fn clear_denominators(e: &Expr) -> Expr {
    let mut maxpow: BTreeMap<Expr, i32> = BTreeMap::new();
    for mono in e.terms().keys() {
        for (atom, k) in mono {
            if let Atom::Recip(p) = atom {
                let slot = maxpow.entry(p.clone()).or_insert(0);
                *slot = (*slot).max(*k);
            }
        }
    }
    let mut parts = Vec::with_capacity(e.num_terms());
    for (mono, c) in e.terms().iter() {
        let mut kept: Monomial = Vec::new();
        let mut own: BTreeMap<&Expr, i32> = BTreeMap::new();
        for (atom, k) in mono {
            if let Atom::Recip(p) = atom {
                own.insert(p, *k);
            } else {
                kept.push((atom.clone(), *k));
            }
        }
        let mut t = Terms::new();
        t.insert(kept, Rational::one());
        let mut term = Expr::from_terms(t).scale(c);
        for (p, k) in &maxpow {
            let missing = k - own.get(p).copied().unwrap_or(0);
            if missing > 0 {
                term = &term * &p.powi(missing as i64);
            }
        }
        parts.push(term);
    }
    Expr::sum(parts.iter())
}

/// Zero test with the process-wide seed.
pub fn is_zero(e: &Expr) -> ZeroTest {
    is_zero_with(e, &ProbeConfig::default())
}

pub fn is_zero_with(e: &Expr, cfg: &ProbeConfig) -> ZeroTest {
    if e.is_zero_canonical() {
        return ZeroTest::Zero;
    }
    if e.is_monomial() {
        return ZeroTest::NonZero;
    }
    let target = if e.has_recip() {
        let cleared = clear_denominators(e);
        if cleared.is_zero_canonical() {
            return ZeroTest::Zero;
        }
        if cleared.is_monomial() {
            return ZeroTest::NonZero;
        }
        cleared
    } else {
        e.clone()
    };
    let mut seed = cfg.seed ^ fnv1a(b"probe");
    let mut retries = 0;
    let mut good = 0;
    while good < cfg.points {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let point = ProbePoint::new(seed);
        match target.eval_terms(&|s| Some(point.value(s)), &point) {
            Ok((v, scale)) => {
                if v.abs() > cfg.eps * scale.max(1.0) {
                    return ZeroTest::NonZero;
                }
                good += 1;
            }
            Err(_) => {
                retries += 1;
                if retries > cfg.max_retries {
                    return ZeroTest::Unknown;
                }
            }
        }
    }
    ZeroTest::Unknown
}

impl Expr {
    pub fn is_zero(&self) -> ZeroTest {
        is_zero(self)
    }

    /// True only when the zero test proves `self == other` exactly or
    /// the probe finds no difference.
    pub fn probably_equals(&self, other: &Expr) -> bool {
        is_zero(&(self - other)) != ZeroTest::NonZero
    }
}
