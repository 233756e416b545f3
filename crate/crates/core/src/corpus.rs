//! Seeded random regular Lagrangians, quadratic in the velocities and linear
//! in the contact variables.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Chart, ChartSpec};
use crate::symexpr::Expr;

#[derive(Clone, Debug)]
pub struct Sample {
    pub label: String,
    pub chart: Chart,
    pub lagrangian: Expr,
}

const BASES: [&str; 2] = ["t", "x"];
const FIELDS: [&str; 2] = ["u", "w"];

fn small(rng: &mut ChaCha8Rng) -> Expr {
    let num = rng.gen_range(-3..=3);
    let den = *[1, 2, 3].choose(rng).expect("nonempty");
    Expr::frac(num, den)
}

/// `½ vᵀAv + Σ b v y + ½ Σ c y² + Σ_mu (e_mu + f_mu·v) s^mu` with `A`
/// strictly diagonally dominant, so the velocity Hessian `A` is invertible.
pub fn random_quadratic(seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=2);
    let n = rng.gen_range(1..=2);
    let chart = ChartSpec::new(&BASES[..m], &FIELDS[..n]).lagrangian_chart().expect("fixed names are distinct");
    let size = n * m;
    let vel: Vec<Expr> = (0..size).map(|k| chart.symbol(chart.velocity(k / m, k % m).expect("lagrangian chart"))).collect();
    let fields: Vec<Expr> = (0..n).map(|i| chart.symbol(chart.field(i))).collect();
    let contact: Vec<Expr> = (0..m).map(|mu| chart.symbol(chart.contact(mu).expect("lagrangian chart"))).collect();

    let mut l = Expr::zero();
    for r in 0..size {
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let diag = Expr::int(sign * rng.gen_range(1..=4));
        l = l + Expr::frac(1, 2) * diag * vel[r].powi(2);
        for c in r + 1..size {
            let off = Expr::frac(rng.gen_range(-1..=1), 8);
            l = l + off * &vel[r] * &vel[c];
        }
    }
    for v in &vel {
        if rng.gen_bool(0.5) {
            l = l + small(&mut rng) * v * &fields[rng.gen_range(0..n)];
        }
    }
    for y in &fields {
        l = l + Expr::frac(1, 2) * small(&mut rng) * y.powi(2);
    }
    for s in &contact {
        let mut coeff = small(&mut rng);
        for v in &vel {
            if rng.gen_bool(0.3) {
                coeff = coeff + small(&mut rng) * v;
            }
        }
        l = l + coeff * s;
    }
    Sample { label: format!("quadratic-{seed}"), chart, lagrangian: l }
}

pub fn random_corpus(seed: u64, count: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_quadratic(rng.gen())).collect()
}
