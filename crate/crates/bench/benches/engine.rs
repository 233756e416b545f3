use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use multicontact::simulate::{integrate_ode, integrate_wave, residual_norms};
use multicontact::{parse, LagrangianSystem, OdeSystem, WaveSystem};
use multicontact_bench::{maxwell, oscillator, string};

fn symbolic(c: &mut Criterion) {
    let (l, chart) = maxwell(4);
    let text = l.to_string();
    c.bench_function("parse_maxwell_4d", |b| b.iter(|| parse(&text, &chart).unwrap()));
    c.bench_function("diff_maxwell_4d", |b| b.iter(|| l.diff("A1_0")));
}

fn structure(c: &mut Criterion) {
    let mut g = c.benchmark_group("classify");
    g.sample_size(10);
    let (osc, _, _) = oscillator();
    g.bench_function("oscillator", |b| {
        b.iter_batched(|| (osc.lagrangian().clone(), osc.chart().clone()), |(l, ch)| LagrangianSystem::new(l, ch).unwrap(), BatchSize::SmallInput)
    });
    let (l, chart) = maxwell(2);
    g.bench_function("maxwell_2d", |b| b.iter_batched(|| (l.clone(), chart.clone()), |(l, ch)| LagrangianSystem::new(l, ch).unwrap(), BatchSize::SmallInput));
    g.finish();
    let (s, _, _) = string(16);
    c.bench_function("derive_string", |b| b.iter(|| s.equations()));
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let (osc, bindings, initial) = oscillator();
    let ode = OdeSystem::lagrangian(&osc, &bindings).unwrap();
    g.bench_function("oscillator_20k_steps", |b| b.iter(|| integrate_ode(&ode, &initial, 20.0, 1e-3).unwrap()));
    let (s, bindings, state) = string(128);
    let wave = WaveSystem::lagrangian(&s, &bindings).unwrap();
    let dt = 0.5 * state.grid.dx;
    g.bench_function("string_128_to_t1", |b| b.iter(|| integrate_wave(&wave, &state, 1.0, dt, 4).unwrap()));
    let traj = integrate_wave(&wave, &state, 1.0, dt, 4).unwrap();
    let eqs = s.equations();
    g.bench_function("string_128_residuals", |b| b.iter(|| residual_norms(&traj, &eqs, s.chart(), &bindings).unwrap()));
    g.finish();
}

criterion_group!(benches, symbolic, structure, simulation);
criterion_main!(benches);
