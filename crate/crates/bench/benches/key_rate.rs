use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pcscs_core::bounds::{chernoff_upper, kato_upper_expectation, kato_upper_observation};
use pcscs_core::optimize::{self};
use pcscs_core::security;
use pcscs_core::sim;
use pcscs_core::{BoundInput, ChannelParams, Mode, ProtocolParams, SearchSpec, SimConfig};

fn bench_bounds(c: &mut Criterion) {
    let mut g = c.benchmark_group("bounds");
    let input = BoundInput::new(4.0e4, 1e13, 2.8e-22).unwrap();
    g.bench_function("kato_upper_expectation", |b| {
        b.iter(|| kato_upper_expectation(black_box(&input)))
    });
    g.bench_function("kato_upper_observation", |b| {
        b.iter(|| kato_upper_observation(black_box(3.3e6), 1e13, 2.8e-22).unwrap())
    });
    g.bench_function("chernoff_upper", |b| {
        b.iter(|| chernoff_upper(black_box(7.7e5), 2.8e-22).unwrap())
    });
    g.finish();
}

fn bench_chain(c: &mut Criterion) {
    let ch = ChannelParams::reference(40.0).unwrap();
    let p = ProtocolParams::new(3e-4, 0.15, 1e13, 1.1, 1e-10).unwrap();
    c.bench_function("finite_key_chain", |b| {
        b.iter(|| security::key_rate_finite(black_box(&ch), black_box(&p)).unwrap())
    });
}

fn bench_optimizer(c: &mut Criterion) {
    let ch = ChannelParams::reference(40.0).unwrap();
    let spec = SearchSpec {
        coarse_grid: 15,
        refine_rounds: 2,
        ..SearchSpec::default()
    };
    c.bench_function("optimize_point_40db", |b| {
        b.iter(|| {
            optimize::optimize_point(black_box(&ch), 1e13, 1e-10, 1.1, &spec, Mode::Finite).unwrap()
        })
    });
}

fn bench_simulator(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulator");
    g.sample_size(10);
    for windows in [1_000_000u64, 10_000_000] {
        let ch = ChannelParams::reference(20.0).unwrap();
        let p = ProtocolParams::new(0.05, 0.1, windows as f64, 1.1, 1e-10).unwrap();
        let cfg = SimConfig::new(windows, p, ch, 42).unwrap();
        g.bench_with_input(BenchmarkId::new("windows", windows), &cfg, |b, cfg| {
            b.iter(|| sim::simulate(black_box(cfg)))
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_bounds,
    bench_chain,
    bench_optimizer,
    bench_simulator
);
criterion_main!(benches);
