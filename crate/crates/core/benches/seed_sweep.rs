//! Parallel vs sequential throughput on the two data-parallel workloads:
//! seed sweeps of the set cover estimator and Monte Carlo RGMM trials.
//! Build with `--no-default-features` to measure the sequential fallback of
//! `run_seeded` itself; here both paths are exercised explicitly.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sublin_core::baselines::{mc_rgmm_expectation, ExplicitMultigraph};
use sublin_core::gen::{generate_set_system, SetKind};
use sublin_core::oracle::{EdgeId, MembershipOracle};
use sublin_core::par::{run_seeded, run_seeded_serial};
use sublin_core::setcover::{estimate_thsc, SetCoverParams};

fn thsc_seed_sweep(c: &mut Criterion) {
    let inst = generate_set_system(&SetKind::UniformRandom { p: 0.05 }, 128, 128, 7).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("thsc_seed_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            run_seeded(&seeds, |s| {
                let mut o = MembershipOracle::new(&inst.system);
                estimate_thsc(&mut o, &SetCoverParams::new(s)).chi_tilde
            })
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            run_seeded_serial(&seeds, |s| {
                let mut o = MembershipOracle::new(&inst.system);
                estimate_thsc(&mut o, &SetCoverParams::new(s)).chi_tilde
            })
        })
    });
    group.finish();
}

fn mc_rgmm_trials(c: &mut Criterion) {
    let edges: Vec<EdgeId> = (0..60u32)
        .map(|i| EdgeId::new(i % 40, (i + 7) % 40, i).unwrap())
        .collect();
    let g = ExplicitMultigraph::new(edges);
    let mut group = c.benchmark_group("mc_rgmm");
    group.sample_size(10);
    group.bench_function("expectation_20k_trials", |b| {
        b.iter(|| black_box(mc_rgmm_expectation(&g, 20_000, 1).mean))
    });
    group.finish();
}

criterion_group!(benches, thsc_seed_sweep, mc_rgmm_trials);
criterion_main!(benches);
