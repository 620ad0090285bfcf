//! Sequential against parallel evaluation of ensemble checks and of a
//! single-instance workload (curve sampling).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nodal_core::checks::{run_check, Check};
use nodal_core::ensemble::{EnsembleConfig, Family};
use nodal_core::surgery::eigenvalue_curve_with;
use nodal_core::{Execution, Hamiltonian};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn ensemble_checks(c: &mut Criterion) {
    let instances = EnsembleConfig {
        family: Family::ErdosRenyiConnected,
        v_min: 6,
        v_max: 10,
        beta_cap: 3,
        potential_scale: 1.0,
        seed: 17,
        count: 64,
    }
    .instances()
    .unwrap();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for check in [Check::Bounds, Check::Interlace, Check::Morse] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{check:?}"), name), &exec, |b, &exec| {
                b.iter(|| {
                    // parallel over instances, each instance run sequentially
                    let rows = exec.map(&instances, |inst| run_check(check, inst, Execution::Sequential));
                    black_box(rows.iter().map(Vec::len).sum::<usize>())
                })
            });
        }
    }
    group.finish();
}

fn curve_sampling(c: &mut Criterion) {
    let inst = EnsembleConfig {
        family: Family::CyclePlusChords,
        v_min: 12,
        v_max: 12,
        beta_cap: 4,
        potential_scale: 1.0,
        seed: 3,
        count: 1,
    }
    .instance(0)
    .unwrap();
    let h = Hamiltonian::new(&inst.graph, &inst.potential).unwrap();
    let edge = inst.graph.edges()[0];
    let alphas: Vec<f64> = (0..400).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 399.0)).collect();
    let mut group = c.benchmark_group("curve");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(eigenvalue_curve_with(exec, &h, edge, 3, &alphas).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble_checks, curve_sampling);
criterion_main!(benches);
