use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use flocklab::dynamics::discrete_step;
use flocklab::spectral::{default_gap_tolerance, ergodicity_coefficient, spectral_gap, weighted_laplacian};
use flocklab::{build_adjacency, KernelSpec, ModelSpec};
use flocklab_bench::random_state;

const SIZES: [usize; 2] = [64, 256];

fn adjacency(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_adjacency");
    for n in SIZES {
        let (s, dom) = random_state(n, 2, 1);
        for (name, k) in [
            ("metric_powerlaw", KernelSpec::MetricPowerlaw { beta: 0.5 }),
            (
                "topological",
                KernelSpec::Topological {
                    beta: 0.5,
                    region: Default::default(),
                },
            ),
        ] {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| build_adjacency(black_box(&k), &s.positions, &dom).unwrap())
            });
        }
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in SIZES {
        let (s, dom) = random_state(n, 2, 2);
        let a = build_adjacency(&KernelSpec::MetricPowerlaw { beta: 0.5 }, &s.positions, &dom).unwrap();
        g.bench_with_input(BenchmarkId::new("spectral_gap", n), &n, |b, _| {
            b.iter(|| {
                let l = weighted_laplacian(&a, &s.masses).unwrap();
                spectral_gap(&l, default_gap_tolerance(&l)).unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("ergodicity_coefficient", n), &n, |b, _| {
            b.iter(|| ergodicity_coefficient(black_box(&a), &s.masses).unwrap())
        });
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let mut g = c.benchmark_group("discrete_step");
    let spec = ModelSpec::CsDiscrete {
        kernel: KernelSpec::MetricPowerlaw { beta: 0.5 },
    };
    for n in SIZES {
        let (s, dom) = random_state(n, 2, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| discrete_step(black_box(&s), &spec, &dom, 0.01).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, adjacency, spectral, stepping);
criterion_main!(benches);
