//! Sequential against rayon execution on the two data-parallel workloads:
//! experiment cells and Monte-Carlo tail chunks.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use struktnorm::experiment::{run_experiment, ExperimentConfig, Geometry, PanelEntry, SupportSpec};
use struktnorm::norms::NormParams;
use struktnorm::{theory, Exec, SetFunctionSpec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        geometry: Geometry::Chain1d { d: 32 },
        support: SupportSpec::Interval { k: 10 },
        n_grid: vec![24, 48],
        trials: 4,
        panel: vec![PanelEntry::L1, PanelEntry::Sub2],
        lambda_points: 12,
        timing: false,
        ..ExperimentConfig::default()
    };
    let mut g = c.benchmark_group("experiment");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| run_experiment(black_box(&cfg), e).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = NormParams::new(SetFunctionSpec::modified_range(8).unwrap(), 2.0).unwrap();
    let mut g = c.benchmark_group("monte_carlo_tail");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| theory::monte_carlo_tail(&p, None, 1.0, black_box(20_000), 1, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, experiment, monte_carlo);
criterion_main!(benches);
