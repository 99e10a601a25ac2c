use std::hint::black_box;

use cascade_optomech::params::preset;
use cascade_optomech::sweep::{run_sweep, Axis, Evaluator, SweepSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn entanglement_map(jobs: usize) -> SweepSpec {
    SweepSpec {
        axes: vec![Axis::linear("eta", -1.0, 1.0, 81), Axis::linear("P_common", 0.0, 0.2, 61)],
        evaluator: Evaluator::Entanglement { paper_literal_d: false },
        base: preset("fig6").unwrap().params,
        parallelism: jobs,
    }
}

fn bench(c: &mut Criterion) {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let mut group = c.benchmark_group("entanglement_map_81x61");
    group.sample_size(20);
    group.bench_function("sequential", |b| b.iter(|| black_box(run_sweep(&entanglement_map(1)).unwrap())));
    group.bench_function(format!("parallel_{threads}"), |b| {
        b.iter(|| black_box(run_sweep(&entanglement_map(threads)).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
