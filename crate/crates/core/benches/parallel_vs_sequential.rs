use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ringtumble_core::collocation::{initial_guess, solve_steering, SqpOptions, SteeringProblem};
use ringtumble_core::scenario::{run_sweep, SweepSpec};
use ringtumble_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sweep(c: &mut Criterion) {
    let mut spec = SweepSpec {
        amplitudes: vec![0.1, 0.2, 0.3],
        sharpness: vec![5.0, 10.0, 20.0],
        ..Default::default()
    };
    spec.base.duration = 3.0;
    let mut group = c.benchmark_group("sweep_3x3");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, exec| {
            b.iter(|| run_sweep(black_box(&spec), *exec).unwrap())
        });
    }
    group.finish();
}

fn steering_iterations(c: &mut Criterion) {
    let mut group = c.benchmark_group("steer_5_iterations");
    group.sample_size(10);
    for (name, exec) in MODES {
        let problem = SteeringProblem {
            nlp: SqpOptions { max_iterations: 5, execution: exec, ..Default::default() },
            ..Default::default()
        };
        let guess = initial_guess(&problem).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve_steering(black_box(&problem), black_box(&guess)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, steering_iterations);
criterion_main!(benches);
