use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use daqc_bench::{dense, interior_point, xy_problem};
use daqc_core::hamiltonian::xy_chain;
use daqc_core::optimizer::{Objective, TimeMode, FD_STEP};
use daqc_core::scheduler::solve_positive_times;
use daqc_core::signmatrix::{build_protocol_matrix, build_protocol_matrix_recursive};
use daqc_core::simulator::{self, evolve_pairwise_trotter, run_schedule, SimulationMode};

fn sign_matrices(c: &mut Criterion) {
    let mut g = c.benchmark_group("protocol_matrix");
    for n in [4, 6, 8] {
        g.bench_with_input(BenchmarkId::new("columns", n), &n, |b, &n| {
            b.iter(|| build_protocol_matrix(black_box(n)))
        });
        g.bench_with_input(BenchmarkId::new("recursive", n), &n, |b, &n| {
            b.iter(|| build_protocol_matrix_recursive(black_box(n)))
        });
    }
    g.finish();
}

fn positive_times(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_positive_times");
    g.sample_size(20);
    for n in [3, 4] {
        let (source, target) = (dense(n, 0.0), dense(n, 1.3));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_positive_times(&source, &target, black_box(0.5)).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    let chain = xy_chain(6, 1.0).unwrap();
    g.bench_function("evolve_xy6", |b| {
        b.iter(|| simulator::evolve(&chain, black_box(1.0)).unwrap())
    });
    g.bench_function("pairwise_xy6", |b| {
        b.iter(|| evolve_pairwise_trotter(&chain, black_box(1.0)).unwrap())
    });
    let (schedule, _) = solve_positive_times(&dense(4, 0.0), &dense(4, 1.3), 0.5).unwrap();
    g.bench_function("run_schedule_n4", |b| {
        b.iter(|| run_schedule(black_box(&schedule), SimulationMode::Exact).unwrap())
    });
    g.finish();
}

fn circuit_cost(c: &mut Criterion) {
    let mut g = c.benchmark_group("circuit_cost_n6_k4");
    for (label, time_mode, cost_mode) in [
        ("fixed_exact", TimeMode::Fixed, SimulationMode::Exact),
        ("free_exact", TimeMode::Free, SimulationMode::Exact),
        (
            "fixed_pairwise",
            TimeMode::Fixed,
            SimulationMode::PairwiseTrotter,
        ),
    ] {
        let p = xy_problem(6, 4, time_mode, cost_mode);
        let x = interior_point(&p);
        g.bench_function(BenchmarkId::new("cost", label), |b| {
            b.iter(|| p.cost(black_box(&x)))
        });
        g.bench_function(BenchmarkId::new("gradient", label), |b| {
            b.iter(|| p.cost_and_gradient(black_box(&x), FD_STEP))
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    sign_matrices,
    positive_times,
    simulation,
    circuit_cost
);
criterion_main!(benches);
