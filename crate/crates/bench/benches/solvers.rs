use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vanishing_stop_bench::{tanh_arctan, tridiagonal};
use vstop::tridiag::{self, TridiagonalLu};
use vstop::{simulate, solve_finite_horizon, solve_zero_potential, stationary_density};

fn thomas(c: &mut Criterion) {
    let mut group = c.benchmark_group("thomas");
    for n in [801, 8001] {
        let (lower, diag, upper, rhs) = tridiagonal(n);
        group.bench_with_input(BenchmarkId::new("one-shot", n), &n, |b, _| {
            b.iter(|| tridiag::solve(&lower, &diag, &upper, black_box(&rhs)).unwrap())
        });
        let lu = TridiagonalLu::new(&lower, &diag, &upper).unwrap();
        group.bench_with_input(BenchmarkId::new("factored", n), &n, |b, _| {
            b.iter(|| {
                let mut x = rhs.clone();
                lu.solve_in_place(black_box(&mut x));
                x
            })
        });
    }
    group.finish();
}

fn finite_horizon(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_horizon_T10");
    group.sample_size(10);
    for n in [400, 800] {
        let fx = tanh_arctan(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_finite_horizon(&fx.model, &fx.grid, &fx.rewards, black_box(10.0), &fx.config).unwrap())
        });
    }
    group.finish();
}

fn zero_potential(c: &mut Criterion) {
    let fx = tanh_arctan(800);
    let mu = stationary_density(&fx.model, &fx.grid).unwrap();
    c.bench_function("zero_potential_800", |b| {
        b.iter(|| solve_zero_potential(&fx.model, &fx.grid, black_box(&fx.rewards.running), &mu).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let fx = tanh_arctan(800);
    let mut group = c.benchmark_group("simulate_1000_paths_T10");
    group.sample_size(10);
    group.bench_function("dt=0.01", |b| {
        b.iter(|| simulate(&fx.model, &fx.rewards, black_box(0.0), 10.0, 0.01, 1000, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, thomas, finite_horizon, zero_potential, simulation);
criterion_main!(benches);
