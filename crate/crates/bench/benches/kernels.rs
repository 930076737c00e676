use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sigma_bench::logistic_problem;
use sigma_core::{
    build_operator, coarse_direction, galerkin_system, sigma_solve, spd_solve, SigmaConfig, SigmaRng, SymMatrix, Vector,
};
use std::hint::black_box;

fn reduced_hessian(c: &mut Criterion) {
    let model = logistic_problem(2000, 400, 1);
    let x = Vector::from_element(400, 0.01);
    let mut group = c.benchmark_group("reduced_hessian");
    for n in [20, 100, 400] {
        let op = build_operator(400, n, &mut SigmaRng::new(2)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &op, |b, op| {
            b.iter(|| model.reduced_hessian(black_box(&x), op.coords(), None).unwrap())
        });
    }
    group.finish();
}

fn coarse_step(c: &mut Criterion) {
    let model = logistic_problem(2000, 400, 1);
    let x = Vector::zeros(400);
    let op = build_operator(400, 100, &mut SigmaRng::new(3)).unwrap();
    c.bench_function("coarse_direction_n100", |b| {
        b.iter(|| {
            let sys = galerkin_system(&model, black_box(&x), &op, None).unwrap();
            coarse_direction(&sys, &op).unwrap()
        })
    });
}

fn cholesky(c: &mut Criterion) {
    let mut group = c.benchmark_group("spd_solve");
    for n in [50, 200] {
        let g = sigma_core::sampling::gaussian_matrix(n, n, &mut SigmaRng::new(4));
        let h = SymMatrix::from_matrix(g.transpose() * &g + sigma_core::Matrix::identity(n, n)).unwrap();
        let rhs = Vector::from_element(n, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| spd_solve(h, &rhs).unwrap()));
    }
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let model = logistic_problem(500, 100, 5);
    let cfg = SigmaConfig { n: 25, max_iter: 50, ..SigmaConfig::default() };
    let mut group = c.benchmark_group("sigma_solve");
    group.sample_size(10);
    group
        .bench_function("logistic_500x100_n25", |b| b.iter(|| sigma_solve(&model, &Vector::zeros(100), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, reduced_hessian, coarse_step, cholesky, full_solve);
criterion_main!(benches);
