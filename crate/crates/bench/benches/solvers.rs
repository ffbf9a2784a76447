use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use recov::solvers::{chebyshev_fit, least_squares, minimize_pnorm, solve_lp, LinearProgram, Relation};
use recov_bench::scrambled;

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp_box_constrained");
    for n in [10usize, 40, 100] {
        let a = scrambled(2 * n, n, 1);
        let mut prog = LinearProgram::maximize(a.row(0).iter().copied().collect());
        for k in 0..n {
            prog.set_free(k);
        }
        for i in 1..a.nrows() {
            prog.add_constraint(a.row(i).iter().copied().collect(), Relation::Le, 1.0);
            prog.add_constraint(a.row(i).iter().map(|x| -x).collect(), Relation::Le, 1.0);
        }
        g.bench_with_input(BenchmarkId::from_parameter(n), &prog, |b, p| b.iter(|| solve_lp(black_box(p))));
    }
    g.finish();
}

fn fits(c: &mut Criterion) {
    let a = scrambled(400, 12, 2);
    let x = DVector::from_iterator(400, scrambled(400, 1, 3).iter().copied());
    c.bench_function("least_squares_400x12", |b| b.iter(|| least_squares(black_box(&a), black_box(&x), None)));
    c.bench_function("chebyshev_fit_400x12", |b| b.iter(|| chebyshev_fit(black_box(&a), black_box(&x))));
    c.bench_function("pnorm_fit_p3_400x12", |b| b.iter(|| minimize_pnorm(black_box(&a), black_box(&x), 3.0, None)));
}

criterion_group!(benches, lp, fits);
criterion_main!(benches);
