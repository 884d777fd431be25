use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluxdirac::numlab::{assemble, DiracOperator, DEFAULT_SITE_CAP};
use fluxdirac::potential::solve_lambda;
use fluxdirac::{Complex64, FieldProfile, GridSpec};
use std::hint::black_box;

fn operator(n: usize) -> DiracOperator {
    let p = FieldProfile::uniform_disk(-1.25, 2.0).unwrap();
    DiracOperator::from_profile(&p, GridSpec::new(6.0, n).unwrap(), 0.5).unwrap()
}

fn input(len: usize) -> Vec<Complex64> {
    (0..len).map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect()
}

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for n in [128, 256] {
        let op = operator(n);
        let m = assemble(&op, DEFAULT_SITE_CAP).unwrap();
        let x = input(op.dim());
        let mut y = vec![Complex64::new(0.0, 0.0); op.dim()];
        let label = if fluxdirac::par::is_parallel() { "rayon" } else { "rayon-disabled" };
        group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| b.iter(|| m.matvec(black_box(&x), &mut y)));
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| m.matvec_sequential(black_box(&x), &mut y))
        });
        group.bench_with_input(BenchmarkId::new("stencil", n), &n, |b, _| b.iter(|| op.apply_h(black_box(&x), &mut y)));
    }
    group.finish();
}

fn lambda(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_lambda");
    group.sample_size(20);
    let p = FieldProfile::gaussian(1.0, 1.0).unwrap();
    for n in [128, 256, 512] {
        let g = GridSpec::new(8.0, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| b.iter(|| solve_lambda(&p, *g).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, matvec, lambda);
criterion_main!(benches);
