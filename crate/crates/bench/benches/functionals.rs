use criterion::{criterion_group, criterion_main, Criterion};
use distreg::functionals::{atkinson, dist_variance, gini, theil, vulnerability};
use distreg::{DistSpec, Family};

fn inequality(c: &mut Criterion) {
    let sm = DistSpec::new(Family::SinghMaddala, &[100.0, 3.0, 1.2]).unwrap();
    let gamma = DistSpec::new(Family::Gamma, &[100.0, 0.6]).unwrap();
    let zaga = DistSpec::new(Family::ZeroAdjustedGamma, &[100.0, 0.6, 0.1]).unwrap();
    let mut g = c.benchmark_group("functionals");
    g.bench_function("gini/singh-maddala", |b| b.iter(|| gini(&sm).unwrap()));
    g.bench_function("gini/gamma", |b| b.iter(|| gini(&gamma).unwrap()));
    g.bench_function("gini/zero-adjusted-gamma", |b| b.iter(|| gini(&zaga).unwrap()));
    g.bench_function("atkinson2/singh-maddala", |b| b.iter(|| atkinson(&sm, 2.0).unwrap()));
    g.bench_function("theil/singh-maddala", |b| b.iter(|| theil(&sm).unwrap()));
    g.bench_function("variance/singh-maddala", |b| b.iter(|| dist_variance(&sm).unwrap()));
    g.bench_function("vulnerability/singh-maddala", |b| b.iter(|| vulnerability(&sm, 60.0).unwrap()));
    g.finish();
}

criterion_group!(benches, inequality);
criterion_main!(benches);
