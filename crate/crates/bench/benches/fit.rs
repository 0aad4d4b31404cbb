use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distreg::{fit, Family, FormulaSet, ModelSpec};
use distreg_bench::{dataset, spec};

fn families(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for family in [Family::Normal, Family::LogNormal, Family::Gamma, Family::SinghMaddala] {
        let d = dataset(family, 2000, 1);
        let s = spec(family);
        g.bench_with_input(BenchmarkId::new(family.name(), 2000), &d, |b, d| b.iter(|| fit(&s, d).unwrap()));
    }
    g.finish();
}

fn smooth(c: &mut Criterion) {
    let d = dataset(Family::LogNormal, 2000, 2);
    let fs = FormulaSet::parse(Family::LogNormal, &[("mu", "T + s(x1, k=20) + x2"), ("sigma", "T + s(x1, k=10)")]).unwrap();
    let s = ModelSpec::new(Family::LogNormal, "y", fs);
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.bench_function("lognormal-splines/2000", |b| b.iter(|| fit(&s, &d).unwrap()));
    g.finish();
}

criterion_group!(benches, families, smooth);
criterion_main!(benches);
