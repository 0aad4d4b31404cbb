use criterion::{criterion_group, criterion_main, Criterion};
use distreg::bootstrap::{mte_statistic, parametric_bootstrap};
use distreg::effects::model_profile;
use distreg::{fit, Family, FunctionalKind};
use distreg_bench::{dataset, spec};

fn parametric(c: &mut Criterion) {
    let d = dataset(Family::LogNormal, 500, 3);
    let s = spec(Family::LogNormal);
    let m = fit(&s, &d).unwrap();
    let profile = model_profile(&m, &d, &[]).unwrap();
    let fns = [FunctionalKind::Mean, FunctionalKind::Gini, FunctionalKind::Theil];
    let stat = mte_statistic(&profile, &fns, "T");
    let mut g = c.benchmark_group("bootstrap");
    g.sample_size(10);
    g.bench_function("parametric/lognormal/500x99", |b| b.iter(|| parametric_bootstrap(&s, &m, &d, &stat, &[], 99, 7).unwrap()));
    g.finish();
}

criterion_group!(benches, parametric);
criterion_main!(benches);
