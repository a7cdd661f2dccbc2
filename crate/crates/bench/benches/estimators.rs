use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use learnability::classification::build_link_map;
use learnability::dataset::{chain_form, gram_upper, ImplicitGram};
use learnability::poly::fit_plan;
use learnability::synth::gen_isotropic_regression;

fn chain(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain_form");
    group.sample_size(10);
    for (d, n) in [(200, 200), (1000, 1000)] {
        let (data, _) = gen_isotropic_regression(d, n, 0.5, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("dense_k4", format!("d{d}_n{n}")), &data, |b, data| {
            b.iter(|| chain_form(&gram_upper(data), data.labels(), black_box(4)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("implicit_k4", format!("d{d}_n{n}")), &data, |b, data| {
            b.iter(|| chain_form(&ImplicitGram::new(data), data.labels(), black_box(4)).unwrap())
        });
    }
    group.finish();
}

fn plan(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_plan");
    group.sample_size(10);
    for k in [3, 6, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| b.iter(|| fit_plan(0.1, 1.0, k, 1000).unwrap()));
    }
    group.finish();
}

fn link_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_link_map");
    group.sample_size(10);
    group.bench_function("b50_grid2000", |b| b.iter(|| build_link_map(black_box(50.0), 2000).unwrap()));
    group.finish();
}

criterion_group!(benches, chain, plan, link_map);
criterion_main!(benches);
