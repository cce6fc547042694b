use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use polyfit_core::fit::{gradient, objective};
use polyfit_core::model::build_index;
use polyfit_core::{fit_map, FitOptions, Params};

fn objective_and_gradient(c: &mut Criterion) {
    let spec = polyfit_bench::spec();
    let mut group = c.benchmark_group("objective");
    for n in [10_000usize, 100_000] {
        let games = polyfit_bench::dataset(50, n);
        let index = build_index(&spec, games.roster().iter().cloned()).unwrap();
        let theta = Params((0..index.len()).map(|i| if i < 50 { 1000.0 + i as f64 } else { 1.0 }).collect());
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("value", n), &games, |b, g| {
            b.iter(|| objective(&theta, g, &spec, &index).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", n), &games, |b, g| {
            b.iter(|| gradient(&theta, g, &spec, &index).unwrap())
        });
    }
    group.finish();
}

fn fit(c: &mut Criterion) {
    let spec = polyfit_bench::spec();
    let games = polyfit_bench::dataset(50, 20_000);
    let mut group = c.benchmark_group("fit_map");
    group.sample_size(10);
    group.bench_function("50_models_20k_games", |b| b.iter(|| fit_map(&games, &spec, &FitOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, objective_and_gradient, fit);
criterion_main!(benches);
