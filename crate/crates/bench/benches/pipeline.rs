use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mvle_core::bon::{bon_vectors, knn};
use mvle_core::graph::build_weight_graph;
use mvle_core::linalg::generalized_eig_diag;
use mvle_core::{fit, gen_synthetic, train_all, MhonConfig, MvleConfig, SyntheticSpec};

fn spec(per_class: usize) -> SyntheticSpec {
    SyntheticSpec {
        samples_per_class_per_view: per_class,
        ..SyntheticSpec::default()
    }
}

fn stages(c: &mut Criterion) {
    let ds = gen_synthetic(&spec(60)).unwrap();
    let view = &ds.views[0];
    let mut g = c.benchmark_group("stages");
    g.bench_function("knn", |b| b.iter(|| knn(black_box(view.features()), 10).unwrap()));

    let tables: Vec<_> = ds.views.iter().map(|v| knn(v.features(), 10).unwrap()).collect();
    let bons: Vec<_> = tables
        .iter()
        .zip(&ds.views)
        .map(|(t, v)| bon_vectors(t, &v.labels, ds.class_count).unwrap())
        .collect();
    g.bench_function("bon", |b| {
        b.iter(|| bon_vectors(black_box(&tables[0]), &view.labels, ds.class_count).unwrap())
    });

    let labels: Vec<_> = ds.views.iter().map(|v| v.labels.clone()).collect();
    g.bench_function("graph", |b| {
        b.iter(|| build_weight_graph(black_box(&bons), &labels, 4.0).unwrap())
    });

    let graph = build_weight_graph(&bons, &labels, 4.0).unwrap();
    g.bench_function("eig", |b| {
        b.iter(|| generalized_eig_diag(black_box(&graph.laplacian), &graph.degrees).unwrap())
    });

    let cfg = MvleConfig::default();
    let (emb, art) = fit(&ds, &cfg).unwrap();
    g.bench_function("mhon", |b| {
        b.iter(|| train_all(black_box(&ds), &emb, &art, &MhonConfig::default()).unwrap())
    });
    g.finish();
}

fn fit_scaling(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    for per_class in [15, 30, 60] {
        let ds = gen_synthetic(&spec(per_class)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(ds.total_samples()), &ds, |b, ds| {
            b.iter(|| fit(ds, &MvleConfig::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, stages, fit_scaling);
criterion_main!(benches);
