use allknn::{all_knn, annotate, brute_all_knn_parallel, build_rst};
use allknn_bench::{clustered, uniform, SIZES};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("all_knn_k5_d2");
    group.sample_size(10);
    for n in SIZES {
        let pts = uniform(n, 2);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("rst", n), &pts, |b, pts| {
            b.iter(|| all_knn(pts, 5).unwrap())
        });
        if n <= 4000 {
            group.bench_with_input(BenchmarkId::new("brute", n), &pts, |b, pts| {
                b.iter(|| brute_all_knn_parallel(pts, 5).unwrap())
            });
        }
    }
    group.finish();
}

fn tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree_d3");
    group.sample_size(20);
    for n in SIZES {
        let pts = clustered(n, 3);
        group.bench_with_input(BenchmarkId::new("build", n), &pts, |b, pts| {
            b.iter(|| build_rst(pts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("build_and_annotate", n), &pts, |b, pts| {
            b.iter(|| {
                let mut t = build_rst(pts).unwrap();
                annotate(&mut t, pts).unwrap();
                t
            })
        });
    }
    group.finish();
}

fn dimensions(c: &mut Criterion) {
    let mut group = c.benchmark_group("all_knn_n4000_k5");
    group.sample_size(10);
    for d in [1, 2, 3, 5] {
        let pts = uniform(4000, d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &pts, |b, pts| {
            b.iter(|| all_knn(pts, 5).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, engine, tree, dimensions);
criterion_main!(benches);
