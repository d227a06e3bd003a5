//! Throughput benchmarks for the hot sweeps: pointwise residuals over
//! interior samples, and constrained-jet batches. With the default
//! `parallel` feature the `par-map` and sweep benches exercise the
//! rayon path; building with `--no-default-features` measures the
//! sequential fallback through the identical API.

use criterion::{criterion_group, criterion_main, Criterion};
use staticverify_core::fd::FdOptions;
use staticverify_core::{algebra, models, par, residuals};

fn residual_sweep(c: &mut Criterion) {
    let t = models::sds_triple(0.1).unwrap();
    let opts = FdOptions::default();
    let pts = t.sample_interior(7, 256);
    let mut g = c.benchmark_group("residual-sweep");
    g.bench_function("par-map", |b| {
        b.iter(|| par::par_map(&pts, |p| residuals::static_residual(&t, p, &opts).unwrap().max))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            pts.iter()
                .map(|p| residuals::static_residual(&t, p, &opts).unwrap().max)
                .collect::<Vec<f64>>()
        })
    });
    g.finish();
}

fn jet_batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet-batch");
    g.bench_function("kato-sweep-10k", |b| b.iter(|| algebra::kato_sweep(10_000, 7)));
    g.bench_function("det-cubic-sweep-10k", |b| {
        b.iter(|| algebra::det_cubic_sweep(10_000, 7))
    });
    g.finish();
}

criterion_group!(benches, residual_sweep, jet_batch);
criterion_main!(benches);
