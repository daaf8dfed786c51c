//! Timings for the hot paths: barcode reduction at several grid sizes and
//! value textures, the refinement objective and step loop, pooling, and
//! surface distances. Sample counts are kept low because single runs are
//! already long at the larger sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use voxtopo::cubical::compute_barcode;
use voxtopo::loss::{topo_loss, topo_loss_gradient, BettiTarget};
use voxtopo::metrics::metric_report;
use voxtopo::phantom::{generate, PhantomKind, PhantomSpec};
use voxtopo::refine::{objective, refine, RefineConfig};
use voxtopo::volume::ScalarVolume;
use voxtopo_testutil::{distinct_value_volume, random_volume};

fn phantom(kind: PhantomKind, n: usize) -> voxtopo::phantom::Phantom {
    let mut spec = PhantomSpec::new(kind);
    spec.dims = (n, n, n);
    generate(&spec).unwrap()
}

fn barcode_random(c: &mut Criterion) {
    let mut group = c.benchmark_group("barcode/random");
    group.sample_size(10);
    for n in [8usize, 16, 32] {
        let dims = (n, n, n);
        let distinct =
            ScalarVolume::new(dims, (1.0, 1.0, 1.0), distinct_value_volume(dims, 0.0, 1.0, 7))
                .unwrap();
        group.bench_with_input(BenchmarkId::new("distinct", n), &distinct, |b, vol| {
            b.iter(|| compute_barcode(black_box(vol)).unwrap())
        });
        let generic =
            ScalarVolume::new(dims, (1.0, 1.0, 1.0), random_volume(dims, 7)).unwrap();
        group.bench_with_input(BenchmarkId::new("generic", n), &generic, |b, vol| {
            b.iter(|| compute_barcode(black_box(vol)).unwrap())
        });
    }
    group.finish();
}

fn barcode_phantom(c: &mut Criterion) {
    let mut group = c.benchmark_group("barcode/phantom");
    group.sample_size(10);
    for n in [32usize, 64] {
        let ph = phantom(PhantomKind::TwoTubeBridged, n);
        group.bench_with_input(BenchmarkId::new("bridged_prob", n), &ph.prob, |b, vol| {
            b.iter(|| compute_barcode(black_box(vol)).unwrap())
        });
        let gt = ph.gt.to_scalar();
        group.bench_with_input(BenchmarkId::new("bridged_mask", n), &gt, |b, vol| {
            b.iter(|| compute_barcode(black_box(vol)).unwrap())
        });
    }
    group.finish();
}

fn loss_and_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss");
    group.sample_size(10);
    let ph = phantom(PhantomKind::CoilTouching, 64);
    let coarse = ph.prob.downsample(2).unwrap();
    let bc = compute_barcode(&coarse).unwrap();
    let target = BettiTarget::new(1, 0, 0);
    group.bench_function("topo_loss/coil_32", |b| {
        b.iter(|| topo_loss(black_box(&bc), black_box(target)))
    });
    group.bench_function("topo_loss_gradient/coil_32", |b| {
        b.iter(|| {
            topo_loss_gradient(black_box(&bc), target, coarse.dims(), coarse.spacing()).unwrap()
        })
    });
    group.finish();
}

fn refinement(c: &mut Criterion) {
    let mut group = c.benchmark_group("refine");
    group.sample_size(10);
    let ph = phantom(PhantomKind::TwoTubeBridged, 32);
    let cfg = RefineConfig::default();
    group.bench_function("objective/bridged_32", |b| {
        b.iter(|| objective(black_box(&ph.prob), &ph.prob, &cfg).unwrap())
    });
    let short = RefineConfig { steps: 5, ..RefineConfig::default() };
    group.bench_function("five_steps/bridged_32", |b| {
        b.iter(|| refine(black_box(&ph.prob), &short).unwrap())
    });
    group.finish();
}

fn pooling_and_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("support");
    group.sample_size(10);
    let ph = phantom(PhantomKind::TwoTubeBridged, 64);
    group.bench_function("downsample2/64", |b| {
        b.iter(|| black_box(&ph.prob).downsample(2).unwrap())
    });
    let pred = ph.prob.threshold(0.5);
    group.bench_function("metric_report/bridged_64", |b| {
        b.iter(|| metric_report(black_box(&pred), &ph.gt).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    barcode_random,
    barcode_phantom,
    loss_and_gradient,
    refinement,
    pooling_and_metrics
);
criterion_main!(benches);
