//! Engine benchmarks at desk scale: influence growth, column assembly,
//! boundary absorption, the full fixed point, and the RDM readout. Run
//! with `cargo bench -p anneal-bench`.

use anneal_bench::Fixture;
use anneal_core::{extract_rdm, itebd_fixed_point, measure_all};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const STEP: usize = 20;

fn influence_growth(c: &mut Criterion) {
    let mut group = c.benchmark_group("influence_growth");
    for &chi_t in &[16usize, 32, 64] {
        let fx = Fixture::desk(chi_t, 32).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(chi_t), &fx, |b, fx| {
            b.iter(|| black_box(fx.influence(STEP).unwrap()))
        });
    }
    group.finish();
}

fn column_assembly(c: &mut Criterion) {
    let fx = Fixture::desk(32, 32).unwrap();
    let infl = fx.influence(STEP).unwrap();
    c.bench_function("column_assembly", |b| {
        b.iter(|| {
            black_box(
                anneal_core::build_column(&infl, &fx.grid, &fx.sched, STEP).unwrap(),
            )
        })
    });
}

fn boundary_absorb(c: &mut Criterion) {
    let mut group = c.benchmark_group("boundary_absorb");
    for &chi_s in &[16usize, 32, 64] {
        let fx = Fixture::desk(32, chi_s).unwrap();
        let col = fx.column(STEP).unwrap();
        let warm = fx.warm_boundary(&col, 6).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(chi_s), &chi_s, |b, _| {
            b.iter(|| black_box(warm.absorb(&col, anneal_core::Cap::Trace).unwrap()))
        });
    }
    group.finish();
}

fn fixed_point_and_readout(c: &mut Criterion) {
    let fx = Fixture::desk(32, 32).unwrap();
    let col = fx.column(STEP).unwrap();

    let mut group = c.benchmark_group("fixed_point");
    group.sample_size(10);
    group.bench_function("cold_start", |b| {
        b.iter(|| black_box(itebd_fixed_point(&col, fx.chi_s, 1e-8, 200).unwrap()))
    });
    group.finish();

    let fp = itebd_fixed_point(&col, fx.chi_s, 1e-9, 200).unwrap();
    c.bench_function("measure_all", |b| {
        b.iter(|| black_box(measure_all(fp.left(), fp.right(), &col).unwrap()))
    });

    let mut group = c.benchmark_group("rdm_extraction");
    group.sample_size(10);
    for &sites in &[4usize, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(sites), &sites, |b, &n| {
            b.iter(|| black_box(extract_rdm(fp.left(), fp.right(), &col, n).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    engine,
    influence_growth,
    column_assembly,
    boundary_absorb,
    fixed_point_and_readout
);
criterion_main!(engine);
