use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use mico_core::centerpoint::{approx_centerpoint, VersionPolytope};
use mico_core::halving::split_set;
use mico_core::linalg::dot;
use mico_core::lp::lp_feasible;
use mico_core::oracle::{chart_output, Target};
use mico_core::recovery::approx_unit_vector;
use mico_core::suite::{random_instance, GeneratorSpec};

fn recovery(c: &mut Criterion) {
    let g = [0.3, -1.2, 0.7, 0.05, -0.4, 0.9];
    c.bench_function("approx_unit_vector d=6 eps=0.01", |b| {
        b.iter(|| approx_unit_vector(|v| Ok(if dot(v, &g) >= 0.0 { 1 } else { -1 }), 6, black_box(0.01)).unwrap())
    });
}

fn lp(c: &mut Criterion) {
    let rows: Vec<(Vec<f64>, f64)> = (0..12)
        .map(|k| {
            let t = k as f64 * 0.5;
            (vec![t.cos(), t.sin(), 0.3 * (2.0 * t).cos()], 0.8)
        })
        .collect();
    c.bench_function("lp_feasible 12x3", |b| b.iter(|| lp_feasible(black_box(&rows), 3, 2.0)));
}

fn charts(c: &mut Criterion) {
    let inst = random_instance(&GeneratorSpec::standard(2, 3), 7);
    let z = [0.0, 1.0, 0.2, -0.4, 0.1];
    c.bench_function("chart_output info n=2 d=3", |b| b.iter(|| chart_output(&inst, black_box(&z), Target::Info)));
    c.bench_function("brute_force_opt n=2 d=3", |b| b.iter(|| inst.brute_force_opt().unwrap()));
}

fn centerpoint(c: &mut Criterion) {
    let p = VersionPolytope::new(1, 2, 2.0).unwrap();
    c.bench_function("approx_centerpoint n=1 d=2 samples=2000", |b| {
        b.iter(|| approx_centerpoint(black_box(&p), 2000, 3).unwrap())
    });
}

fn halving(c: &mut Criterion) {
    let members: Vec<usize> = (0..128).collect();
    let responses: Vec<Vec<f64>> = members.iter().map(|m| vec![(m % 7) as f64, (m % 3) as f64]).collect();
    c.bench_function("split_set 128", |b| {
        b.iter_batched(|| responses.clone(), |r| split_set(&members, &r), BatchSize::SmallInput)
    });
}

criterion_group!(benches, recovery, lp, charts, centerpoint, halving);
criterion_main!(benches);
