use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eltract::periodic::{self, SearchBox};
use eltract::render::{self, EscapeRule, Viewport};
use eltract::{Complex64, EntireMap, Exec, TractGeometry};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn render_siegel(c: &mut Criterion) {
    let geom = TractGeometry::new(EntireMap::golden_exp_affine()).unwrap();
    let vp = Viewport::square(Complex64::new(0.0, 0.0), 8.0, 64).unwrap();
    let rule = EscapeRule::default();
    let mut group = c.benchmark_group("render_64px");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| render::render(&geom, black_box(vp), 1000, &rule, exec))
        });
    }
    group.finish();
}

fn expansion_audit(c: &mut Criterion) {
    let geom = TractGeometry::new(EntireMap::cosine(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap())
        .unwrap();
    let mut group = c.benchmark_group("verify_expansion_10k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| geom.verify_expansion(black_box(10_000), 1, exec))
        });
    }
    group.finish();
}

fn fixed_points(c: &mut Criterion) {
    let map = EntireMap::exp_shift(Complex64::new(-2.0, 0.0)).unwrap();
    let mut group = c.benchmark_group("fixed_points_period2");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| periodic::find_fixed_points(&map, 2, SearchBox::square(3.0), black_box(16), exec))
        });
    }
    group.finish();
}

criterion_group!(benches, render_siegel, expansion_audit, fixed_points);
criterion_main!(benches);
