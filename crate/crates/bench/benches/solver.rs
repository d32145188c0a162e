use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nsvar_core::problem::builtin;
use nsvar_core::solver::steepest_direction;
use nsvar_core::{min_norm_point, solve, ConvexSet, Grid};

fn polytope(d: usize, m: usize) -> ConvexSet {
    // deterministic scatter around (1, 1, ...), so the origin is outside
    let v = (0..m)
        .map(|i| (0..d).map(|k| 1.0 + ((i * 7 + k * 13) % 11) as f64 / 5.0 - 1.0).collect())
        .collect();
    ConvexSet::polytope(v).unwrap()
}

fn min_norm(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_norm_point");
    for (d, m) in [(2, 4), (6, 12), (12, 40)] {
        let s = polytope(d, m);
        g.bench_with_input(BenchmarkId::from_parameter(format!("d{d}_m{m}")), &s, |b, s| {
            b.iter(|| min_norm_point(black_box(s), 1e-10).unwrap())
        });
    }
    let ball = ConvexSet::minkowski_sum(vec![polytope(4, 6), ConvexSet::ball(vec![0.5; 4], 0.8).unwrap()]).unwrap();
    g.bench_function("polytope_plus_ball", |b| b.iter(|| min_norm_point(black_box(&ball), 1e-10).unwrap()));
    g.finish();
}

fn direction(c: &mut Criterion) {
    let b = builtin("example3").unwrap();
    let mut g = c.benchmark_group("steepest_direction");
    for nodes in [21, 201, 2001] {
        let xz = b.spec.initial_pair(&Grid::new(b.spec.horizon, nodes).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::new("example3", nodes), &xz, |bch, xz| {
            bch.iter(|| steepest_direction(&b.spec, black_box(xz), 20.0, &b.config).unwrap())
        });
    }
    g.finish();
}

fn full_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for name in ["example2", "example3", "example4"] {
        let b = builtin(name).unwrap();
        g.bench_function(name, |bch| bch.iter(|| solve(&b.spec, &b.config).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, min_norm, direction, full_solve);
criterion_main!(benches);
