use nsvar_core::convexgeom::{min_norm_point, support, ConvexSet};
use nsvar_core::functional::{eval_i, eval_j, stationarity_residual, subdiff_i_at, ProblemSpec};
use nsvar_core::integrand::{parse_expr, subdiff_expr, EvalPoint};
use nsvar_core::problem::{builtin, parse_problem, write_problem, BUILTIN_NAMES};
use nsvar_core::trajectory::{cumulative_integral, Grid, PairTraj, Traj};
use proptest::prelude::*;

fn vec_in(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

fn polytope(d: usize) -> impl Strategy<Value = ConvexSet> {
    prop::collection::vec(vec_in(d, 2.0), 1..6).prop_map(|v| ConvexSet::polytope(v).unwrap())
}

fn mixed_set(d: usize) -> impl Strategy<Value = ConvexSet> {
    (polytope(d), vec_in(d, 1.0), 0.0..2.0f64, 0.0..3.0f64).prop_map(move |(p, c, r, s)| {
        ConvexSet::minkowski_sum(vec![p, ConvexSet::ball(c, r).unwrap()])
            .unwrap()
            .times(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn support_is_additive(a in mixed_set(3), b in polytope(3), d in vec_in(3, 1.0)) {
        let sum = ConvexSet::minkowski_sum(vec![a.clone(), b.clone()]).unwrap();
        let lhs = support(&sum, &d).unwrap().0;
        let rhs = support(&a, &d).unwrap().0 + support(&b, &d).unwrap().0;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn min_norm_is_scale_equivariant(s in polytope(3), c in 0.1..5.0f64) {
        let a = min_norm_point(&s, 1e-12).unwrap();
        let b = min_norm_point(&s.clone().times(c), 1e-12).unwrap();
        for (x, y) in a.point.iter().zip(&b.point) {
            prop_assert!((c * x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn min_norm_point_is_optimal(s in mixed_set(4)) {
        let r = min_norm_point(&s, 1e-10).unwrap();
        prop_assert!(r.certified);
        // first-order optimality: ⟨x, y − x⟩ ≥ 0 for the minimizing support point y
        let (h, _) = support(&s, &r.point.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        prop_assert!(r.norm_sq + h <= 1e-10 * (1.0 + r.norm_sq) + 1e-12);
    }

    #[test]
    fn integrand_subdiff_contains_gradient_where_smooth(x in vec_in(2, 1.0), z in vec_in(2, 1.0), t in 0.0..1.0f64) {
        let e = parse_expr("max(pow(z1, 2) - x2, x1 + t) + 2*abs(z2 - 0.3) + norm(x1, z1 - 0.1)", 2).unwrap();
        let p = EvalPoint::new(&x, &z, t).unwrap();
        let s = subdiff_expr(&e, &p, 1e-9).unwrap();
        // generic points are smooth: a singleton whose pairing matches finite differences
        let g = s.as_singleton().expect("generic point").to_vec();
        let dir = [0.3, -0.2, 0.5, 0.1];
        let a = 1e-6;
        let shift = |a: f64| {
            let xs: Vec<f64> = (0..2).map(|k| x[k] + a * dir[k]).collect();
            let zs: Vec<f64> = (0..2).map(|k| z[k] + a * dir[2 + k]).collect();
            e.eval(&EvalPoint::new(&xs, &zs, t).unwrap()).unwrap()
        };
        let fd = (shift(a) - shift(-a)) / (2.0 * a);
        let an: f64 = g.iter().zip(dir).map(|(u, v)| u * v).sum();
        prop_assert!((fd - an).abs() <= 1e-5);
    }

    #[test]
    fn penalties_vanish_on_consistent_pairs(c in prop::collection::vec(-2.0..2.0f64, 3), nodes in 3usize..60) {
        let grid = Grid::new(2.0, nodes).unwrap();
        let z = Traj::from_fn(grid, 1, |t, r| r[0] = c[0] + c[1] * t + c[2] * (3.0 * t).sin()).unwrap();
        let x = cumulative_integral(&z, &[0.5]).unwrap();
        let end = x.row(nodes - 1)[0];
        let p = ProblemSpec {
            name: "p".into(),
            n: 1,
            horizon: 2.0,
            x0: vec![0.5],
            x_target: Some(vec![end]),
            integrand: parse_expr("abs(x1 - t) + pow(z1, 2)", 1).unwrap(),
            use_psi: true,
            use_phi: true,
            initial_x: None,
            initial_z: None,
            lambda0: None,
        };
        let xz = PairTraj::new(x, z).unwrap();
        prop_assert_eq!(eval_i(&p, &xz, 123.0).unwrap(), eval_j(&p, &xz).unwrap());
    }

    #[test]
    fn subdiff_i_support_matches_members(x in vec_in(2, 1.0), d in vec_in(4, 1.0), node in 0usize..11) {
        let p = ProblemSpec {
            name: "p".into(),
            n: 2,
            horizon: 1.0,
            x0: vec![0.0, 0.0],
            x_target: Some(vec![1.0, 0.0]),
            integrand: parse_expr("max(x1, x2) + abs(z1)", 2).unwrap(),
            use_psi: true,
            use_phi: true,
            initial_x: None,
            initial_z: None,
            lambda0: None,
        };
        let grid = Grid::new(1.0, 11).unwrap();
        let xz = PairTraj::new(Traj::constant(grid, &x), Traj::zeros(grid, 2)).unwrap();
        let s = subdiff_i_at(&p, &xz, 7.0, node, 1e-9).unwrap();
        let ConvexSet::MinkowskiSum(members) = &s else { panic!("sum expected") };
        let total = support(&s, &d).unwrap().0;
        let parts: f64 = members.iter().map(|m| support(m, &d).unwrap().0).sum();
        prop_assert!((total - parts).abs() <= 1e-10 * (1.0 + total.abs()));
        // reordering the members does not change the residual's ingredients
        let rev = ConvexSet::MinkowskiSum(members.iter().rev().cloned().collect());
        let (a, b) = (min_norm_point(&s, 1e-12).unwrap(), min_norm_point(&rev, 1e-12).unwrap());
        prop_assert!((a.norm_sq - b.norm_sq).abs() <= 1e-10);
    }

    #[test]
    fn resample_keeps_shared_nodes(nodes in 2usize..20, k in 1usize..5) {
        let coarse = Grid::new(3.0, nodes).unwrap();
        let fine = Grid::new(3.0, (nodes - 1) * k + 1).unwrap();
        let a = Traj::from_fn(coarse, 2, |t, r| { r[0] = t.exp(); r[1] = (2.0 * t).cos(); }).unwrap();
        let b = nsvar_core::trajectory::resample(&a, &fine).unwrap();
        for i in 0..nodes {
            prop_assert_eq!(a.row(i), b.row(i * k));
        }
    }
}

#[test]
fn builtins_round_trip() {
    for name in BUILTIN_NAMES {
        let spec = builtin(name).unwrap().spec;
        assert_eq!(parse_problem(&write_problem(&spec), "x").unwrap(), spec);
    }
}

#[test]
fn residual_is_zero_at_example1_solution() {
    let spec = builtin("example1").unwrap().spec;
    let grid = Grid::new(1.0, 3).unwrap();
    let zero = PairTraj::new(Traj::zeros(grid, 1), Traj::zeros(grid, 1)).unwrap();
    assert_eq!(stationarity_residual(&spec, &zero, 0.0, 1e-9, 1e-10).unwrap(), 0.0);
}
