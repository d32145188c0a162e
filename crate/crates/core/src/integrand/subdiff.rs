//! Subdifferentials of validated expressions.
//!
//! Smooth subtrees contribute their gradient. Sums give Minkowski sums,
//! multiplication by a nonnegative constant scales, and `max` gives the
//! convex hull of the active branches' subdifferentials. `abs(u)` is
//! `max(u, -u)` and `norm(u)` at a nonzero point is smooth in `u`; at zero
//! it contributes the image of the unit ball under the transposed Jacobian.
//!
//! Negation is only exact when the negated part has a single subgradient at
//! the point; at a genuine kink of a negated nonsmooth term the directional
//! derivative is not sublinear and [`Error::NotSubdifferentiable`] is
//! returned.

use super::{EvalPoint, Expr};
use crate::convexgeom::{support, ConvexSet};
use crate::error::{Error, Result};

/// Activity tolerance used when none is configured: `1e-9·(1 + |f(p)|)`.
pub fn default_activity_tol(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}

/// Subdifferential of `e` at `p`, a convex set in `R^{2n}` laid out as
/// `(∂x, ∂z)`. Branches of `max`/`abs`/`norm` within `tol_act` of a tie are
/// treated as active.
pub fn subdiff_expr(e: &Expr, p: &EvalPoint<'_>, tol_act: f64) -> Result<ConvexSet> {
    Ok(local(e, p, tol_act)?.1.simplified())
}

/// `max_{v ∈ ∂e(p)} ⟨v, g⟩`, the one-sided directional derivative of `e`.
pub fn directional_derivative(e: &Expr, p: &EvalPoint<'_>, g: &[f64], tol_act: f64) -> Result<f64> {
    let set = subdiff_expr(e, p, tol_act)?;
    Ok(support(&set, g)?.0)
}

fn negate(set: ConvexSet, t: f64) -> Result<ConvexSet> {
    match set.simplified() {
        ConvexSet::Singleton(v) => Ok(ConvexSet::Singleton(v.into_iter().map(|x| -x).collect())),
        _ => Err(Error::NotSubdifferentiable {
            what: "negated nonsmooth term at a kink",
            t,
        }),
    }
}

/// Value and subdifferential of a subtree.
fn local(e: &Expr, p: &EvalPoint<'_>, tol: f64) -> Result<(f64, ConvexSet)> {
    if e.is_smooth() {
        let (v, g) = e.value_grad(p)?;
        return Ok((v, ConvexSet::Singleton(g)));
    }
    match e {
        Expr::Neg(a) => {
            let (v, s) = local(a, p, tol)?;
            Ok((-v, negate(s, p.t)?))
        }
        Expr::Add(a, b) => {
            let (va, sa) = local(a, p, tol)?;
            let (vb, sb) = local(b, p, tol)?;
            Ok((va + vb, sa.plus(sb)))
        }
        Expr::Sub(a, b) => {
            let (va, sa) = local(a, p, tol)?;
            let (vb, sb) = local(b, p, tol)?;
            Ok((va - vb, sa.plus(negate(sb, p.t)?)))
        }
        Expr::Mul(a, b) => {
            // validated: exactly one side is a nonnegative constant
            let (c, other) = match (&**a, &**b) {
                (Expr::Const(c), other) | (other, Expr::Const(c)) => (*c, other),
                _ => unreachable!("validated product"),
            };
            let (v, s) = local(other, p, tol)?;
            Ok((c * v, s.times(c)))
        }
        Expr::Abs(a) => {
            let (v, s) = local(a, p, tol)?;
            if v > tol {
                Ok((v, s))
            } else if v < -tol {
                Ok((-v, negate(s, p.t)?))
            } else {
                let g = match s.simplified() {
                    ConvexSet::Singleton(g) => g,
                    _ => {
                        return Err(Error::NotSubdifferentiable {
                            what: "abs of a nonsmooth term at its zero",
                            t: p.t,
                        })
                    }
                };
                let minus: Vec<f64> = g.iter().map(|x| -x).collect();
                Ok((v.abs(), ConvexSet::Polytope(vec![minus, g])))
            }
        }
        Expr::Max(args) => {
            let parts = args
                .iter()
                .map(|a| local(a, p, tol))
                .collect::<Result<Vec<_>>>()?;
            let best = parts.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
            let active: Vec<ConvexSet> = parts
                .into_iter()
                .filter(|(v, _)| *v >= best - tol)
                .map(|(_, s)| s)
                .collect();
            let set = if active.len() == 1 {
                active.into_iter().next().unwrap()
            } else {
                ConvexSet::Hull(active)
            };
            Ok((best, set))
        }
        Expr::Norm(args) => {
            let parts = args
                .iter()
                .map(|a| local(a, p, tol))
                .collect::<Result<Vec<_>>>()?;
            let norm = parts.iter().map(|(v, _)| v * v).sum::<f64>().sqrt();
            if norm > tol {
                let mut acc: Option<ConvexSet> = None;
                for (v, s) in parts {
                    let c = v / norm;
                    let term = if c >= 0.0 {
                        s.times(c)
                    } else {
                        negate(s, p.t)?.times(-c)
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.plus(term),
                    });
                }
                Ok((norm, acc.unwrap()))
            } else {
                let mut rows = Vec::with_capacity(parts.len());
                for (_, s) in parts {
                    match s.simplified() {
                        ConvexSet::Singleton(g) => rows.push(g),
                        _ => {
                            return Err(Error::NotSubdifferentiable {
                                what: "norm of nonsmooth terms at zero",
                                t: p.t,
                            })
                        }
                    }
                }
                Ok((norm, ConvexSet::LinearBall(rows)))
            }
        }
        _ => unreachable!("smooth node handled above or rejected by validation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexgeom::support;
    use crate::integrand::parse_expr;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-9;

    fn pt<'a>(x: &'a [f64], z: &'a [f64], t: f64) -> EvalPoint<'a> {
        EvalPoint::new(x, z, t).unwrap()
    }

    #[test]
    fn abs_at_kink_is_segment() {
        let e = parse_expr("abs(x1)", 1).unwrap();
        let s = subdiff_expr(&e, &pt(&[0.0], &[0.0], 0.5), TOL).unwrap();
        assert_eq!(s, ConvexSet::Polytope(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn abs_away_from_kink_is_singleton() {
        let e = parse_expr("abs(x1)", 1).unwrap();
        let s = subdiff_expr(&e, &pt(&[-1.0], &[0.0], 0.0), TOL).unwrap();
        assert_eq!(s, ConvexSet::Singleton(vec![-1.0, 0.0]));
    }

    #[test]
    fn norm_at_zero_is_coordinate_ball() {
        let e = parse_expr("norm(z1 - 1, x2)", 2).unwrap();
        let s = subdiff_expr(&e, &pt(&[0.3, 0.0], &[1.0, 0.0], 0.0), TOL).unwrap();
        // layout (x1, x2, z1, z2)
        assert_eq!(
            s,
            ConvexSet::Ball {
                center: vec![0.0; 4],
                radius: 1.0,
                mask: vec![false, true, true, false]
            }
        );
    }

    #[test]
    fn norm_away_from_zero_is_gradient() {
        let e = parse_expr("norm(z1 - 1, x2)", 2).unwrap();
        let s = subdiff_expr(&e, &pt(&[0.0, 4.0], &[4.0, 0.0], 0.0), TOL).unwrap();
        let g = s.as_singleton().unwrap();
        assert_abs_diff_eq!(g[1], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn abs_directional_derivatives() {
        let e = parse_expr("abs(x1)", 1).unwrap();
        let p = pt(&[0.0], &[0.0], 0.0);
        assert_eq!(directional_derivative(&e, &p, &[1.0, 0.0], TOL).unwrap(), 1.0);
        assert_eq!(directional_derivative(&e, &p, &[-1.0, 0.0], TOL).unwrap(), 1.0);
    }

    #[test]
    fn max_with_two_active_branches() {
        let e = parse_expr("max(x1 + z1, 2*x1 - z1)", 1).unwrap();
        let p = pt(&[0.0], &[0.0], 0.0);
        let g = [0.3, -0.7];
        let expected = (0.3_f64 - 0.7).max(0.6 + 0.7);
        assert_abs_diff_eq!(directional_derivative(&e, &p, &g, TOL).unwrap(), expected);
    }

    #[test]
    fn negated_kink_is_rejected() {
        let e = parse_expr("-abs(x1)", 1).unwrap();
        assert!(matches!(
            subdiff_expr(&e, &pt(&[0.0], &[0.0], 0.0), TOL),
            Err(Error::NotSubdifferentiable { .. })
        ));
        // but fine away from the kink
        let s = subdiff_expr(&e, &pt(&[2.0], &[0.0], 0.0), TOL).unwrap();
        assert_eq!(s, ConvexSet::Singleton(vec![-1.0, 0.0]));
    }

    #[test]
    fn max_of_time_only_branches_has_zero_gradient() {
        let e = parse_expr("abs(x1 - max(t - 0.5, 0))", 1).unwrap();
        let s = subdiff_expr(&e, &pt(&[0.0], &[0.0], 0.5), TOL).unwrap();
        assert_eq!(s, ConvexSet::Polytope(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn scaling_is_equivariant() {
        let e = parse_expr("max(x1, -x1 + z1)", 1).unwrap();
        let e3 = parse_expr("3 * max(x1, -x1 + z1)", 1).unwrap();
        let p = pt(&[0.0], &[0.0], 0.0);
        let (s, s3) = (
            subdiff_expr(&e, &p, TOL).unwrap(),
            subdiff_expr(&e3, &p, TOL).unwrap(),
        );
        for k in 0..16 {
            let a = k as f64 * 0.4;
            let d = [a.cos(), a.sin()];
            assert_abs_diff_eq!(
                support(&s3, &d).unwrap().0,
                3.0 * support(&s, &d).unwrap().0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn sqrt_at_zero_has_no_gradient() {
        let e = parse_expr("sqrt(pow(x1, 2))", 1).unwrap();
        assert!(matches!(
            subdiff_expr(&e, &pt(&[0.0], &[0.0], 0.0), TOL),
            Err(Error::Domain { .. })
        ));
    }
}
