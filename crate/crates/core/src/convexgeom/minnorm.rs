//! Minimum-norm point of a convex compact set.
//!
//! Polytopes are handled by Wolfe's method: keep a corral of affinely
//! independent vertices, add the vertex minimizing `⟨x, v⟩` (major cycle),
//! and move to the affine minimizer of the corral, dropping vertices whose
//! weight would turn negative (minor cycle). The same loop works for any set
//! with a support oracle: the oracle's witness plays the role of the
//! entering vertex, which makes the method a fully corrective conditional
//! gradient scheme for balls, Minkowski sums and hulls.
//!
//! Termination uses the duality gap `⟨x, x⟩ − min_{s∈S} ⟨x, s⟩`, which bounds
//! `‖x − x*‖²` from above.

use nalgebra::{DMatrix, DVector};

use super::{dot, norm_sq, support_unchecked, ConvexSet};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_NORM_TOL: f64 = 1e-10;

/// Weight below which a corral member is dropped.
const WEIGHT_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormResult {
    pub point: Vec<f64>,
    pub norm_sq: f64,
    /// `⟨v̄, v̄⟩ − min_{s∈S} ⟨v̄, s⟩`, recomputed from the input set.
    pub gap: f64,
    pub iterations: usize,
    /// Whether `gap ≤ tol·(1 + ‖v̄‖²)`. When false the result is the best
    /// iterate found before the iteration cap.
    pub certified: bool,
    /// Members of the set whose convex combination with `weights` is `point`.
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Point of `set` closest to the origin.
pub fn min_norm_point(set: &ConvexSet, tol: f64) -> Result<MinNormResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("min-norm tolerance must be positive, got {tol}")));
    }
    set.validate()?;
    let raw = solve(set, tol);
    Ok(finish(set, raw, tol))
}

struct Raw {
    point: Vec<f64>,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
    iterations: usize,
}

fn finish(set: &ConvexSet, raw: Raw, tol: f64) -> MinNormResult {
    let neg: Vec<f64> = raw.point.iter().map(|v| -v).collect();
    let ns = norm_sq(&raw.point);
    let gap = ns + support_unchecked(set, &neg).0;
    MinNormResult {
        certified: gap <= tol * (1.0 + ns),
        norm_sq: ns,
        gap,
        point: raw.point,
        iterations: raw.iterations,
        atoms: raw.atoms,
        weights: raw.weights,
    }
}

fn solve(set: &ConvexSet, tol: f64) -> Raw {
    if let ConvexSet::Scaled(c, inner) = set {
        // the gap scales by c², the certificate threshold by at most that
        let r = solve(inner, tol / (c * c).max(1.0));
        let scale = |p: Vec<f64>| p.into_iter().map(|v| c * v).collect::<Vec<f64>>();
        return Raw {
            point: scale(r.point),
            atoms: r.atoms.into_iter().map(scale).collect(),
            weights: r.weights,
            iterations: r.iterations,
        };
    }
    let simple = set.simplified();
    let d = simple.dim();
    let cap = 10 * d.max(1) * (simple.vertex_count() + 10);
    match &simple {
        ConvexSet::Singleton(p) => Raw {
            point: p.clone(),
            atoms: vec![p.clone()],
            weights: vec![1.0],
            iterations: 0,
        },
        ConvexSet::Ball {
            center,
            radius,
            mask,
        } => {
            let masked = center
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(v, _)| v * v)
                .sum::<f64>()
                .sqrt();
            let shrink = if masked <= *radius { 0.0 } else { 1.0 - radius / masked };
            let point: Vec<f64> = center
                .iter()
                .zip(mask)
                .map(|(v, m)| if *m { v * shrink } else { *v })
                .collect();
            Raw {
                atoms: vec![point.clone()],
                point,
                weights: vec![1.0],
                iterations: 0,
            }
        }
        ConvexSet::Polytope(v) if v.len() == 2 => segment(&v[0], &v[1]),
        ConvexSet::Polytope(v) => {
            let start = v
                .iter()
                .min_by(|a, b| norm_sq(a).total_cmp(&norm_sq(b)))
                .unwrap()
                .clone();
            wolfe(|x| support_unchecked(&simple, &neg(x)).1, start, tol, cap)
        }
        other => {
            let start = other.any_point();
            let first = support_unchecked(other, &neg(&start)).1;
            wolfe(|x| support_unchecked(other, &neg(x)).1, first, tol, cap)
        }
    }
}

fn neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

fn segment(a: &[f64], b: &[f64]) -> Raw {
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let len = norm_sq(&ab);
    let t = if len == 0.0 {
        0.0
    } else {
        (-dot(a, &ab) / len).clamp(0.0, 1.0)
    };
    let point = if t == 1.0 {
        b.to_vec()
    } else {
        a.iter().zip(&ab).map(|(p, q)| p + t * q).collect()
    };
    Raw {
        point,
        atoms: vec![a.to_vec(), b.to_vec()],
        weights: vec![1.0 - t, t],
        iterations: 1,
    }
}

fn combine(atoms: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; atoms[0].len()];
    for (p, wi) in atoms.iter().zip(w) {
        x.iter_mut().zip(p).for_each(|(a, b)| *a += wi * b);
    }
    x
}

/// Coefficients (summing to one) of the point of minimum norm in the affine
/// hull of `atoms`, or `None` when the atoms are affinely dependent.
fn affine_minimizer(atoms: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = atoms.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let d = atoms[0].len();
    let p0 = &atoms[0];
    let diffs = DMatrix::from_fn(d, k - 1, |r, c| atoms[c + 1][r] - p0[r]);
    let rhs = -DVector::from_column_slice(p0);
    let svd = diffs.svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= smax * 1e-12 {
        return None;
    }
    let beta = svd.solve(&rhs, 0.0).ok()?;
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    Some(alpha)
}

fn wolfe(lmo: impl Fn(&[f64]) -> Vec<f64>, start: Vec<f64>, tol: f64, cap: usize) -> Raw {
    let mut atoms = vec![start];
    let mut w = vec![1.0];
    let mut x = atoms[0].clone();
    let mut iterations = 0;
    while iterations < cap {
        iterations += 1;
        let s = lmo(&x);
        let xx = norm_sq(&x);
        if xx - dot(&x, &s) <= tol * (1.0 + xx) {
            break;
        }
        if atoms.contains(&s) {
            // No admissible entering point: numerically stalled.
            break;
        }
        atoms.push(s);
        w.push(0.0);
        let mut minor = 0;
        loop {
            minor += 1;
            let Some(alpha) = affine_minimizer(&atoms) else {
                // s is numerically in the corral's affine hull: take the exact
                // segment step from x toward s and restart the corral there
                let s = atoms.pop().expect("entering point");
                let d: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
                let dd = norm_sq(&d);
                let theta = if dd > 0.0 { (-dot(&x, &d) / dd).clamp(0.0, 1.0) } else { 0.0 };
                if theta == 0.0 {
                    w.pop();
                    return Raw {
                        point: x,
                        atoms,
                        weights: w,
                        iterations,
                    };
                }
                let next: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + theta * b).collect();
                atoms = vec![next];
                w = vec![1.0];
                break;
            };
            if alpha.iter().all(|&a| a > WEIGHT_EPS) || minor > atoms.len() + 2 {
                if alpha.iter().all(|&a| a > WEIGHT_EPS) {
                    w = alpha;
                }
                break;
            }
            let mut theta = 1.0;
            let mut drop = 0;
            for (i, (&a, &wi)) in alpha.iter().zip(&w).enumerate() {
                if a <= WEIGHT_EPS {
                    let ratio = if wi - a > 0.0 { wi / (wi - a) } else { 0.0 };
                    if ratio < theta {
                        theta = ratio;
                        drop = i;
                    }
                }
            }
            for (wi, a) in w.iter_mut().zip(&alpha) {
                *wi = theta * a + (1.0 - theta) * *wi;
            }
            w[drop] = 0.0;
            let mut i = 0;
            while i < atoms.len() {
                if w[i] <= WEIGHT_EPS {
                    atoms.remove(i);
                    w.remove(i);
                } else {
                    i += 1;
                }
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
        }
        x = combine(&atoms, &w);
    }
    Raw {
        point: x,
        atoms,
        weights: w,
        iterations,
    }
}
