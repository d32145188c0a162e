//! Finitely representable convex compact sets.
//!
//! Every variant answers the support (linear maximization) query exactly,
//! and support functions compose over Minkowski sums, nonnegative scaling
//! and convex hulls. That single oracle is enough for the minimum-norm
//! point solver in [`min_norm_point`].

mod minnorm;

use crate::error::{Error, Result};

pub use minnorm::{min_norm_point, MinNormResult, DEFAULT_MIN_NORM_TOL};

/// Convex compact subset of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Singleton(Vec<f64>),
    /// Convex hull of at least one vertex.
    Polytope(Vec<Vec<f64>>),
    /// `{ center + radius·u : ‖u‖ ≤ 1, u supported on the masked coordinates }`.
    Ball {
        center: Vec<f64>,
        radius: f64,
        mask: Vec<bool>,
    },
    MinkowskiSum(Vec<ConvexSet>),
    /// `c·S` with `c ≥ 0`.
    Scaled(f64, Box<ConvexSet>),
    /// Convex hull of the union of the members.
    Hull(Vec<ConvexSet>),
    /// `{ Σ wⱼ·rowⱼ : ‖w‖ ≤ 1 }`, the image of a unit ball under a linear map.
    LinearBall(Vec<Vec<f64>>),
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

impl ConvexSet {
    pub fn singleton(point: Vec<f64>) -> Self {
        ConvexSet::Singleton(point)
    }

    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let s = ConvexSet::Polytope(vertices);
        s.validate()?;
        Ok(s)
    }

    /// Ball of `radius` around `center` in the full space.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let mask = vec![true; center.len()];
        Self::masked_ball(center, radius, mask)
    }

    pub fn masked_ball(center: Vec<f64>, radius: f64, mask: Vec<bool>) -> Result<Self> {
        let s = ConvexSet::Ball {
            center,
            radius,
            mask,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn minkowski_sum(members: Vec<ConvexSet>) -> Result<Self> {
        let s = ConvexSet::MinkowskiSum(members);
        s.validate()?;
        Ok(s)
    }

    pub fn scaled(c: f64, set: ConvexSet) -> Result<Self> {
        let s = ConvexSet::Scaled(c, Box::new(set));
        s.validate()?;
        Ok(s)
    }

    pub fn hull(members: Vec<ConvexSet>) -> Result<Self> {
        let s = ConvexSet::Hull(members);
        s.validate()?;
        Ok(s)
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Singleton(p) => p.len(),
            ConvexSet::Polytope(v) => v.first().map_or(0, Vec::len),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::MinkowskiSum(m) | ConvexSet::Hull(m) => m.first().map_or(0, Self::dim),
            ConvexSet::Scaled(_, s) => s.dim(),
            ConvexSet::LinearBall(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    /// Checks the structural invariants: nonempty member lists, a common
    /// dimension, finite entries, nonnegative radius and scale.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        self.validate_dim(d)
    }

    fn validate_dim(&self, d: usize) -> Result<()> {
        let check = |p: &[f64]| -> Result<()> {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem("non-finite coordinate in convex set".into()));
            }
            Ok(())
        };
        match self {
            ConvexSet::Singleton(p) => check(p),
            ConvexSet::Polytope(v) | ConvexSet::LinearBall(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidProblem("empty vertex list".into()));
                }
                v.iter().try_for_each(|p| check(p))
            }
            ConvexSet::Ball {
                center,
                radius,
                mask,
            } => {
                check(center)?;
                if mask.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: mask.len(),
                    });
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidProblem(format!("invalid radius {radius}")));
                }
                Ok(())
            }
            ConvexSet::MinkowskiSum(m) | ConvexSet::Hull(m) => {
                if m.is_empty() {
                    return Err(Error::InvalidProblem("empty member list".into()));
                }
                m.iter().try_for_each(|s| s.validate_dim(d))
            }
            ConvexSet::Scaled(c, s) => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(Error::InvalidProblem(format!("invalid scale {c}")));
                }
                s.validate_dim(d)
            }
        }
    }

    pub fn as_singleton(&self) -> Option<&[f64]> {
        match self {
            ConvexSet::Singleton(p) => Some(p),
            _ => None,
        }
    }

    /// Some point of the set.
    pub fn any_point(&self) -> Vec<f64> {
        match self {
            ConvexSet::Singleton(p) => p.clone(),
            ConvexSet::Polytope(v) => v[0].clone(),
            ConvexSet::Ball { center, .. } => center.clone(),
            ConvexSet::MinkowskiSum(m) => {
                let mut acc = vec![0.0; self.dim()];
                m.iter().for_each(|s| add_into(&mut acc, &s.any_point()));
                acc
            }
            ConvexSet::Scaled(c, s) => s.any_point().into_iter().map(|v| c * v).collect(),
            ConvexSet::Hull(m) => m[0].any_point(),
            ConvexSet::LinearBall(rows) => vec![0.0; rows[0].len()],
        }
    }

    /// Number of polytope vertices appearing anywhere in the representation.
    pub fn vertex_count(&self) -> usize {
        match self {
            ConvexSet::Singleton(_) => 1,
            ConvexSet::Polytope(v) => v.len(),
            ConvexSet::Ball { .. } | ConvexSet::LinearBall(_) => 0,
            ConvexSet::MinkowskiSum(m) | ConvexSet::Hull(m) => m.iter().map(Self::vertex_count).sum(),
            ConvexSet::Scaled(_, s) => s.vertex_count(),
        }
    }

    /// Sum of two sets, folding singleton pairs and flattening nested sums.
    pub fn plus(self, other: ConvexSet) -> ConvexSet {
        match (self, other) {
            (ConvexSet::Singleton(mut a), ConvexSet::Singleton(b)) => {
                add_into(&mut a, &b);
                ConvexSet::Singleton(a)
            }
            (ConvexSet::MinkowskiSum(mut a), ConvexSet::MinkowskiSum(b)) => {
                a.extend(b);
                ConvexSet::MinkowskiSum(a)
            }
            (ConvexSet::MinkowskiSum(mut a), b) => {
                a.push(b);
                ConvexSet::MinkowskiSum(a)
            }
            (a, ConvexSet::MinkowskiSum(mut b)) => {
                b.insert(0, a);
                ConvexSet::MinkowskiSum(b)
            }
            (a, b) => ConvexSet::MinkowskiSum(vec![a, b]),
        }
    }

    /// `c·S` for `c ≥ 0`, applied directly to points where possible.
    pub fn times(self, c: f64) -> ConvexSet {
        debug_assert!(c >= 0.0);
        match self {
            ConvexSet::Singleton(p) => ConvexSet::Singleton(p.into_iter().map(|v| c * v).collect()),
            ConvexSet::Scaled(k, s) => ConvexSet::Scaled(c * k, s),
            s => ConvexSet::Scaled(c, Box::new(s)),
        }
    }

    /// Equivalent representation in canonical form: duplicate vertices
    /// removed, singleton summands folded into a translation, nested scaling
    /// pushed into points, and hulls or sums of polytopes expanded when the
    /// vertex count stays small.
    pub fn simplified(&self) -> ConvexSet {
        const MAX_EXPANDED_VERTICES: usize = 64;
        match self {
            ConvexSet::Singleton(_) => self.clone(),
            ConvexSet::Polytope(v) => {
                let mut uniq: Vec<Vec<f64>> = Vec::with_capacity(v.len());
                for p in v {
                    if !uniq.contains(p) {
                        uniq.push(p.clone());
                    }
                }
                if uniq.len() == 1 {
                    ConvexSet::Singleton(uniq.pop().unwrap())
                } else {
                    ConvexSet::Polytope(uniq)
                }
            }
            ConvexSet::Ball {
                center,
                radius,
                mask,
            } => {
                if *radius == 0.0 || !mask.iter().any(|&m| m) {
                    ConvexSet::Singleton(center.clone())
                } else {
                    self.clone()
                }
            }
            ConvexSet::LinearBall(rows) => {
                let rows: Vec<Vec<f64>> = rows
                    .iter()
                    .filter(|r| r.iter().any(|&v| v != 0.0))
                    .cloned()
                    .collect();
                if rows.is_empty() {
                    return ConvexSet::Singleton(vec![0.0; self.dim()]);
                }
                coordinate_ball(&rows).unwrap_or(ConvexSet::LinearBall(rows))
            }
            ConvexSet::Scaled(c, s) => match s.simplified() {
                ConvexSet::Singleton(p) => ConvexSet::Singleton(p.iter().map(|v| c * v).collect()),
                ConvexSet::Polytope(v) => ConvexSet::Polytope(
                    v.iter()
                        .map(|p| p.iter().map(|x| c * x).collect())
                        .collect(),
                )
                .simplified(),
                ConvexSet::Ball {
                    center,
                    radius,
                    mask,
                } => ConvexSet::Ball {
                    center: center.iter().map(|x| c * x).collect(),
                    radius: c * radius,
                    mask,
                }
                .simplified(),
                other => ConvexSet::Scaled(*c, Box::new(other)),
            },
            ConvexSet::MinkowskiSum(members) => {
                let d = self.dim();
                let mut shift = vec![0.0; d];
                let mut rest = Vec::new();
                let mut stack: Vec<ConvexSet> = members.iter().rev().map(Self::simplified).collect();
                while let Some(s) = stack.pop() {
                    match s {
                        ConvexSet::Singleton(p) => add_into(&mut shift, &p),
                        ConvexSet::MinkowskiSum(inner) => stack.extend(inner.into_iter().rev()),
                        other => rest.push(other),
                    }
                }
                // Expand sums of polytopes while they stay small.
                let mut merged: Vec<ConvexSet> = Vec::new();
                for s in rest {
                    if let (Some(ConvexSet::Polytope(a)), ConvexSet::Polytope(b)) = (merged.last(), &s) {
                        if a.len() * b.len() <= MAX_EXPANDED_VERTICES {
                            let mut v = Vec::with_capacity(a.len() * b.len());
                            for p in a {
                                for q in b {
                                    v.push(p.iter().zip(q).map(|(x, y)| x + y).collect());
                                }
                            }
                            *merged.last_mut().unwrap() = ConvexSet::Polytope(v).simplified();
                            continue;
                        }
                    }
                    merged.push(s);
                }
                match merged.len() {
                    0 => ConvexSet::Singleton(shift),
                    1 => translate(merged.pop().unwrap(), &shift),
                    _ => {
                        if shift.iter().any(|&v| v != 0.0) {
                            merged.push(ConvexSet::Singleton(shift));
                        }
                        ConvexSet::MinkowskiSum(merged)
                    }
                }
            }
            ConvexSet::Hull(members) => {
                let simple: Vec<ConvexSet> = members.iter().map(Self::simplified).collect();
                let mut verts = Vec::new();
                for s in &simple {
                    match s {
                        ConvexSet::Singleton(p) => verts.push(p.clone()),
                        ConvexSet::Polytope(v) => verts.extend(v.iter().cloned()),
                        _ => return ConvexSet::Hull(simple),
                    }
                }
                if verts.len() <= MAX_EXPANDED_VERTICES {
                    ConvexSet::Polytope(verts).simplified()
                } else {
                    ConvexSet::Hull(simple)
                }
            }
        }
    }
}

/// Recognizes `{Σ wⱼ rowⱼ : ‖w‖ ≤ 1}` as a coordinate-subspace ball when each
/// row is a multiple of a distinct unit vector and all multiples agree in
/// magnitude.
fn coordinate_ball(rows: &[Vec<f64>]) -> Option<ConvexSet> {
    let d = rows[0].len();
    let mut mask = vec![false; d];
    let mut radius = None;
    for r in rows {
        let mut nz = r.iter().enumerate().filter(|(_, v)| **v != 0.0);
        let (k, v) = nz.next()?;
        if nz.next().is_some() || mask[k] {
            return None;
        }
        match radius {
            None => radius = Some(v.abs()),
            Some(r0) if r0 == v.abs() => {}
            Some(_) => return None,
        }
        mask[k] = true;
    }
    Some(ConvexSet::Ball {
        center: vec![0.0; d],
        radius: radius?,
        mask,
    })
}

fn translate(s: ConvexSet, shift: &[f64]) -> ConvexSet {
    if shift.iter().all(|&v| v == 0.0) {
        return s;
    }
    match s {
        ConvexSet::Singleton(mut p) => {
            add_into(&mut p, shift);
            ConvexSet::Singleton(p)
        }
        ConvexSet::Polytope(mut v) => {
            v.iter_mut().for_each(|p| add_into(p, shift));
            ConvexSet::Polytope(v)
        }
        ConvexSet::Ball {
            mut center,
            radius,
            mask,
        } => {
            add_into(&mut center, shift);
            ConvexSet::Ball {
                center,
                radius,
                mask,
            }
        }
        other => ConvexSet::MinkowskiSum(vec![other, ConvexSet::Singleton(shift.to_vec())]),
    }
}

/// Maximum of `⟨v, d⟩` over the set together with a maximizer.
///
/// Polytope ties go to the lowest vertex index. A zero direction (or a zero
/// masked part for balls) yields value 0 and a deterministic member point.
pub fn support(set: &ConvexSet, d: &[f64]) -> Result<(f64, Vec<f64>)> {
    if d.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: d.len(),
        });
    }
    Ok(support_unchecked(set, d))
}

pub(crate) fn support_unchecked(set: &ConvexSet, d: &[f64]) -> (f64, Vec<f64>) {
    match set {
        ConvexSet::Singleton(p) => (dot(p, d), p.clone()),
        ConvexSet::Polytope(v) => {
            let mut best = 0;
            let mut best_val = dot(&v[0], d);
            for (i, p) in v.iter().enumerate().skip(1) {
                let val = dot(p, d);
                if val > best_val {
                    best = i;
                    best_val = val;
                }
            }
            (best_val, v[best].clone())
        }
        ConvexSet::Ball {
            center,
            radius,
            mask,
        } => {
            let masked_norm = d
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(v, _)| v * v)
                .sum::<f64>()
                .sqrt();
            let mut w = center.clone();
            if masked_norm > 0.0 {
                for ((wi, di), m) in w.iter_mut().zip(d).zip(mask) {
                    if *m {
                        *wi += radius * di / masked_norm;
                    }
                }
            }
            (dot(center, d) + radius * masked_norm, w)
        }
        ConvexSet::MinkowskiSum(m) => {
            let mut value = 0.0;
            let mut w = vec![0.0; d.len()];
            for s in m {
                let (v, p) = support_unchecked(s, d);
                value += v;
                add_into(&mut w, &p);
            }
            (value, w)
        }
        ConvexSet::Scaled(c, s) => {
            let (v, p) = support_unchecked(s, d);
            (c * v, p.into_iter().map(|x| c * x).collect())
        }
        ConvexSet::Hull(m) => {
            let mut best = support_unchecked(&m[0], d);
            for s in &m[1..] {
                let cand = support_unchecked(s, d);
                if cand.0 > best.0 {
                    best = cand;
                }
            }
            best
        }
        ConvexSet::LinearBall(rows) => {
            let y: Vec<f64> = rows.iter().map(|r| dot(r, d)).collect();
            let ny = norm_sq(&y).sqrt();
            let mut w = vec![0.0; d.len()];
            if ny > 0.0 {
                for (r, yj) in rows.iter().zip(&y) {
                    w.iter_mut().zip(r).for_each(|(a, b)| *a += yj / ny * b);
                }
            }
            (ny, w)
        }
    }
}
