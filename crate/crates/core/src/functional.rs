//! The penalized functional
//!
//! ```text
//! I(x, z) = J(x, z) + λ·ψ(z) + λ·φ(x, z)
//! J(x, z) = ∫₀ᵀ f(x, z, t) dt
//! ψ(z)    = ½‖x0 + ∫₀ᵀ z − xT‖²
//! φ(x, z) = ½∫₀ᵀ ‖x(t) − x0 − ∫₀ᵗ z‖² dt
//! ```
//!
//! on the nodal representation. Every integral uses the trapezoid rule, and
//! gradients are taken with respect to the trapezoid-weighted nodal inner
//! product, so the nodal gradient of `ψ` and `φ` is the exact gradient of the
//! discrete functional. For `J` that makes the nodal subgradient simply the
//! pointwise subdifferential of the integrand.

use rayon::prelude::*;

use crate::convexgeom::{min_norm_point, ConvexSet};
use crate::error::{Error, Result};
use crate::integrand::{subdiff_expr, EvalPoint, Expr};
use crate::trajectory::{cumulative_integral, interp_l2_norm_sq, trapz, Grid, PairTraj, Traj};

/// Chosen subgradient `(v_x, v_z)` at every node, width `2n`.
pub type SubgradField = Traj;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub horizon: f64,
    pub x0: Vec<f64>,
    /// Right endpoint; present exactly when `use_psi` is set.
    pub x_target: Option<Vec<f64>>,
    pub integrand: Expr,
    pub use_psi: bool,
    pub use_phi: bool,
    /// Initial `x` as expressions in `t`, one per component.
    pub initial_x: Option<Vec<Expr>>,
    /// Initial `z`; derived from `initial_x` by finite differences when absent.
    pub initial_z: Option<Vec<Expr>>,
    pub lambda0: Option<f64>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if self.n == 0 {
            return bad("dimension n must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon T must be positive, got {}", self.horizon));
        }
        if self.x0.len() != self.n {
            return bad(format!("x0 has {} components, expected {}", self.x0.len(), self.n));
        }
        match (&self.x_target, self.use_psi) {
            (Some(xt), true) if xt.len() != self.n => {
                return bad(format!("xT has {} components, expected {}", xt.len(), self.n))
            }
            (Some(_), false) => return bad("xT is given but use_psi is false".into()),
            (None, true) => return bad("use_psi requires xT".into()),
            _ => {}
        }
        self.integrand.validate(self.n)?;
        for (label, init) in [("initial_x", &self.initial_x), ("initial_z", &self.initial_z)] {
            if let Some(v) = init {
                if v.len() != self.n {
                    return bad(format!("{label} has {} components, expected {}", v.len(), self.n));
                }
                if v.iter().any(Expr::uses_state) {
                    return bad(format!("{label} may only depend on t"));
                }
            }
        }
        if let Some(l) = self.lambda0 {
            if !(l >= 0.0) {
                return bad(format!("lambda0 must be nonnegative, got {l}"));
            }
        }
        Ok(())
    }

    /// Starting pair on `grid`. Missing `x` defaults to the constant `x0`;
    /// missing `z` is the nodal finite difference of `x` (central inside,
    /// one-sided at the ends), or `x` is integrated from `z` when only `z`
    /// is given.
    pub fn initial_pair(&self, grid: &Grid) -> Result<PairTraj> {
        let n = self.n;
        let sample = |exprs: &[Expr]| -> Result<Traj> {
            let mut values = Vec::with_capacity(grid.nodes() * n);
            for i in 0..grid.nodes() {
                let t = grid.t(i);
                let p = EvalPoint { x: &[], z: &[], t };
                for e in exprs {
                    values.push(e.eval(&p).map_err(|err| err.at_node(i))?);
                }
            }
            Traj::new(*grid, n, values)
        };
        let (x, z) = match (&self.initial_x, &self.initial_z) {
            (Some(xe), Some(ze)) => (sample(xe)?, sample(ze)?),
            (Some(xe), None) => {
                let x = sample(xe)?;
                let z = finite_difference(&x);
                (x, z)
            }
            (None, Some(ze)) => {
                let z = sample(ze)?;
                (cumulative_integral(&z, &self.x0)?, z)
            }
            (None, None) => (Traj::constant(*grid, &self.x0), Traj::zeros(*grid, n)),
        };
        PairTraj::new(x, z)
    }
}

fn finite_difference(x: &Traj) -> Traj {
    let g = *x.grid();
    let (h, last) = (g.step(), g.nodes() - 1);
    let mut z = Traj::zeros(g, x.width());
    for i in 0..=last {
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
        let span = (hi - lo) as f64 * h;
        for j in 0..x.width() {
            z.row_mut(i)[j] = (x.row(hi)[j] - x.row(lo)[j]) / span;
        }
    }
    z
}

/// Penalty weights multiplying `ψ` and `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub psi: f64,
    pub phi: f64,
}

impl PenaltyWeights {
    pub fn uniform(lambda: f64) -> Self {
        PenaltyWeights {
            psi: lambda,
            phi: lambda,
        }
    }
}

/// The pieces of `I` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub j: f64,
    /// Zero when `ψ` is disabled.
    pub psi: f64,
    /// Zero when `φ` is disabled.
    pub phi: f64,
    pub total: f64,
}

fn check_dims(p: &ProblemSpec, xz: &PairTraj) -> Result<()> {
    if xz.dim() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: xz.dim(),
        });
    }
    if xz.grid().horizon() != p.horizon {
        return Err(Error::HorizonMismatch(p.horizon, xz.grid().horizon()));
    }
    Ok(())
}

/// `J = ∫ f(x, z, t)` by trapezoid over the nodes.
pub fn eval_j(p: &ProblemSpec, xz: &PairTraj) -> Result<f64> {
    check_dims(p, xz)?;
    let g = xz.grid();
    let mut acc = 0.0;
    for i in 0..g.nodes() {
        let pt = EvalPoint {
            x: xz.x.row(i),
            z: xz.z.row(i),
            t: g.t(i),
        };
        acc += g.weight(i) * p.integrand.eval(&pt).map_err(|e| e.at_node(i))?;
    }
    Ok(acc)
}

fn endpoint_residual(p: &ProblemSpec, z: &Traj) -> Result<Vec<f64>> {
    let xt = match (&p.x_target, p.use_psi) {
        (Some(xt), true) => xt,
        _ => return Err(Error::PenaltyDisabled("psi")),
    };
    if z.width() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: z.width(),
        });
    }
    Ok((0..p.n)
        .map(|j| p.x0[j] + trapz(z.grid(), z.column(j)) - xt[j])
        .collect())
}

pub fn eval_psi(p: &ProblemSpec, z: &Traj) -> Result<f64> {
    let r = endpoint_residual(p, z)?;
    Ok(0.5 * r.iter().map(|v| v * v).sum::<f64>())
}

/// `∇ψ(t) ≡ x0 + ∫₀ᵀ z − xT`, the same vector at every node.
pub fn grad_psi(p: &ProblemSpec, z: &Traj) -> Result<Traj> {
    let r = endpoint_residual(p, z)?;
    Ok(Traj::constant(*z.grid(), &r))
}

/// `d(t) = x(t) − x0 − ∫₀ᵗ z`.
fn consistency_defect(p: &ProblemSpec, xz: &PairTraj) -> Result<Traj> {
    if !p.use_phi {
        return Err(Error::PenaltyDisabled("phi"));
    }
    check_dims(p, xz)?;
    let cum = cumulative_integral(&xz.z, &p.x0)?;
    xz.x.axpy(-1.0, &cum)
}

pub fn eval_phi(p: &ProblemSpec, xz: &PairTraj) -> Result<f64> {
    let d = consistency_defect(p, xz)?;
    Ok(0.5 * crate::trajectory::l2_norm_sq(&d))
}

/// Gradient of `φ`, width `2n`: the `x` part is `d(t)`, the `z` part is
/// `−∫ₜᵀ d`, accumulated in one reverse pass. The reverse pass uses the
/// adjoint of the cumulative trapezoid, which agrees with the reverse
/// trapezoid integral at interior nodes and carries the matching half-cell
/// weights at the two ends.
pub fn grad_phi(p: &ProblemSpec, xz: &PairTraj) -> Result<Traj> {
    let d = consistency_defect(p, xz)?;
    let g = *xz.grid();
    let (n, last, h) = (p.n, g.nodes() - 1, g.step());
    let mut out = Traj::zeros(g, 2 * n);
    // suffix[j] = Σ_{i>j} w_i d_i
    let mut suffix = vec![0.0; n];
    for j in (0..=last).rev() {
        let dj = d.row(j);
        let row = out.row_mut(j);
        row[..n].copy_from_slice(dj);
        for k in 0..n {
            row[n + k] = if j == last {
                -0.5 * h * dj[k]
            } else if j == 0 {
                -suffix[k]
            } else {
                -(0.5 * h * dj[k] + suffix[k])
            };
        }
        let w = g.weight(j);
        suffix.iter_mut().zip(dj).for_each(|(s, v)| *s += w * v);
    }
    Ok(out)
}

/// `I` with separate weights for the two penalties.
pub fn evaluate(p: &ProblemSpec, xz: &PairTraj, w: PenaltyWeights) -> Result<Breakdown> {
    let j = eval_j(p, xz)?;
    let psi = if p.use_psi { eval_psi(p, &xz.z)? } else { 0.0 };
    let phi = if p.use_phi { eval_phi(p, xz)? } else { 0.0 };
    Ok(Breakdown {
        j,
        psi,
        phi,
        total: j + w.psi * psi + w.phi * phi,
    })
}

/// `I = J + λψ + λφ`; disabled penalties contribute nothing.
pub fn eval_i(p: &ProblemSpec, xz: &PairTraj, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("penalty weight must be nonnegative, got {lambda}")));
    }
    Ok(evaluate(p, xz, PenaltyWeights::uniform(lambda))?.total)
}

/// Smooth penalty contributions to the nodal gradient, width `2n`.
fn penalty_field(p: &ProblemSpec, xz: &PairTraj, w: PenaltyWeights) -> Result<Traj> {
    let n = p.n;
    let mut out = Traj::zeros(*xz.grid(), 2 * n);
    if p.use_psi && w.psi != 0.0 {
        let r = endpoint_residual(p, &xz.z)?;
        for i in 0..xz.grid().nodes() {
            let row = out.row_mut(i);
            row[n..].iter_mut().zip(&r).for_each(|(a, b)| *a += w.psi * b);
        }
    }
    if p.use_phi && w.phi != 0.0 {
        out = out.axpy(w.phi, &grad_phi(p, xz)?)?;
    }
    Ok(out)
}

fn integrand_subdiff(p: &ProblemSpec, xz: &PairTraj, i: usize, activity_rel: f64) -> Result<ConvexSet> {
    let pt = EvalPoint {
        x: xz.x.row(i),
        z: xz.z.row(i),
        t: xz.grid().t(i),
    };
    let value = p.integrand.eval(&pt)?;
    subdiff_expr(&p.integrand, &pt, activity_rel * (1.0 + value.abs()))
}

fn assemble(f_part: ConvexSet, penalty: &[f64], p: &ProblemSpec, w: PenaltyWeights) -> ConvexSet {
    let mut members = vec![f_part];
    if (p.use_psi && w.psi != 0.0) || (p.use_phi && w.phi != 0.0) {
        members.push(ConvexSet::Singleton(penalty.to_vec()));
    }
    ConvexSet::MinkowskiSum(members)
}

/// Subdifferential of `I` at node `i`: the integrand's subdifferential plus
/// the (singleton) penalty gradients. Activity of nonsmooth branches is
/// decided with tolerance `activity_rel·(1 + |f|)`.
pub fn subdiff_i_at(
    p: &ProblemSpec,
    xz: &PairTraj,
    lambda: f64,
    node: usize,
    activity_rel: f64,
) -> Result<ConvexSet> {
    let w = PenaltyWeights::uniform(lambda);
    let pen = penalty_field(p, xz, w)?;
    let f_part = integrand_subdiff(p, xz, node, activity_rel).map_err(|e| e.at_node(node))?;
    Ok(assemble(f_part, pen.row(node), p, w))
}

/// Nodal subdifferentials of `I` at every node.
pub fn nodal_subdiffs(
    p: &ProblemSpec,
    xz: &PairTraj,
    w: PenaltyWeights,
    activity_rel: f64,
) -> Result<Vec<ConvexSet>> {
    check_dims(p, xz)?;
    let pen = penalty_field(p, xz, w)?;
    (0..xz.grid().nodes())
        .into_par_iter()
        .map(|i| {
            let f_part = integrand_subdiff(p, xz, i, activity_rel).map_err(|e| e.at_node(i))?;
            Ok(assemble(f_part, pen.row(i), p, w))
        })
        .collect()
}

/// Minimum-norm subgradient at every node.
pub fn min_norm_field(
    p: &ProblemSpec,
    xz: &PairTraj,
    w: PenaltyWeights,
    activity_rel: f64,
    min_norm_tol: f64,
) -> Result<SubgradField> {
    let sets = nodal_subdiffs(p, xz, w, activity_rel)?;
    let rows = sets
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let r = min_norm_point(s, min_norm_tol)?;
            if !r.certified {
                return Err(Error::NotCertified { node: i, gap: r.gap });
            }
            Ok(r.point)
        })
        .collect::<Result<Vec<_>>>()?;
    Traj::new(*xz.grid(), 2 * p.n, rows.concat())
}

/// `‖v̄‖²` of the interpolated minimum-norm subgradient field, the quantity
/// compared against the stopping threshold.
pub fn stationarity_residual(
    p: &ProblemSpec,
    xz: &PairTraj,
    lambda: f64,
    activity_rel: f64,
    min_norm_tol: f64,
) -> Result<f64> {
    let v = min_norm_field(p, xz, PenaltyWeights::uniform(lambda), activity_rel, min_norm_tol)?;
    Ok(interp_l2_norm_sq(&v))
}
