//! One-dimensional minimization of `γ ↦ I(xz + γG)` over `γ ≥ 0`.
//!
//! `I` along a ray is only piecewise smooth, so the search uses values only:
//! a geometric bracket followed by golden-section refinement. Afterwards the
//! best sampled point is polished by a parabola fit and by intersecting the
//! secant lines on either side of it, which lands exactly on the kink of a
//! piecewise-linear profile.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchConfig {
    /// First trial step when no previous step is known.
    pub seed: f64,
    /// Bracket expansion factor.
    pub growth: f64,
    pub max_step: f64,
    /// Below this the search gives up and reports a stall.
    pub min_step: f64,
    /// Golden section stops once the bracket is shorter than `rel_tol·(1 + γ)`.
    pub rel_tol: f64,
    /// Required decrease for a step to be accepted.
    pub min_decrease: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            seed: 0.1,
            growth: 2.0,
            max_step: 1e4,
            min_step: 1e-14,
            rel_tol: 1e-6,
            min_decrease: 1e-12,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("line search: {m}")));
        if !(self.growth > 1.0) {
            return bad("growth must exceed 1");
        }
        if !(self.min_step > 0.0 && self.min_step <= self.seed && self.seed <= self.max_step) {
            return bad("need 0 < min_step <= seed <= max_step");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad("rel_tol must lie in (0, 1)");
        }
        if !(self.min_decrease >= 0.0) {
            return bad("min_decrease must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    /// Accepted step, `0` when stalled.
    pub gamma: f64,
    /// Objective at the accepted step.
    pub value: f64,
    pub evaluations: usize,
    /// No point decreased the objective by `min_decrease`.
    pub stalled: bool,
}

struct Probe<F> {
    f: F,
    pts: Vec<(f64, f64)>,
}

impl<F: FnMut(f64) -> Result<f64>> Probe<F> {
    fn at(&mut self, g: f64) -> Result<f64> {
        if let Some(&(_, v)) = self.pts.iter().find(|(x, _)| *x == g) {
            return Ok(v);
        }
        let v = match (self.f)(g) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => f64::INFINITY,
            Err(e) if is_domain(&e) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        self.pts.push((g, v));
        Ok(v)
    }

    fn best(&self) -> (f64, f64) {
        // ties go to the larger step
        self.pts
            .iter()
            .skip(1)
            .copied()
            .fold((0.0, f64::INFINITY), |acc, p| if p.1 <= acc.1 { p } else { acc })
    }
}

fn is_domain(e: &Error) -> bool {
    match e {
        Error::Domain { .. } => true,
        Error::AtNode { source, .. } => is_domain(source),
        _ => false,
    }
}

/// Minimizes `f` over `γ > 0` given `f0 = f(0)`, starting the bracket at `seed`.
/// Trial points where `f` hits a domain error count as `+∞`.
pub fn minimize_along<F>(f: F, f0: f64, seed: f64, cfg: &LineSearchConfig) -> Result<LineSearchResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut pr = Probe {
        f,
        pts: vec![(0.0, f0)],
    };
    let stalled = |pr: &Probe<F>| LineSearchResult {
        gamma: 0.0,
        value: f0,
        evaluations: pr.pts.len() - 1,
        stalled: true,
    };

    let mut g = seed.clamp(cfg.min_step, cfg.max_step);
    let mut v = pr.at(g)?;
    let (lo, hi) = if v < f0 {
        let mut prev = 0.0;
        loop {
            if g >= cfg.max_step {
                break (prev, g);
            }
            let next = (g * cfg.growth).min(cfg.max_step);
            let vn = pr.at(next)?;
            if vn >= v {
                break (prev, next);
            }
            prev = g;
            g = next;
            v = vn;
        }
    } else {
        loop {
            g /= cfg.growth;
            if g < cfg.min_step {
                return Ok(stalled(&pr));
            }
            if pr.at(g)? < f0 {
                break (0.0, g * cfg.growth);
            }
        }
    };

    golden(&mut pr, lo, hi, cfg.rel_tol)?;
    for _ in 0..3 {
        if !polish(&mut pr)? {
            break;
        }
    }

    let (gamma, value) = pr.best();
    if !(value <= f0 - cfg.min_decrease) {
        return Ok(stalled(&pr));
    }
    Ok(LineSearchResult {
        gamma,
        value,
        evaluations: pr.pts.len() - 1,
        stalled: false,
    })
}

fn golden<F: FnMut(f64) -> Result<f64>>(pr: &mut Probe<F>, lo: f64, hi: f64, rel_tol: f64) -> Result<()> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = pr.at(c)?;
    let mut fd = pr.at(d)?;
    for _ in 0..200 {
        if b - a <= rel_tol * (1.0 + c.min(d)) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = pr.at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = pr.at(d)?;
        }
    }
    Ok(())
}

/// Tries the parabola vertex and the kink of the two flanking secants around
/// the best sample. Returns whether the best value improved.
fn polish<F: FnMut(f64) -> Result<f64>>(pr: &mut Probe<F>) -> Result<bool> {
    let mut s: Vec<(f64, f64)> = pr.pts.iter().copied().filter(|p| p.1.is_finite()).collect();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (gb, vb) = pr.best();
    let Some(k) = s.iter().position(|p| p.0 == gb) else {
        return Ok(false);
    };
    let mut cands = Vec::new();
    if k >= 1 && k + 1 < s.len() {
        let (a, b, c) = (s[k - 1], s[k], s[k + 1]);
        let num = (b.0 - a.0).powi(2) * (b.1 - c.1) - (b.0 - c.0).powi(2) * (b.1 - a.1);
        let den = (b.0 - a.0) * (b.1 - c.1) - (b.0 - c.0) * (b.1 - a.1);
        if den != 0.0 {
            cands.push(b.0 - 0.5 * num / den);
        }
    }
    let lines = [(k.checked_sub(2), k.checked_sub(1), Some(k), Some(k + 1)), (k.checked_sub(1), Some(k), Some(k + 1), Some(k + 2))];
    for (i0, i1, j0, j1) in lines {
        let (Some(i0), Some(i1), Some(j0), Some(j1)) = (i0, i1, j0, j1) else {
            continue;
        };
        if j1 >= s.len() {
            continue;
        }
        let slope = |p: (f64, f64), q: (f64, f64)| (q.1 - p.1) / (q.0 - p.0);
        let (sl, sr) = (slope(s[i0], s[i1]), slope(s[j0], s[j1]));
        if sl < sr {
            // s[i1].1 + sl (g − s[i1].0) = s[j0].1 + sr (g − s[j0].0)
            cands.push((s[j0].1 - s[i1].1 + sl * s[i1].0 - sr * s[j0].0) / (sl - sr));
        }
    }
    let lo = s[k.saturating_sub(1)].0;
    let hi = s[(k + 1).min(s.len() - 1)].0;
    let mut improved = false;
    for g in cands {
        if g.is_finite() && g > 0.0 && g >= lo && g <= hi && g != gb && pr.at(g)? < vb {
            improved = true;
        }
    }
    Ok(improved)
}
