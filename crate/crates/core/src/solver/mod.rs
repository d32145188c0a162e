//! Subdifferential descent with penalty and grid continuation.
//!
//! One inner iteration: compute the minimum-norm element of the nodal
//! subdifferential of `I` at every node, interpolate it piecewise linearly,
//! stop if its squared `L²` norm is at most `eps_bar`, otherwise step along
//! the normalized negative field with a line search. Stages run over a ladder
//! of grids and penalty weights: after each stage the grid moves to the next
//! rung and `λ` grows when the constraints are still violated.

mod linesearch;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::functional::{evaluate, min_norm_field, PenaltyWeights, ProblemSpec, SubgradField};
use crate::trajectory::{interp_l2_norm_sq, Grid, PairTraj, Traj};

pub use linesearch::{minimize_along, LineSearchConfig, LineSearchResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop a stage once `‖v̄‖² ≤ eps_bar`.
    pub eps_bar: f64,
    pub lambda0: f64,
    pub lambda_factor: f64,
    pub lambda_max: f64,
    /// Relative weight of `ψ` and `φ`; the penalty weights are `λ·psi_scale`
    /// and `λ·phi_scale`.
    pub psi_scale: f64,
    pub phi_scale: f64,
    /// Required level of `ψ + φ`.
    pub constraint_tol: f64,
    /// Node counts, strictly increasing.
    pub grid: Vec<usize>,
    /// Step cap per stage.
    pub max_iters: usize,
    pub line_search: LineSearchConfig,
    pub min_norm_tol: f64,
    /// Branch activity threshold is `activity_rel·(1 + |f|)`.
    pub activity_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_bar: 3e-2,
            lambda0: 1.0,
            lambda_factor: 5.0,
            lambda_max: 300.0,
            psi_scale: 1.0,
            phi_scale: 1.0,
            constraint_tol: 1e-4,
            grid: vec![11, 21, 41],
            max_iters: 1000,
            line_search: LineSearchConfig::default(),
            min_norm_tol: crate::convexgeom::DEFAULT_MIN_NORM_TOL,
            activity_rel: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.eps_bar > 0.0) {
            return bad(format!("eps_bar must be positive, got {}", self.eps_bar));
        }
        if !(self.lambda_factor > 1.0) {
            return bad(format!("lambda_factor must exceed 1, got {}", self.lambda_factor));
        }
        if !(self.lambda0 >= 0.0 && self.lambda_max >= self.lambda0 && self.lambda_max.is_finite()) {
            return bad("need 0 <= lambda0 <= lambda_max < inf".into());
        }
        if !(self.psi_scale >= 0.0 && self.phi_scale >= 0.0) {
            return bad("penalty scales must be nonnegative".into());
        }
        if !(self.constraint_tol >= 0.0) {
            return bad("constraint_tol must be nonnegative".into());
        }
        if self.grid.is_empty() || self.grid[0] < 2 {
            return bad("grid ladder needs at least one rung with 2 or more nodes".into());
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("grid ladder must be strictly increasing, got {:?}", self.grid));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.min_norm_tol > 0.0 && self.activity_rel >= 0.0) {
            return bad("min_norm_tol must be positive and activity_rel nonnegative".into());
        }
        self.line_search.validate()
    }

    pub fn weights(&self, lambda: f64) -> PenaltyWeights {
        PenaltyWeights {
            psi: lambda * self.psi_scale,
            phi: lambda * self.phi_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub i: f64,
    pub j: f64,
    pub psi: f64,
    pub phi: f64,
    /// `‖v̄‖` in `L²`, not squared.
    pub vnorm: f64,
    pub lambda: f64,
    /// Step taken from this iterate; `0` on the last record of a stage.
    pub gamma: f64,
    pub nodes: usize,
    /// Seconds since the solve started.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Stationary on the last grid with `ψ + φ ≤ constraint_tol`.
    Converged,
    /// Stationary on the last grid at the largest `λ`, constraints still violated.
    ConstraintsUnmet,
    BudgetExhausted,
    LineSearchStalled,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::ConstraintsUnmet => "constraints_unmet",
            SolveStatus::BudgetExhausted => "budget_exhausted",
            SolveStatus::LineSearchStalled => "line_search_stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageEnd {
    Stationary,
    Budget,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSummary {
    pub lambda: f64,
    pub nodes: usize,
    pub steps: usize,
    pub end: StageEnd,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub xz: PairTraj,
    pub records: Vec<IterationRecord>,
    pub stages: Vec<StageSummary>,
    pub status: SolveStatus,
    pub lambda: f64,
    pub wall_time: f64,
}

impl SolveOutcome {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a solve always records its final state")
    }
}

#[derive(Debug, Clone)]
pub struct Direction {
    /// Nodal minimum-norm subgradients.
    pub vbar: SubgradField,
    /// `‖v̄‖` of the interpolant.
    pub vnorm: f64,
    /// `−v̄/‖v̄‖`, absent when `‖v̄‖² ≤ eps_bar`.
    pub g: Option<PairTraj>,
}

fn split(field: &Traj, n: usize) -> Result<PairTraj> {
    let grid = *field.grid();
    let (mut x, mut z) = (Traj::zeros(grid, n), Traj::zeros(grid, n));
    for i in 0..grid.nodes() {
        let r = field.row(i);
        x.row_mut(i).copy_from_slice(&r[..n]);
        z.row_mut(i).copy_from_slice(&r[n..]);
    }
    PairTraj::new(x, z)
}

/// Steepest-descent direction of `I` at `xz`.
pub fn steepest_direction(p: &ProblemSpec, xz: &PairTraj, lambda: f64, cfg: &SolverConfig) -> Result<Direction> {
    let vbar = min_norm_field(p, xz, cfg.weights(lambda), cfg.activity_rel, cfg.min_norm_tol)?;
    let sq = interp_l2_norm_sq(&vbar);
    let vnorm = sq.sqrt();
    let g = if sq > cfg.eps_bar {
        Some(split(&vbar.scale(-1.0 / vnorm), p.n)?)
    } else {
        None
    };
    Ok(Direction { vbar, vnorm, g })
}

/// Line search along `g` from `xz`, seeded with `cfg.line_search.seed`.
pub fn line_search(
    p: &ProblemSpec,
    xz: &PairTraj,
    g: &PairTraj,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<LineSearchResult> {
    search_from(p, xz, g, cfg.weights(lambda), cfg, cfg.line_search.seed)
}

fn search_from(
    p: &ProblemSpec,
    xz: &PairTraj,
    g: &PairTraj,
    w: PenaltyWeights,
    cfg: &SolverConfig,
    seed: f64,
) -> Result<LineSearchResult> {
    let f0 = evaluate(p, xz, w)?.total;
    minimize_along(|gamma| Ok(evaluate(p, &xz.step(gamma, g)?, w)?.total), f0, seed, &cfg.line_search)
}

/// State handed to a [`solve_observed`] callback once per record.
pub struct Snapshot<'a> {
    pub record: &'a IterationRecord,
    pub xz: &'a PairTraj,
    pub direction: &'a Direction,
}

pub fn solve(p: &ProblemSpec, cfg: &SolverConfig) -> Result<SolveOutcome> {
    solve_observed(p, cfg, |_| {})
}

/// [`solve`] with a callback invoked for every iteration record.
pub fn solve_observed(
    p: &ProblemSpec,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&Snapshot<'_>),
) -> Result<SolveOutcome> {
    p.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let mut rung = 0;
    let mut grid = Grid::new(p.horizon, cfg.grid[0])?;
    let mut xz = p.initial_pair(&grid)?;
    let mut lambda = cfg.lambda0;
    let mut records = Vec::new();
    let mut stages = Vec::new();

    let status = loop {
        let w = cfg.weights(lambda);
        let mut seed = cfg.line_search.seed;
        let mut steps = 0;
        let (end, constraint) = loop {
            let parts = evaluate(p, &xz, w)?;
            let dir = steepest_direction(p, &xz, lambda, cfg)?;
            let mut rec = IterationRecord {
                k: records.len(),
                i: parts.total,
                j: parts.j,
                psi: parts.psi,
                phi: parts.phi,
                vnorm: dir.vnorm,
                lambda,
                gamma: 0.0,
                nodes: grid.nodes(),
                wall_time: 0.0,
            };
            let constraint = parts.psi + parts.phi;
            let outcome = match &dir.g {
                None => Err(StageEnd::Stationary),
                Some(_) if steps == cfg.max_iters => Err(StageEnd::Budget),
                Some(g) => {
                    let ls = search_from(p, &xz, g, w, cfg, seed)?;
                    if ls.stalled {
                        Err(StageEnd::Stalled)
                    } else {
                        Ok(ls.gamma)
                    }
                }
            };
            if let Ok(gamma) = outcome {
                rec.gamma = gamma;
            }
            rec.wall_time = start.elapsed().as_secs_f64();
            records.push(rec);
            observe(&Snapshot {
                record: &rec,
                xz: &xz,
                direction: &dir,
            });
            match outcome {
                Ok(gamma) => {
                    xz = xz.step(gamma, dir.g.as_ref().expect("step implies a direction"))?;
                    seed = gamma;
                    steps += 1;
                }
                Err(end) => break (end, constraint),
            }
        };
        stages.push(StageSummary {
            lambda,
            nodes: grid.nodes(),
            steps,
            end,
        });

        let last_rung = rung + 1 == cfg.grid.len();
        let feasible = constraint <= cfg.constraint_tol;
        if last_rung && feasible && end == StageEnd::Stationary {
            break SolveStatus::Converged;
        }
        let raise = !feasible && lambda < cfg.lambda_max;
        if last_rung && !raise {
            break match end {
                StageEnd::Stationary => SolveStatus::ConstraintsUnmet,
                StageEnd::Budget => SolveStatus::BudgetExhausted,
                StageEnd::Stalled => SolveStatus::LineSearchStalled,
            };
        }
        if raise {
            lambda = (lambda * cfg.lambda_factor).min(cfg.lambda_max);
        }
        if !last_rung {
            rung += 1;
            grid = Grid::new(p.horizon, cfg.grid[rung])?;
            xz = xz.resample(&grid)?;
        }
    };

    Ok(SolveOutcome {
        xz,
        records,
        stages,
        status,
        lambda,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
