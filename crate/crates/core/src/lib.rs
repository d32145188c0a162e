//! Subdifferential descent for the simplest variational problem with a
//! nonsmooth integrand.
//!
//! The problem is to minimize `∫₀ᵀ f(x(t), ẋ(t), t) dt` subject to
//! `x(0) = x0` and optionally `x(T) = xT`, where `f` is only
//! subdifferentiable in `(x, ẋ)`. The derivative is treated as an
//! independent trajectory `z`, the link `x = x0 + ∫z` and the right endpoint
//! condition are enforced by quadratic penalties, and the resulting
//! functional `I(x, z)` is minimized by steepest descent in the nonsmooth
//! sense: at every grid node the descent direction is the negated
//! minimum-norm element of the pointwise subdifferential.
//!
//! Crate layout:
//!
//! * [`integrand`] parses integrands and evaluates values and subdifferentials.
//! * [`convexgeom`] holds the convex sets those subdifferentials live in and
//!   the minimum-norm point solver.
//! * [`trajectory`] provides grids, nodal trajectories and quadrature.
//! * [`functional`] evaluates the penalized functional and its pieces.
//! * [`solver`] runs the descent method with penalty and grid continuation.
//! * [`problem`] reads and writes problem files and ships built-in examples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convexgeom;
pub mod error;
pub mod functional;
pub mod integrand;
pub mod problem;
pub mod solver;
pub mod trajectory;

pub use convexgeom::{min_norm_point, support, ConvexSet, MinNormResult};
pub use error::{Error, Result};
pub use functional::{PenaltyWeights, ProblemSpec};
pub use integrand::{parse_expr, EvalPoint, Expr};
pub use solver::{solve, IterationRecord, SolveOutcome, SolveStatus, SolverConfig};
pub use trajectory::{Grid, PairTraj, Traj};
