//! Uniform grids and nodal trajectories.
//!
//! A [`Traj`] stores `m` components at each of the `N` grid nodes and is read
//! as the piecewise-linear interpolant of those values. Integrals use the
//! composite trapezoid rule, summed left to right.

use crate::error::{Error, Result};

/// Uniform grid `t_i = i·T/(N−1)`, `i = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    nodes: usize,
}

impl Grid {
    pub fn new(horizon: f64, nodes: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidProblem(format!("horizon must be positive, got {horizon}")));
        }
        if nodes < 2 {
            return Err(Error::InvalidProblem(format!("grid needs at least 2 nodes, got {nodes}")));
        }
        Ok(Grid { horizon, nodes })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn step(&self) -> f64 {
        self.horizon / (self.nodes - 1) as f64
    }

    /// Time of node `i` (0-based); the last node is exactly `T`.
    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.horizon
        } else {
            i as f64 * self.horizon / (self.nodes - 1) as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.t(i)).collect()
    }

    /// Trapezoid weights: `h/2` at the ends, `h` inside.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.step();
        if i == 0 || i + 1 == self.nodes {
            0.5 * h
        } else {
            h
        }
    }
}

/// Nodal values of an `m`-component function on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Traj {
    grid: Grid,
    width: usize,
    values: Vec<f64>,
}

impl Traj {
    pub fn new(grid: Grid, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() * width {
            return Err(Error::DimensionMismatch {
                expected: grid.nodes() * width,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("trajectory has non-finite values".into()));
        }
        Ok(Traj { grid, width, values })
    }

    pub fn zeros(grid: Grid, width: usize) -> Self {
        Traj {
            grid,
            width,
            values: vec![0.0; grid.nodes() * width],
        }
    }

    /// The same row at every node.
    pub fn constant(grid: Grid, row: &[f64]) -> Self {
        let values = (0..grid.nodes()).flat_map(|_| row.iter().copied()).collect();
        Traj {
            grid,
            width: row.len(),
            values,
        }
    }

    /// Fills each node's row from `f(t, row)`.
    pub fn from_fn(grid: Grid, width: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.nodes() * width];
        for (i, row) in values.chunks_mut(width.max(1)).enumerate().take(grid.nodes()) {
            f(grid.t(i), row);
        }
        Traj::new(grid, width, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.width).copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.width)
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Traj) -> Result<Traj> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Traj {
            grid: self.grid,
            width: self.width,
            values,
        })
    }

    pub fn scale(&self, alpha: f64) -> Traj {
        Traj {
            grid: self.grid,
            width: self.width,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    fn check_same(&self, other: &Traj) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.width != other.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                got: other.width,
            });
        }
        Ok(())
    }
}

/// A state trajectory `x` and its claimed derivative `z` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTraj {
    pub x: Traj,
    pub z: Traj,
}

impl PairTraj {
    pub fn new(x: Traj, z: Traj) -> Result<Self> {
        x.check_same(&z)?;
        Ok(PairTraj { x, z })
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn dim(&self) -> usize {
        self.x.width()
    }

    /// `self + alpha·dir`.
    pub fn step(&self, alpha: f64, dir: &PairTraj) -> Result<PairTraj> {
        Ok(PairTraj {
            x: self.x.axpy(alpha, &dir.x)?,
            z: self.z.axpy(alpha, &dir.z)?,
        })
    }

    pub fn resample(&self, finer: &Grid) -> Result<PairTraj> {
        Ok(PairTraj {
            x: resample(&self.x, finer)?,
            z: resample(&self.z, finer)?,
        })
    }
}

/// Composite trapezoid rule of nodal samples on `grid`.
pub(crate) fn trapz(grid: &Grid, samples: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    for (i, v) in samples.into_iter().enumerate() {
        acc += grid.weight(i) * v;
    }
    acc
}

/// `X_i = x0 + ∫₀^{t_i} z` by cumulative trapezoid; `X_0 = x0` exactly.
pub fn cumulative_integral(z: &Traj, x0: &[f64]) -> Result<Traj> {
    if x0.len() != z.width() {
        return Err(Error::DimensionMismatch {
            expected: z.width(),
            got: x0.len(),
        });
    }
    let half_h = 0.5 * z.grid().step();
    let mut out = Traj::zeros(*z.grid(), z.width());
    out.row_mut(0).copy_from_slice(x0);
    for i in 1..z.grid().nodes() {
        for j in 0..z.width() {
            let prev = out.values[(i - 1) * z.width + j];
            out.values[i * z.width + j] =
                prev + half_h * (z.values[(i - 1) * z.width + j] + z.values[i * z.width + j]);
        }
    }
    Ok(out)
}

/// Trapezoid integral of a scalar trajectory.
pub fn quadrature(values: &Traj) -> Result<f64> {
    if values.width() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: values.width(),
        });
    }
    Ok(trapz(values.grid(), values.values().iter().copied()))
}

/// Trapezoid integral of `⟨a(t), b(t)⟩` over nodal values.
pub fn l2_inner(a: &Traj, b: &Traj) -> Result<f64> {
    a.check_same(b)?;
    Ok(trapz(
        a.grid(),
        a.rows().zip(b.rows()).map(|(p, q)| crate::convexgeom::dot(p, q)),
    ))
}

pub fn l2_norm_sq(a: &Traj) -> f64 {
    trapz(a.grid(), a.rows().map(crate::convexgeom::norm_sq))
}

/// Exact `∫⟨a, b⟩` of the piecewise-linear interpolants.
pub fn interp_l2_inner(a: &Traj, b: &Traj) -> Result<f64> {
    a.check_same(b)?;
    let h = a.grid().step();
    let dot = crate::convexgeom::dot;
    let mut acc = 0.0;
    for i in 0..a.grid().nodes() - 1 {
        let (a0, a1, b0, b1) = (a.row(i), a.row(i + 1), b.row(i), b.row(i + 1));
        acc += h / 6.0 * (2.0 * dot(a0, b0) + dot(a0, b1) + dot(a1, b0) + 2.0 * dot(a1, b1));
    }
    Ok(acc)
}

/// Exact squared L² norm of the piecewise-linear interpolant.
pub fn interp_l2_norm_sq(a: &Traj) -> f64 {
    interp_l2_inner(a, a).expect("same trajectory")
}

/// Piecewise-linear interpolant of `a` sampled on `finer`. Values at nodes
/// shared by both grids are copied unchanged.
pub fn resample(a: &Traj, finer: &Grid) -> Result<Traj> {
    if a.grid().horizon() != finer.horizon() {
        return Err(Error::HorizonMismatch(a.grid().horizon(), finer.horizon()));
    }
    let (old, new) = (a.grid().nodes() - 1, finer.nodes() - 1);
    let w = a.width();
    let mut out = Traj::zeros(*finer, w);
    for j in 0..=new {
        // position j·old/new in old index units, kept rational
        let num = j * old;
        let (k, rem) = (num / new, num % new);
        let row = out.row_mut(j);
        if rem == 0 {
            row.copy_from_slice(a.row(k));
        } else {
            let s = rem as f64 / new as f64;
            for ((o, l), r) in row.iter_mut().zip(a.row(k)).zip(a.row(k + 1)) {
                *o = l + s * (r - l);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(t: f64, n: usize) -> Grid {
        Grid::new(t, n).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(5.0, 7);
        assert_eq!(g.t(0), 0.0);
        assert_eq!(g.t(6), 5.0);
        assert!(g.times().windows(2).all(|w| w[1] > w[0]));
        assert!(Grid::new(1.0, 1).is_err());
        assert!(Grid::new(0.0, 3).is_err());
    }

    #[test]
    fn cumulative_of_constant_and_linear() {
        let g = grid(1.0, 11);
        let one = Traj::constant(g, &[1.0]);
        let x = cumulative_integral(&one, &[0.0]).unwrap();
        for i in 0..11 {
            assert_abs_diff_eq!(x.row(i)[0], g.t(i), epsilon = 1e-15);
        }
        let lin = Traj::from_fn(g, 1, |t, r| r[0] = t).unwrap();
        let x = cumulative_integral(&lin, &[0.0]).unwrap();
        for i in 0..11 {
            assert_abs_diff_eq!(x.row(i)[0], g.t(i).powi(2) / 2.0, epsilon = 1e-15);
        }
        let zero = Traj::zeros(g, 2);
        let x = cumulative_integral(&zero, &[3.0, -1.0]).unwrap();
        assert!(x.rows().all(|r| r == [3.0, -1.0]));
    }

    #[test]
    fn quadrature_examples() {
        let g = grid(1.0, 3);
        let f = Traj::from_fn(g, 1, |t, r| r[0] = t).unwrap();
        assert_eq!(quadrature(&f).unwrap(), 0.5);
        let c = Traj::constant(grid(2.5, 9), &[1.5]);
        assert_abs_diff_eq!(quadrature(&c).unwrap(), 3.75, epsilon = 1e-14);
        // t² on 101 nodes: trapezoid error bound h²/12·T·max|f''| = 1e-4/6
        let g = grid(1.0, 101);
        let sq = Traj::from_fn(g, 1, |t, r| r[0] = t * t).unwrap();
        let q = quadrature(&sq).unwrap();
        assert!((q - 1.0 / 3.0).abs() <= 2e-5);
        assert!(quadrature(&Traj::zeros(g, 2)).is_err());
    }

    #[test]
    fn inner_products() {
        let g = grid(1.0, 5);
        let one = Traj::constant(g, &[1.0]);
        assert_abs_diff_eq!(l2_inner(&one, &one).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(l2_inner(&one, &Traj::zeros(g, 1)).unwrap(), 0.0);
        let fine = grid(1.0, 2001);
        let a = Traj::from_fn(fine, 1, |t, r| r[0] = 2.0 * t - 1.0).unwrap();
        assert_abs_diff_eq!(l2_norm_sq(&a), 1.0 / 3.0, epsilon = 1e-6);
        assert!(l2_inner(&one, &Traj::constant(grid(1.0, 6), &[1.0])).is_err());
    }

    #[test]
    fn interpolant_norm_is_exact() {
        let g = grid(1.0, 3);
        let a = Traj::new(g, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(interp_l2_norm_sq(&a), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn resample_examples() {
        let line = Traj::new(grid(1.0, 2), 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(resample(&line, &grid(1.0, 3)).unwrap().values(), &[0.0, 0.5, 1.0]);
        let a = Traj::from_fn(grid(2.0, 7), 2, |t, r| {
            r[0] = t.sin();
            r[1] = t * t;
        })
        .unwrap();
        assert_eq!(resample(&a, a.grid()).unwrap(), a);
        assert!(resample(&a, &grid(1.0, 7)).is_err());
    }

    #[test]
    fn resample_keeps_shared_nodes_bit_equal() {
        let a = Traj::from_fn(grid(3.0, 11), 1, |t, r| r[0] = (1.7 * t).exp()).unwrap();
        let fine = resample(&a, &grid(3.0, 41)).unwrap();
        for i in 0..11 {
            assert_eq!(fine.row(4 * i)[0].to_bits(), a.row(i)[0].to_bits());
        }
    }

    fn step_target(t: f64) -> f64 {
        if t < 0.37 {
            1.0
        } else if t < 0.81 {
            -0.5 + t
        } else {
            2.0
        }
    }

    fn interp_error_sq(nodes: usize) -> f64 {
        let g = grid(1.0, nodes);
        let l = Traj::from_fn(g, 1, |t, r| r[0] = step_target(t)).unwrap();
        // midpoint rule on a much finer partition
        let m = 2_000_000;
        let h = g.step();
        (0..m)
            .map(|k| {
                let t = (k as f64 + 0.5) / m as f64;
                let i = ((t / h) as usize).min(nodes - 2);
                let s = (t - g.t(i)) / h;
                let li = l.row(i)[0] + s * (l.row(i + 1)[0] - l.row(i)[0]);
                (li - step_target(t)).powi(2) / m as f64
            })
            .sum()
    }

    #[test]
    fn interpolation_error_decreases_with_refinement() {
        let errs: Vec<f64> = [11, 101, 1001].iter().map(|&n| interp_error_sq(n)).collect();
        // jumps in the target make the error first order in h
        assert!(errs.windows(2).all(|w| w[1] <= w[0] / 5.0), "{errs:?}");
    }
}
