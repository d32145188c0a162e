//! Integrands `f(x, z, t)` as expression trees.
//!
//! An [`Expr`] is built by [`parse_expr`] and is validated on construction:
//! nonsmooth nodes (`abs`, `max`, `norm`) may only be combined through sums,
//! differences, negation, multiplication by a nonnegative constant, and
//! nesting inside other nonsmooth nodes. Everything else must be smooth, so
//! the subdifferential of every accepted expression follows from the sum,
//! nonnegative scaling and max rules together with the chain rule for the
//! smooth parts.

mod parse;
mod subdiff;

use std::fmt;

use crate::error::{Error, Result};

pub use parse::{parse_expr, parse_time_expr};
pub use subdiff::{default_activity_tol, directional_derivative, subdiff_expr};

/// Expression node. Variable indices are 1-based, as written in the text
/// form (`x1` is `VarX(1)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    VarX(usize),
    VarZ(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power, exponent at least 1.
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Max(Vec<Expr>),
    /// Euclidean norm of the arguments.
    Norm(Vec<Expr>),
}

/// Point at which an integrand is evaluated. `x` and `z` both have the
/// problem dimension `n`; derivatives are laid out as `(∂x, ∂z)` in `R^{2n}`.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint<'a> {
    pub x: &'a [f64],
    pub z: &'a [f64],
    pub t: f64,
}

impl<'a> EvalPoint<'a> {
    pub fn new(x: &'a [f64], z: &'a [f64], t: f64) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: z.len(),
            });
        }
        Ok(EvalPoint { x, z, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Smoothness {
    Smooth,
    Nonsmooth,
}

impl Expr {
    /// True when the tree contains no `abs`, `max` or `norm` node.
    pub fn is_smooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Time | Expr::VarX(_) | Expr::VarZ(_) => true,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Sqrt(a) => a.is_smooth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_smooth() && b.is_smooth()
            }
            Expr::Abs(_) | Expr::Max(_) | Expr::Norm(_) => false,
        }
    }

    /// True when the tree references some `z` variable.
    pub fn uses_z(&self) -> bool {
        self.any(&|e| matches!(e, Expr::VarZ(_)))
    }

    /// True when the tree references some `x` or `z` variable.
    pub fn uses_state(&self) -> bool {
        self.any(&|e| matches!(e, Expr::VarX(_) | Expr::VarZ(_)))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Const(_) | Expr::Time | Expr::VarX(_) | Expr::VarZ(_) => false,
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Sqrt(a)
            | Expr::Abs(a) => a.any(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.any(pred) || b.any(pred)
            }
            Expr::Max(args) | Expr::Norm(args) => args.iter().any(|a| a.any(pred)),
        }
    }

    /// Checks variable ranges and the composition rules for nonsmooth nodes.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.classify(n).map(|_| ())
    }

    pub(crate) fn classify(&self, n: usize) -> Result<Smoothness> {
        use Smoothness::*;
        let smooth_arg = |a: &Expr, ctx: &str| -> Result<Smoothness> {
            match a.classify(n)? {
                Smooth => Ok(Smooth),
                Nonsmooth => Err(Error::UnsupportedComposition(format!(
                    "nonsmooth argument inside {ctx}: {a}"
                ))),
            }
        };
        match self {
            Expr::Const(c) => {
                if c.is_finite() {
                    Ok(Smooth)
                } else {
                    Err(Error::InvalidProblem(format!("non-finite constant {c}")))
                }
            }
            Expr::Time => Ok(Smooth),
            Expr::VarX(i) | Expr::VarZ(i) => {
                if *i >= 1 && *i <= n {
                    Ok(Smooth)
                } else {
                    let name = if matches!(self, Expr::VarX(_)) { 'x' } else { 'z' };
                    Err(Error::IndexOutOfRange { name, index: *i, n })
                }
            }
            Expr::Neg(a) => a.classify(n),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (ca, cb) = (a.classify(n)?, b.classify(n)?);
                Ok(if ca == Smooth && cb == Smooth { Smooth } else { Nonsmooth })
            }
            Expr::Mul(a, b) => {
                let (ca, cb) = (a.classify(n)?, b.classify(n)?);
                match (ca, cb) {
                    (Smooth, Smooth) => Ok(Smooth),
                    (Nonsmooth, Nonsmooth) => Err(Error::UnsupportedComposition(format!(
                        "product of nonsmooth terms: {self}"
                    ))),
                    _ => {
                        let scale = if ca == Smooth { a } else { b };
                        match **scale {
                            Expr::Const(c) if c >= 0.0 => Ok(Nonsmooth),
                            _ => Err(Error::UnsupportedComposition(format!(
                                "nonsmooth term multiplied by something other than a nonnegative constant: {self}"
                            ))),
                        }
                    }
                }
            }
            Expr::Div(a, b) => {
                smooth_arg(a, "a quotient")?;
                smooth_arg(b, "a quotient")
            }
            Expr::Pow(a, k) => {
                if *k == 0 {
                    return Err(Error::InvalidProblem("pow exponent must be >= 1".into()));
                }
                smooth_arg(a, "pow")
            }
            Expr::Sin(a) => smooth_arg(a, "sin"),
            Expr::Cos(a) => smooth_arg(a, "cos"),
            Expr::Exp(a) => smooth_arg(a, "exp"),
            Expr::Sqrt(a) => smooth_arg(a, "sqrt"),
            Expr::Abs(a) => {
                a.classify(n)?;
                Ok(Nonsmooth)
            }
            Expr::Max(args) | Expr::Norm(args) => {
                if args.is_empty() {
                    return Err(Error::InvalidProblem("max/norm need at least one argument".into()));
                }
                for a in args {
                    a.classify(n)?;
                }
                Ok(Nonsmooth)
            }
        }
    }

    /// Value of the expression at `p`.
    pub fn eval(&self, p: &EvalPoint<'_>) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Time => p.t,
            Expr::VarX(i) => p.x[i - 1],
            Expr::VarZ(i) => p.z[i - 1],
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let den = b.eval(p)?;
                if den == 0.0 {
                    return Err(Error::Domain {
                        what: "division by zero",
                        t: p.t,
                    });
                }
                a.eval(p)? / den
            }
            Expr::Pow(a, k) => a.eval(p)?.powi(*k as i32),
            Expr::Sin(a) => a.eval(p)?.sin(),
            Expr::Cos(a) => a.eval(p)?.cos(),
            Expr::Exp(a) => a.eval(p)?.exp(),
            Expr::Sqrt(a) => {
                let v = a.eval(p)?;
                if v < 0.0 {
                    return Err(Error::Domain {
                        what: "square root of a negative number",
                        t: p.t,
                    });
                }
                v.sqrt()
            }
            Expr::Abs(a) => a.eval(p)?.abs(),
            Expr::Max(args) => {
                let mut best = f64::NEG_INFINITY;
                for a in args {
                    best = best.max(a.eval(p)?);
                }
                best
            }
            Expr::Norm(args) => {
                let mut acc = 0.0;
                for a in args {
                    let v = a.eval(p)?;
                    acc += v * v;
                }
                acc.sqrt()
            }
        })
    }

    /// Value and gradient in `R^{2n}` of a smooth expression (forward mode).
    pub(crate) fn value_grad(&self, p: &EvalPoint<'_>) -> Result<(f64, Vec<f64>)> {
        let n = p.dim();
        let unary = |a: &Expr, f: &dyn Fn(f64) -> Result<(f64, f64)>| -> Result<(f64, Vec<f64>)> {
            let (v, mut g) = a.value_grad(p)?;
            let (fv, df) = f(v)?;
            g.iter_mut().for_each(|gi| *gi *= df);
            Ok((fv, g))
        };
        match self {
            Expr::Const(c) => Ok((*c, vec![0.0; 2 * n])),
            Expr::Time => Ok((p.t, vec![0.0; 2 * n])),
            Expr::VarX(i) => {
                let mut g = vec![0.0; 2 * n];
                g[i - 1] = 1.0;
                Ok((p.x[i - 1], g))
            }
            Expr::VarZ(i) => {
                let mut g = vec![0.0; 2 * n];
                g[n + i - 1] = 1.0;
                Ok((p.z[i - 1], g))
            }
            Expr::Neg(a) => unary(a, &|v| Ok((-v, -1.0))),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let sign = if matches!(self, Expr::Add(..)) { 1.0 } else { -1.0 };
                let (va, mut ga) = a.value_grad(p)?;
                let (vb, gb) = b.value_grad(p)?;
                ga.iter_mut().zip(&gb).for_each(|(x, y)| *x += sign * y);
                Ok((va + sign * vb, ga))
            }
            Expr::Mul(a, b) => {
                let (va, ga) = a.value_grad(p)?;
                let (vb, gb) = b.value_grad(p)?;
                let g = ga.iter().zip(&gb).map(|(x, y)| x * vb + va * y).collect();
                Ok((va * vb, g))
            }
            Expr::Div(a, b) => {
                let (va, ga) = a.value_grad(p)?;
                let (vb, gb) = b.value_grad(p)?;
                if vb == 0.0 {
                    return Err(Error::Domain {
                        what: "division by zero",
                        t: p.t,
                    });
                }
                let g = ga
                    .iter()
                    .zip(&gb)
                    .map(|(x, y)| (x * vb - va * y) / (vb * vb))
                    .collect();
                Ok((va / vb, g))
            }
            Expr::Pow(a, k) => {
                let k = *k as i32;
                unary(a, &|v| Ok((v.powi(k), k as f64 * v.powi(k - 1))))
            }
            Expr::Sin(a) => unary(a, &|v| Ok((v.sin(), v.cos()))),
            Expr::Cos(a) => unary(a, &|v| Ok((v.cos(), -v.sin()))),
            Expr::Exp(a) => unary(a, &|v| {
                let e = v.exp();
                Ok((e, e))
            }),
            Expr::Sqrt(a) => unary(a, &|v| {
                if v < 0.0 {
                    Err(Error::Domain {
                        what: "square root of a negative number",
                        t: p.t,
                    })
                } else if v == 0.0 {
                    Err(Error::Domain {
                        what: "square root is not differentiable at zero",
                        t: p.t,
                    })
                } else {
                    let s = v.sqrt();
                    Ok((s, 0.5 / s))
                }
            }),
            Expr::Abs(_) | Expr::Max(_) | Expr::Norm(_) => {
                unreachable!("value_grad called on a nonsmooth node")
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Prints in the grammar accepted by [`parse_expr`], fully parenthesized,
    /// so that parsing the output yields an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, args: &[Expr]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Time => write!(f, "t"),
            Expr::VarX(i) => write!(f, "x{i}"),
            Expr::VarZ(i) => write!(f, "z{i}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "pow({a}, {k})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Max(args) => list(f, "max", args),
            Expr::Norm(args) => list(f, "norm", args),
        }
    }
}
