//! Problem files and the built-in examples.
//!
//! A problem file is line oriented, one `key = value` per line, `#` starts a
//! comment:
//!
//! ```text
//! name      = bend
//! n         = 1
//! T         = 1
//! x0        = 0
//! xT        = 1
//! integrand = pow(z1, 2) + abs(x1 - t)
//! use_psi   = true
//! use_phi   = true
//! initial_x = t
//! lambda0   = 10
//! ```
//!
//! Vectors are comma separated; expression vectors split on top-level commas.
//! `initial_x` and `initial_z` are expressions in `t` alone.

use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::ProblemSpec;
use crate::integrand::{parse_expr, parse_time_expr, Expr};
use crate::solver::SolverConfig;

const KEYS: [&str; 11] = [
    "name", "n", "T", "x0", "xT", "integrand", "use_psi", "use_phi", "initial_x", "initial_z", "lambda0",
];

pub const BUILTIN_NAMES: [&str; 4] = ["example1", "example2", "example3", "example4"];

/// Reads and validates a problem file. The name defaults to the file stem.
pub fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidProblem(format!("cannot read {}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
    parse_problem(&text, stem)
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

pub fn parse_problem(text: &str, default_name: &str) -> Result<ProblemSpec> {
    let mut entries: Vec<(&str, usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::ProblemFile {
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::ProblemFile {
                line,
                msg: format!("unknown key `{k}`"),
            });
        }
        if entries.iter().any(|e| e.0 == k) {
            return Err(Error::ProblemFile {
                line,
                msg: format!("duplicate key `{k}`"),
            });
        }
        entries.push((k, line, v));
    }
    let get = |k: &str| entries.iter().find(|e| e.0 == k).map(|e| (e.1, e.2));
    let require = |k: &str| {
        get(k).ok_or_else(|| Error::ProblemFile {
            line: text.lines().count().max(1),
            msg: format!("missing key `{k}`"),
        })
    };
    let at = |line: usize| move |e: Error| Error::ProblemFile { line, msg: e.to_string() };
    let num = |line: usize, s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::ProblemFile {
            line,
            msg: format!("`{s}` is not a number"),
        })
    };
    let nums = |line: usize, s: &str| -> Result<Vec<f64>> { split_top_level(s).iter().map(|p| num(line, p)).collect() };
    let flag = |k: &str| -> Result<bool> {
        match get(k) {
            None => Ok(false),
            Some((_, "true")) => Ok(true),
            Some((_, "false")) => Ok(false),
            Some((line, v)) => Err(Error::ProblemFile {
                line,
                msg: format!("`{k}` must be true or false, got `{v}`"),
            }),
        }
    };

    let (ln, nv) = require("n")?;
    let n: usize = nv.parse().map_err(|_| Error::ProblemFile {
        line: ln,
        msg: format!("n must be a positive integer, got `{nv}`"),
    })?;
    let (lt, tv) = require("T")?;
    let horizon = num(lt, tv)?;
    let x0 = match get("x0") {
        Some((l, v)) => nums(l, v)?,
        None => vec![0.0; n],
    };
    let x_target = get("xT").map(|(l, v)| nums(l, v)).transpose()?;
    let (li, iv) = require("integrand")?;
    let integrand = parse_expr(iv, n).map_err(at(li))?;
    let init = |k: &str| -> Result<Option<Vec<Expr>>> {
        get(k)
            .map(|(l, v)| {
                split_top_level(v)
                    .iter()
                    .map(|s| parse_time_expr(s).map_err(at(l)))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
    };
    let spec = ProblemSpec {
        name: get("name").map_or(default_name, |e| e.1).to_string(),
        n,
        horizon,
        x0,
        x_target,
        integrand,
        use_psi: flag("use_psi")?,
        use_phi: flag("use_phi")?,
        initial_x: init("initial_x")?,
        initial_z: init("initial_z")?,
        lambda0: get("lambda0").map(|(l, v)| num(l, v)).transpose()?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Serializes a spec so that [`parse_problem`] reads back an equal value.
pub fn write_problem(p: &ProblemSpec) -> String {
    let vec = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
    let exprs = |v: &[Expr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
    let mut s = format!("name = {}\nn = {}\nT = {:?}\nx0 = {}\n", p.name, p.n, p.horizon, vec(&p.x0));
    if let Some(xt) = &p.x_target {
        s += &format!("xT = {}\n", vec(xt));
    }
    s += &format!("integrand = {}\nuse_psi = {}\nuse_phi = {}\n", p.integrand, p.use_psi, p.use_phi);
    if let Some(v) = &p.initial_x {
        s += &format!("initial_x = {}\n", exprs(v));
    }
    if let Some(v) = &p.initial_z {
        s += &format!("initial_z = {}\n", exprs(v));
    }
    if let Some(l) = p.lambda0 {
        s += &format!("lambda0 = {l:?}\n");
    }
    s
}

/// A built-in example together with the solver settings it is run with.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub spec: ProblemSpec,
    pub config: SolverConfig,
}

fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1" => "n = 1\nT = 1\nx0 = 0\nintegrand = abs(x1)\ninitial_x = 2*t - 1\n",
        "example2" => "n = 1\nT = 1\nx0 = 0\nintegrand = abs(x1 - max(t - 0.5, 0))\ninitial_x = 2*t - 1\n",
        "example3" => {
            "n = 2\nT = 1\nx0 = 0, 0\nxT = 0, 0\n\
             integrand = max(pow(z1, 2) - pow(x1, 2) - 2*t*x1, x2)\n\
             use_psi = true\nuse_phi = true\n\
             initial_x = 0, 0\ninitial_z = 0, 0\nlambda0 = 20\n"
        }
        "example4" => {
            "n = 3\nT = 5\nx0 = 0, 0, 0\n\
             integrand = norm(z1 - 1, x2) + pow(x1 - x3 - sin(t), 2)\n\
             use_phi = true\n\
             initial_x = 0, 0, 0\ninitial_z = 1, 0, 0\nlambda0 = 2\n"
        }
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<Builtin> {
    let spec = parse_problem(text(name)?, name).expect("built-in problems are valid");
    let base = SolverConfig::default();
    let config = match name {
        "example1" => SolverConfig {
            grid: vec![3],
            lambda0: 0.0,
            lambda_max: 0.0,
            ..base
        },
        "example2" => SolverConfig {
            grid: vec![11, 21, 41],
            lambda0: 0.0,
            lambda_max: 0.0,
            max_iters: 500,
            ..base
        },
        "example3" => SolverConfig {
            grid: vec![11, 21],
            lambda0: 20.0,
            lambda_factor: 5.0,
            lambda_max: 300.0,
            eps_bar: 1e-2,
            constraint_tol: 1e-4,
            max_iters: 20_000,
            ..base
        },
        "example4" => SolverConfig {
            grid: vec![21, 51, 101, 201],
            lambda0: 2.0,
            lambda_max: 2.0,
            eps_bar: 1e-4,
            constraint_tol: 1e-3,
            max_iters: 20_000,
            ..base
        },
        _ => unreachable!(),
    };
    Some(Builtin { spec, config })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_NAMES {
            let b = builtin(name).unwrap();
            let text = write_problem(&b.spec);
            assert_eq!(parse_problem(&text, "other").unwrap(), b.spec, "{name}");
            b.config.validate().unwrap();
        }
    }

    #[test]
    fn builtin_shapes() {
        let e1 = builtin("example1").unwrap().spec;
        assert_eq!((e1.n, e1.horizon, e1.use_psi, e1.use_phi), (1, 1.0, false, false));
        assert_eq!(e1.integrand.to_string(), "abs(x1)");
        let e4 = builtin("example4").unwrap().spec;
        assert_eq!((e4.n, e4.horizon, e4.use_psi, e4.use_phi), (3, 5.0, false, true));
        assert_eq!(e4.x0, vec![0.0; 3]);
        assert_eq!(e4.lambda0, Some(2.0));
        assert!(builtin("example5").is_none());
    }

    #[test]
    fn xt_without_psi_is_rejected() {
        let r = parse_problem("n = 1\nT = 1\nxT = 1\nintegrand = abs(x1)\n", "p");
        assert!(matches!(r, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let r = parse_problem("n = 1\nT = 1\n\nintegrand = x1 + * x2\n", "p");
        assert!(matches!(r, Err(Error::ProblemFile { line: 4, .. })), "{r:?}");
        let r = parse_problem("n = 1\nT = 1\nintegrand = x1\nfoo = 3\n", "p");
        assert!(matches!(r, Err(Error::ProblemFile { line: 4, .. })));
        let r = parse_problem("n = 1\nT = 1\nintegrand = x1\ninitial_x = x1\n", "p");
        assert!(matches!(r, Err(Error::ProblemFile { line: 4, .. })));
    }

    #[test]
    fn comments_and_defaults() {
        let p = parse_problem("# demo\nn = 2   # two\nT = 2\nintegrand = norm(x1, z2)\n", "demo").unwrap();
        assert_eq!(p.name, "demo");
        assert_eq!(p.x0, vec![0.0, 0.0]);
        assert!(!p.use_phi && p.initial_x.is_none());
    }
}
