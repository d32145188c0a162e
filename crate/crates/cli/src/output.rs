use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use nsvar_core::solver::{SolveOutcome, Snapshot};
use nsvar_core::trajectory::cumulative_integral;
use nsvar_core::{IterationRecord, PairTraj, ProblemSpec};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub status: &'static str,
    pub j: f64,
    pub i: f64,
    pub psi: f64,
    pub phi: f64,
    pub vnorm: f64,
    pub lambda: f64,
    pub nodes: usize,
    pub iterations: usize,
    /// Distance of `x0 + ∫z` at T from xT.
    pub endpoint_error: Option<f64>,
    /// Same for the nodal x-part.
    pub x_endpoint_error: Option<f64>,
    pub wall_time: f64,
}

impl RunSummary {
    pub fn new(p: &ProblemSpec, out: &SolveOutcome) -> Self {
        let last = out.last();
        let last_node = out.xz.grid().nodes() - 1;
        let miss = |row: &[f64]| {
            p.x_target
                .as_ref()
                .map(|xt| row.iter().zip(xt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        };
        let recovered = cumulative_integral(&out.xz.z, &p.x0).expect("z and x0 share the problem dimension");
        RunSummary {
            problem: p.name.clone(),
            status: out.status.as_str(),
            j: last.j,
            i: last.i,
            psi: last.psi,
            phi: last.phi,
            vnorm: last.vnorm,
            lambda: last.lambda,
            nodes: last.nodes,
            iterations: out.stages.iter().map(|s| s.steps).sum(),
            endpoint_error: miss(recovered.row(last_node)),
            x_endpoint_error: miss(out.xz.x.row(last_node)),
            wall_time: out.wall_time,
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn state_header(n: usize) -> String {
    let xs = (1..=n).map(|j| format!("x{j}"));
    let zs = (1..=n).map(|j| format!("z{j}"));
    xs.chain(zs).collect::<Vec<_>>().join(",")
}

pub fn trajectory_csv(xz: &PairTraj) -> String {
    let g = xz.grid();
    let mut s = format!("t,{}\n", state_header(xz.dim()));
    for i in 0..g.nodes() {
        let cells: Vec<String> = std::iter::once(g.t(i))
            .chain(xz.x.row(i).iter().copied())
            .chain(xz.z.row(i).iter().copied())
            .map(num)
            .collect();
        s += &cells.join(",");
        s.push('\n');
    }
    s
}

pub fn convergence_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from("k,I,J,psi,phi,vnorm,lambda,gamma,N\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            num(r.i),
            num(r.j),
            num(r.psi),
            num(r.phi),
            num(r.vnorm),
            num(r.lambda),
            num(r.gamma),
            r.nodes
        );
    }
    s
}

/// Rows worth printing: stage boundaries plus an even thinning of the rest.
fn table_rows(records: &[IterationRecord], target: usize) -> Vec<usize> {
    let stride = records.len().div_ceil(target).max(1);
    (0..records.len())
        .filter(|&k| {
            let boundary = |a: &IterationRecord, b: &IterationRecord| a.lambda != b.lambda || a.nodes != b.nodes;
            k % stride == 0
                || k + 1 == records.len()
                || (k > 0 && boundary(&records[k - 1], &records[k]))
                || (k + 1 < records.len() && boundary(&records[k], &records[k + 1]))
        })
        .collect()
}

pub fn print_table(records: &[IterationRecord]) {
    let rows = table_rows(records, 40);
    println!(
        "{:>6}  {:>14}  {:>14}  {:>11}  {:>11}  {:>11}  {:>8}  {:>11}  {:>5}",
        "k", "I", "J", "psi", "phi", "|v|", "lambda", "gamma", "N"
    );
    for &k in &rows {
        let r = &records[k];
        println!(
            "{:>6}  {:>14.8}  {:>14.8}  {:>11.3e}  {:>11.3e}  {:>11.5}  {:>8}  {:>11.3e}  {:>5}",
            r.k, r.i, r.j, r.psi, r.phi, r.vnorm, r.lambda, r.gamma, r.nodes
        );
    }
    if rows.len() < records.len() {
        println!("({} of {} rows shown; see convergence.csv)", rows.len(), records.len());
    }
}

/// Streams the minimum-norm subgradient field of every iteration.
pub struct PlotWriter {
    file: std::io::BufWriter<fs::File>,
    n: usize,
}

impl PlotWriter {
    pub fn create(path: &Path, n: usize) -> Result<Self> {
        let mut file = std::io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        let v = (1..=n).map(|j| format!("vx{j}")).chain((1..=n).map(|j| format!("vz{j}")));
        writeln!(file, "k,t,{},{}", state_header(n), v.collect::<Vec<_>>().join(","))?;
        Ok(PlotWriter { file, n })
    }

    pub fn record(&mut self, s: &Snapshot<'_>) -> Result<()> {
        let g = s.xz.grid();
        for i in 0..g.nodes() {
            let mut cells = vec![s.record.k.to_string(), num(g.t(i))];
            cells.extend(s.xz.x.row(i).iter().chain(s.xz.z.row(i)).map(|&v| num(v)));
            cells.extend(s.direction.vbar.row(i).iter().map(|&v| num(v)));
            debug_assert_eq!(cells.len(), 2 + 4 * self.n);
            writeln!(self.file, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.file.flush()?;
        Ok(())
    }
}
