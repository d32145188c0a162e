use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nsvar_core::problem::{builtin, load_problem};
use nsvar_core::solver::solve_observed;
use nsvar_core::{ProblemSpec, SolveStatus, SolverConfig};

mod output;

use output::{convergence_csv, print_table, trajectory_csv, PlotWriter, RunSummary};

#[derive(Parser)]
#[command(name = "nsvar", version, about = "Subdifferential descent for nonsmooth variational problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file or a built-in example (example1..example4)
    Solve(SolveArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    problem: String,
    /// Grid ladder, node counts strictly increasing
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Stationarity threshold on the squared residual norm
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda_factor: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    constraint_tol: Option<f64>,
    /// Step cap per stage
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative activity threshold for branches of max/abs/norm
    #[arg(long)]
    activity_tol: Option<f64>,
    /// Output directory [default: nsvar-out/<problem name>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write directions.csv with every iterate and its subgradient field
    #[arg(long)]
    emit_plot_data: bool,
}

fn resolve(args: &SolveArgs) -> Result<(ProblemSpec, SolverConfig)> {
    let (spec, mut cfg) = match builtin(&args.problem) {
        Some(b) => (b.spec, b.config),
        None => {
            let path = Path::new(&args.problem);
            if !path.exists() {
                anyhow::bail!("problem file not found: {}", path.display());
            }
            let spec = load_problem(path).with_context(|| format!("loading {}", path.display()))?;
            let mut cfg = SolverConfig::default();
            if let Some(l) = spec.lambda0 {
                cfg.lambda0 = l;
                cfg.lambda_max = cfg.lambda_max.max(l);
            }
            (spec, cfg)
        }
    };
    if let Some(g) = &args.grid {
        cfg.grid = g.clone();
    }
    if let Some(v) = args.eps {
        cfg.eps_bar = v;
    }
    if let Some(v) = args.lambda0 {
        cfg.lambda0 = v;
        if args.lambda_max.is_none() {
            cfg.lambda_max = cfg.lambda_max.max(v);
        }
    }
    if let Some(v) = args.lambda_factor {
        cfg.lambda_factor = v;
    }
    if let Some(v) = args.lambda_max {
        cfg.lambda_max = v;
    }
    if let Some(v) = args.constraint_tol {
        cfg.constraint_tol = v;
    }
    if let Some(v) = args.activity_tol {
        cfg.activity_rel = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    cfg.validate().context("invalid solver settings")?;
    Ok((spec, cfg))
}

fn run_solve(args: &SolveArgs) -> Result<SolveStatus> {
    let (spec, cfg) = resolve(args)?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| Path::new("nsvar-out").join(&spec.name));
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut plot = if args.emit_plot_data {
        Some(PlotWriter::create(&out_dir.join("directions.csv"), spec.n)?)
    } else {
        None
    };
    let mut plot_err = None;
    let outcome = solve_observed(&spec, &cfg, |snap| {
        if let (Some(w), None) = (plot.as_mut(), &plot_err) {
            plot_err = w.record(snap).err();
        }
    })
    .with_context(|| format!("solving {}", spec.name))?;
    if let Some(e) = plot_err {
        return Err(e.context("writing directions.csv"));
    }
    if let Some(w) = plot {
        w.finish()?;
    }

    print_table(&outcome.records);
    let summary = RunSummary::new(&spec, &outcome);
    let write = |name: &str, body: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("trajectory.csv", trajectory_csv(&outcome.xz))?;
    write("convergence.csv", convergence_csv(&outcome.records))?;
    write("summary.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    println!(
        "status: {}  J = {:.8}  iterations = {}  output: {}",
        summary.status,
        summary.j,
        summary.iterations,
        out_dir.display()
    );
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if informational { 0 } else { 1 });
        }
    };
    match cli.command {
        Command::Solve(args) => match run_solve(&args) {
            Ok(SolveStatus::Converged) => ExitCode::SUCCESS,
            Ok(_) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
