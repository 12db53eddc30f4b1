use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracdd::assembly::{build_operator, discretize_measure, MeasureSpec};
use fracdd::experiment::{
    grid_specs, iteration_spread, load_grid, prepare_problem, run_table, solve_problem,
    table_specs, write_csv, ExperimentSpec, PROBE_SEED,
};
use fracdd::krylov::{estimate_condition, StopReason};
use fracdd::mesh::{build_decomposition, build_mesh, Rect};
use fracdd::operators::{write_symbol_file, SymbolFile};
use fracdd::schwarz::build_preconditioner;
use fracdd::Error;
use serde_json::json;

/// Two-level Schwarz preconditioned solves of space-fractional problems.
#[derive(Parser)]
#[command(name = "fracdd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the operator on [0,2]^2 and write it as a symbol file.
    Assemble {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.75)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value = "axes4")]
        measure: MeasureSpec,
        #[arg(long, default_value_t = 1e-12)]
        drop_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment and print its result row as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Symbol file reused when it matches the config, rewritten otherwise.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce Table 1 or 2 (or a user grid) as CSV.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        table: u8,
        /// JSON array of {"n", "m", "overlap_cells"} rows.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the extreme eigenvalues of the preconditioned operator.
    Cond {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        probes: Option<usize>,
    },
}

enum Failure {
    Lib(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn load_config(path: &Path) -> Result<ExperimentSpec, Failure> {
    ExperimentSpec::load(path).map_err(|e| {
        match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
            other => other,
        }
        .into()
    })
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn stop_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Converged => "converged",
        StopReason::ZeroRhs => "zero_rhs",
        StopReason::MaxIterations => "max_iterations",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Assemble {
            n,
            alpha,
            c,
            measure,
            drop_tol,
            out,
        } => {
            let mesh = build_mesh(Rect::reference(), n)?;
            let mu = discretize_measure(measure)?;
            let op = build_operator(&mesh, alpha, c, &mu, drop_tol)?;
            write_symbol_file(&out, &SymbolFile::from_operator(&op))?;
            eprintln!(
                "wrote {} ({} nonzero offsets)",
                out.display(),
                op.symbol().nonzeros().len()
            );
            Ok(())
        }
        Command::Solve { config, cache, out } => {
            let spec = load_config(&config)?;
            let problem = prepare_problem(&spec, cache.as_deref())?;
            let outcome = solve_problem(&problem, &spec)?;
            let mut value = serde_json::to_value(&outcome.row).map_err(Error::from)?;
            value["measure"] = json!(spec.measure.to_string());
            value["stop_reason"] = json!(stop_name(outcome.report.stop_reason));
            emit(&value, out.as_deref().or(spec.output.as_deref()))?;
            if outcome.row.converged {
                Ok(())
            } else {
                Err(Failure::NotConverged)
            }
        }
        Command::Bench {
            table,
            grid,
            jobs,
            out,
        } => {
            let specs = match grid {
                Some(path) => grid_specs(table, &load_grid(&path)?)?,
                None => table_specs(table)?,
            };
            let rows = run_table(&specs, jobs)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_csv(&rows, &mut w)?;
            w.flush()?;
            if let (Some(lo), Some(hi)) = (
                rows.iter().map(|r| r.iterations).min(),
                rows.iter().map(|r| r.iterations).max(),
            ) {
                println!(
                    "table {table}: {} rows, iterations {lo}..{hi}, spread {}",
                    rows.len(),
                    iteration_spread(&rows)
                );
            } else {
                println!("table {table}: no rows");
            }
            if rows.iter().all(|r| r.converged) {
                Ok(())
            } else {
                Err(Failure::NotConverged)
            }
        }
        Command::Cond { config, probes } => {
            let spec = load_config(&config)?;
            let probes = probes.unwrap_or(spec.probes);
            if probes == 0 {
                return Err(Error::Config("need at least one probe".into()).into());
            }
            let problem = prepare_problem(&spec, None)?;
            let dd = build_decomposition(&problem.mesh, spec.m, spec.overlap_cells)?;
            let pre = build_preconditioner(&problem.operator, &dd, true)?;
            let est = estimate_condition(&problem.operator, &pre, probes, PROBE_SEED)?;
            emit(
                &json!({
                    "lambda_min": est.lambda_min,
                    "lambda_max": est.lambda_max,
                    "cond_est": est.condition(),
                    "probes": est.probes,
                }),
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => {
            eprintln!("error: PCG reached max_iter without converging");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            let code = if e.is_numerical() {
                3
            } else if matches!(e, Error::Io(_) | Error::Format(_)) {
                1
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}
