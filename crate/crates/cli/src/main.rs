#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::DatagenArgs;
use config::RunArgs;

/// Multilevel randomized Newton solver and baselines for GLMs.
#[derive(Debug, Parser)]
#[command(name = "sigma-opt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write trace.csv and summary.json.
    Solve(RunArgs),
    /// Run several solvers on one dataset and write comparison files.
    Bench(BenchArgs),
    /// Generate a synthetic SVD-gap dataset in libsvm format.
    Datagen(DatagenArgs),
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Solvers to compare, e.g. sigma,gd,newton.
    #[arg(long, value_enum, value_delimiter = ',')]
    solvers: Vec<config::SolverKind>,
    /// Gap positions as fractions of N, e.g. 0.2,0.5,0.8.
    #[arg(long, value_delimiter = ',')]
    p_list: Vec<f64>,
    /// Also write a gnuplot script for comparison.csv.
    #[arg(long)]
    gnuplot: bool,
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let status = commands::cmd_solve(&cfg)?;
            Ok(commands::exit_code(status))
        }
        Command::Bench(args) => {
            let mut cfg = args.run.resolve()?;
            if !args.solvers.is_empty() {
                cfg.bench.solvers = args.solvers.into_iter().map(config::SolverEntry::plain).collect();
            }
            if !args.p_list.is_empty() {
                cfg.bench.p_list = args.p_list;
            }
            cfg.bench.gnuplot |= args.gnuplot;
            let report = commands::cmd_bench(&cfg)?;
            Ok(if report.all_failed() { 1 } else { 0 })
        }
        Command::Datagen(args) => {
            let path = commands::cmd_datagen(&args)?;
            eprintln!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
