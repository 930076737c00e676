//! Files written by the subcommands.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sigma_core::{write_trace_csv, SolveResult, SolveStatus, TraceRecord};

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory '{}'", dir.display()))
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating '{}'", path.display()))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing '{}'", path.display()))
}

/// Final state of one run as reported in `summary.json` and the bench table.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub solver: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub f: f64,
    pub grad_norm: f64,
    /// Gradient norm of `f / scale` (differs from `grad_norm` for Poisson only).
    pub grad_norm_unscaled: f64,
    pub lambda_hat: f64,
    pub final_decrement_sq: f64,
    pub message: Option<String>,
}

impl RunOutcome {
    pub fn new(solver: &str, result: &SolveResult, scale: f64) -> Self {
        let last = result.final_record();
        let grad_norm = last.map_or(f64::NAN, |r| r.grad_norm);
        RunOutcome {
            solver: solver.to_string(),
            status: result.status,
            iterations: result.iterations(),
            elapsed_s: last.map_or(0.0, |r| r.elapsed_s),
            f: last.map_or(f64::NAN, |r| r.f),
            grad_norm,
            grad_norm_unscaled: grad_norm / scale,
            lambda_hat: last.map_or(f64::NAN, |r| r.lambda_hat),
            final_decrement_sq: result.final_decrement_sq,
            message: result.message.clone(),
        }
    }

    pub fn failed(solver: &str, err: &anyhow::Error) -> Self {
        RunOutcome {
            solver: solver.to_string(),
            status: SolveStatus::Error,
            iterations: 0,
            elapsed_s: 0.0,
            f: f64::NAN,
            grad_norm: f64::NAN,
            grad_norm_unscaled: f64::NAN,
            lambda_hat: f64::NAN,
            final_decrement_sq: f64::NAN,
            message: Some(format!("{err:#}")),
        }
    }
}

pub const COMPARISON_HEADER: &str = "solver,iter,elapsed_s,grad_norm,f";

pub fn write_comparison(path: &Path, runs: &[(String, Vec<TraceRecord>)]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating '{}'", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{COMPARISON_HEADER}")?;
    for (name, trace) in runs {
        for r in trace {
            writeln!(w, "{},{},{:.6},{},{}", name, r.iter, r.elapsed_s, r.grad_norm, r.f)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "max_iter",
        SolveStatus::Timeout => "timeout",
        SolveStatus::Error => "error",
    }
}

pub fn markdown_table(title: &str, outcomes: &[RunOutcome]) -> String {
    let mut s = String::new();
    writeln!(s, "# {title}\n").unwrap();
    writeln!(s, "| solver | status | iterations | elapsed (s) | final grad norm | final f |").unwrap();
    writeln!(s, "|---|---|---:|---:|---:|---:|").unwrap();
    for o in outcomes {
        writeln!(
            s,
            "| {} | {} | {} | {:.3} | {:.3e} | {:.10e} |",
            o.solver,
            status_name(o.status),
            o.iterations,
            o.elapsed_s,
            o.grad_norm,
            o.f
        )
        .unwrap();
    }
    let failures: Vec<_> = outcomes.iter().filter(|o| o.message.is_some()).collect();
    if !failures.is_empty() {
        writeln!(s, "\n## Failures\n").unwrap();
        for o in failures {
            writeln!(s, "- {}: {}", o.solver, o.message.as_deref().unwrap_or("")).unwrap();
        }
    }
    s
}

/// Gnuplot script drawing log-scale gradient norm against time from
/// `comparison.csv` in the same directory.
pub fn gnuplot_script(solvers: &[String]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set logscale y\n");
    s.push_str("set xlabel 'elapsed (s)'\n");
    s.push_str("set ylabel 'gradient norm'\n");
    s.push_str("set key outside right\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str("set output 'comparison.png'\n");
    let plots: Vec<String> = solvers
        .iter()
        .map(|name| {
            format!("'comparison.csv' skip 1 using 3:(strcol(1) eq '{name}' ? $4 : 1/0) with lines title '{name}'")
        })
        .collect();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use sigma_core::Direction;

    fn rec(iter: usize, g: f64) -> TraceRecord {
        TraceRecord {
            iter,
            elapsed_s: 0.0,
            f: 1.0,
            grad_norm: g,
            lambda_hat: 0.0,
            lambda: None,
            step: 1.0,
            direction: Direction::Gradient,
            backtracks: 0,
        }
    }

    #[test]
    fn comparison_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("comparison.csv");
        write_comparison(&path, &[("gd".into(), vec![rec(0, 2.0), rec(1, 1.0)]), ("sigma".into(), vec![rec(0, 2.0)])])
            .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], COMPARISON_HEADER);
        assert_eq!(lines[2], "gd,1,0.000000,1,1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn gnuplot_mentions_every_solver() {
        let script = gnuplot_script(&["sigma".into(), "gd".into()]);
        assert!(script.contains("'sigma'") && script.contains("'gd'"));
    }
}
