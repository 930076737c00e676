//! Per-iteration records shared by SIGMA and every baseline, and their CSV
//! serialization.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::linalg::Vector;

/// Kind of search direction taken from an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Prolongated solution of the Galerkin system.
    Coarse,
    /// Second-order direction on the full space (Newton and its sampled variants).
    Fine,
    /// Negative full gradient.
    Gradient,
    /// Negative mini-batch gradient.
    Stochastic,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Coarse => "coarse",
            Direction::Fine => "fine",
            Direction::Gradient => "gradient",
            Direction::Stochastic => "stochastic",
        }
    }
}

/// State of iterate `iter` and the move taken out of it. The final record
/// of a run has `step == 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub f: f64,
    pub grad_norm: f64,
    /// `sqrt(−∇fᵀd)` for the direction computed at this iterate.
    pub lambda_hat: f64,
    pub lambda: Option<f64>,
    pub step: f64,
    pub direction: Direction,
    pub backtracks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Timeout,
    Error,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vector,
    pub trace: Vec<TraceRecord>,
    pub status: SolveStatus,
    pub final_decrement_sq: f64,
    /// Set when `status == Error`.
    pub message: Option<String>,
}

impl SolveResult {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }

    /// First iteration whose gradient norm is at or below `tol`.
    pub fn iterations_to_grad_norm(&self, tol: f64) -> Option<usize> {
        self.trace.iter().find(|r| r.grad_norm <= tol).map(|r| r.iter)
    }
}

pub const TRACE_HEADER: &str = "iter,elapsed_s,f,grad_norm,lambda_hat,lambda,step,direction,backtracks";

pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:.6},{},{},{},{},{},{},{}",
            r.iter,
            r.elapsed_s,
            r.f,
            r.grad_norm,
            r.lambda_hat,
            lambda,
            r.step,
            r.direction.as_str(),
            r.backtracks
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rec = TraceRecord {
            iter: 0,
            elapsed_s: 0.5,
            f: 1.25,
            grad_norm: 0.5,
            lambda_hat: 0.25,
            lambda: None,
            step: 1.0,
            direction: Direction::Coarse,
            backtracks: 0,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{TRACE_HEADER}\n0,0.500000,1.25,0.5,0.25,,1,coarse,0\n"));
    }
}
