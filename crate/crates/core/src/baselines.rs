//! Comparison optimizers: gradient descent, stochastic gradient descent,
//! Newton, sub-sampled Newton and NewSamp. They emit the same trace as
//! [`crate::solver::sigma_solve`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarse::{newton_direction, newton_from_parts};
use crate::error::{Result, SigmaError};
use crate::linalg::{SymMatrix, Vector};
use crate::objective::{GlmKind, ObjectiveModel};
use crate::sampling::{sample_without_replacement, IndexSet, SigmaRng};
use crate::solver::{armijo_search, initial_step, max_feasible_step, InitialStep};
use crate::trace::{Direction, SolveResult, SolveStatus, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Gd,
    Sgd,
    Newton,
    SubNewton,
    NewSamp,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Gd => "gd",
            BaselineKind::Sgd => "sgd",
            BaselineKind::Newton => "newton",
            BaselineKind::SubNewton => "subnewton",
            BaselineKind::NewSamp => "newsamp",
        }
    }

    fn second_order(&self) -> bool {
        matches!(self, BaselineKind::Newton | BaselineKind::SubNewton | BaselineKind::NewSamp)
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = SigmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gd" => Ok(BaselineKind::Gd),
            "sgd" => Ok(BaselineKind::Sgd),
            "newton" => Ok(BaselineKind::Newton),
            "subnewton" => Ok(BaselineKind::SubNewton),
            "newsamp" => Ok(BaselineKind::NewSamp),
            other => Err(SigmaError::InvalidConfig(format!("unknown baseline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: BaselineKind,
    /// Base SGD step `t` in `t_k = t / (1 + γk)`.
    pub sgd_t: f64,
    pub sgd_gamma: f64,
    /// SGD mini-batch size.
    pub batch: usize,
    /// Row sample size for SubNewton and NewSamp; `m / 2` if unset.
    pub rows: Option<usize>,
    /// NewSamp truncation rank; `N / 10` if unset.
    pub rank: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub initial_step: InitialStep,
    pub grad_tol: Option<f64>,
    pub max_iter: usize,
    pub max_seconds: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            method: BaselineKind::Gd,
            sgd_t: 0.1,
            sgd_gamma: 1e-6,
            batch: 1,
            rows: None,
            rank: None,
            alpha: 0.25,
            beta: 0.5,
            epsilon: 1e-8,
            zeta: 2.0,
            initial_step: InitialStep::Auto,
            grad_tol: None,
            max_iter: 1000,
            max_seconds: 60.0,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn for_method(method: BaselineKind) -> Self {
        BaselineConfig { method, ..Self::default() }
    }

    /// Row sample size after defaults, clamped to `[1, m]`.
    pub fn resolved_rows(&self, m: usize) -> usize {
        self.rows.unwrap_or(m / 2).clamp(1, m.max(1))
    }

    /// NewSamp rank after defaults.
    pub fn resolved_rank(&self, dim: usize) -> usize {
        self.rank.unwrap_or(dim / 10)
    }

    /// Step used by SGD at iteration `k`.
    pub fn sgd_step(&self, k: usize) -> f64 {
        self.sgd_t / (1.0 + self.sgd_gamma * k as f64)
    }

    pub fn validate(&self, m: usize, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(SigmaError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad(format!("alpha must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.zeta > 1.0) {
            return bad(format!("zeta must exceed 1, got {}", self.zeta));
        }
        if !(self.max_seconds > 0.0) {
            return bad(format!("max_seconds must be positive, got {}", self.max_seconds));
        }
        match self.method {
            BaselineKind::Sgd => {
                if !(self.sgd_t > 0.0) {
                    return bad(format!("sgd_t must be positive, got {}", self.sgd_t));
                }
                if !(self.sgd_gamma >= 0.0) {
                    return bad(format!("sgd_gamma must be nonnegative, got {}", self.sgd_gamma));
                }
                if self.batch < 1 || self.batch > m {
                    return bad(format!("batch must lie in [1, {m}], got {}", self.batch));
                }
            }
            BaselineKind::SubNewton | BaselineKind::NewSamp => {
                if let Some(r) = self.rows {
                    if r < 1 || r > m {
                        return bad(format!("rows must lie in [1, {m}], got {r}"));
                    }
                }
                if self.method == BaselineKind::NewSamp && self.resolved_rank(dim) >= dim {
                    return bad(format!("rank must be below N = {dim}, got {}", self.resolved_rank(dim)));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Rank-`rank` eigen-truncation of the row-sampled Hessian with the
/// discarded spectrum replaced by its largest eigenvalue:
/// `Σ_{i≤r} λ_i u_i u_iᵀ + λ_{r+1} (I − Σ_{i≤r} u_i u_iᵀ)`.
pub fn newsamp_hessian(model: &ObjectiveModel, x: &Vector, rows: &IndexSet, rank: usize) -> Result<SymMatrix> {
    let dim = model.dim();
    if rank >= dim {
        return Err(SigmaError::InvalidDimensions(format!("NewSamp rank {rank} must be below N = {dim}")));
    }
    let h = model.sampled_hessian(x, rows)?;
    let (vals, vecs) = h.eigen_ascending();
    // descending order: position i of the top block is vals[dim - 1 - i]
    let floor = vals[dim - 1 - rank];
    if !(floor > 0.0) {
        return Err(SigmaError::NotPositiveDefinite { order: dim });
    }
    let mut out = crate::linalg::Matrix::identity(dim, dim) * floor;
    for i in 0..rank {
        let j = dim - 1 - i;
        let u = vecs.column(j);
        out += (vals[j] - floor) * u * u.transpose();
    }
    SymMatrix::from_matrix(out)
}

struct Step {
    d: Vector,
    direction: Direction,
}

fn direction(model: &ObjectiveModel, x: &Vector, g: &Vector, cfg: &BaselineConfig, rng: &mut SigmaRng) -> Result<Step> {
    let m = model.rows();
    match cfg.method {
        BaselineKind::Gd => Ok(Step { d: -g, direction: Direction::Gradient }),
        BaselineKind::Sgd => {
            let batch = sample_without_replacement(m, cfg.batch, rng)?;
            Ok(Step { d: -model.sampled_gradient(x, &batch)?, direction: Direction::Stochastic })
        }
        BaselineKind::Newton => Ok(Step { d: newton_direction(model, x)?.d, direction: Direction::Fine }),
        BaselineKind::SubNewton => {
            let rows = sample_without_replacement(m, cfg.resolved_rows(m), rng)?;
            let h = model.sampled_hessian(x, &rows)?;
            Ok(Step { d: newton_from_parts(&h, g)?.d, direction: Direction::Fine })
        }
        BaselineKind::NewSamp => {
            let rows = sample_without_replacement(m, cfg.resolved_rows(m), rng)?;
            let h = newsamp_hessian(model, x, &rows, cfg.resolved_rank(model.dim()))?;
            Ok(Step { d: newton_from_parts(&h, g)?.d, direction: Direction::Fine })
        }
    }
}

/// Runs the configured baseline from `x0`.
///
/// First-order methods stop on `‖∇f‖² ≤ ε`, second-order ones on
/// `−∇fᵀd ≤ ε`; `grad_tol` adds a gradient-norm stop to both.
pub fn baseline_solve(model: &ObjectiveModel, x0: &Vector, cfg: &BaselineConfig) -> Result<SolveResult> {
    cfg.validate(model.rows(), model.dim())?;
    model.value(x0)?;

    let start = Instant::now();
    let mut rng = SigmaRng::new(cfg.seed);
    let mut x = x0.clone();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let poisson = model.kind() == GlmKind::Poisson;

    let fail = |x: Vector, trace: Vec<TraceRecord>, err: SigmaError| {
        let final_decrement_sq = trace.last().map(|r| r.lambda_hat * r.lambda_hat).unwrap_or(f64::NAN);
        SolveResult {
            x_final: x,
            trace,
            status: SolveStatus::Error,
            final_decrement_sq,
            message: Some(err.to_string()),
        }
    };

    for k in 0.. {
        let (f, g) = match model.value_and_gradient(&x) {
            Ok(v) => v,
            Err(e) => return Ok(fail(x, trace, e)),
        };
        let step = match direction(model, &x, &g, cfg, &mut rng) {
            Ok(s) => s,
            Err(e) => return Ok(fail(x, trace, e)),
        };
        let grad_norm = g.norm();
        let dir_deriv = g.dot(&step.d);
        let decrement_sq = (-dir_deriv).max(0.0);
        let mut record = TraceRecord {
            iter: k,
            elapsed_s: start.elapsed().as_secs_f64(),
            f,
            grad_norm,
            lambda_hat: decrement_sq.sqrt(),
            lambda: None,
            step: 0.0,
            direction: step.direction,
            backtracks: 0,
        };

        let measure = if cfg.method.second_order() { decrement_sq } else { grad_norm * grad_norm };
        let grad_done = cfg.grad_tol.is_some_and(|tol| grad_norm <= tol);
        let status = if grad_done || measure <= cfg.epsilon {
            Some(SolveStatus::Converged)
        } else if k >= cfg.max_iter {
            Some(SolveStatus::MaxIter)
        } else if record.elapsed_s >= cfg.max_seconds {
            Some(SolveStatus::Timeout)
        } else {
            None
        };
        if let Some(status) = status {
            trace.push(record);
            return Ok(SolveResult { x_final: x, trace, status, final_decrement_sq: measure, message: None });
        }

        if cfg.method == BaselineKind::Sgd {
            let mut t = cfg.sgd_step(k);
            if poisson {
                let limit = max_feasible_step(model, &x, &step.d);
                while t >= limit && record.backtracks < crate::solver::MAX_HALVINGS {
                    t *= 0.5;
                    record.backtracks += 1;
                }
            }
            record.step = t;
            trace.push(record);
            x += &step.d * t;
            continue;
        }

        let t0 = match cfg.method {
            BaselineKind::Gd if !poisson => 1.0,
            BaselineKind::Gd => initial_step(model, &x, &step.d, 0.0, InitialStep::Unit, cfg.zeta),
            _ => initial_step(model, &x, &step.d, decrement_sq.sqrt(), cfg.initial_step, cfg.zeta),
        };
        let ls = match armijo_search(model, &x, f, &step.d, dir_deriv, t0, cfg.alpha, cfg.beta) {
            Ok(ls) => ls,
            Err(e) => {
                trace.push(record);
                return Ok(fail(x, trace, e));
            }
        };
        record.step = ls.t;
        record.backtracks = ls.backtracks;
        trace.push(record);
        x += &step.d * ls.t;
    }
    unreachable!("iteration loop only exits by returning")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::objective::{Dataset, Regularization};
    use approx::assert_relative_eq;

    fn quadratic(diag: &[f64], target: &[f64]) -> ObjectiveModel {
        // ½ Σ d_i (x_i − t_i)² with A = √(m d) on the diagonal
        let dim = diag.len();
        let m = dim as f64;
        let a = Matrix::from_diagonal(&Vector::from_iterator(dim, diag.iter().map(|d| (m * d).sqrt())));
        let b = Vector::from_iterator(dim, diag.iter().zip(target).map(|(d, t)| (m * d).sqrt() * t));
        ObjectiveModel::new(GlmKind::Gaussian, Dataset::new(a, b).unwrap(), Regularization::none()).unwrap()
    }

    #[test]
    fn newton_one_step_on_quadratic() {
        let model = quadratic(&[1.0, 4.0, 9.0], &[1.0, 2.0, 3.0]);
        let res = baseline_solve(&model, &Vector::zeros(3), &BaselineConfig::for_method(BaselineKind::Newton)).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert_eq!(res.iterations(), 1);
        assert!(res.final_decrement_sq <= 1e-8);
    }

    #[test]
    fn gd_on_half_square() {
        let model = quadratic(&[1.0], &[0.0]);
        let res = baseline_solve(&model, &Vector::from_element(1, 2.0), &BaselineConfig::for_method(BaselineKind::Gd))
            .unwrap();
        assert_eq!(res.iterations(), 1);
        assert_eq!(res.trace[0].step, 1.0);
        assert_eq!(res.trace[0].backtracks, 0);
        assert_eq!(res.x_final[0], 0.0);
    }

    #[test]
    fn sgd_schedule() {
        let cfg = BaselineConfig { sgd_t: 0.3, ..BaselineConfig::for_method(BaselineKind::Sgd) };
        assert_eq!(cfg.sgd_step(0), 0.3);
        assert_eq!(cfg.sgd_step(1), 0.3 / (1.0 + 1e-6));
        assert_eq!(cfg.sgd_step(2), 0.3 / (1.0 + 2e-6));
    }

    #[test]
    fn newsamp_truncation_example() {
        let model = quadratic(&[4.0, 2.0, 1.0], &[0.0, 0.0, 0.0]);
        let rows = IndexSet::full(3);
        let h = newsamp_hessian(&model, &Vector::zeros(3), &rows, 1).unwrap();
        assert_relative_eq!(
            *h.as_matrix(),
            Matrix::from_diagonal(&Vector::from_column_slice(&[4.0, 2.0, 2.0])),
            epsilon = 1e-12
        );
        assert!(newsamp_hessian(&model, &Vector::zeros(3), &rows, 3).is_err());
    }

    #[test]
    fn subnewton_full_sample_matches_newton() {
        let a = Matrix::from_row_slice(4, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1, 1.5, -1.0]);
        let b = Vector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]);
        let model =
            ObjectiveModel::new(GlmKind::Logistic, Dataset::new(a, b).unwrap(), Regularization::ridge(1e-3)).unwrap();
        let x0 = Vector::zeros(2);
        let newton = baseline_solve(&model, &x0, &BaselineConfig::for_method(BaselineKind::Newton)).unwrap();
        let sub = baseline_solve(
            &model,
            &x0,
            &BaselineConfig { rows: Some(4), ..BaselineConfig::for_method(BaselineKind::SubNewton) },
        )
        .unwrap();
        assert_eq!(newton.trace.len(), sub.trace.len());
        for (p, q) in newton.trace.iter().zip(&sub.trace) {
            assert_eq!((p.f, p.step, p.lambda_hat), (q.f, q.step, q.lambda_hat));
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("SubNewton".parse::<BaselineKind>().unwrap(), BaselineKind::SubNewton);
        assert_eq!("new-samp".parse::<BaselineKind>().unwrap(), BaselineKind::NewSamp);
        assert!("lbfgs".parse::<BaselineKind>().is_err());
    }
}
