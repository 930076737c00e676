//! SIGMA: coarse/fine direction selection, Armijo backtracking, the Poisson
//! feasible step-size strategy, stopping rules and trace emission.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarse::{build_operator, coarse_direction, galerkin_system, newton_direction, CoarseOperator};
use crate::error::{Result, SigmaError};
use crate::linalg::Vector;
use crate::objective::{GlmKind, ObjectiveModel};
use crate::sampling::{sample_without_replacement, SigmaRng};
use crate::trace::{Direction, SolveResult, SolveStatus, TraceRecord};

/// Upper end of the decrement region in which `λ² ≥ f − f*` is guaranteed.
pub const DECREMENT_REGION: f64 = 0.68;

/// Maximum number of step reductions in [`armijo_search`].
pub const MAX_HALVINGS: usize = 60;

/// Rule that decides between the coarse and the fine direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Coarse iff `λ̂ > μλ` and `λ̂ > ν`; needs the Newton decrement.
    FullDecrement,
    /// Coarse iff `‖R∇f‖ > μ‖∇f‖` and `‖R∇f‖ > ν`.
    EuclideanProxy,
    /// Coarse iff `λ̂ > ν`.
    NuOnly,
    /// Always coarse; the fine machinery is never touched.
    AlwaysCoarse,
}

impl CheckMode {
    fn uses_nu(self) -> bool {
        self != CheckMode::AlwaysCoarse
    }
}

impl std::str::FromStr for CheckMode {
    type Err = SigmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full_decrement" | "full" => Ok(CheckMode::FullDecrement),
            "euclidean_proxy" | "euclidean" => Ok(CheckMode::EuclideanProxy),
            "nu_only" | "nu" => Ok(CheckMode::NuOnly),
            "always_coarse" | "always" => Ok(CheckMode::AlwaysCoarse),
            other => Err(SigmaError::InvalidConfig(format!("unknown check mode '{other}'"))),
        }
    }
}

/// Where the backtracking search starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStep {
    /// Poisson: damped start grown by ζ while feasible, capped at 1.
    /// Other models: unit step.
    Auto,
    /// `1 / (1 + decrement)` (halved into the domain for Poisson).
    Damped,
    /// `t = 1`.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaConfig {
    /// Coarse dimension.
    pub n: usize,
    pub mu: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Step growth factor of the Poisson feasible-step strategy.
    pub zeta: f64,
    pub check_mode: CheckMode,
    /// Number of data rows sampled for the reduced Hessian; all rows if unset.
    pub row_sample: Option<usize>,
    pub max_iter: usize,
    pub max_seconds: f64,
    pub seed: u64,
    /// Also stop once `‖∇f‖ ≤ grad_tol`.
    pub grad_tol: Option<f64>,
    pub initial_step: InitialStep,
    /// Keep the first coordinate operator for the whole run.
    pub freeze_operator: bool,
    /// Compute the Newton decrement at every iterate for the trace.
    pub record_newton_decrement: bool,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        SigmaConfig {
            n: 1,
            mu: 0.5,
            nu: 1e-4,
            epsilon: 1e-8,
            alpha: 0.25,
            beta: 0.5,
            zeta: 2.0,
            check_mode: CheckMode::AlwaysCoarse,
            row_sample: None,
            max_iter: 1000,
            max_seconds: 60.0,
            seed: 0,
            grad_tol: None,
            initial_step: InitialStep::Auto,
            freeze_operator: false,
            record_newton_decrement: false,
        }
    }
}

impl SigmaConfig {
    pub fn with_coarse_dim(n: usize) -> Self {
        SigmaConfig { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let region = DECREMENT_REGION * DECREMENT_REGION;
        let bad = |msg: String| Err(SigmaError::InvalidConfig(msg));
        if self.n < 1 {
            return bad("coarse dimension n must be >= 1".into());
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad(format!("mu must lie in (0, 1), got {}", self.mu));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad(format!("alpha must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.nu > 0.0 && self.nu < region) {
            return bad(format!("nu must lie in (0, 0.68^2), got {}", self.nu));
        }
        if !(self.epsilon > 0.0 && self.epsilon < region) {
            return bad(format!("epsilon must lie in (0, 0.68^2), got {}", self.epsilon));
        }
        if self.check_mode.uses_nu() && self.epsilon <= self.nu {
            return bad(format!(
                "epsilon must exceed nu when the check mode consults nu (epsilon {}, nu {})",
                self.epsilon, self.nu
            ));
        }
        if !(self.zeta > 1.0) {
            return bad(format!("zeta must exceed 1, got {}", self.zeta));
        }
        if self.row_sample == Some(0) {
            return bad("row_sample must be >= 1".into());
        }
        if !(self.max_seconds > 0.0) {
            return bad(format!("max_seconds must be positive, got {}", self.max_seconds));
        }
        if let Some(tol) = self.grad_tol {
            if !(tol >= 0.0) {
                return bad(format!("grad_tol must be nonnegative, got {tol}"));
            }
        }
        Ok(())
    }
}

/// `1 / (1 + λ̂)`: the minimizer of the self-concordant upper model along
/// the coarse direction.
pub fn damped_initial_step(lambda_hat: f64) -> f64 {
    1.0 / (1.0 + lambda_hat.max(0.0))
}

/// `true` iff the squared decrement is at or below `epsilon` (inclusive).
pub fn stopping_check(decrement_sq: f64, epsilon: f64) -> bool {
    decrement_sq <= epsilon
}

/// Edge of the super-linear region, `η = (3 − √(5 + 4e)) / 2`.
pub fn eta_region(e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e) {
        return Err(SigmaError::Domain(format!("eta_region needs e in [0, 1], got {e}")));
    }
    Ok((3.0 - (5.0 + 4.0 * e).sqrt()) / 2.0)
}

/// Chooses between the coarse and the fine direction.
///
/// `grad_norm` and `reduced_grad_norm` are only read by
/// [`CheckMode::EuclideanProxy`], `lambda` only by
/// [`CheckMode::FullDecrement`].
pub fn direction_select(
    lambda_hat: f64,
    lambda: Option<f64>,
    grad_norm: f64,
    reduced_grad_norm: f64,
    mode: CheckMode,
    mu: f64,
    nu: f64,
) -> Result<Direction> {
    let coarse = match mode {
        CheckMode::AlwaysCoarse => true,
        CheckMode::NuOnly => lambda_hat > nu,
        CheckMode::FullDecrement => {
            let lambda = lambda.ok_or(SigmaError::MissingNewtonDecrement)?;
            lambda_hat > mu * lambda && lambda_hat > nu
        }
        CheckMode::EuclideanProxy => reduced_grad_norm > mu * grad_norm && reduced_grad_norm > nu,
    };
    Ok(if coarse { Direction::Coarse } else { Direction::Fine })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub t: f64,
    pub backtracks: usize,
    pub f_new: f64,
}

/// Backtracking search over `t0 βʲ` for the first step with
/// `f(x + td) ≤ f(x) + α t ∇fᵀd` and `x + td` in the domain.
///
/// The change in `f` is evaluated term by term (see
/// [`ObjectiveModel::line`]), so the test stays meaningful when the
/// decrease is far below the rounding error of `f` itself.
#[allow(clippy::too_many_arguments)]
pub fn armijo_search(
    model: &ObjectiveModel,
    x: &Vector,
    fx: f64,
    d: &Vector,
    dir_deriv: f64,
    t0: f64,
    alpha: f64,
    beta: f64,
) -> Result<LineSearch> {
    if !(dir_deriv < 0.0) {
        return Err(SigmaError::LineSearchFailed { halvings: 0, dir_deriv });
    }
    let probe = model.line(x, d)?;
    let mut t = t0;
    for j in 0..=MAX_HALVINGS {
        if let Some(change) = probe.change(t) {
            if change <= alpha * t * dir_deriv {
                return Ok(LineSearch { t, backtracks: j, f_new: fx + change });
            }
        }
        t *= beta;
    }
    Err(SigmaError::LineSearchFailed { halvings: MAX_HALVINGS, dir_deriv })
}

/// Largest step in `[0, ∞)` keeping every Poisson margin positive.
pub(crate) fn max_feasible_step(model: &ObjectiveModel, x: &Vector, d: &Vector) -> f64 {
    model.line(x, d).map(|p| p.max_step()).unwrap_or(0.0)
}

/// Initial step for the Poisson model: start at `1 / (1 + λ̂)`, halve
/// until feasible if needed, then grow by `ζ` while `x + td` stays in the
/// domain, capped at 1.
pub fn poisson_feasible_step(model: &ObjectiveModel, x: &Vector, d: &Vector, lambda_hat: f64, zeta: f64) -> f64 {
    let limit = max_feasible_step(model, x, d);
    let feasible = |t: f64| t < limit;
    let mut t = damped_initial_step(lambda_hat);
    let mut halvings = 0;
    while !feasible(t) && halvings < MAX_HALVINGS {
        t *= 0.5;
        halvings += 1;
    }
    while t < 1.0 {
        let next = (zeta * t).min(1.0);
        if feasible(next) {
            t = next;
        } else {
            break;
        }
    }
    t
}

pub(crate) fn initial_step(
    model: &ObjectiveModel,
    x: &Vector,
    d: &Vector,
    decrement: f64,
    policy: InitialStep,
    zeta: f64,
) -> f64 {
    let poisson = model.kind() == GlmKind::Poisson;
    match policy {
        InitialStep::Auto if poisson => poisson_feasible_step(model, x, d, decrement, zeta),
        InitialStep::Auto | InitialStep::Unit => 1.0,
        InitialStep::Damped => {
            let mut t = damped_initial_step(decrement);
            if poisson {
                let limit = max_feasible_step(model, x, d);
                while t >= limit && t > 0.0 {
                    t *= 0.5;
                }
            }
            t
        }
    }
}

struct Chosen {
    d: Vector,
    decrement_sq: f64,
    lambda: Option<f64>,
    direction: Direction,
}

fn choose_direction(
    model: &ObjectiveModel,
    x: &Vector,
    g: &Vector,
    op: &CoarseOperator,
    cfg: &SigmaConfig,
    rng: &mut SigmaRng,
) -> Result<Chosen> {
    let rows = match cfg.row_sample {
        Some(s) if s < model.rows() => Some(sample_without_replacement(model.rows(), s, rng)?),
        _ => None,
    };
    let sys = galerkin_system(model, x, op, rows.as_ref())?;
    let coarse = coarse_direction(&sys, op)?;
    let want_newton = cfg.record_newton_decrement || cfg.check_mode == CheckMode::FullDecrement;
    let mut newton = if want_newton { Some(newton_direction(model, x)?) } else { None };
    let direction = direction_select(
        coarse.lambda_hat,
        newton.as_ref().map(|s| s.lambda),
        g.norm(),
        sys.g.norm(),
        cfg.check_mode,
        cfg.mu,
        cfg.nu,
    )?;
    let lambda = newton.as_ref().map(|s| s.lambda);
    Ok(match direction {
        Direction::Coarse => {
            Chosen { decrement_sq: coarse.lambda_hat * coarse.lambda_hat, d: coarse.d_fine, lambda, direction }
        }
        _ => {
            let step = match newton.take() {
                Some(s) => s,
                None => newton_direction(model, x)?,
            };
            Chosen {
                decrement_sq: step.lambda * step.lambda,
                lambda: Some(step.lambda),
                d: step.d,
                direction: Direction::Fine,
            }
        }
    })
}

/// Runs SIGMA from `x0`.
///
/// Returns `Err` only for an invalid configuration or an infeasible start;
/// failures during the iteration end the run with [`SolveStatus::Error`].
pub fn sigma_solve(model: &ObjectiveModel, x0: &Vector, cfg: &SigmaConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if cfg.n > model.dim() {
        return Err(SigmaError::InvalidConfig(format!(
            "coarse dimension {} exceeds problem dimension {}",
            cfg.n,
            model.dim()
        )));
    }
    if let Some(s) = cfg.row_sample {
        if s > model.rows() {
            return Err(SigmaError::InvalidConfig(format!("row sample {s} exceeds the {} data rows", model.rows())));
        }
    }
    // surfaces OutOfDomain for an infeasible start
    model.value(x0)?;

    let start = Instant::now();
    let mut rng = SigmaRng::new(cfg.seed);
    let mut x = x0.clone();
    let mut trace = Vec::new();
    let mut frozen: Option<CoarseOperator> = None;

    let fail = |x: Vector, trace: Vec<TraceRecord>, err: SigmaError| {
        let final_decrement_sq = trace.last().map(|r: &TraceRecord| r.lambda_hat * r.lambda_hat).unwrap_or(f64::NAN);
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
        let op = match &frozen {
            Some(op) => op.clone(),
            None => match build_operator(model.dim(), cfg.n, &mut rng) {
                Ok(op) => {
                    if cfg.freeze_operator {
                        frozen = Some(op.clone());
                    }
                    op
                }
                Err(e) => return Ok(fail(x, trace, e)),
            },
        };
        let chosen = match choose_direction(model, &x, &g, &op, cfg, &mut rng) {
            Ok(c) => c,
            Err(e) => return Ok(fail(x, trace, e)),
        };
        let grad_norm = g.norm();
        let mut record = TraceRecord {
            iter: k,
            elapsed_s: start.elapsed().as_secs_f64(),
            f,
            grad_norm,
            lambda_hat: chosen.decrement_sq.sqrt(),
            lambda: chosen.lambda,
            step: 0.0,
            direction: chosen.direction,
            backtracks: 0,
        };

        let grad_done = cfg.grad_tol.is_some_and(|tol| grad_norm <= tol);
        let status = if grad_done || stopping_check(chosen.decrement_sq, cfg.epsilon) {
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
            return Ok(SolveResult {
                x_final: x,
                trace,
                status,
                final_decrement_sq: chosen.decrement_sq,
                message: None,
            });
        }

        let dir_deriv = g.dot(&chosen.d);
        let t0 = initial_step(model, &x, &chosen.d, chosen.decrement_sq.sqrt(), cfg.initial_step, cfg.zeta);
        let ls = match armijo_search(model, &x, f, &chosen.d, dir_deriv, t0, cfg.alpha, cfg.beta) {
            Ok(ls) => ls,
            Err(e) => {
                trace.push(record);
                return Ok(fail(x, trace, e));
            }
        };
        record.step = ls.t;
        record.backtracks = ls.backtracks;
        trace.push(record);
        x += &chosen.d * ls.t;
    }
    unreachable!("iteration loop only exits by returning")
}
