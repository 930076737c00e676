//! Multilevel randomized Newton solver for self-concordant generalized
//! linear models, with first- and second-order baselines and data helpers.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod coarse;
pub mod data;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod sampling;
pub mod solver;
pub mod trace;

pub use baselines::{baseline_solve, newsamp_hessian, BaselineConfig, BaselineKind};
pub use coarse::{
    build_operator, coarse_direction, decrements, galerkin_system, newton_direction, nystrom_approximation,
    CoarseOperator, CoarseStep, Decrements, GalerkinSystem, NewtonStep,
};
pub use data::{
    load_csv, load_libsvm, prescribed_singular_values, standardize, svd_gap_matrix, synth_labels, write_libsvm,
    LabelKind, Standardization, SvdGapSpec, SyntheticLabels,
};
pub use error::{Result, SigmaError};
pub use linalg::{omega, omega_star, spd_solve, Matrix, SymMatrix, Vector};
pub use objective::{Dataset, DomainStatus, Evaluation, GlmKind, ObjectiveModel, Regularization};
pub use sampling::{sample_without_replacement, IndexSet, SigmaRng};
pub use solver::{
    armijo_search, damped_initial_step, direction_select, eta_region, poisson_feasible_step, sigma_solve,
    stopping_check, CheckMode, InitialStep, LineSearch, SigmaConfig,
};
pub use trace::{write_trace_csv, Direction, SolveResult, SolveStatus, TraceRecord};
