//! The `solve`, `bench` and `datagen` subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sigma_core::{
    baseline_solve, prescribed_singular_values, sigma_solve, write_libsvm, BaselineConfig, Dataset, GlmKind,
    Regularization, SigmaConfig, SolveResult, SolveStatus, SvdGapSpec,
};

use crate::config::{build_problem, label_kind, synthesize, DataConfig, Problem, RunConfig, SolverEntry, SolverKind};
use crate::output::{self, RunOutcome};

/// Parameters actually used by a run, echoed into `summary.json`.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum SolverParams {
    Sigma(SigmaConfig),
    Baseline(BaselineConfig),
}

#[derive(Debug, Clone, Serialize)]
struct EffectiveConfig<'a> {
    model: GlmKind,
    seed: u64,
    solver: SolverKind,
    data: &'a DataConfig,
    regularization: Regularization,
    params: SolverParams,
}

#[derive(Debug, Clone, Serialize)]
struct DataInfo<'a> {
    source: &'a str,
    m: usize,
    #[serde(rename = "N")]
    n_features: usize,
    scale: f64,
    /// Distance from the final iterate to the generating coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    x_true_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    outcome: &'a RunOutcome,
    data: DataInfo<'a>,
    config: EffectiveConfig<'a>,
}

fn resolve_params(cfg: &RunConfig, problem: &Problem, entry: &SolverEntry) -> Result<SolverParams> {
    let (m, dim) = (problem.model.rows(), problem.model.dim());
    let extra = Some(&entry.params);
    Ok(match entry.kind.baseline() {
        None => SolverParams::Sigma(cfg.sigma_for(dim, extra)?),
        Some(method) => SolverParams::Baseline(cfg.baseline_for(method, m, dim, extra)?),
    })
}

fn run(problem: &Problem, params: &SolverParams) -> Result<SolveResult> {
    Ok(match params {
        SolverParams::Sigma(c) => sigma_solve(&problem.model, &problem.x0, c)?,
        SolverParams::Baseline(c) => baseline_solve(&problem.model, &problem.x0, c)?,
    })
}

fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    problem: &Problem,
    kind: SolverKind,
    params: SolverParams,
    result: &SolveResult,
    name: &str,
) -> Result<RunOutcome> {
    output::create_dir(dir)?;
    output::write_trace(&dir.join("trace.csv"), &result.trace)?;
    let outcome = RunOutcome::new(name, result, problem.model.scale());
    let summary = Summary {
        outcome: &outcome,
        data: DataInfo {
            source: &problem.source,
            m: problem.model.rows(),
            n_features: problem.model.dim(),
            scale: problem.model.scale(),
            x_true_distance: problem.x_true.as_ref().map(|xt| (&result.x_final - xt).norm()),
        },
        config: EffectiveConfig {
            model: problem.model.kind(),
            seed: cfg.seed,
            solver: kind,
            data: &cfg.data,
            regularization: cfg.regularization,
            params,
        },
    };
    output::write_json(&dir.join("summary.json"), &summary)?;
    Ok(outcome)
}

/// Exit code for a finished solve: 0 converged, 2 iteration or time limit,
/// 1 error.
pub fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIter | SolveStatus::Timeout => 2,
        SolveStatus::Error => 1,
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveStatus> {
    let problem = build_problem(cfg)?;
    let entry = SolverEntry::plain(cfg.solver);
    let params = resolve_params(cfg, &problem, &entry)?;
    let result = run(&problem, &params)?;
    let outcome = write_run(&cfg.out, cfg, &problem, cfg.solver, params, &result, cfg.solver.name())?;
    eprintln!(
        "{}: {:?} after {} iterations, grad norm {:.3e}, f {:.10e}",
        outcome.solver, outcome.status, outcome.iterations, outcome.grad_norm, outcome.f
    );
    if let Some(msg) = &outcome.message {
        eprintln!("error: {msg}");
    }
    Ok(result.status)
}

/// Threads for running bench entries, from `SIGMA_OPT_THREADS` (0 or unset
/// means one per core).
fn thread_count() -> Result<usize> {
    match std::env::var("SIGMA_OPT_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().with_context(|| format!("SIGMA_OPT_THREADS must be a nonnegative integer, got '{v}'"))
        }
        _ => Ok(0),
    }
}

fn entry_names(entries: &[SolverEntry]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for e in entries {
        let base = e.name.clone().unwrap_or_else(|| e.kind.name().to_string());
        let mut name = base.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{base}-{k}");
            k += 1;
        }
        names.push(name);
    }
    names
}

pub struct BenchReport {
    pub outcomes: Vec<RunOutcome>,
}

impl BenchReport {
    pub fn all_failed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status == SolveStatus::Error)
    }
}

/// Runs every solver entry on one dataset (or on one dataset per gap
/// position in `p_list`) and writes per-solver traces plus the combined
/// comparison files.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchReport> {
    let entries = if cfg.bench.solvers.is_empty() {
        [SolverKind::Sigma, SolverKind::Gd, SolverKind::Newton].into_iter().map(SolverEntry::plain).collect()
    } else {
        cfg.bench.solvers.clone()
    };
    let names = entry_names(&entries);

    // (label, config) per dataset variant
    let variants: Vec<(Option<String>, RunConfig)> = if cfg.bench.p_list.is_empty() {
        vec![(None, cfg.clone())]
    } else {
        let Some(synth) = &cfg.data.synthetic else {
            bail!("--p-list needs synthetic data");
        };
        cfg.bench
            .p_list
            .iter()
            .map(|&frac| {
                if !(frac > 0.0 && frac <= 1.0) {
                    bail!("p-list fractions must lie in (0, 1], got {frac}");
                }
                let mut c = cfg.clone();
                let mut s = synth.clone();
                s.p = ((frac * s.n_features as f64).round() as usize).clamp(1, s.n_features);
                c.data.synthetic = Some(s);
                Ok((Some(format!("p{frac}")), c))
            })
            .collect::<Result<_>>()?
    };

    output::create_dir(&cfg.out)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()?).build()?;

    let mut jobs = Vec::new();
    let mut problems = Vec::new();
    for (vi, (label, vcfg)) in variants.iter().enumerate() {
        problems.push(build_problem(vcfg)?);
        for (ei, entry) in entries.iter().enumerate() {
            let mut run_cfg = vcfg.clone();
            run_cfg.seed = vcfg.seed + ei as u64;
            let name = match label {
                Some(l) => format!("{}@{l}", names[ei]),
                None => names[ei].clone(),
            };
            let dir: PathBuf = match label {
                Some(l) => cfg.out.join(l).join(&names[ei]),
                None => cfg.out.join(&names[ei]),
            };
            jobs.push((vi, entry.clone(), run_cfg, name, dir));
        }
    }

    let results: Vec<(String, RunOutcome, Vec<sigma_core::TraceRecord>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(vi, entry, run_cfg, name, dir)| {
                let problem = &problems[*vi];
                let attempt = resolve_params(run_cfg, problem, entry).and_then(|params| {
                    let result = run(problem, &params)?;
                    let outcome = write_run(dir, run_cfg, problem, entry.kind, params, &result, name)?;
                    Ok((outcome, result.trace))
                });
                match attempt {
                    Ok((outcome, trace)) => (name.clone(), outcome, trace),
                    Err(e) => (name.clone(), RunOutcome::failed(name, &e), Vec::new()),
                }
            })
            .collect()
    });

    let runs: Vec<(String, Vec<sigma_core::TraceRecord>)> =
        results.iter().map(|(n, _, t)| (n.clone(), t.clone())).collect();
    output::write_comparison(&cfg.out.join("comparison.csv"), &runs)?;
    let outcomes: Vec<RunOutcome> = results.into_iter().map(|(_, o, _)| o).collect();
    let title = format!("Benchmark: {} model", cfg.model_kind()?);
    std::fs::write(cfg.out.join("summary.md"), output::markdown_table(&title, &outcomes))?;
    if cfg.bench.gnuplot {
        let solver_names: Vec<String> = runs.iter().map(|(n, _)| n.clone()).collect();
        std::fs::write(cfg.out.join("comparison.gp"), output::gnuplot_script(&solver_names))?;
    }
    for o in &outcomes {
        eprintln!("{}: {:?} after {} iterations, grad norm {:.3e}", o.solver, o.status, o.iterations, o.grad_norm);
    }
    Ok(BenchReport { outcomes })
}

#[derive(Debug, Clone, clap::Args)]
pub struct DatagenArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long = "N")]
    pub n_features: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 100.0)]
    pub gap: f64,
    /// Label model: gaussian, poisson or logistic.
    #[arg(long, default_value = "gaussian")]
    pub labels: GlmKind,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sigma-data")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct Meta {
    m: usize,
    #[serde(rename = "N")]
    n_features: usize,
    p: usize,
    gap: f64,
    seed: u64,
    labels: GlmKind,
    noise: f64,
    file: String,
    prescribed_singular_values: Vec<f64>,
    singular_values: Vec<f64>,
    x_true: Vec<f64>,
}

pub fn cmd_datagen(args: &DatagenArgs) -> Result<PathBuf> {
    let spec = SvdGapSpec { m: args.m, n_features: args.n_features, p: args.p, gap: args.gap };
    let prescribed = prescribed_singular_values(&spec)?;
    if !(args.noise >= 0.0) {
        bail!("noise must be nonnegative, got {}", args.noise);
    }
    let (a, b, x_true) = synthesize(&spec, label_kind(args.labels, args.noise), args.seed)?;
    let mut realized: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    realized.sort_by(|x, y| y.total_cmp(x));
    output::create_dir(&args.out)?;
    let data_path = args.out.join("data.libsvm");
    write_libsvm(&Dataset::new(a, b)?, &data_path)?;
    let meta = Meta {
        m: args.m,
        n_features: args.n_features,
        p: args.p,
        gap: args.gap,
        seed: args.seed,
        labels: args.labels,
        noise: args.noise,
        file: "data.libsvm".into(),
        prescribed_singular_values: prescribed,
        singular_values: realized,
        x_true: x_true.iter().copied().collect(),
    };
    output::write_json(&args.out.join("meta.json"), &meta)?;
    Ok(data_path)
}
