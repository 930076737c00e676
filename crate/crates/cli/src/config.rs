//! Run configuration: TOML file, flag overrides and problem construction.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sigma_core::{
    load_csv, load_libsvm, standardize, svd_gap_matrix, synth_labels, BaselineConfig, BaselineKind, CheckMode, Dataset,
    GlmKind, LabelKind, Matrix, ObjectiveModel, Regularization, SigmaConfig, SigmaRng, SvdGapSpec, Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sigma,
    Gd,
    Sgd,
    Newton,
    Subnewton,
    Newsamp,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Sigma => "sigma",
            SolverKind::Gd => "gd",
            SolverKind::Sgd => "sgd",
            SolverKind::Newton => "newton",
            SolverKind::Subnewton => "subnewton",
            SolverKind::Newsamp => "newsamp",
        }
    }

    pub fn baseline(&self) -> Option<BaselineKind> {
        match self {
            SolverKind::Sigma => None,
            SolverKind::Gd => Some(BaselineKind::Gd),
            SolverKind::Sgd => Some(BaselineKind::Sgd),
            SolverKind::Newton => Some(BaselineKind::Newton),
            SolverKind::Subnewton => Some(BaselineKind::SubNewton),
            SolverKind::Newsamp => Some(BaselineKind::NewSamp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

fn default_gap() -> f64 {
    100.0
}

fn default_noise() -> f64 {
    0.1
}

/// Synthetic SVD-gap design; labels follow the model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    pub m: usize,
    #[serde(rename = "N")]
    pub n_features: usize,
    pub p: usize,
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Label noise for the Gaussian and logistic models.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

impl SyntheticData {
    pub fn spec(&self) -> SvdGapSpec {
        SvdGapSpec { m: self.m, n_features: self.n_features, p: self.p, gap: self.gap }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Inferred from the extension when unset (`.csv` means CSV).
    pub format: Option<DataFormat>,
    pub features: Option<usize>,
    pub label_column: Option<usize>,
    pub standardize: bool,
    pub synthetic: Option<SyntheticData>,
}

/// Extra parameters of one bench entry, on top of the run's `[sigma]` or
/// `[baseline]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub name: Option<String>,
    pub kind: SolverKind,
    #[serde(flatten)]
    pub params: toml::Table,
}

impl SolverEntry {
    pub fn plain(kind: SolverKind) -> Self {
        SolverEntry { name: None, kind, params: toml::Table::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub solvers: Vec<SolverEntry>,
    /// Gap positions as fractions of N; needs synthetic data.
    pub p_list: Vec<f64>,
    pub gnuplot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<GlmKind>,
    pub seed: u64,
    pub out: PathBuf,
    pub solver: SolverKind,
    pub data: DataConfig,
    pub regularization: Regularization,
    pub sigma: SigmaConfig,
    pub baseline: BaselineConfig,
    pub bench: BenchConfig,
    /// Whether the coarse dimension was given; otherwise it defaults to N/2.
    #[serde(skip)]
    pub coarse_dim_set: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            seed: 0,
            out: PathBuf::from("sigma-out"),
            solver: SolverKind::Sigma,
            data: DataConfig::default(),
            regularization: Regularization::none(),
            sigma: SigmaConfig::default(),
            baseline: BaselineConfig::default(),
            bench: BenchConfig::default(),
            coarse_dim_set: false,
        }
    }
}

fn has_coarse_dim(table: &toml::Table) -> bool {
    table.get("sigma").and_then(|s| s.as_table()).is_some_and(|s| s.contains_key("n"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        let coarse_dim_set = has_coarse_dim(&table);
        let mut cfg: RunConfig = table.try_into()?;
        cfg.coarse_dim_set = coarse_dim_set;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config '{}'", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config '{}'", path.display()))
    }

    pub fn model_kind(&self) -> Result<GlmKind> {
        self.model.ok_or_else(|| anyhow!("no model given (set `model` or pass --model)"))
    }

    /// SIGMA parameters with defaults resolved against the problem size.
    pub fn sigma_for(&self, dim: usize, extra: Option<&toml::Table>) -> Result<SigmaConfig> {
        let mut cfg = self.sigma.clone();
        let mut n_set = self.coarse_dim_set;
        if let Some(extra) = extra.filter(|t| !t.is_empty()) {
            n_set |= extra.contains_key("n");
            cfg = merge(&cfg, extra)?;
        }
        if !n_set {
            cfg.n = (dim / 2).max(1);
        }
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Baseline parameters with defaults resolved against the problem size.
    pub fn baseline_for(
        &self,
        method: BaselineKind,
        rows: usize,
        dim: usize,
        extra: Option<&toml::Table>,
    ) -> Result<BaselineConfig> {
        let mut cfg = self.baseline.clone();
        if let Some(extra) = extra.filter(|t| !t.is_empty()) {
            cfg = merge(&cfg, extra)?;
        }
        cfg.method = method;
        cfg.seed = self.seed;
        if matches!(method, BaselineKind::SubNewton | BaselineKind::NewSamp) {
            cfg.rows = Some(cfg.resolved_rows(rows));
        }
        if method == BaselineKind::NewSamp {
            cfg.rank = Some(cfg.resolved_rank(dim));
        }
        cfg.validate(rows, dim)?;
        Ok(cfg)
    }
}

/// Overlays `extra` on the serialized form of `base`.
fn merge<T: Serialize + for<'de> Deserialize<'de>>(base: &T, extra: &toml::Table) -> Result<T> {
    let mut table = toml::Table::try_from(base)?;
    for (k, v) in extra {
        table.insert(k.clone(), v.clone());
    }
    Ok(table.try_into()?)
}

/// Flags shared by `solve` and `bench`; each one overrides the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian, logistic or poisson.
    #[arg(long)]
    pub model: Option<GlmKind>,
    /// Data file path, or `synthetic`.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    /// Number of features when loading a file (defaults to the largest index).
    #[arg(long)]
    pub features: Option<usize>,
    /// Zero-based CSV label column (default: last).
    #[arg(long)]
    pub label_column: Option<usize>,
    #[arg(long)]
    pub standardize: bool,
    /// Synthetic rows.
    #[arg(long)]
    pub m: Option<usize>,
    /// Synthetic features.
    #[arg(long = "N")]
    pub n_features: Option<usize>,
    /// Synthetic gap position.
    #[arg(long)]
    pub p: Option<usize>,
    /// Ratio between the two singular value bands.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Label noise level for synthetic data.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// Coarse dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Coarse-vs-fine ratio threshold.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Coarse decrement floor.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Stop when the squared decrement is at most this.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Growth factor of the Poisson feasible step.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// always-coarse, full-decrement, euclidean-proxy or nu-only.
    #[arg(long)]
    pub check_mode: Option<CheckMode>,
    /// Row sample size (sub-sampled SIGMA, SubNewton, NewSamp).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Also stop once the gradient norm is at most this.
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Pseudo-Huber weight.
    #[arg(long)]
    pub xi1: Option<f64>,
    /// Squared l2 weight.
    #[arg(long)]
    pub xi2: Option<f64>,
    #[arg(long)]
    pub huber_c: Option<f64>,
    /// SGD base step.
    #[arg(long)]
    pub sgd_t: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// NewSamp retained rank.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub max_seconds: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if self.model.is_some() {
            cfg.model = self.model;
        }
        match self.data.as_deref() {
            Some("synthetic") => cfg.data.path = None,
            Some(path) => {
                cfg.data.path = Some(PathBuf::from(path));
                cfg.data.synthetic = None;
            }
            None => {}
        }
        if self.format.is_some() {
            cfg.data.format = self.format;
        }
        if self.features.is_some() {
            cfg.data.features = self.features;
        }
        if self.label_column.is_some() {
            cfg.data.label_column = self.label_column;
        }
        cfg.data.standardize |= self.standardize;

        let synth_flags = self.m.is_some() || self.n_features.is_some() || self.p.is_some();
        if self.data.as_deref() == Some("synthetic") || (synth_flags && cfg.data.path.is_none()) {
            let current = cfg.data.synthetic.clone();
            let pick = |flag: Option<usize>, old: Option<usize>, what: &str| {
                flag.or(old).ok_or_else(|| anyhow!("synthetic data needs --{what}"))
            };
            let synthetic = SyntheticData {
                m: pick(self.m, current.as_ref().map(|s| s.m), "m")?,
                n_features: pick(self.n_features, current.as_ref().map(|s| s.n_features), "N")?,
                p: pick(self.p, current.as_ref().map(|s| s.p), "p")?,
                gap: self.gap.or(current.as_ref().map(|s| s.gap)).unwrap_or_else(default_gap),
                noise: self.noise.or(current.as_ref().map(|s| s.noise)).unwrap_or_else(default_noise),
            };
            cfg.data.synthetic = Some(synthetic);
        } else if let Some(s) = cfg.data.synthetic.as_mut() {
            set(&mut s.gap, self.gap);
            set(&mut s.noise, self.noise);
        }

        if let Some(solver) = self.solver {
            cfg.solver = solver;
        }
        if let Some(n) = self.n {
            cfg.sigma.n = n;
            cfg.coarse_dim_set = true;
        }
        let (s, b) = (&mut cfg.sigma, &mut cfg.baseline);
        set(&mut s.mu, self.mu);
        set(&mut s.nu, self.nu);
        set(&mut s.epsilon, self.epsilon);
        set(&mut b.epsilon, self.epsilon);
        set(&mut s.alpha, self.alpha);
        set(&mut b.alpha, self.alpha);
        set(&mut s.beta, self.beta);
        set(&mut b.beta, self.beta);
        set(&mut s.zeta, self.zeta);
        set(&mut b.zeta, self.zeta);
        set(&mut s.check_mode, self.check_mode);
        if self.rows.is_some() {
            s.row_sample = self.rows;
            b.rows = self.rows;
        }
        if self.grad_tol.is_some() {
            s.grad_tol = self.grad_tol;
            b.grad_tol = self.grad_tol;
        }
        set(&mut s.max_iter, self.max_iter);
        set(&mut b.max_iter, self.max_iter);
        set(&mut s.max_seconds, self.max_seconds);
        set(&mut b.max_seconds, self.max_seconds);
        set(&mut b.sgd_t, self.sgd_t);
        set(&mut b.batch, self.batch);
        if self.rank.is_some() {
            b.rank = self.rank;
        }
        let r = &mut cfg.regularization;
        set(&mut r.xi1, self.xi1);
        set(&mut r.xi2, self.xi2);
        set(&mut r.c, self.huber_c);
        set(&mut cfg.seed, self.seed);
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(())
    }
}

/// A model ready to solve, with its starting point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ObjectiveModel,
    pub x0: Vector,
    pub x_true: Option<Vector>,
    pub source: String,
}

/// Label synthesis matching a model kind.
pub fn label_kind(kind: GlmKind, noise: f64) -> LabelKind {
    match kind {
        GlmKind::Gaussian => LabelKind::GaussianNoise { sigma: noise },
        GlmKind::Poisson => LabelKind::PoissonCounts,
        GlmKind::Logistic => LabelKind::LogisticSigns { sigma: noise },
    }
}

/// Synthetic design and labels. The data stream is separate from the
/// solver's so that changing solver settings never changes the data.
pub fn synthesize(spec: &SvdGapSpec, labels: LabelKind, seed: u64) -> Result<(Matrix, Vector, Vector)> {
    let mut rng = SigmaRng::with_stream(seed, 1);
    let a = svd_gap_matrix(spec, &mut rng)?;
    let out = synth_labels(a, labels, &mut rng)?;
    Ok((out.a, out.b, out.x_true))
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let kind = cfg.model_kind()?;
    cfg.regularization.validate()?;
    let (dataset, x_true, source) = match (&cfg.data.path, &cfg.data.synthetic) {
        (Some(_), Some(_)) => bail!("give exactly one data source: a file path or a synthetic spec, not both"),
        (None, None) => bail!("no data source (pass --data <path> or --data synthetic)"),
        (Some(path), None) => {
            if !path.exists() {
                bail!("data file '{}' not found", path.display());
            }
            let format = cfg.data.format.unwrap_or_else(|| {
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    DataFormat::Csv
                } else {
                    DataFormat::Libsvm
                }
            });
            let ds = match format {
                DataFormat::Libsvm => load_libsvm(path, cfg.data.features),
                DataFormat::Csv => load_csv(path, cfg.data.label_column),
            }
            .with_context(|| format!("loading '{}'", path.display()))?;
            (ds, None, path.display().to_string())
        }
        (None, Some(s)) => {
            let (a, b, x_true) = synthesize(&s.spec(), label_kind(kind, s.noise), cfg.seed)?;
            let source = format!("synthetic(m={}, N={}, p={}, gap={})", s.m, s.n_features, s.p, s.gap);
            (Dataset::new(a, b)?, Some(x_true), source)
        }
    };
    let dataset = if cfg.data.standardize { standardize(&dataset)?.0 } else { dataset };
    let model = ObjectiveModel::new(kind, dataset, cfg.regularization)?;
    let x0 = match model.feasible_start() {
        Ok(x0) => x0,
        Err(e) => match &x_true {
            Some(x) if model.is_feasible(&(x * 0.5)) => x * 0.5,
            _ => return Err(e.into()),
        },
    };
    Ok(Problem { model, x0, x_true, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_config() {
        let cfg = RunConfig::from_toml(
            r#"
            model = "poisson"
            seed = 4
            [data.synthetic]
            m = 20
            N = 10
            p = 2
            [regularization]
            xi2 = 1e-6
            [sigma]
            n = 5
            check_mode = "always_coarse"
            [[bench.solvers]]
            kind = "sigma"
            n = 3
            [[bench.solvers]]
            kind = "gd"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model, Some(GlmKind::Poisson));
        assert!(cfg.coarse_dim_set);
        assert_eq!(cfg.data.synthetic.as_ref().unwrap().gap, 100.0);
        assert_eq!(cfg.regularization.xi2, 1e-6);
        assert_eq!(cfg.bench.solvers.len(), 2);
        let sigma = cfg.sigma_for(10, Some(&cfg.bench.solvers[0].params)).unwrap();
        assert_eq!((sigma.n, sigma.seed), (3, 4));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("modle = \"gaussian\"").is_err());
        assert!(RunConfig::from_toml("[sigma]\nmuu = 0.3").is_err());
    }

    #[test]
    fn coarse_dim_defaults_to_half() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.sigma_for(50, None).unwrap().n, 25);
        assert_eq!(cfg.sigma_for(1, None).unwrap().n, 1);
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_toml("model = \"gaussian\"\n[data]\npath = \"x.libsvm\"").unwrap();
        let args = RunArgs {
            data: Some("synthetic".into()),
            m: Some(10),
            n_features: Some(5),
            p: Some(1),
            n: Some(2),
            seed: Some(9),
            ..RunArgs::default()
        };
        args.apply(&mut cfg).unwrap();
        assert!(cfg.data.path.is_none());
        assert_eq!(cfg.data.synthetic.as_ref().unwrap().m, 10);
        assert_eq!((cfg.sigma.n, cfg.seed), (2, 9));
    }

    #[test]
    fn both_sources_rejected() {
        let mut cfg =
            RunConfig::from_toml("model = \"gaussian\"\n[data]\npath = \"x\"\n[data.synthetic]\nm = 3\nN = 2\np = 1")
                .unwrap();
        assert!(build_problem(&cfg).is_err());
        cfg.data.path = None;
        assert!(build_problem(&cfg).is_ok());
    }
}
