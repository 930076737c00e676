//! Generalized linear model objectives with optional ℓ2 and pseudo-Huber
//! regularization.
//!
//! Every model is written as `Σ_i w · ℓ(a_iᵀx, b_i) + ξ2‖x‖² + ξ1 g(x)` where
//! the per-row weight `w` is `1/m` for the Gaussian and logistic models and
//! the self-concordance rescaling `M²/4` for the Poisson model (which keeps
//! the summed form). Second derivatives only ever enter through
//! `Σ_i w ℓ''(z_i) a_i a_iᵀ`, so the reduced Hessian on a coordinate set `S`
//! is assembled from the sliced rows `a_{i,S}` in `O(m n²)` without touching
//! the `N x N` Hessian.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::linalg::{Matrix, SymMatrix, Vector};
use crate::sampling::IndexSet;

/// Default pseudo-Huber smoothing parameter.
pub const DEFAULT_HUBER_C: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmKind {
    Gaussian,
    #[serde(alias = "poisson_identity")]
    Poisson,
    Logistic,
}

impl std::str::FromStr for GlmKind {
    type Err = SigmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "linear" | "least-squares" => Ok(GlmKind::Gaussian),
            "poisson" | "poisson-identity" | "poisson_identity" => Ok(GlmKind::Poisson),
            "logistic" => Ok(GlmKind::Logistic),
            other => Err(SigmaError::InvalidConfig(format!("unknown model kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for GlmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GlmKind::Gaussian => "gaussian",
            GlmKind::Poisson => "poisson",
            GlmKind::Logistic => "logistic",
        })
    }
}

/// Feature matrix (one data point per row) and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    a: Matrix,
    b: Vector,
}

impl Dataset {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(SigmaError::InvalidDimensions("dataset must be nonempty".into()));
        }
        if a.nrows() != b.len() {
            return Err(SigmaError::InvalidDimensions(format!("{} rows but {} responses", a.nrows(), b.len())));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(SigmaError::Domain("dataset contains non-finite values".into()));
        }
        Ok(Dataset { a, b })
    }

    /// Number of data points.
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Number of features.
    pub fn features(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn into_parts(self) -> (Matrix, Vector) {
        (self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Regularization {
    /// Weight of `‖x‖²`.
    pub xi2: f64,
    /// Weight of the pseudo-Huber term.
    pub xi1: f64,
    /// Pseudo-Huber smoothing.
    pub c: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization { xi2: 0.0, xi1: 0.0, c: DEFAULT_HUBER_C }
    }
}

impl Regularization {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn ridge(xi2: f64) -> Self {
        Regularization { xi2, ..Self::default() }
    }

    pub fn elastic(xi2: f64, xi1: f64) -> Self {
        Regularization { xi2, xi1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi2 >= 0.0) || !(self.xi1 >= 0.0) || !(self.c > 0.0) {
            return Err(SigmaError::InvalidConfig(format!(
                "regularization needs xi1, xi2 >= 0 and c > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    fn value(&self, x: &Vector) -> f64 {
        let mut v = self.xi2 * x.norm_squared();
        if self.xi1 > 0.0 {
            let c = self.c;
            v += self.xi1 * x.iter().map(|&t| (c * c + t * t).sqrt() - c).sum::<f64>();
        }
        v
    }

    /// `value(x + s) − value(x)` without cancellation.
    fn change(&self, x: &Vector, s: &Vector) -> f64 {
        let mut v = self.xi2 * (2.0 * x.dot(s) + s.norm_squared());
        if self.xi1 > 0.0 {
            let c2 = self.c * self.c;
            v += self.xi1
                * x.iter()
                    .zip(s.iter())
                    .map(|(&xi, &si)| {
                        let y = xi + si;
                        si * (2.0 * xi + si) / ((c2 + y * y).sqrt() + (c2 + xi * xi).sqrt())
                    })
                    .sum::<f64>();
        }
        v
    }

    fn grad_entry(&self, t: f64) -> f64 {
        let mut g = 2.0 * self.xi2 * t;
        if self.xi1 > 0.0 {
            g += self.xi1 * t / (self.c * self.c + t * t).sqrt();
        }
        g
    }

    fn hess_entry(&self, t: f64) -> f64 {
        let mut h = 2.0 * self.xi2;
        if self.xi1 > 0.0 {
            let c2 = self.c * self.c;
            h += self.xi1 * c2 / (c2 + t * t).powf(1.5);
        }
        h
    }
}

/// Objective restricted to the ray `x + td`.
#[derive(Debug, Clone)]
pub struct LineProbe<'a> {
    model: &'a ObjectiveModel,
    x: &'a Vector,
    d: &'a Vector,
    z: Vector,
    s: Vector,
}

impl LineProbe<'_> {
    /// Largest `t` keeping every Poisson margin positive (`+∞` otherwise).
    pub fn max_step(&self) -> f64 {
        if self.model.kind != GlmKind::Poisson {
            return f64::INFINITY;
        }
        self.z
            .iter()
            .zip(self.s.iter())
            .filter(|(_, &si)| si < 0.0)
            .map(|(&zi, &si)| -zi / si)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, t: f64) -> bool {
        self.model.kind != GlmKind::Poisson || self.z.iter().zip(self.s.iter()).all(|(&zi, &si)| zi + t * si > 0.0)
    }

    /// `f(x + td) − f(x)`, computed term by term so that tiny changes of a
    /// large objective keep their relative accuracy. `None` outside the
    /// domain.
    pub fn change(&self, t: f64) -> Option<f64> {
        if !self.is_feasible(t) {
            return None;
        }
        let m = self.model;
        let b = m.dataset.b();
        let data: f64 =
            self.z.iter().zip(self.s.iter()).zip(b.iter()).map(|((&zi, &si), &bi)| m.loss_change(zi, t * si, bi)).sum();
        Some(m.row_weight() * data + m.reg.change(self.x, &(self.d * t)))
    }
}

/// Feasibility of a point: `margin = min_i a_iᵀx` for the Poisson model and
/// `+∞` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainStatus {
    pub feasible: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub status: DomainStatus,
}

/// Rescaling `M²/4` with `M = 2√m · max_i 1/√b_i` that makes the Poisson
/// objective self-concordant with constant 2.
pub fn poisson_scale(b: &[f64], m: usize) -> Result<f64> {
    if b.is_empty() || m == 0 {
        return Err(SigmaError::Domain("poisson_scale needs at least one response".into()));
    }
    let mut max_inv = 0.0f64;
    for (i, &bi) in b.iter().enumerate() {
        if !(bi >= 1.0) || bi.fract() != 0.0 {
            return Err(SigmaError::Domain(format!("poisson responses must be integers >= 1, row {i} has {bi}")));
        }
        max_inv = max_inv.max(1.0 / bi.sqrt());
    }
    let big_m = 2.0 * (m as f64).sqrt() * max_inv;
    Ok(big_m * big_m / 4.0)
}

/// A GLM bound to its data and regularization. Immutable once built.
#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    kind: GlmKind,
    dataset: Dataset,
    reg: Regularization,
    scale: f64,
}

impl ObjectiveModel {
    /// Builds the model. Logistic labels in `{0, 1}` are mapped to
    /// `{-1, +1}`; Poisson responses must be integers `>= 1`.
    pub fn new(kind: GlmKind, dataset: Dataset, reg: Regularization) -> Result<Self> {
        reg.validate()?;
        let (a, mut b) = dataset.into_parts();
        let scale = match kind {
            GlmKind::Gaussian => 1.0,
            GlmKind::Logistic => {
                for (i, bi) in b.iter_mut().enumerate() {
                    if *bi == 0.0 {
                        *bi = -1.0;
                    } else if *bi != 1.0 && *bi != -1.0 {
                        return Err(SigmaError::Domain(format!(
                            "logistic labels must be in {{0, 1}} or {{-1, +1}}, row {i} has {bi}"
                        )));
                    }
                }
                1.0
            }
            GlmKind::Poisson => poisson_scale(b.as_slice(), a.nrows())?,
        };
        Ok(ObjectiveModel { kind, dataset: Dataset { a, b }, reg, scale })
    }

    pub fn kind(&self) -> GlmKind {
        self.kind
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn regularization(&self) -> &Regularization {
        &self.reg
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dataset.features()
    }

    pub fn rows(&self) -> usize {
        self.dataset.rows()
    }

    /// Weight multiplying each per-row loss.
    fn row_weight(&self) -> f64 {
        match self.kind {
            GlmKind::Gaussian | GlmKind::Logistic => self.scale / self.rows() as f64,
            GlmKind::Poisson => self.scale,
        }
    }

    /// Row weight rescaled so a uniform sample of `len` rows is unbiased.
    fn sample_factor(&self, len: usize) -> f64 {
        if len == self.rows() {
            self.row_weight()
        } else {
            self.row_weight() * self.rows() as f64 / len as f64
        }
    }

    fn check_len(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SigmaError::InvalidDimensions(format!(
                "point has length {}, model has {} features",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `z = A x`, checked against the Poisson domain.
    fn margins(&self, x: &Vector) -> Result<Vector> {
        self.check_len(x)?;
        let z = self.dataset.a() * x;
        if self.kind == GlmKind::Poisson {
            if let Some((row, &margin)) = z.iter().enumerate().find(|(_, &zi)| !(zi > 0.0)) {
                return Err(SigmaError::OutOfDomain { row, margin });
            }
        }
        Ok(z)
    }

    pub fn domain_status(&self, x: &Vector) -> DomainStatus {
        match self.kind {
            GlmKind::Poisson => {
                let margin = (self.dataset.a() * x).iter().copied().fold(f64::INFINITY, f64::min);
                DomainStatus { feasible: margin > 0.0, margin }
            }
            _ => DomainStatus { feasible: true, margin: f64::INFINITY },
        }
    }

    pub fn is_feasible(&self, x: &Vector) -> bool {
        x.len() == self.dim() && self.domain_status(x).feasible
    }

    fn loss(&self, z: f64, b: f64) -> f64 {
        match self.kind {
            GlmKind::Gaussian => 0.5 * (z - b) * (z - b),
            GlmKind::Logistic => softplus(-b * z),
            GlmKind::Poisson => z - b * z.ln(),
        }
    }

    fn loss_d1(&self, z: f64, b: f64) -> f64 {
        match self.kind {
            GlmKind::Gaussian => z - b,
            GlmKind::Logistic => -b * sigmoid(-b * z),
            GlmKind::Poisson => 1.0 - b / z,
        }
    }

    fn loss_d2(&self, z: f64, b: f64) -> f64 {
        match self.kind {
            GlmKind::Gaussian => 1.0,
            GlmKind::Logistic => {
                let e = (-(b * z).abs()).exp();
                b * b * e / ((1.0 + e) * (1.0 + e))
            }
            GlmKind::Poisson => b / (z * z),
        }
    }

    /// `loss(z + s) − loss(z)` without cancellation.
    fn loss_change(&self, z: f64, s: f64, b: f64) -> f64 {
        match self.kind {
            GlmKind::Gaussian => s * (z - b) + 0.5 * s * s,
            GlmKind::Poisson => s - b * (s / z).ln_1p(),
            GlmKind::Logistic => {
                let (u, v) = (-b * z, -b * s);
                if v > 30.0 {
                    softplus(u + v) - softplus(u)
                } else {
                    (sigmoid(u) * v.exp_m1()).ln_1p()
                }
            }
        }
    }

    /// Precomputes `A x` and `A d` so that `f(x + td) − f(x)` can be
    /// evaluated for many `t`.
    pub fn line<'a>(&'a self, x: &'a Vector, d: &'a Vector) -> Result<LineProbe<'a>> {
        let z = self.margins(x)?;
        self.check_len(d)?;
        let s = self.dataset.a() * d;
        Ok(LineProbe { model: self, x, d, z, s })
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        let z = self.margins(x)?;
        let b = self.dataset.b();
        let data: f64 = z.iter().zip(b.iter()).map(|(&zi, &bi)| self.loss(zi, bi)).sum();
        Ok(self.row_weight() * data + self.reg.value(x))
    }

    pub fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        let value = self.value(x)?;
        Ok(Evaluation { value, status: self.domain_status(x) })
    }

    /// Gradient; the unscaled gradient of the Poisson model is this divided
    /// by [`scale`](Self::scale) (regularizer terms aside).
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        let z = self.margins(x)?;
        Ok(self.gradient_from_margins(x, &z, None))
    }

    pub fn value_and_gradient(&self, x: &Vector) -> Result<(f64, Vector)> {
        let z = self.margins(x)?;
        let b = self.dataset.b();
        let data: f64 = z.iter().zip(b.iter()).map(|(&zi, &bi)| self.loss(zi, bi)).sum();
        let value = self.row_weight() * data + self.reg.value(x);
        Ok((value, self.gradient_from_margins(x, &z, None)))
    }

    /// Gradient of the data term estimated from a row sample (rescaled to be
    /// unbiased) plus the exact regularizer gradient.
    pub fn sampled_gradient(&self, x: &Vector, rows: &IndexSet) -> Result<Vector> {
        self.check_rows(rows)?;
        let z = self.margins(x)?;
        Ok(self.gradient_from_margins(x, &z, Some(rows)))
    }

    fn gradient_from_margins(&self, x: &Vector, z: &Vector, rows: Option<&IndexSet>) -> Vector {
        let a = self.dataset.a();
        let b = self.dataset.b();
        let m = self.rows();
        let mut r = Vector::zeros(m);
        let factor = match rows {
            None => {
                for i in 0..m {
                    r[i] = self.loss_d1(z[i], b[i]);
                }
                self.row_weight()
            }
            Some(rows) => {
                for i in rows.iter() {
                    r[i] = self.loss_d1(z[i], b[i]);
                }
                self.sample_factor(rows.len())
            }
        };
        let mut g = a.tr_mul(&r);
        g *= factor;
        for (gi, &xi) in g.iter_mut().zip(x.iter()) {
            *gi += self.reg.grad_entry(xi);
        }
        g
    }

    /// `R ∇f(x)`: the gradient restricted to the coordinates in `cols`.
    pub fn reduced_gradient(&self, x: &Vector, cols: &IndexSet) -> Result<Vector> {
        self.check_cols(cols)?;
        let g = self.gradient(x)?;
        Ok(Vector::from_iterator(cols.len(), cols.iter().map(|j| g[j])))
    }

    pub fn hessian(&self, x: &Vector) -> Result<SymMatrix> {
        self.reduced_hessian(x, &IndexSet::full(self.dim()), None)
    }

    /// Hessian of the data term from a row sample, regularizer exact.
    pub fn sampled_hessian(&self, x: &Vector, rows: &IndexSet) -> Result<SymMatrix> {
        self.reduced_hessian(x, &IndexSet::full(self.dim()), Some(rows))
    }

    /// `R ∇²f(x) P` for the coordinate operator given by `cols`, optionally
    /// averaging the data term over a row sample only.
    pub fn reduced_hessian(&self, x: &Vector, cols: &IndexSet, rows: Option<&IndexSet>) -> Result<SymMatrix> {
        self.check_cols(cols)?;
        if let Some(rows) = rows {
            self.check_rows(rows)?;
        }
        let z = self.margins(x)?;
        let a = self.dataset.a();
        let b = self.dataset.b();
        let m = self.rows();
        let all_rows;
        let (row_idx, factor) = match rows {
            Some(r) => (r.as_slice(), self.sample_factor(r.len())),
            None => {
                all_rows = (0..m).collect::<Vec<_>>();
                (all_rows.as_slice(), self.row_weight())
            }
        };
        let cols = cols.as_slice();
        let mut scaled = Matrix::zeros(row_idx.len(), cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            let col = a.column(j);
            let mut out = scaled.column_mut(jj);
            for (rr, &i) in row_idx.iter().enumerate() {
                out[rr] = col[i];
            }
        }
        for (rr, &i) in row_idx.iter().enumerate() {
            let w = (factor * self.loss_d2(z[i], b[i])).sqrt();
            scaled.row_mut(rr).scale_mut(w);
        }
        let mut q = scaled.tr_mul(&scaled);
        for (jj, &j) in cols.iter().enumerate() {
            q[(jj, jj)] += self.reg.hess_entry(x[j]);
        }
        SymMatrix::from_matrix(q)
    }

    fn check_cols(&self, cols: &IndexSet) -> Result<()> {
        if cols.universe() != self.dim() {
            return Err(SigmaError::InvalidDimensions(format!(
                "coordinate set over {} indices, model has {} features",
                cols.universe(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_rows(&self, rows: &IndexSet) -> Result<()> {
        if rows.universe() != self.rows() {
            return Err(SigmaError::InvalidDimensions(format!(
                "row sample over {} indices, dataset has {} rows",
                rows.universe(),
                self.rows()
            )));
        }
        Ok(())
    }

    /// Starting point inside the domain. Zero for the Gaussian and logistic
    /// models; for the Poisson model a multiple of the all-ones vector with
    /// every margin at least 1.
    /// Minimizes `Σ_i max(0, 1 − a_iᵀx)²` by damped Gauss-Newton on the
    /// violated rows; any point with zero residual has every margin `≥ 1`.
    fn hinge_feasible_point(&self) -> Option<Vector> {
        let a = self.dataset.a();
        let n = self.dim();
        let loss = |x: &Vector| (a * x).iter().map(|&z| (1.0 - z).max(0.0).powi(2)).sum::<f64>();
        let mut x = Vector::zeros(n);
        let mut fx = loss(&x);
        for _ in 0..200 {
            let z = a * &x;
            if z.min() > 0.0 {
                return Some(x);
            }
            let mut h = Matrix::identity(n, n) * 1e-10;
            let mut g = Vector::zeros(n);
            for (i, &zi) in z.iter().enumerate() {
                if zi < 1.0 {
                    let row = a.row(i).transpose();
                    h.ger(1.0, &row, &row, 1.0);
                    g.axpy(zi - 1.0, &row, 1.0);
                }
            }
            let d = -h.cholesky()?.solve(&g);
            let mut t = 1.0;
            loop {
                let trial = &x + &d * t;
                let ft = loss(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return None;
                }
            }
        }
        None
    }

    pub fn feasible_start(&self) -> Result<Vector> {
        let n = self.dim();
        if self.kind != GlmKind::Poisson {
            return Ok(Vector::zeros(n));
        }
        let sums = self.dataset.a() * Vector::from_element(n, 1.0);
        let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut x = if min > 0.0 {
            Vector::from_element(n, 1.0 / min)
        } else if max < 0.0 {
            Vector::from_element(n, 1.0 / max)
        } else {
            self.hinge_feasible_point().ok_or(SigmaError::NoFeasibleStart)?
        };
        // round-off can leave the smallest margin a hair under 1
        let margin = self.domain_status(&x).margin;
        if margin < 1.0 {
            x *= 1.0 / margin;
        }
        Ok(x)
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
