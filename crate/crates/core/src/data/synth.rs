use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SigmaError};
use crate::linalg::{Matrix, Vector};
use crate::sampling::{haar_frame, SigmaRng};

/// Prescription for a matrix with a controlled singular-value gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdGapSpec {
    pub m: usize,
    #[serde(rename = "N")]
    pub n_features: usize,
    /// Number of singular values in the upper band.
    pub p: usize,
    pub gap: f64,
}

impl SvdGapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_features == 0 {
            return Err(SigmaError::InvalidDimensions("m and N must be positive".into()));
        }
        if self.p < 1 || self.p > self.n_features {
            return Err(SigmaError::InvalidDimensions(format!(
                "gap position p must lie in [1, {}], got {}",
                self.n_features, self.p
            )));
        }
        if !(self.gap > 1.0) {
            return Err(SigmaError::InvalidDimensions(format!("gap must exceed 1, got {}", self.gap)));
        }
        Ok(())
    }

    /// Number of nonzero singular values, `min(m, N)`.
    pub fn rank(&self) -> usize {
        self.m.min(self.n_features)
    }
}

fn descending_band(count: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| {
        if count == 1 {
            hi
        } else {
            let t = (count - 1 - i) as f64 / (count - 1) as f64;
            lo * (1.0 - t) + hi * t
        }
    })
}

/// Descending singular values: `p` evenly spaced in `[gap, 2 gap]`, then
/// `N − p` evenly spaced in `[0.1, 1]`, truncated to `min(m, N)`.
pub fn prescribed_singular_values(spec: &SvdGapSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(descending_band(spec.p, spec.gap, 2.0 * spec.gap)
        .chain(descending_band(spec.n_features - spec.p, 0.1, 1.0))
        .take(spec.rank())
        .collect())
}

/// `A = U Σ Vᵀ` with `U` (m×k) and `V` (N×k) Haar-distributed orthonormal
/// frames, `k = min(m, N)`.
pub fn svd_gap_matrix(spec: &SvdGapSpec, rng: &mut SigmaRng) -> Result<Matrix> {
    let sigma = prescribed_singular_values(spec)?;
    let k = sigma.len();
    let u = haar_frame(spec.m, k, rng)?;
    let v = haar_frame(spec.n_features, k, rng)?;
    let mut us = u;
    for (j, s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    Ok(us * v.transpose())
}

/// How responses are synthesized from a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelKind {
    /// `b = A x + σ ε`.
    GaussianNoise { sigma: f64 },
    /// `b_i = max(1, Poisson(a_iᵀx))` with every `a_iᵀx > 0`.
    PoissonCounts,
    /// `b_i = sign(a_iᵀx + σ ε)` in `{−1, +1}`.
    LogisticSigns { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLabels {
    /// Design matrix; for Poisson counts some rows may have been negated.
    pub a: Matrix,
    pub b: Vector,
    pub x_true: Vector,
}

/// Target mean intensity of synthesized Poisson counts.
const POISSON_MEAN_RATE: f64 = 10.0;
const POISSON_TRIES: usize = 100;

fn normal_vector(len: usize, rng: &mut SigmaRng) -> Vector {
    Vector::from_fn(len, |_, _| rng.normal())
}

/// Draws `x_true` and synthesizes responses for `a`.
///
/// For Poisson counts, up to 100 Gaussian draws are tried for a point with
/// all margins positive; failing that, rows with a negative margin are
/// negated, which keeps the singular values of `a`.
pub fn synth_labels(a: Matrix, kind: LabelKind, rng: &mut SigmaRng) -> Result<SyntheticLabels> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SigmaError::Domain("design matrix has non-finite entries".into()));
    }
    let dim = a.ncols();
    match kind {
        LabelKind::GaussianNoise { sigma } => {
            if !(sigma >= 0.0) {
                return Err(SigmaError::InvalidConfig(format!("noise level must be >= 0, got {sigma}")));
            }
            let x_true = normal_vector(dim, rng);
            let mut b = &a * &x_true;
            if sigma > 0.0 {
                b.iter_mut().for_each(|v| *v += sigma * rng.normal());
            }
            Ok(SyntheticLabels { a, b, x_true })
        }
        LabelKind::LogisticSigns { sigma } => {
            if !(sigma >= 0.0) {
                return Err(SigmaError::InvalidConfig(format!("noise level must be >= 0, got {sigma}")));
            }
            let x_true = normal_vector(dim, rng);
            let z = &a * &x_true;
            let b = z.map(|v| {
                let noisy = v + if sigma > 0.0 { sigma * rng.normal() } else { 0.0 };
                if noisy >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            });
            Ok(SyntheticLabels { a, b, x_true })
        }
        LabelKind::PoissonCounts => {
            let mut a = a;
            let mut found = None;
            for _ in 0..POISSON_TRIES {
                let x = normal_vector(dim, rng);
                if (&a * &x).iter().all(|&z| z > 0.0) {
                    found = Some(x);
                    break;
                }
            }
            let mut x_true = match found {
                Some(x) => x,
                None => {
                    let x = normal_vector(dim, rng);
                    let z = &a * &x;
                    for (i, &zi) in z.iter().enumerate() {
                        if zi == 0.0 {
                            return Err(SigmaError::InfeasibleSynthesis);
                        }
                        if zi < 0.0 {
                            a.row_mut(i).neg_mut();
                        }
                    }
                    x
                }
            };
            let z = &a * &x_true;
            x_true *= POISSON_MEAN_RATE / z.mean();
            let z = &a * &x_true;
            let mut b = Vector::zeros(z.len());
            for (bi, &rate) in b.iter_mut().zip(z.iter()) {
                let draw: f64 = Poisson::new(rate)
                    .map_err(|e| SigmaError::Domain(format!("Poisson rate {rate}: {e}")))?
                    .sample(rng.engine());
                *bi = draw.max(1.0);
            }
            Ok(SyntheticLabels { a, b, x_true })
        }
    }
}
