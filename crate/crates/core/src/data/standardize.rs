use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::objective::Dataset;

/// Columns whose population standard deviation is below this are only
/// centered.
pub const MIN_STD: f64 = 1e-12;

/// Per-feature affine map `(a − mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    /// Population standard deviation, or 1 for near-constant columns.
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(a: &Matrix) -> Self {
        let m = a.nrows() as f64;
        let mut mean = Vec::with_capacity(a.ncols());
        let mut scale = Vec::with_capacity(a.ncols());
        for col in a.column_iter() {
            let mu = col.sum() / m;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m;
            let sd = var.sqrt();
            mean.push(mu);
            scale.push(if sd < MIN_STD { 1.0 } else { sd });
        }
        Standardization { mean, scale }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let mut a = ds.a().clone();
        for (j, mut col) in a.column_iter_mut().enumerate() {
            let (mu, sd) = (self.mean[j], self.scale[j]);
            col.apply(|v| *v = (*v - mu) / sd);
        }
        Dataset::new(a, ds.b().clone())
    }
}

/// Centers every feature and scales it to unit population standard
/// deviation (divisor `m`). Returns the transform for reuse on other data.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardization)> {
    let t = Standardization::fit(ds.a());
    Ok((t.apply(ds)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn ds(rows: usize, cols: usize, vals: &[f64]) -> Dataset {
        Dataset::new(Matrix::from_row_slice(rows, cols, vals), Vector::zeros(rows)).unwrap()
    }

    #[test]
    fn population_std() {
        let (out, t) = standardize(&ds(2, 1, &[0.0, 2.0])).unwrap();
        assert_eq!(out.a().as_slice(), &[-1.0, 1.0]);
        assert_eq!(t.mean, vec![1.0]);
        assert_eq!(t.scale, vec![1.0]);
    }

    #[test]
    fn constant_column_centered_only() {
        let (out, t) = standardize(&ds(3, 2, &[5.0, 1.0, 5.0, 2.0, 5.0, 3.0])).unwrap();
        assert_eq!(t.scale[0], 1.0);
        assert!(out.a().column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn idempotent() {
        let (once, _) = standardize(&ds(4, 2, &[1.0, 7.0, 2.0, -1.0, 3.0, 0.5, 10.0, 2.0])).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        assert!((once.a() - twice.a()).amax() <= 1e-12);
    }
}
