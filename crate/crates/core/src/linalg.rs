//! Dense kernels shared by every other module: the symmetric matrix type,
//! SPD solves and the scalar functions `omega` / `omega_star` that appear in
//! the self-concordant sub-optimality bounds.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SigmaError};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Square matrix whose symmetry is exact: every constructor mirrors the
/// entries so that `a[(i, j)] == a[(j, i)]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ) / 2`.
    pub fn from_matrix(mut m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(SigmaError::InvalidDimensions(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(Matrix::from_diagonal(&Vector::from_column_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// Eigenvalues in ascending order together with matching eigenvectors.
    pub fn eigen_ascending(&self) -> (Vec<f64>, Matrix) {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..self.order()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors =
            Matrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Solves `a x = rhs` through a Cholesky factorization.
///
/// If the factorization breaks down, it is retried once on
/// `a + shift I` with `shift = 1e-10 (1 + max diag)`.
pub fn spd_solve(a: &SymMatrix, rhs: &Vector) -> Result<Vector> {
    let n = a.order();
    if rhs.len() != n {
        return Err(SigmaError::InvalidDimensions(format!(
            "matrix order {n} does not match right-hand side length {}",
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    if let Some(chol) = a.as_matrix().clone().cholesky() {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let max_diag = a.diagonal().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = 1e-10 * (1.0 + max_diag.abs());
    let mut shifted = a.as_matrix().clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    match shifted.cholesky() {
        Some(chol) => {
            let x = chol.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                Ok(x)
            } else {
                Err(SigmaError::NotPositiveDefinite { order: n })
            }
        }
        None => Err(SigmaError::NotPositiveDefinite { order: n }),
    }
}

/// `ω(x) = x − log(1 + x)` for `x ≥ 0`.
pub fn omega(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(SigmaError::Domain(format!("omega needs x >= 0, got {x}")));
    }
    Ok(x - x.ln_1p())
}

/// `ω*(x) = −x − log(1 − x)` for `x ∈ [0, 1)`.
pub fn omega_star(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(SigmaError::Domain(format!("omega_star needs x in [0, 1), got {x}")));
    }
    Ok(-x - (-x).ln_1p())
}

/// Symmetric square root `H^{1/2}` of a PSD matrix (negative round-off
/// eigenvalues are clamped at zero).
pub fn sym_sqrt(h: &SymMatrix) -> SymMatrix {
    let (values, vectors) = h.eigen_ascending();
    let roots = Vector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt()));
    let m = &vectors * Matrix::from_diagonal(&roots) * vectors.transpose();
    SymMatrix::from_matrix(m).expect("square by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn solve_identity() {
        let x = spd_solve(&SymMatrix::identity(2), &v(&[3.0, 4.0])).unwrap();
        assert_eq!(x, v(&[3.0, 4.0]));
    }

    #[test]
    fn solve_diagonal() {
        let a = SymMatrix::from_diagonal(&[1.0, 4.0]);
        let x = spd_solve(&a, &v(&[1.0, 4.0])).unwrap();
        assert_relative_eq!(x, v(&[1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn solve_dense_two_by_two() {
        let a = SymMatrix::from_matrix(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let x = spd_solve(&a, &v(&[3.0, 3.0])).unwrap();
        assert_relative_eq!(x, v(&[1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn solve_rejects_indefinite_and_bad_shapes() {
        let a = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert_eq!(spd_solve(&a, &v(&[1.0, 1.0])), Err(SigmaError::NotPositiveDefinite { order: 2 }));
        assert!(matches!(spd_solve(&SymMatrix::identity(3), &v(&[1.0])), Err(SigmaError::InvalidDimensions(_))));
    }

    #[test]
    fn solve_recovers_with_shift_on_singular_psd() {
        // Rank-one PSD matrix: the shifted retry must succeed.
        let a = SymMatrix::from_matrix(Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        let x = spd_solve(&a, &v(&[1.0, 1.0])).unwrap();
        assert!(x.iter().all(|c| c.is_finite()));
        assert!((&*a * &x - v(&[1.0, 1.0])).norm() < 1e-6);
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(0.0).unwrap(), 0.0);
        assert_relative_eq!(omega(1.0).unwrap(), 0.306_852_819_440_054_7, epsilon = 1e-15);
        assert_relative_eq!(omega_star(0.5).unwrap(), 0.193_147_180_559_945_3, epsilon = 1e-15);
        assert!(omega(-0.1).is_err());
        assert!(omega_star(1.0).is_err());
        assert!(omega_star(-1e-3).is_err());
    }

    #[test]
    fn symmetrize_on_construction() {
        let s = SymMatrix::from_matrix(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 1.0])).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
        assert!(SymMatrix::from_matrix(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sqrt_squares_back() {
        let a = SymMatrix::from_matrix(Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let r = sym_sqrt(&a);
        assert_relative_eq!(&*r * &*r, a.as_matrix().clone(), epsilon = 1e-12);
    }
}
