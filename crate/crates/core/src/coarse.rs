//! Two-level machinery: coordinate prolongation/restriction, the Galerkin
//! reduced system `Q_H = R ∇²f P`, the coarse direction with its
//! approximate decrement, and the Nyström view of the same projection.
//!
//! `P` is formed by `n` distinct columns of the `N x N` identity and
//! `R = Pᵀ`, so prolongation is a scatter and restriction a gather.

use crate::error::{Result, SigmaError};
use crate::linalg::{spd_solve, Matrix, SymMatrix, Vector};
use crate::objective::ObjectiveModel;
use crate::sampling::{sample_without_replacement, IndexSet, SigmaRng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseOperator {
    coords: IndexSet,
}

impl CoarseOperator {
    pub fn from_indices(coords: IndexSet) -> Self {
        CoarseOperator { coords }
    }

    pub fn full(fine_dim: usize) -> Self {
        CoarseOperator { coords: IndexSet::full(fine_dim) }
    }

    pub fn coords(&self) -> &IndexSet {
        &self.coords
    }

    pub fn fine_dim(&self) -> usize {
        self.coords.universe()
    }

    pub fn coarse_dim(&self) -> usize {
        self.coords.len()
    }

    /// Scatters a coarse vector into the fine space (zeros elsewhere).
    pub fn prolong(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.coarse_dim() {
            return Err(SigmaError::InvalidDimensions(format!(
                "prolong expects length {}, got {}",
                self.coarse_dim(),
                v.len()
            )));
        }
        let mut out = Vector::zeros(self.fine_dim());
        for (k, j) in self.coords.iter().enumerate() {
            out[j] = v[k];
        }
        Ok(out)
    }

    /// Gathers the selected coordinates of a fine vector.
    pub fn restrict(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.fine_dim() {
            return Err(SigmaError::InvalidDimensions(format!(
                "restrict expects length {}, got {}",
                self.fine_dim(),
                v.len()
            )));
        }
        Ok(Vector::from_iterator(self.coarse_dim(), self.coords.iter().map(|j| v[j])))
    }

    /// Dense `N x n` prolongation matrix, for diagnostics.
    pub fn prolongation_matrix(&self) -> Matrix {
        let mut p = Matrix::zeros(self.fine_dim(), self.coarse_dim());
        for (k, j) in self.coords.iter().enumerate() {
            p[(j, k)] = 1.0;
        }
        p
    }
}

/// Draws a fresh uniform coordinate operator of coarse dimension `n`.
pub fn build_operator(fine_dim: usize, n: usize, rng: &mut SigmaRng) -> Result<CoarseOperator> {
    Ok(CoarseOperator { coords: sample_without_replacement(fine_dim, n, rng)? })
}

/// Reduced Hessian and reduced gradient at the point where they were built.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub q: SymMatrix,
    pub g: Vector,
    pub x_ref: Vector,
}

pub fn galerkin_system(
    model: &ObjectiveModel,
    x: &Vector,
    op: &CoarseOperator,
    row_sample: Option<&IndexSet>,
) -> Result<GalerkinSystem> {
    let q = model.reduced_hessian(x, op.coords(), row_sample)?;
    let g = model.reduced_gradient(x, op.coords())?;
    Ok(GalerkinSystem { q, g, x_ref: x.clone() })
}

#[derive(Debug, Clone)]
pub struct CoarseStep {
    /// Solution of `Q_H d_H = −R∇f`.
    pub d_coarse: Vector,
    /// `P d_H`, the coarse direction in the fine space.
    pub d_fine: Vector,
    pub lambda_hat: f64,
}

pub fn coarse_direction(sys: &GalerkinSystem, op: &CoarseOperator) -> Result<CoarseStep> {
    if sys.g.len() != op.coarse_dim() || sys.q.order() != op.coarse_dim() {
        return Err(SigmaError::InvalidDimensions("galerkin system does not match the coarse operator".into()));
    }
    let d_coarse =
        if sys.g.iter().all(|&v| v == 0.0) { Vector::zeros(op.coarse_dim()) } else { spd_solve(&sys.q, &(-&sys.g))? };
    let lambda_hat = (-sys.g.dot(&d_coarse)).max(0.0).sqrt();
    let d_fine = op.prolong(&d_coarse)?;
    Ok(CoarseStep { d_coarse, d_fine, lambda_hat })
}

#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub d: Vector,
    pub lambda: f64,
}

/// Full Newton direction and Newton decrement; materializes the `N x N`
/// Hessian.
pub fn newton_direction(model: &ObjectiveModel, x: &Vector) -> Result<NewtonStep> {
    let g = model.gradient(x)?;
    let h = model.hessian(x)?;
    newton_from_parts(&h, &g)
}

pub(crate) fn newton_from_parts(h: &SymMatrix, g: &Vector) -> Result<NewtonStep> {
    let d = if g.iter().all(|&v| v == 0.0) { Vector::zeros(g.len()) } else { spd_solve(h, &(-g))? };
    let lambda = (-g.dot(&d)).max(0.0).sqrt();
    Ok(NewtonStep { d, lambda })
}

/// Naive Nyström approximation `H P (Pᵀ H P)⁻¹ Pᵀ H`, rank at most `n`.
pub fn nystrom_approximation(h: &SymMatrix, op: &CoarseOperator) -> Result<SymMatrix> {
    if h.order() != op.fine_dim() {
        return Err(SigmaError::InvalidDimensions(format!(
            "matrix order {} does not match fine dimension {}",
            h.order(),
            op.fine_dim()
        )));
    }
    let cols = op.coords().as_slice();
    // C = H P (N x n), W = Pᵀ H P (n x n)
    let c = h.select_columns(cols);
    let w = SymMatrix::from_matrix(c.select_rows(cols))?;
    let chol = w.as_matrix().clone().cholesky().ok_or(SigmaError::NotPositiveDefinite { order: w.order() })?;
    // W⁻¹ Cᵀ
    let sol = chol.solve(&c.transpose());
    SymMatrix::from_matrix(&c * sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decrements {
    pub lambda_hat: f64,
    pub lambda: Option<f64>,
}

/// Approximate decrement through the Galerkin system and, when asked for,
/// the Newton decrement.
pub fn decrements(
    model: &ObjectiveModel,
    x: &Vector,
    op: &CoarseOperator,
    row_sample: Option<&IndexSet>,
    want_newton: bool,
) -> Result<Decrements> {
    let sys = galerkin_system(model, x, op, row_sample)?;
    let lambda_hat = coarse_direction(&sys, op)?.lambda_hat;
    let lambda = if want_newton { Some(newton_direction(model, x)?.lambda) } else { None };
    Ok(Decrements { lambda_hat, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Dataset, GlmKind, Regularization};
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    /// f(x) = ½‖x‖²: Gaussian with A = √m I, b = 0.
    fn half_norm_model(dim: usize) -> ObjectiveModel {
        let a = Matrix::identity(dim, dim) * (dim as f64).sqrt();
        let d = Dataset::new(a, Vector::zeros(dim)).unwrap();
        ObjectiveModel::new(GlmKind::Gaussian, d, Regularization::none()).unwrap()
    }

    #[test]
    fn prolong_restrict() {
        let op = CoarseOperator::from_indices(IndexSet::new(vec![1], 2).unwrap());
        assert_eq!(op.prolong(&v(&[5.0])).unwrap(), v(&[0.0, 5.0]));
        assert_eq!(op.restrict(&v(&[3.0, 4.0])).unwrap(), v(&[4.0]));
        assert!(op.prolong(&v(&[1.0, 2.0])).is_err());
        assert!(op.restrict(&v(&[1.0])).is_err());

        let full = CoarseOperator::full(3);
        let x = v(&[1.0, -2.0, 3.0]);
        assert_eq!(full.prolong(&x).unwrap(), x);
        assert_eq!(full.restrict(&x).unwrap(), x);
    }

    #[test]
    fn build_operator_shapes() {
        let mut rng = SigmaRng::new(9);
        assert_eq!(build_operator(4, 4, &mut rng).unwrap(), CoarseOperator::full(4));
        assert_eq!(build_operator(6, 1, &mut rng).unwrap().coarse_dim(), 1);
        assert!(build_operator(3, 4, &mut rng).is_err());
    }

    #[test]
    fn quadratic_galerkin_system_is_identity() {
        let model = half_norm_model(5);
        let op = build_operator(5, 3, &mut SigmaRng::new(2)).unwrap();
        let sys = galerkin_system(&model, &v(&[1.0, 2.0, 3.0, 4.0, 5.0]), &op, None).unwrap();
        assert_relative_eq!(sys.q.as_matrix().clone(), Matrix::identity(3, 3), epsilon = 1e-14);
    }

    #[test]
    fn coarse_direction_hand_example() {
        let model = half_norm_model(2);
        let op = CoarseOperator::from_indices(IndexSet::new(vec![0], 2).unwrap());
        let sys = galerkin_system(&model, &v(&[3.0, 4.0]), &op, None).unwrap();
        let step = coarse_direction(&sys, &op).unwrap();
        assert_relative_eq!(step.d_fine, v(&[-3.0, 0.0]), epsilon = 1e-14);
        assert_relative_eq!(step.lambda_hat, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn coarse_direction_zero_gradient() {
        let model = half_norm_model(3);
        let op = CoarseOperator::from_indices(IndexSet::new(vec![2], 3).unwrap());
        let sys = galerkin_system(&model, &v(&[1.0, 1.0, 0.0]), &op, None).unwrap();
        let step = coarse_direction(&sys, &op).unwrap();
        assert_eq!(step.d_fine, Vector::zeros(3));
        assert_eq!(step.lambda_hat, 0.0);
    }

    #[test]
    fn newton_hand_example() {
        let h = SymMatrix::from_diagonal(&[1.0, 4.0]);
        let step = newton_from_parts(&h, &v(&[1.0, 4.0])).unwrap();
        assert_relative_eq!(step.d, v(&[-1.0, -1.0]), epsilon = 1e-14);
        assert_relative_eq!(step.lambda, 5f64.sqrt(), epsilon = 1e-14);
        let zero = newton_from_parts(&h, &Vector::zeros(2)).unwrap();
        assert_eq!((zero.d, zero.lambda), (Vector::zeros(2), 0.0));
    }

    #[test]
    fn newton_solves_quadratic_in_one_step() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0]);
        let b = v(&[1.0, -2.0, 0.5]);
        let model =
            ObjectiveModel::new(GlmKind::Gaussian, Dataset::new(a, b).unwrap(), Regularization::none()).unwrap();
        let x = v(&[4.0, -3.0]);
        let step = newton_direction(&model, &x).unwrap();
        let g = model.gradient(&(x + step.d)).unwrap();
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn nystrom_special_cases() {
        let h = SymMatrix::from_matrix(Matrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]))
            .unwrap();
        let full = nystrom_approximation(&h, &CoarseOperator::full(3)).unwrap();
        assert_relative_eq!(full.into_inner(), h.as_matrix().clone(), epsilon = 1e-12);

        let op = CoarseOperator::from_indices(IndexSet::new(vec![0, 2], 4).unwrap());
        let id = nystrom_approximation(&SymMatrix::identity(4), &op).unwrap();
        assert_eq!(id.into_inner(), Matrix::from_diagonal(&v(&[1.0, 0.0, 1.0, 0.0])));
    }

    #[test]
    fn full_operator_decrements_coincide() {
        let a = Matrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.2, -0.4]);
        let model = ObjectiveModel::new(
            GlmKind::Logistic,
            Dataset::new(a, v(&[1.0, -1.0, 1.0, -1.0])).unwrap(),
            Regularization::ridge(0.01),
        )
        .unwrap();
        let x = v(&[0.2, -0.3]);
        let d = decrements(&model, &x, &CoarseOperator::full(2), None, true).unwrap();
        assert_relative_eq!(d.lambda_hat, d.lambda.unwrap(), max_relative = 1e-12);
        let d = decrements(&model, &x, &CoarseOperator::full(2), None, false).unwrap();
        assert!(d.lambda.is_none());
    }
}
