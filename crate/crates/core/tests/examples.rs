//! Worked examples checked against independent oracles.

use approx::assert_relative_eq;
use sigma_core::coarse::newton_direction;
use sigma_core::sampling::gaussian_matrix;
use sigma_core::*;

/// Consistent least squares `b = A x*`, so the optimal value is zero.
fn least_squares(m: usize, dim: usize, seed: u64) -> (ObjectiveModel, Matrix, Vector) {
    let mut rng = SigmaRng::new(seed);
    let a = gaussian_matrix(m, dim, &mut rng);
    let x_star = Vector::from_fn(dim, |_, _| rng.normal());
    let b = &a * x_star;
    let model =
        ObjectiveModel::new(GlmKind::Gaussian, Dataset::new(a.clone(), b.clone()).unwrap(), Regularization::none())
            .unwrap();
    (model, a, b)
}

/// Plain gradient descent on `(1/2m)‖Ax − b‖²` with step `1/L`, written
/// without any solver machinery.
fn gd_oracle(a: &Matrix, b: &Vector, iters: usize) -> Vector {
    let m = a.nrows() as f64;
    let ata = a.transpose() * a / m;
    let atb = a.transpose() * b / m;
    let lipschitz = ata.symmetric_eigenvalues().max();
    let mut x = Vector::zeros(a.ncols());
    for _ in 0..iters {
        let g = &ata * &x - &atb;
        x -= g / lipschitz;
    }
    x
}

#[test]
fn coarse_only_quadratic_matches_gradient_descent_oracle() {
    let (model, a, b) = least_squares(80, 50, 3);
    let oracle = gd_oracle(&a, &b, 40_000);
    let cfg = SigmaConfig {
        n: 10,
        check_mode: CheckMode::AlwaysCoarse,
        epsilon: 1e-300,
        grad_tol: Some(1e-8),
        max_iter: 5000,
        seed: 3,
        ..SigmaConfig::default()
    };
    let r = sigma_solve(&model, &Vector::zeros(50), &cfg).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(r.final_record().unwrap().grad_norm <= 1e-8);
    for w in r.trace.windows(2) {
        assert!(w[1].f < w[0].f, "iteration {} did not decrease f", w[0].iter);
    }
    assert_relative_eq!(r.x_final, oracle, epsilon = 1e-6);
}

#[test]
fn newsamp_full_rank_reconstructs_hessian() {
    let (model, _, _) = least_squares(30, 6, 4);
    let model = ObjectiveModel::new(GlmKind::Gaussian, model.dataset().clone(), Regularization::ridge(0.1)).unwrap();
    let x = Vector::from_element(6, 0.3);
    let exact = model.hessian(&x).unwrap();
    let approx = newsamp_hessian(&model, &x, &IndexSet::full(30), 5).unwrap();
    assert_relative_eq!(approx.as_matrix().clone(), exact.as_matrix().clone(), epsilon = 1e-8);
}

#[test]
fn newsamp_rank_zero_is_scaled_identity() {
    let (model, _, _) = least_squares(30, 5, 5);
    let x = Vector::zeros(5);
    let exact = model.hessian(&x).unwrap();
    let top = exact.as_matrix().clone().symmetric_eigenvalues().max();
    let approx = newsamp_hessian(&model, &x, &IndexSet::full(30), 0).unwrap();
    assert_relative_eq!(approx.as_matrix().clone(), Matrix::identity(5, 5) * top, epsilon = 1e-10 * top);
}

#[test]
fn gram_eigenvalues_are_squared_singular_values() {
    let spec = SvdGapSpec { m: 40, n_features: 12, p: 3, gap: 100.0 };
    let sigma = prescribed_singular_values(&spec).unwrap();
    let a = svd_gap_matrix(&spec, &mut SigmaRng::new(8)).unwrap();
    let mut eig: Vec<f64> = (a.transpose() * &a).symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    for (e, s) in eig.iter().zip(&sigma) {
        assert!((e - s * s).abs() <= 1e-6 * s * s, "{e} vs {}", s * s);
    }
}

#[test]
fn noiseless_labels_are_recovered_by_the_solver() {
    let spec = SvdGapSpec { m: 60, n_features: 10, p: 10, gap: 2.0 };
    let mut rng = SigmaRng::new(9);
    let a = svd_gap_matrix(&spec, &mut rng).unwrap();
    let labels = synth_labels(a, LabelKind::GaussianNoise { sigma: 0.0 }, &mut rng).unwrap();
    let model =
        ObjectiveModel::new(GlmKind::Gaussian, Dataset::new(labels.a, labels.b).unwrap(), Regularization::none())
            .unwrap();
    let r = sigma_solve(&model, &Vector::zeros(10), &SigmaConfig::with_coarse_dim(10)).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert_relative_eq!(r.x_final, labels.x_true, epsilon = 1e-8);
}

#[test]
fn every_baseline_reduces_a_logistic_objective() {
    let mut rng = SigmaRng::new(10);
    let a = gaussian_matrix(120, 8, &mut rng);
    let b = Vector::from_fn(120, |i, _| if (a.row(i).sum() + 0.3 * rng.normal()) > 0.0 { 1.0 } else { 0.0 });
    let model =
        ObjectiveModel::new(GlmKind::Logistic, Dataset::new(a, b).unwrap(), Regularization::ridge(1e-2)).unwrap();
    let x0 = Vector::zeros(8);
    let f0 = model.value(&x0).unwrap();
    let newton = newton_direction(&model, &x0).unwrap();
    assert!(newton.lambda > 0.0);
    for kind in
        [BaselineKind::Gd, BaselineKind::Sgd, BaselineKind::Newton, BaselineKind::SubNewton, BaselineKind::NewSamp]
    {
        let cfg = BaselineConfig { max_iter: 300, seed: 1, ..BaselineConfig::for_method(kind) };
        let r = baseline_solve(&model, &x0, &cfg).unwrap();
        assert_ne!(r.status, SolveStatus::Error, "{kind}: {:?}", r.message);
        assert!(r.final_record().unwrap().f < f0, "{kind} made no progress");
        if matches!(kind, BaselineKind::Newton | BaselineKind::SubNewton) {
            assert_eq!(r.status, SolveStatus::Converged, "{kind}");
        }
    }
}

#[test]
fn csv_to_standardized_solve_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let mut text = String::from("f1,f2,y\n");
    for i in 0..20 {
        let (u, v) = (i as f64, (i * i % 7) as f64);
        text.push_str(&format!("{u},{v},{}\n", 2.0 * u - v + 1.0));
    }
    std::fs::write(&path, text).unwrap();
    let ds = load_csv(&path, None).unwrap();
    let (std_ds, _) = standardize(&ds).unwrap();
    for j in 0..2 {
        assert!(std_ds.a().column(j).mean().abs() < 1e-12);
    }
    let model = ObjectiveModel::new(GlmKind::Gaussian, std_ds, Regularization::none()).unwrap();
    let r = sigma_solve(&model, &Vector::zeros(2), &SigmaConfig::with_coarse_dim(1)).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
}
