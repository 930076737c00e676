//! Fixtures shared by the criterion benchmarks.

use sigma_core::{
    svd_gap_matrix, synth_labels, Dataset, GlmKind, LabelKind, ObjectiveModel, Regularization, SigmaRng, SvdGapSpec,
};

/// Logistic model on an SVD-gap design of size `m x n_features`.
pub fn logistic_problem(m: usize, n_features: usize, seed: u64) -> ObjectiveModel {
    let spec = SvdGapSpec { m, n_features, p: (n_features / 5).max(1), gap: 100.0 };
    let mut rng = SigmaRng::new(seed);
    let a = svd_gap_matrix(&spec, &mut rng).expect("valid spec");
    let labels = synth_labels(a, LabelKind::LogisticSigns { sigma: 0.1 }, &mut rng).expect("finite design");
    let ds = Dataset::new(labels.a, labels.b).expect("consistent shapes");
    ObjectiveModel::new(GlmKind::Logistic, ds, Regularization::ridge(1e-4)).expect("valid model")
}
