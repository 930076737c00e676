//! Dataset loaders, standardization and the synthetic SVD-gap generator.

mod csv;
mod libsvm;
mod standardize;
mod synth;

pub use self::csv::{load_csv, parse_csv};
pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm};
pub use standardize::{standardize, Standardization};
pub use synth::{prescribed_singular_values, svd_gap_matrix, synth_labels, LabelKind, SvdGapSpec, SyntheticLabels};

use crate::error::SigmaError;

pub(crate) fn read_text(path: &std::path::Path) -> Result<String, SigmaError> {
    std::fs::read_to_string(path).map_err(|e| SigmaError::Io { path: path.display().to_string(), msg: e.to_string() })
}
