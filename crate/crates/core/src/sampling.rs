//! Seeded randomness: the caller-owned generator, coordinate index sets,
//! uniform sampling without replacement and Haar-distributed orthogonal
//! matrices.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SigmaError};
use crate::linalg::Matrix;

/// Counter-based seeded generator. Identical seed, stream and call sequence
/// give bit-identical outputs.
#[derive(Debug, Clone)]
pub struct SigmaRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SigmaRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for the same seed, used to hand parallel tasks
    /// their own generator.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SigmaRng { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.inner.get_stream()
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    pub(crate) fn engine(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

/// Strictly increasing set of indices drawn from `[0, universe)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(SigmaError::InvalidDimensions("index set must be nonempty".into()));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(SigmaError::InvalidDimensions("index set has duplicates".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(SigmaError::InvalidDimensions(format!(
                    "index {last} out of range for universe of size {universe}"
                )));
            }
        }
        Ok(IndexSet { indices, universe })
    }

    pub fn full(universe: usize) -> Self {
        IndexSet { indices: (0..universe).collect(), universe }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.universe
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

/// Uniform `n`-subset of `[0, universe)`, returned sorted.
pub fn sample_without_replacement(universe: usize, n: usize, rng: &mut SigmaRng) -> Result<IndexSet> {
    if n < 1 || n > universe {
        return Err(SigmaError::InvalidDimensions(format!("cannot sample {n} of {universe} indices")));
    }
    if n == universe {
        return Ok(IndexSet::full(universe));
    }
    let mut picked = index::sample(rng.engine(), universe, n).into_vec();
    picked.sort_unstable();
    Ok(IndexSet { indices: picked, universe })
}

/// Matrix with i.i.d. standard normal entries, filled column by column.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SigmaRng) -> Matrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// `rows x cols` matrix with orthonormal columns, distributed as the first
/// `cols` columns of a Haar-orthogonal `rows x rows` matrix.
///
/// QR of a standard Gaussian matrix, with each column of `Q` multiplied by
/// the sign of the matching diagonal entry of `R`.
pub fn haar_frame(rows: usize, cols: usize, rng: &mut SigmaRng) -> Result<Matrix> {
    if cols == 0 || cols > rows {
        return Err(SigmaError::InvalidDimensions(format!(
            "orthonormal frame needs 1 <= cols <= rows, got {rows}x{cols}"
        )));
    }
    let z = gaussian_matrix(rows, cols, rng);
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Haar-distributed `dim x dim` orthogonal matrix.
pub fn haar_orthogonal(dim: usize, rng: &mut SigmaRng) -> Result<Matrix> {
    haar_frame(dim, dim, rng)
}
