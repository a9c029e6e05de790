//! Domain types shared by all solvers.
//!
//! A sample is a dense real matrix, optionally paired with a 0-1 mask of
//! observed entries. Dictionaries store atoms as columns of the left
//! (row-mode) and right (column-mode) factor. Codes come in two shapes:
//! a low-rank pair `(Y, W)` with inner dimension `k`, or a single
//! full-rank matrix `Z` for the unrestricted-rank baseline.

use nalgebra::DMatrix;

use crate::error::{AodlError, Result};

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// One N×M data matrix with an optional observation mask (1 = observed).
///
/// Entries of `values` at masked-out positions are conventionally stored
/// as 0; the masked objectives never read them.
#[derive(Debug, Clone)]
pub struct DataSample {
    values: DMatrix<f64>,
    mask: Option<DMatrix<f64>>,
}

impl DataSample {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&values) {
            return Err(AodlError::InvalidInput(
                "sample contains non-finite entries".into(),
            ));
        }
        Ok(Self { values, mask: None })
    }

    pub fn with_mask(values: DMatrix<f64>, mask: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&values) {
            return Err(AodlError::InvalidInput(
                "sample contains non-finite entries".into(),
            ));
        }
        if mask.shape() != values.shape() {
            return Err(AodlError::ShapeMismatch(format!(
                "mask is {}x{} but sample is {}x{}",
                mask.nrows(),
                mask.ncols(),
                values.nrows(),
                values.ncols()
            )));
        }
        if mask.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(AodlError::InvalidInput(
                "mask entries must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            values,
            mask: Some(mask),
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> Option<&DMatrix<f64>> {
        self.mask.as_ref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// An ordered collection of samples with uniform shape, S ≥ 1.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<DataSample>,
}

impl Dataset {
    pub fn new(samples: Vec<DataSample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| AodlError::InvalidInput("dataset must contain at least one sample".into()))?;
        let (n, m) = (first.nrows(), first.ncols());
        for (s, sample) in samples.iter().enumerate() {
            if sample.nrows() != n || sample.ncols() != m {
                return Err(AodlError::ShapeMismatch(format!(
                    "sample {} is {}x{} but sample 0 is {}x{}",
                    s,
                    sample.nrows(),
                    sample.ncols(),
                    n,
                    m
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[DataSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nrows(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.samples[0].ncols()
    }

    /// True when every sample carries a mask.
    pub fn all_masked(&self) -> bool {
        self.samples.iter().all(|s| s.mask().is_some())
    }

    /// A dataset with the first `count` samples.
    pub fn head(&self, count: usize) -> Result<Dataset> {
        if count == 0 || count > self.len() {
            return Err(AodlError::InvalidInput(format!(
                "cannot take {} of {} samples",
                count,
                self.len()
            )));
        }
        Dataset::new(self.samples[..count].to_vec())
    }
}

/// Left (N×P) and right (M×Q) dictionaries; atoms are columns.
#[derive(Debug, Clone)]
pub struct DictionaryPair {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl DictionaryPair {
    /// Builds a pair, requiring finite entries and unit-norm atoms
    /// (within 1e-10).
    pub fn new(left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&left) || !all_finite(&right) {
            return Err(AodlError::InvalidInput(
                "dictionary contains non-finite entries".into(),
            ));
        }
        for (name, m) in [("left", &left), ("right", &right)] {
            for j in 0..m.ncols() {
                let norm = m.column(j).norm();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(AodlError::InvalidInput(format!(
                        "{name} atom {j} has norm {norm}, expected 1"
                    )));
                }
            }
        }
        Ok(Self { left, right })
    }

    /// Builds a pair normalizing every atom to unit L2 norm first.
    /// Zero-norm atoms are rejected.
    pub fn new_normalized(mut left: DMatrix<f64>, mut right: DMatrix<f64>) -> Result<Self> {
        for m in [&mut left, &mut right] {
            for j in 0..m.ncols() {
                let norm = m.column(j).norm();
                if norm < 1e-12 || !norm.is_finite() {
                    return Err(AodlError::InvalidInput(format!(
                        "atom {j} has near-zero or non-finite norm {norm}"
                    )));
                }
                m.column_mut(j).scale_mut(1.0 / norm);
            }
        }
        Self::new(left, right)
    }

    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Number of left atoms P.
    pub fn p(&self) -> usize {
        self.left.ncols()
    }

    /// Number of right atoms Q.
    pub fn q(&self) -> usize {
        self.right.ncols()
    }
}

/// Low-rank code pair for one sample: `Y` is P×k, `W` is k×Q.
#[derive(Debug, Clone)]
pub struct LowRankCode {
    y: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl LowRankCode {
    pub fn new(y: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        if y.ncols() != w.nrows() {
            return Err(AodlError::ShapeMismatch(format!(
                "Y has {} columns but W has {} rows",
                y.ncols(),
                w.nrows()
            )));
        }
        if !all_finite(&y) || !all_finite(&w) {
            return Err(AodlError::InvalidInput(
                "code contains non-finite entries".into(),
            ));
        }
        Ok(Self { y, w })
    }

    pub fn zeros(p: usize, k: usize, q: usize) -> Self {
        Self {
            y: DMatrix::zeros(p, k),
            w: DMatrix::zeros(k, q),
        }
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn rank(&self) -> usize {
        self.y.ncols()
    }

    /// Scales row `i` of Y by `factors[i]` (dictionary-atom compensation).
    pub(crate) fn scale_y_rows(&mut self, factors: &[f64]) {
        for (i, &f) in factors.iter().enumerate() {
            self.y.row_mut(i).scale_mut(f);
        }
    }

    /// Scales column `j` of W by `factors[j]`.
    pub(crate) fn scale_w_cols(&mut self, factors: &[f64]) {
        for (j, &f) in factors.iter().enumerate() {
            self.w.column_mut(j).scale_mut(f);
        }
    }

    /// The N×M reconstruction L·Y·W·Rᵀ.
    pub fn reconstruct(&self, dict: &DictionaryPair) -> DMatrix<f64> {
        dict.left() * &self.y * &self.w * dict.right().transpose()
    }
}

/// Full-rank code for the CMOD baseline: a single P×Q matrix.
#[derive(Debug, Clone)]
pub struct FullRankCode {
    z: DMatrix<f64>,
}

impl FullRankCode {
    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        if !all_finite(&z) {
            return Err(AodlError::InvalidInput(
                "code contains non-finite entries".into(),
            ));
        }
        Ok(Self { z })
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Self {
            z: DMatrix::zeros(p, q),
        }
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub(crate) fn scale_rows(&mut self, factors: &[f64]) {
        for (i, &f) in factors.iter().enumerate() {
            self.z.row_mut(i).scale_mut(f);
        }
    }

    pub(crate) fn scale_cols(&mut self, factors: &[f64]) {
        for (j, &f) in factors.iter().enumerate() {
            self.z.column_mut(j).scale_mut(f);
        }
    }

    /// The N×M reconstruction L·Z·Rᵀ.
    pub fn reconstruct(&self, dict: &DictionaryPair) -> DMatrix<f64> {
        dict.left() * &self.z * dict.right().transpose()
    }
}

/// Dictionary initialization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// I.i.d. standard-normal entries, atoms normalized to unit length.
    Random,
    /// Leading left singular vectors of the mode-1/mode-2 unfoldings.
    /// Requires P ≤ N and Q ≤ M.
    Hosvd,
}

/// Solver hyperparameters shared by all learners.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// L1 weight on Y (and on Z for the full-rank baseline).
    pub lambda1: f64,
    /// L1 weight on W.
    pub lambda2: f64,
    /// Masked-fit weight tying the data proxy to observed entries.
    pub lambda3: f64,
    /// ADMM penalty for the Y/U split.
    pub rho1: f64,
    /// ADMM penalty for the W/V split.
    pub rho2: f64,
    /// Encoding rank k.
    pub rank_k: usize,
    /// Number of left atoms P; defaults to N (square dictionary).
    pub dict_p: Option<usize>,
    /// Number of right atoms Q; defaults to M.
    pub dict_q: Option<usize>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Relative objective-change threshold terminating the outer loop.
    pub outer_tol: f64,
    /// Primal-residual threshold terminating the per-sample ADMM loop.
    pub inner_tol: f64,
    pub init: InitStrategy,
    pub seed: u64,
    /// Ridge added to the dictionary-update Gram inversions.
    pub ridge_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            lambda2: 0.1,
            lambda3: 10.0,
            rho1: 1.0,
            rho2: 1.0,
            rank_k: 3,
            dict_p: None,
            dict_q: None,
            outer_iters: 300,
            inner_iters: 200,
            outer_tol: 1e-6,
            inner_tol: 1e-6,
            init: InitStrategy::Random,
            seed: 0,
            ridge_eps: 1e-8,
        }
    }
}

impl SolverConfig {
    /// Resolved dictionary sizes for a dataset of shape N×M.
    pub fn dict_sizes(&self, n: usize, m: usize) -> (usize, usize) {
        (self.dict_p.unwrap_or(n), self.dict_q.unwrap_or(m))
    }

    /// Validates ranges against concrete dictionary sizes.
    pub fn validate(&self, p: usize, q: usize) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AodlError::InvalidConfig(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [("rho1", self.rho1), ("rho2", self.rho2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AodlError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        for (name, v) in [("outer_tol", self.outer_tol), ("inner_tol", self.inner_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AodlError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.ridge_eps < 0.0 || !self.ridge_eps.is_finite() {
            return Err(AodlError::InvalidConfig(format!(
                "ridge_eps must be finite and >= 0, got {}",
                self.ridge_eps
            )));
        }
        if self.rank_k == 0 {
            return Err(AodlError::InvalidConfig("rank_k must be positive".into()));
        }
        if self.rank_k > p.min(q) {
            return Err(AodlError::InvalidConfig(format!(
                "rank_k = {} exceeds min(P, Q) = {}",
                self.rank_k,
                p.min(q)
            )));
        }
        Ok(())
    }
}

/// Per-sample nonzero counts of the final codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeNnz {
    LowRank { y: usize, w: usize },
    FullRank { z: usize },
}

impl CodeNnz {
    pub fn total(&self) -> usize {
        match *self {
            CodeNnz::LowRank { y, w } => y + w,
            CodeNnz::FullRank { z } => z,
        }
    }
}

/// Convergence record of one solver run.
///
/// For outer (dictionary-learning) loops the traces hold one entry per
/// outer iteration; for single-sample encoders one entry per ADMM
/// iteration. `objective_trace` is the regularized objective,
/// `fit_trace` the plain data-fit term.
#[derive(Debug, Clone, Default)]
pub struct FitReport {
    pub objective_trace: Vec<f64>,
    pub fit_trace: Vec<f64>,
    pub rmse_trace: Vec<f64>,
    /// Average nonzero count per sample at each iteration.
    pub nnz_trace: Vec<f64>,
    /// Final data-fit term.
    pub data_fit: f64,
    pub nnz: Option<CodeNnz>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Final relative primal residual (proxy vs variable), encoders only.
    pub primal_residual: f64,
    /// Final relative dual residual (per-sweep proxy change), encoders only.
    pub dual_residual: f64,
    /// Non-fatal conditions, e.g. an all-zero mask.
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_sample() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(DataSample::new(m).is_err());
    }

    #[test]
    fn rejects_bad_mask() {
        let v = DMatrix::zeros(2, 2);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(DataSample::with_mask(v.clone(), bad).is_err());
        let short = DMatrix::zeros(1, 2);
        assert!(DataSample::with_mask(v, short).is_err());
    }

    #[test]
    fn dataset_requires_uniform_shape() {
        let a = DataSample::new(DMatrix::zeros(2, 3)).unwrap();
        let b = DataSample::new(DMatrix::zeros(3, 2)).unwrap();
        assert!(Dataset::new(vec![a.clone(), b]).is_err());
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![a]).is_ok());
    }

    #[test]
    fn dictionary_normalization() {
        let left = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 5.0]);
        let right = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let pair = DictionaryPair::new_normalized(left, right).unwrap();
        for j in 0..2 {
            assert!((pair.left().column(j).norm() - 1.0).abs() < 1e-12);
            assert!((pair.right().column(j).norm() - 1.0).abs() < 1e-12);
        }
        // Unnormalized atoms are rejected by the strict constructor.
        assert!(DictionaryPair::new(
            DMatrix::from_row_slice(2, 1, &[3.0, 0.0]),
            DMatrix::identity(2, 2)
        )
        .is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate(20, 30).is_ok());
        cfg.rank_k = 25;
        assert!(cfg.validate(20, 30).is_err());
        cfg.rank_k = 3;
        cfg.outer_tol = 0.0;
        assert!(cfg.validate(20, 30).is_err());
    }
}
