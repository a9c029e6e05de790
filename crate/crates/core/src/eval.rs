//! Metrics and theory tooling: reconstruction RMSE, code sizes, the
//! sparsity level κ*, dictionary-recovery F1, the generalization-bound
//! formula, and the train-size sweep experiment built on it.

use nalgebra::DMatrix;

use crate::dict::aodl;
use crate::error::{AodlError, Result};
use crate::lrsc::encode_dataset;
use crate::types::{Dataset, DictionaryPair, FullRankCode, LowRankCode, SolverConfig};

/// Per-dataset element-wise RMSE: the average over samples of
/// `sqrt(Σ_ij (X − X′)²_ij / |X_s|)`. With `restrict_to_mask`, the sum
/// and the count run only over entries selected by each truth sample's
/// mask.
pub fn rmse(truth: &Dataset, recon: &Dataset, restrict_to_mask: bool) -> Result<f64> {
    if truth.len() != recon.len() || truth.nrows() != recon.nrows() || truth.ncols() != recon.ncols()
    {
        return Err(AodlError::ShapeMismatch(format!(
            "truth is {} samples of {}x{}, reconstruction {} of {}x{}",
            truth.len(),
            truth.nrows(),
            truth.ncols(),
            recon.len(),
            recon.nrows(),
            recon.ncols()
        )));
    }
    let mut acc = 0.0;
    for (t, r) in truth.samples().iter().zip(recon.samples()) {
        let diff = t.values() - r.values();
        let (err, count) = if restrict_to_mask {
            let mask = t.mask().ok_or_else(|| {
                AodlError::InvalidInput("mask-restricted RMSE requires truth masks".into())
            })?;
            (
                diff.component_mul(mask).norm_squared(),
                mask.iter().filter(|&&v| v == 1.0).count(),
            )
        } else {
            (diff.norm_squared(), diff.len())
        };
        if count > 0 {
            acc += (err / count as f64).sqrt();
        }
    }
    Ok(acc / truth.len() as f64)
}

/// RMSE between a dataset and per-sample reconstruction matrices. Any
/// mask restriction uses the truth samples' masks.
pub fn rmse_matrices(truth: &Dataset, recon: &[DMatrix<f64>], restrict_to_mask: bool) -> Result<f64> {
    let samples = recon
        .iter()
        .map(|m| crate::types::DataSample::new(m.clone()))
        .collect::<Result<Vec<_>>>()?;
    rmse(truth, &Dataset::new(samples)?, restrict_to_mask)
}

/// Anything that counts as a code for size metrics.
pub trait CodeSize {
    fn nonzeros(&self, zero_tol: f64) -> usize;
}

impl CodeSize for LowRankCode {
    fn nonzeros(&self, zero_tol: f64) -> usize {
        self.y().iter().filter(|v| v.abs() > zero_tol).count()
            + self.w().iter().filter(|v| v.abs() > zero_tol).count()
    }
}

impl CodeSize for FullRankCode {
    fn nonzeros(&self, zero_tol: f64) -> usize {
        self.z().iter().filter(|v| v.abs() > zero_tol).count()
    }
}

/// Average nonzero count per sample. `zero_tol = 0` counts exact
/// nonzeros, which is well-defined because returned codes come out of
/// the soft-thresholding step.
pub fn nnz<C: CodeSize>(codes: &[C], zero_tol: f64) -> f64 {
    if codes.is_empty() {
        return 0.0;
    }
    codes.iter().map(|c| c.nonzeros(zero_tol)).sum::<usize>() as f64 / codes.len() as f64
}

/// Achieved sparsity level κ* = max over samples of
/// max{‖Y_s‖₁, ‖W_s‖₁}.
pub fn kappa_of(codes: &[LowRankCode]) -> f64 {
    codes
        .iter()
        .map(|c| {
            let y: f64 = c.y().iter().map(|v| v.abs()).sum();
            let w: f64 = c.w().iter().map(|v| v.abs()).sum();
            y.max(w)
        })
        .fold(0.0, f64::max)
}

/// Which atoms the F1 score compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Mode {
    Left,
    Right,
    /// 2D atoms: all pairwise Kronecker products of right and left atoms.
    Kron,
}

fn atom_scores(learned: &DMatrix<f64>, gt: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if learned.nrows() != gt.nrows() {
        return Err(AodlError::ShapeMismatch(format!(
            "atoms have dimension {} vs {}",
            learned.nrows(),
            gt.nrows()
        )));
    }
    let normalize = |m: &DMatrix<f64>| {
        let mut out = m.clone();
        for j in 0..out.ncols() {
            let norm = out.column(j).norm();
            if norm > 0.0 {
                out.column_mut(j).scale_mut(1.0 / norm);
            }
        }
        out
    };
    let a = normalize(learned);
    let b = normalize(gt);
    Ok((a.transpose() * b).abs())
}

/// Greedy fractional matching on a |⟨learned, gt⟩| score matrix:
/// repeatedly take the largest remaining score, retire both atoms, and
/// accumulate the score as a fractional true-positive count. F1 combines
/// precision TP/#learned and recall TP/#gt.
fn greedy_f1(scores: &DMatrix<f64>) -> f64 {
    let (rows, cols) = scores.shape();
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            entries.push((scores[(i, j)], i, j));
        }
    }
    // Deterministic order: by descending score, then indices.
    entries.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut used_row = vec![false; rows];
    let mut used_col = vec![false; cols];
    let mut tp = 0.0;
    let mut matched = 0usize;
    for (score, i, j) in entries {
        if used_row[i] || used_col[j] {
            continue;
        }
        used_row[i] = true;
        used_col[j] = true;
        tp += score;
        matched += 1;
        if matched == rows.min(cols) {
            break;
        }
    }
    let precision = tp / rows as f64;
    let recall = tp / cols as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Dictionary-recovery F1 in [0, 1]. Matching is greedy on absolute
/// inner products of unit-normalized atoms, so it is blind to atom
/// permutations and sign flips. In `Kron` mode the score of a 2D atom
/// pair factorizes into the product of the left and right scores.
pub fn dictionary_f1(learned: &DictionaryPair, gt: &DictionaryPair, mode: F1Mode) -> Result<f64> {
    match mode {
        F1Mode::Left => Ok(greedy_f1(&atom_scores(learned.left(), gt.left())?)),
        F1Mode::Right => Ok(greedy_f1(&atom_scores(learned.right(), gt.right())?)),
        F1Mode::Kron => {
            let sl = atom_scores(learned.left(), gt.left())?;
            let sr = atom_scores(learned.right(), gt.right())?;
            let (pl, pg) = (sl.nrows(), sl.ncols());
            let (ql, qg) = (sr.nrows(), sr.ncols());
            let mut scores = DMatrix::zeros(pl * ql, pg * qg);
            for i in 0..pl {
                for j in 0..ql {
                    for ig in 0..pg {
                        for jg in 0..qg {
                            scores[(i * ql + j, ig * qg + jg)] = sl[(i, ig)] * sr[(j, jg)];
                        }
                    }
                }
            }
            Ok(greedy_f1(&scores))
        }
    }
}

/// The two-way dictionary-learning generalization bound:
/// `2/√S + (C + κ²)²·(√(x/2S) + √((N·P + M·Q)·ln(8·√S·κ²)/(2S)))`.
pub fn generalization_bound(
    n: usize,
    m: usize,
    p: usize,
    q: usize,
    s: usize,
    c: f64,
    kappa: f64,
    x: f64,
) -> Result<f64> {
    if n == 0 || m == 0 || p == 0 || q == 0 || s == 0 {
        return Err(AodlError::InvalidInput(
            "all dimensions and the sample count must be positive".into(),
        ));
    }
    for (name, v) in [("c", c), ("kappa", kappa), ("x", x)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(AodlError::InvalidInput(format!(
                "{name} must be finite and > 0, got {v}"
            )));
        }
    }
    let s_f = s as f64;
    let log_arg = 8.0 * s_f.sqrt() * kappa * kappa;
    if log_arg <= 1.0 {
        return Err(AodlError::InvalidInput(format!(
            "8·√S·κ² must exceed 1 for the covering term, got {log_arg}"
        )));
    }
    let dims = (n * p + m * q) as f64;
    let amplitude = (c + kappa * kappa).powi(2);
    let bound = 2.0 / s_f.sqrt()
        + amplitude * ((x / (2.0 * s_f)).sqrt() + (dims * log_arg.ln() / (2.0 * s_f)).sqrt());
    Ok(bound)
}

/// One row of the train-size sweep.
#[derive(Debug, Clone)]
pub struct BoundExperimentRow {
    pub train_size: usize,
    /// Mean per-sample reconstruction RMSE on the test set.
    pub mean_rmse: f64,
    pub median_rmse: f64,
    pub max_rmse: f64,
    /// Largest per-sample squared-Frobenius loss on the test set; this
    /// is the quantity the bound dominates.
    pub max_loss: f64,
    /// Bound value at the matching parameters.
    pub bound: f64,
}

/// Learns dictionaries from growing training prefixes, sparse-codes a
/// fixed test set with them, and reports the test-error distribution
/// next to the bound value.
pub fn bound_experiment(
    train: &Dataset,
    test: &Dataset,
    train_sizes: &[usize],
    cfg: &SolverConfig,
    bound_c: f64,
    bound_kappa: f64,
    bound_x: f64,
) -> Result<Vec<BoundExperimentRow>> {
    let mut rows = Vec::with_capacity(train_sizes.len());
    for &s in train_sizes {
        if s == 0 {
            return Err(AodlError::InvalidInput(
                "cannot train on zero samples".into(),
            ));
        }
        if s > train.len() {
            return Err(AodlError::InvalidInput(format!(
                "requested {s} training samples but only {} available",
                train.len()
            )));
        }
        let subset = train.head(s)?;
        let (dict, _, _) = aodl(&subset, cfg)?;
        let encoded = encode_dataset(test, &dict, cfg)?;
        let mut rmses = Vec::with_capacity(test.len());
        let mut max_loss = 0.0f64;
        for (sample, (code, _)) in test.samples().iter().zip(&encoded) {
            let loss = (sample.values() - code.reconstruct(&dict)).norm_squared();
            max_loss = max_loss.max(loss);
            rmses.push((loss / sample.values().len() as f64).sqrt());
        }
        rmses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = rmses.iter().sum::<f64>() / rmses.len() as f64;
        let median = rmses[rmses.len() / 2];
        let (p, q) = cfg.dict_sizes(train.nrows(), train.ncols());
        let bound = generalization_bound(
            train.nrows(),
            train.ncols(),
            p,
            q,
            s,
            bound_c,
            bound_kappa,
            bound_x,
        )?;
        rows.push(BoundExperimentRow {
            train_size: s,
            mean_rmse: mean,
            median_rmse: median,
            max_rmse: *rmses.last().unwrap(),
            max_loss,
            bound,
        });
    }
    Ok(rows)
}
