//! Dictionary learning and imputation for samples with missing values.
//!
//! Each masked sample carries a 0-1 observation mask; the solver fits a
//! per-sample data proxy that agrees with the observations (weighted by
//! lambda3) and fills the rest from the low-rank model. The learned
//! proxy at termination is the imputation.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dict::run_outer_loop;
use crate::error::{AodlError, Result};
use crate::types::{DataSample, Dataset, DictionaryPair, FitReport, LowRankCode, SolverConfig};

/// Masked dictionary learning: the outer loop of the unmasked learner
/// with the masked per-sample encoder inside and the data proxies
/// replacing the samples in the dictionary sweep.
///
/// Requires every sample to carry a mask and `lambda3 > 0`. Returns the
/// dictionaries, the sparse codes, one imputed matrix per sample, and
/// the convergence report (whose trace holds the full masked objective).
pub fn aodl_masked(
    data: &Dataset,
    cfg: &SolverConfig,
) -> Result<(DictionaryPair, Vec<LowRankCode>, Vec<DMatrix<f64>>, FitReport)> {
    if !data.all_masked() {
        return Err(AodlError::InvalidInput(
            "masked learning requires a mask on every sample".into(),
        ));
    }
    if !(cfg.lambda3 > 0.0) {
        return Err(AodlError::InvalidConfig(format!(
            "masked learning requires lambda3 > 0, got {}",
            cfg.lambda3
        )));
    }
    let (dict, codes, report) = run_outer_loop(data, cfg, true)?;
    let imputed = data
        .samples()
        .iter()
        .zip(codes.iter())
        .map(|(sample, code)| impute(sample, &dict, code))
        .collect::<Result<Vec<_>>>()?;
    Ok((dict, codes, imputed, report))
}

/// Fill-in from the model: observed entries come from the sample,
/// masked-out entries from the reconstruction L·Y·W·Rᵀ. A sample
/// without a mask is returned unchanged.
pub fn impute(x: &DataSample, dict: &DictionaryPair, code: &LowRankCode) -> Result<DMatrix<f64>> {
    if dict.left().nrows() != x.nrows() || dict.right().nrows() != x.ncols() {
        return Err(AodlError::ShapeMismatch(format!(
            "sample is {}x{} but dictionaries act on {}x{}",
            x.nrows(),
            x.ncols(),
            dict.left().nrows(),
            dict.right().nrows()
        )));
    }
    let Some(mask) = x.mask() else {
        return Ok(x.values().clone());
    };
    let recon = code.reconstruct(dict);
    Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        if mask[(i, j)] == 1.0 {
            x.values()[(i, j)]
        } else {
            recon[(i, j)]
        }
    }))
}

/// Hides a fraction of the currently observed entries of every sample,
/// uniformly at random without replacement.
///
/// Returns the solver dataset (hidden entries zeroed in the values and
/// marked 0 in the mask) and one evaluation mask per sample selecting
/// exactly the hidden entries, for scoring imputations against the
/// original data.
pub fn hide_fraction(
    data: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset, Vec<DMatrix<f64>>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(AodlError::InvalidInput(format!(
            "hide fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let mut samples = Vec::with_capacity(data.len());
    let mut eval_masks = Vec::with_capacity(data.len());
    for (s, sample) in data.samples().iter().enumerate() {
        let (n, m) = (sample.nrows(), sample.ncols());
        let observed: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter(|&(i, j)| sample.mask().map_or(true, |mask| mask[(i, j)] == 1.0))
            .collect();
        let hide_count = (fraction * observed.len() as f64).round() as usize;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let picks = rand::seq::index::sample(&mut rng, observed.len(), hide_count);

        let mut values = sample.values().clone();
        let mut mask = sample
            .mask()
            .cloned()
            .unwrap_or_else(|| DMatrix::from_element(n, m, 1.0));
        let mut eval_mask = DMatrix::zeros(n, m);
        for idx in picks.iter() {
            let (i, j) = observed[idx];
            values[(i, j)] = 0.0;
            mask[(i, j)] = 0.0;
            eval_mask[(i, j)] = 1.0;
        }
        samples.push(DataSample::with_mask(values, mask)?);
        eval_masks.push(eval_mask);
    }
    Ok((Dataset::new(samples)?, eval_masks))
}

/// Baseline imputation: every hidden entry takes the mean of its
/// column's observed entries (falling back to the sample-wide observed
/// mean, then to 0, when a column or sample has no observations).
pub fn column_mean_impute(x: &DataSample) -> DMatrix<f64> {
    let Some(mask) = x.mask() else {
        return x.values().clone();
    };
    let (n, m) = (x.nrows(), x.ncols());
    let mut total = 0.0;
    let mut total_count = 0usize;
    for i in 0..n {
        for j in 0..m {
            if mask[(i, j)] == 1.0 {
                total += x.values()[(i, j)];
                total_count += 1;
            }
        }
    }
    let sample_mean = if total_count > 0 {
        total / total_count as f64
    } else {
        0.0
    };
    let mut out = x.values().clone();
    for j in 0..m {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            if mask[(i, j)] == 1.0 {
                sum += x.values()[(i, j)];
                count += 1;
            }
        }
        let fill = if count > 0 { sum / count as f64 } else { sample_mean };
        for i in 0..n {
            if mask[(i, j)] == 0.0 {
                out[(i, j)] = fill;
            }
        }
    }
    out
}
