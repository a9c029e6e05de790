//! Alternating dictionary learning with low-rank sparse codes: random or
//! HOSVD initialization, closed-form Gauss–Seidel dictionary updates with
//! atom normalization and code compensation, the outer loop, and
//! regularizer bisection targeting a sparsity budget.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{AodlError, Result};
use crate::linalg::{ridge_inverse, sym_eig};
use crate::lrsc::{encode_dataset, encode_unmasked, AdmmState, DictGrams};
use crate::types::{
    CodeNnz, Dataset, DictionaryPair, FitReport, InitStrategy, LowRankCode, SolverConfig,
};

/// Atom norms below this keep the previous atom instead of dividing by
/// a vanishing scale.
const DEAD_ATOM_TOL: f64 = 1e-12;

/// Draws or extracts initial dictionaries.
///
/// `Random` samples i.i.d. N(0, 1) entries and normalizes every atom.
/// `Hosvd` takes the top-`p` left singular vectors of the mode-1
/// unfolding and the top-`q` left singular vectors of the mode-2
/// unfolding (computed via the Gram matrices Σ XXᵀ and Σ XᵀX), which
/// requires `p ≤ N` and `q ≤ M`.
pub fn init_dictionaries(
    data: &Dataset,
    p: usize,
    q: usize,
    strategy: InitStrategy,
    seed: u64,
) -> Result<DictionaryPair> {
    let (n, m) = (data.nrows(), data.ncols());
    if p == 0 || q == 0 {
        return Err(AodlError::InvalidConfig(
            "dictionaries need at least one atom".into(),
        ));
    }
    match strategy {
        InitStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut normal =
                |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| standard_normal(&mut rng));
            let left = normal(n, p);
            let right = normal(m, q);
            DictionaryPair::new_normalized(left, right)
        }
        InitStrategy::Hosvd => {
            if p > n || q > m {
                return Err(AodlError::InvalidConfig(format!(
                    "hosvd initialization requires p <= N and q <= M, got p={p}, N={n}, q={q}, M={m}"
                )));
            }
            let mut gram1 = DMatrix::zeros(n, n);
            let mut gram2 = DMatrix::zeros(m, m);
            for sample in data.samples() {
                let x = sample.values();
                gram1 += x * x.transpose();
                gram2 += x.transpose() * x;
            }
            let left = leading_eigenvectors(&gram1, p)?;
            let right = leading_eigenvectors(&gram2, q)?;
            DictionaryPair::new_normalized(left, right)
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Top-`count` eigenvectors of a PSD Gram matrix, by descending
/// eigenvalue; these are the left singular vectors of the unfolding.
fn leading_eigenvectors(gram: &DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let eig = sym_eig(gram)?;
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&a, &b| eig.values[b].partial_cmp(&eig.values[a]).unwrap());
    let n = eig.vectors.nrows();
    let mut out = DMatrix::zeros(n, count);
    for (j, &idx) in order.iter().take(count).enumerate() {
        out.set_column(j, &eig.vectors.column(idx));
    }
    Ok(out)
}

/// Normalizes columns to unit length, falling back to the previous atom
/// when the update produced a dead (near-zero) column. Returns the new
/// matrix together with the raw pre-normalization norms used for code
/// compensation.
pub(crate) fn normalize_with_guard(
    raw: DMatrix<f64>,
    previous: &DMatrix<f64>,
) -> (DMatrix<f64>, Vec<f64>) {
    let mut out = raw;
    let mut scales = Vec::with_capacity(out.ncols());
    for j in 0..out.ncols() {
        let norm = out.column(j).norm();
        if norm < DEAD_ATOM_TOL {
            // Dead atom: keep the previous one and zero the code rows
            // exactly instead of circulating denormal scales.
            scales.push(0.0);
            let prev = previous.column(j);
            let prev_norm = prev.norm().max(DEAD_ATOM_TOL);
            out.set_column(j, &(prev / prev_norm));
        } else {
            scales.push(norm);
            out.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    (out, scales)
}

/// One closed-form dictionary sweep on the data-fit objective: L first
/// (against the current R), then R against the new L. Atoms are
/// normalized afterwards and every code is compensated (Y rows scaled by
/// the raw left-atom norms, W columns by the raw right-atom norms) so
/// the products L·Y·W·Rᵀ are unchanged.
///
/// Returns the new pair plus the two scale vectors so callers can keep
/// warm-started ADMM state consistent.
pub(crate) fn update_dictionaries_scaled(
    data: &Dataset,
    codes: &mut [LowRankCode],
    current: &DictionaryPair,
    ridge_eps: f64,
) -> Result<(DictionaryPair, Vec<f64>, Vec<f64>)> {
    if codes.len() != data.len() {
        return Err(AodlError::ShapeMismatch(format!(
            "{} codes for {} samples",
            codes.len(),
            data.len()
        )));
    }
    let (p, q) = (current.p(), current.q());

    // L update: numerator Σ X·R·Wᵀ·Yᵀ; the Gram Σ Y·W·RᵀR·Wᵀ·Yᵀ is
    // accumulated as Σ (Y·W·Rᵀ)(Y·W·Rᵀ)ᵀ so it stays PSD to roundoff.
    let mut num_l = DMatrix::zeros(data.nrows(), p);
    let mut gram_l = DMatrix::zeros(p, p);
    for (sample, code) in data.samples().iter().zip(codes.iter()) {
        let xr = sample.values() * current.right();
        num_l += xr * code.w().transpose() * code.y().transpose();
        let ywrt = code.y() * code.w() * current.right().transpose();
        gram_l += &ywrt * ywrt.transpose();
    }
    let raw_l = &num_l * ridge_inverse(&gram_l, ridge_eps)?;
    let (left, left_scales) = normalize_with_guard(raw_l, current.left());
    for code in codes.iter_mut() {
        code.scale_y_rows(&left_scales);
    }

    // R update against the new L: numerator Σ Xᵀ·L·Y·W,
    // Gram Σ (L·Y·W)ᵀ(L·Y·W).
    let mut num_r = DMatrix::zeros(data.ncols(), q);
    let mut gram_r = DMatrix::zeros(q, q);
    for (sample, code) in data.samples().iter().zip(codes.iter()) {
        let lyw = &left * code.y() * code.w();
        num_r += sample.values().transpose() * &lyw;
        gram_r += lyw.transpose() * lyw;
    }
    let raw_r = &num_r * ridge_inverse(&gram_r, ridge_eps)?;
    let (right, right_scales) = normalize_with_guard(raw_r, current.right());
    for code in codes.iter_mut() {
        code.scale_w_cols(&right_scales);
    }

    Ok((DictionaryPair::new(left, right)?, left_scales, right_scales))
}

/// Public form of the dictionary sweep; compensates `codes` in place.
pub fn update_dictionaries(
    data: &Dataset,
    codes: &mut [LowRankCode],
    current: &DictionaryPair,
    ridge_eps: f64,
) -> Result<DictionaryPair> {
    update_dictionaries_scaled(data, codes, current, ridge_eps).map(|(pair, _, _)| pair)
}

pub(crate) struct ObjectiveParts {
    pub fit: f64,
    pub regularized: f64,
    pub rmse: f64,
    pub nnz_avg: f64,
    pub nnz_y: usize,
    pub nnz_w: usize,
}

pub(crate) fn objective_parts(
    data: &Dataset,
    dict: &DictionaryPair,
    codes: &[LowRankCode],
    lambda1: f64,
    lambda2: f64,
    masked: bool,
) -> Result<ObjectiveParts> {
    if codes.len() != data.len() {
        return Err(AodlError::ShapeMismatch(format!(
            "{} codes for {} samples",
            codes.len(),
            data.len()
        )));
    }
    let mut fit = 0.0;
    let mut penalty = 0.0;
    let mut rmse = 0.0;
    let mut nnz_y = 0usize;
    let mut nnz_w = 0usize;
    for (sample, code) in data.samples().iter().zip(codes.iter()) {
        let residual = sample.values() - code.reconstruct(dict);
        let (err, count) = if masked {
            let mask = sample.mask().ok_or_else(|| {
                AodlError::InvalidInput("masked objective requires sample masks".into())
            })?;
            (
                residual.component_mul(mask).norm_squared(),
                mask.iter().filter(|&&v| v == 1.0).count(),
            )
        } else {
            (residual.norm_squared(), residual.len())
        };
        fit += err;
        rmse += (err / (count.max(1)) as f64).sqrt();
        penalty += lambda1 * code.y().iter().map(|v| v.abs()).sum::<f64>()
            + lambda2 * code.w().iter().map(|v| v.abs()).sum::<f64>();
        nnz_y += code.y().iter().filter(|&&v| v != 0.0).count();
        nnz_w += code.w().iter().filter(|&&v| v != 0.0).count();
    }
    let s = data.len() as f64;
    Ok(ObjectiveParts {
        fit,
        regularized: fit + penalty,
        rmse: rmse / s,
        nnz_avg: (nnz_y + nnz_w) as f64 / s,
        nnz_y,
        nnz_w,
    })
}

/// Data-fit and regularized objective values:
/// `f = Σ_s ‖X_s − L·Y_s·W_s·Rᵀ‖²_F` and
/// `g = f + Σ_s (λ₁‖Y_s‖₁ + λ₂‖W_s‖₁)`. With `masked` the fit term is
/// restricted to each sample's observed entries.
pub fn objective(
    data: &Dataset,
    dict: &DictionaryPair,
    codes: &[LowRankCode],
    lambda1: f64,
    lambda2: f64,
    masked: bool,
) -> Result<(f64, f64)> {
    objective_parts(data, dict, codes, lambda1, lambda2, masked)
        .map(|parts| (parts.fit, parts.regularized))
}

/// Learns a dictionary pair and per-sample low-rank codes by alternating
/// per-sample sparse coding with closed-form dictionary sweeps.
///
/// The report's `objective_trace` records the regularized objective after
/// every outer iteration; the loop stops when its relative change falls
/// below `outer_tol` or after `outer_iters` iterations. With
/// `outer_iters = 0` the initialized dictionaries and zero codes are
/// returned unchanged. Deterministic for a fixed seed, including across
/// thread pools.
pub fn aodl(
    data: &Dataset,
    cfg: &SolverConfig,
) -> Result<(DictionaryPair, Vec<LowRankCode>, FitReport)> {
    if data.samples().iter().any(|s| s.mask().is_some()) {
        return Err(AodlError::InvalidInput(
            "dataset carries masks; use the masked learner".into(),
        ));
    }
    run_outer_loop(data, cfg, false)
}

/// Shared outer loop for the unmasked and masked learners. In masked
/// mode the per-sample solver maintains a data proxy `D` that replaces
/// `X` in the dictionary sweep, and the trace records the full masked
/// objective (fit to the proxy plus the λ₃-weighted tie to the observed
/// entries plus the L1 penalties).
pub(crate) fn run_outer_loop(
    data: &Dataset,
    cfg: &SolverConfig,
    masked: bool,
) -> Result<(DictionaryPair, Vec<LowRankCode>, FitReport)> {
    let (n, m) = (data.nrows(), data.ncols());
    let (p, q) = cfg.dict_sizes(n, m);
    cfg.validate(p, q)?;
    let mut dict = init_dictionaries(data, p, q, cfg.init, cfg.seed)?;

    let mut codes: Vec<LowRankCode> = (0..data.len())
        .map(|_| LowRankCode::zeros(p, cfg.rank_k, q))
        .collect();
    let mut report = FitReport::default();
    if cfg.outer_iters == 0 {
        report.nnz = Some(CodeNnz::LowRank { y: 0, w: 0 });
        return Ok((dict, codes, report));
    }

    // All samples share the same initial ADMM draw; per-sample data is
    // what differentiates the solves. Stream 1 keeps the draw disjoint
    // from the dictionary initialization.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let template = AdmmState::init_random(p, cfg.rank_k, q, &mut rng);
    let mut states: Vec<AdmmState> = vec![template; data.len()];

    let mut g_prev: Option<f64> = None;
    for _ in 0..cfg.outer_iters {
        report.iterations_used += 1;
        let grams = DictGrams::new(&dict)?;

        // Stage I: per-sample sparse coding, warm-started.
        let results: Vec<LowRankCode> = data
            .samples()
            .par_iter()
            .zip(states.par_iter_mut())
            .map(|(sample, state)| {
                let out = if masked {
                    crate::lrsc::encode_masked(sample, &dict, &grams, cfg, state, false)?
                } else {
                    encode_unmasked(sample.values(), &dict, &grams, cfg, state, false)?
                };
                Ok(out.code)
            })
            .collect::<Result<_>>()?;
        codes = results;

        // Stage II: dictionary sweep on X (or on the proxies D in
        // masked mode), then keep codes and warm states consistent with
        // the renormalized atoms.
        let fit_data = if masked {
            let proxies: Vec<crate::types::DataSample> = states
                .iter()
                .map(|s| {
                    crate::types::DataSample::new(
                        s.d.clone().expect("masked encode always sets the proxy"),
                    )
                })
                .collect::<Result<_>>()?;
            Dataset::new(proxies)?
        } else {
            data.clone()
        };
        let (new_dict, lscales, rscales) =
            update_dictionaries_scaled(&fit_data, &mut codes, &dict, cfg.ridge_eps)?;
        dict = new_dict;
        for state in states.iter_mut() {
            state.compensate(&lscales, &rscales);
        }

        // Trace entry.
        let parts = if masked {
            masked_objective_parts(data, &dict, &codes, &states, cfg)?
        } else {
            objective_parts(data, &dict, &codes, cfg.lambda1, cfg.lambda2, false)?
        };
        report.fit_trace.push(parts.fit);
        report.objective_trace.push(parts.regularized);
        report.rmse_trace.push(parts.rmse);
        report.nnz_trace.push(parts.nnz_avg);
        report.data_fit = parts.fit;
        report.nnz = Some(CodeNnz::LowRank {
            y: parts.nnz_y,
            w: parts.nnz_w,
        });

        let g = parts.regularized;
        if let Some(prev) = g_prev {
            if (g - prev).abs() / prev.max(1.0) <= cfg.outer_tol {
                report.converged = true;
                break;
            }
        }
        g_prev = Some(g);
    }
    Ok((dict, codes, report))
}

/// Full masked objective at the current iterates:
/// `Σ_s ‖D_s − L·Y·W·Rᵀ‖² + λ₃‖Ω_s⊙(D_s − X_s)‖² + λ₁‖Y‖₁ + λ₂‖W‖₁`.
/// The reported RMSE is over observed entries against the data.
fn masked_objective_parts(
    data: &Dataset,
    dict: &DictionaryPair,
    codes: &[LowRankCode],
    states: &[AdmmState],
    cfg: &SolverConfig,
) -> Result<ObjectiveParts> {
    let mut fit = 0.0;
    let mut penalty = 0.0;
    let mut rmse = 0.0;
    let mut nnz_y = 0usize;
    let mut nnz_w = 0usize;
    for ((sample, code), state) in data.samples().iter().zip(codes).zip(states) {
        let mask = sample.mask().ok_or_else(|| {
            AodlError::InvalidInput("masked objective requires sample masks".into())
        })?;
        let d = state.d.as_ref().expect("masked encode always sets the proxy");
        let recon = code.reconstruct(dict);
        fit += (d - &recon).norm_squared()
            + cfg.lambda3 * (d - sample.values()).component_mul(mask).norm_squared();
        let observed = mask.iter().filter(|&&v| v == 1.0).count();
        let masked_err = (sample.values() - &recon).component_mul(mask).norm_squared();
        rmse += (masked_err / observed.max(1) as f64).sqrt();
        penalty += cfg.lambda1 * code.y().iter().map(|v| v.abs()).sum::<f64>()
            + cfg.lambda2 * code.w().iter().map(|v| v.abs()).sum::<f64>();
        nnz_y += code.y().iter().filter(|&&v| v != 0.0).count();
        nnz_w += code.w().iter().filter(|&&v| v != 0.0).count();
    }
    let s = data.len() as f64;
    Ok(ObjectiveParts {
        fit,
        regularized: fit + penalty,
        rmse: rmse / s,
        nnz_avg: (nnz_y + nnz_w) as f64 / s,
        nnz_y,
        nnz_w,
    })
}

/// How each bisection step evaluates the sparsity level.
#[derive(Debug, Clone, Copy)]
pub enum TuneMode<'a> {
    /// Run the full dictionary learner per candidate regularizer.
    Aodl,
    /// Sparse-code only, against the given fixed dictionaries.
    FixedDictionaries(&'a DictionaryPair),
}

/// Result of the regularizer bisection.
#[derive(Debug, Clone, Copy)]
pub struct KappaTuning {
    pub lambda1: f64,
    pub lambda2: f64,
    pub achieved_kappa: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Bisects a coupled regularizer λ₁ = λ₂ = λ over [1e-6, 1e6] towards a
/// target sparsity level κ* = max_s max{‖Y_s‖₁, ‖W_s‖₁}, which is
/// monotone non-increasing in λ. Stops within 5% of the target or after
/// `max_bisect` solver evaluations; an unreachable target yields the
/// closest achieved value flagged as unconverged.
pub fn tune_lambda_for_kappa(
    data: &Dataset,
    cfg_template: &SolverConfig,
    target_kappa: f64,
    max_bisect: usize,
    mode: TuneMode<'_>,
) -> Result<KappaTuning> {
    if !(target_kappa > 0.0) {
        return Err(AodlError::InvalidInput(format!(
            "target kappa must be > 0, got {target_kappa}"
        )));
    }
    if max_bisect == 0 {
        return Err(AodlError::InvalidInput("max_bisect must be positive".into()));
    }
    let mut evaluations = 0usize;
    let eval = |lambda: f64| -> Result<f64> {
        let cfg = SolverConfig {
            lambda1: lambda,
            lambda2: lambda,
            ..cfg_template.clone()
        };
        let codes: Vec<LowRankCode> = match mode {
            TuneMode::Aodl => aodl(data, &cfg)?.1,
            TuneMode::FixedDictionaries(dict) => encode_dataset(data, dict, &cfg)?
                .into_iter()
                .map(|(code, _)| code)
                .collect(),
        };
        Ok(crate::eval::kappa_of(&codes))
    };
    let within = |kappa: f64| (kappa - target_kappa).abs() <= 0.05 * target_kappa;

    let (mut lo, mut hi) = (1e-6_f64, 1e6_f64);
    evaluations += 1;
    let kappa_lo = eval(lo)?;
    let mut best = (lo, kappa_lo);
    if within(kappa_lo) {
        return Ok(KappaTuning {
            lambda1: lo,
            lambda2: lo,
            achieved_kappa: kappa_lo,
            converged: true,
            evaluations,
        });
    }
    if kappa_lo < target_kappa {
        // Even the weakest regularization undershoots the target.
        return Ok(KappaTuning {
            lambda1: lo,
            lambda2: lo,
            achieved_kappa: kappa_lo,
            converged: false,
            evaluations,
        });
    }
    while evaluations < max_bisect {
        let mid = (lo * hi).sqrt();
        evaluations += 1;
        let kappa = eval(mid)?;
        if (kappa - target_kappa).abs() < (best.1 - target_kappa).abs() {
            best = (mid, kappa);
        }
        if within(kappa) {
            return Ok(KappaTuning {
                lambda1: mid,
                lambda2: mid,
                achieved_kappa: kappa,
                converged: true,
                evaluations,
            });
        }
        if kappa > target_kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KappaTuning {
        lambda1: best.0,
        lambda2: best.0,
        achieved_kappa: best.1,
        converged: false,
        evaluations,
    })
}

/// Probe hook used by the scratch example.
pub fn probe_update(
    data: &Dataset,
    codes: &mut [LowRankCode],
    current: &DictionaryPair,
    ridge_eps: f64,
) -> Result<(DictionaryPair, Vec<f64>, Vec<f64>)> {
    update_dictionaries_scaled(data, codes, current, ridge_eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DataSample;

    fn toy_dataset() -> Dataset {
        let samples = (0..3)
            .map(|s| {
                DataSample::new(DMatrix::from_fn(4, 5, |i, j| {
                    ((i * 5 + j + s * 7) as f64).sin()
                }))
                .unwrap()
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    #[test]
    fn random_init_has_unit_atoms() {
        let dict = init_dictionaries(&toy_dataset(), 6, 7, InitStrategy::Random, 3).unwrap();
        for j in 0..6 {
            assert!((dict.left().column(j).norm() - 1.0).abs() < 1e-12);
        }
        for j in 0..7 {
            assert!((dict.right().column(j).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hosvd_rank_one_sample_recovers_axis() {
        // X = 2 e1 e1^T: the first left atom must be ±e1.
        let mut x = DMatrix::zeros(3, 4);
        x[(0, 0)] = 2.0;
        let data = Dataset::new(vec![DataSample::new(x).unwrap()]).unwrap();
        let dict = init_dictionaries(&data, 2, 2, InitStrategy::Hosvd, 0).unwrap();
        let atom = dict.left().column(0);
        assert!((atom[0].abs() - 1.0).abs() < 1e-10);
        assert!(atom[1].abs() < 1e-10);
        assert!(atom[2].abs() < 1e-10);
    }

    #[test]
    fn hosvd_factors_are_orthonormal() {
        let data = toy_dataset();
        let dict = init_dictionaries(&data, 3, 4, InitStrategy::Hosvd, 0).unwrap();
        let ltl = dict.left().transpose() * dict.left();
        assert!((ltl - DMatrix::identity(3, 3)).norm() < 1e-8);
        let rtr = dict.right().transpose() * dict.right();
        assert!((rtr - DMatrix::identity(4, 4)).norm() < 1e-8);
    }

    #[test]
    fn hosvd_rejects_overcomplete() {
        let data = toy_dataset();
        assert!(init_dictionaries(&data, 5, 2, InitStrategy::Hosvd, 0).is_err());
    }

    #[test]
    fn zero_codes_keep_previous_atoms() {
        let data = toy_dataset();
        let dict = init_dictionaries(&data, 4, 5, InitStrategy::Random, 1).unwrap();
        let mut codes: Vec<LowRankCode> = (0..3).map(|_| LowRankCode::zeros(4, 2, 5)).collect();
        let updated = update_dictionaries(&data, &mut codes, &dict, 1e-8).unwrap();
        assert!((updated.left() - dict.left()).norm() < 1e-12);
        assert!((updated.right() - dict.right()).norm() < 1e-12);
        assert!(codes.iter().all(|c| c.y().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn objective_zero_codes_equals_energy() {
        let data = toy_dataset();
        let dict = init_dictionaries(&data, 4, 5, InitStrategy::Random, 1).unwrap();
        let codes: Vec<LowRankCode> = (0..3).map(|_| LowRankCode::zeros(4, 2, 5)).collect();
        let (f, g) = objective(&data, &dict, &codes, 0.3, 0.7, false).unwrap();
        let energy: f64 = data.samples().iter().map(|s| s.values().norm_squared()).sum();
        assert!((f - energy).abs() < 1e-12);
        assert_eq!(f, g);
    }

    #[test]
    fn objective_penalty_decomposition() {
        let data = toy_dataset();
        let dict = init_dictionaries(&data, 4, 5, InitStrategy::Random, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let codes: Vec<LowRankCode> = (0..3)
            .map(|_| {
                LowRankCode::new(
                    DMatrix::from_fn(4, 2, |_, _| standard_normal(&mut rng)),
                    DMatrix::from_fn(2, 5, |_, _| standard_normal(&mut rng)),
                )
                .unwrap()
            })
            .collect();
        let (lambda1, lambda2) = (0.11, 0.23);
        let (f, g) = objective(&data, &dict, &codes, lambda1, lambda2, false).unwrap();
        let penalty: f64 = codes
            .iter()
            .map(|c| {
                lambda1 * c.y().iter().map(|v| v.abs()).sum::<f64>()
                    + lambda2 * c.w().iter().map(|v| v.abs()).sum::<f64>()
            })
            .sum();
        assert!((g - f - penalty).abs() < 1e-10);
        assert!(g >= f && f >= 0.0);
    }

    #[test]
    fn aodl_zero_outer_iters_is_passthrough() {
        let data = toy_dataset();
        let cfg = SolverConfig {
            rank_k: 2,
            outer_iters: 0,
            seed: 5,
            ..SolverConfig::default()
        };
        let (dict, codes, report) = aodl(&data, &cfg).unwrap();
        let reference =
            init_dictionaries(&data, 4, 5, InitStrategy::Random, 5).unwrap();
        assert!((dict.left() - reference.left()).norm() < 1e-15);
        assert!(codes.iter().all(|c| c.y().iter().all(|&v| v == 0.0)));
        assert_eq!(report.iterations_used, 0);
    }
}
