//! Low-rank sparse coding: the per-sample ADMM solver estimating the
//! code pair (Y, W) for fixed dictionaries, plus its masked variant that
//! carries a data proxy D for missing-value imputation.
//!
//! The split introduces proxies U = Y and V = W; each sweep solves the
//! two-sided stationarity systems for Y and W in closed form, shrinks the
//! proxies by soft-thresholding, and ascends the duals. The returned
//! codes are the proxies, so they contain exact zeros and NNZ is
//! well-defined.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AodlError, Result};
use crate::linalg::{solve_scaled_sylvester_with, sym_eig, SymEig};
use crate::types::{CodeNnz, DataSample, DictionaryPair, FitReport, LowRankCode, SolverConfig};

/// Scale of the random ADMM initialization.
const INIT_SCALE: f64 = 0.1;

/// ADMM iterate for one sample: primal pair (y, w), sparse proxies
/// (u, v), scaled duals (gamma1, gamma2) and, in masked mode, the data
/// proxy `d`.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub y: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub gamma1: DMatrix<f64>,
    pub gamma2: DMatrix<f64>,
    pub d: Option<DMatrix<f64>>,
}

impl AdmmState {
    /// Draws every variable i.i.d. N(0, 1) scaled by 0.1. Small
    /// initialization keeps the first Gram factors well conditioned.
    pub fn init_random(p: usize, k: usize, q: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| {
                INIT_SCALE * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            })
        };
        let y = draw(p, k);
        let w = draw(k, q);
        let u = draw(p, k);
        let v = draw(k, q);
        let gamma1 = draw(p, k);
        let gamma2 = draw(k, q);
        Self {
            y,
            w,
            u,
            v,
            gamma1,
            gamma2,
            d: None,
        }
    }

    /// Rescales the state after dictionary-atom renormalization: rows of
    /// the Y-side variables by the left atom norms, columns of the W-side
    /// variables by the right atom norms. Keeps warm starts consistent
    /// with the rescaled codes.
    pub fn compensate(&mut self, left_scales: &[f64], right_scales: &[f64]) {
        for m in [&mut self.y, &mut self.u, &mut self.gamma1] {
            for (i, &f) in left_scales.iter().enumerate() {
                m.row_mut(i).scale_mut(f);
            }
        }
        for m in [&mut self.w, &mut self.v, &mut self.gamma2] {
            for (j, &f) in right_scales.iter().enumerate() {
                m.column_mut(j).scale_mut(f);
            }
        }
    }
}

/// Entrywise shrinkage sign(h)·max(|h| − tau, 0); the proximal operator
/// of the L1 norm. Entries at or below the threshold become exact zeros.
pub fn soft_threshold(h: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(AodlError::InvalidInput(format!(
            "threshold must be >= 0, got {tau}"
        )));
    }
    Ok(h.map(|v| {
        if v.abs() <= tau {
            0.0
        } else {
            v.signum() * (v.abs() - tau)
        }
    }))
}

/// Grams and eigendecompositions of the fixed dictionaries, reused by
/// every sample and every ADMM sweep.
#[derive(Debug, Clone)]
pub struct DictGrams {
    pub eig_ltl: SymEig,
    pub eig_rtr: SymEig,
}

impl DictGrams {
    pub fn new(dict: &DictionaryPair) -> Result<Self> {
        let ltl = dict.left().transpose() * dict.left();
        let rtr = dict.right().transpose() * dict.right();
        Ok(Self {
            eig_ltl: sym_eig(&ltl)?,
            eig_rtr: sym_eig(&rtr)?,
        })
    }
}

/// One closed-form Y step: solves
/// `2·LᵀL·Y·BBᵀ + rho1·Y = 2·LᵀXBᵀ + rho1·U + Γ₁` with `B = W·Rᵀ`.
pub fn update_y(
    x: &DMatrix<f64>,
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    state: &AdmmState,
    rho1: f64,
) -> Result<DMatrix<f64>> {
    let ltl = left.transpose() * left;
    let ltxr = left.transpose() * x * right;
    update_y_with(&ltxr, &sym_eig(&ltl)?, right, state, rho1)
}

fn update_y_with(
    ltxr: &DMatrix<f64>,
    eig_ltl: &SymEig,
    right: &DMatrix<f64>,
    state: &AdmmState,
    rho1: f64,
) -> Result<DMatrix<f64>> {
    // Forming B = W·Rᵀ explicitly keeps its Gram PSD to roundoff; the
    // algebraically equal W·RᵀR·Wᵀ can go indefinite through
    // cancellation when code scales are extreme. 2·LᵀX·Bᵀ = 2·(LᵀXR)·Wᵀ.
    let b = &state.w * right.transpose();
    let bbt = &b * b.transpose();
    let pi1 = (ltxr * state.w.transpose()).scale(2.0) + state.u.scale(rho1) + &state.gamma1;
    solve_scaled_sylvester_with(eig_ltl, &sym_eig(&bbt)?, &pi1, rho1)
}

/// One closed-form W step: solves
/// `2·AᵀA·W·RᵀR + rho2·W = 2·AᵀXR + rho2·V + Γ₂` with `A = L·Y`,
/// using the Y already stored in `state`.
pub fn update_w(
    x: &DMatrix<f64>,
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    state: &AdmmState,
    rho2: f64,
) -> Result<DMatrix<f64>> {
    let rtr = right.transpose() * right;
    let ltxr = left.transpose() * x * right;
    update_w_with(&ltxr, left, &sym_eig(&rtr)?, state, rho2)
}

fn update_w_with(
    ltxr: &DMatrix<f64>,
    left: &DMatrix<f64>,
    eig_rtr: &SymEig,
    state: &AdmmState,
    rho2: f64,
) -> Result<DMatrix<f64>> {
    // A = L·Y formed explicitly for a roundoff-PSD Gram;
    // 2·AᵀX·R = 2·Yᵀ·(LᵀXR).
    let a = left * &state.y;
    let ata = a.transpose() * a;
    let pi2 = (state.y.transpose() * ltxr).scale(2.0) + state.v.scale(rho2) + &state.gamma2;
    solve_scaled_sylvester_with(&sym_eig(&ata)?, eig_rtr, &pi2, rho2)
}

fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

fn count_nonzero(m: &DMatrix<f64>) -> usize {
    m.iter().filter(|&&v| v != 0.0).count()
}

fn relative_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub(crate) struct EncodeOutput {
    pub code: LowRankCode,
    pub report: FitReport,
}

/// Runs the ADMM sweeps for one unmasked sample. `state` persists across
/// calls so outer loops can warm-start.
pub(crate) fn encode_unmasked(
    x: &DMatrix<f64>,
    dict: &DictionaryPair,
    grams: &DictGrams,
    cfg: &SolverConfig,
    state: &mut AdmmState,
    record_trace: bool,
) -> Result<EncodeOutput> {
    let ltxr = dict.left().transpose() * x * dict.right();
    let mut report = FitReport::default();
    let elements = (x.nrows() * x.ncols()) as f64;

    let mut iterations = 0usize;
    let mut converged = false;
    let mut prev_u = state.u.clone();
    let mut prev_v = state.v.clone();
    for _ in 0..cfg.inner_iters {
        iterations += 1;
        state.y = update_y_with(&ltxr, &grams.eig_ltl, dict.right(), state, cfg.rho1)?;
        state.w = update_w_with(&ltxr, dict.left(), &grams.eig_rtr, state, cfg.rho2)?;

        let h1 = &state.y - state.gamma1.scale(1.0 / cfg.rho1);
        let h2 = &state.w - state.gamma2.scale(1.0 / cfg.rho2);
        state.u = soft_threshold(&h1, cfg.lambda1 / cfg.rho1)?;
        state.v = soft_threshold(&h2, cfg.lambda2 / cfg.rho2)?;
        state.gamma1 += (&state.u - &state.y).scale(cfg.rho1);
        state.gamma2 += (&state.v - &state.w).scale(cfg.rho2);

        if record_trace {
            let recon = dict.left() * &state.u * &state.v * dict.right().transpose();
            let fit = (x - &recon).norm_squared();
            let g = fit + cfg.lambda1 * l1_norm(&state.u) + cfg.lambda2 * l1_norm(&state.v);
            report.fit_trace.push(fit);
            report.objective_trace.push(g);
            report.rmse_trace.push((fit / elements).sqrt());
            report
                .nnz_trace
                .push((count_nonzero(&state.u) + count_nonzero(&state.v)) as f64);
        }

        // Primal residuals (proxy vs variable) and the dual-residual
        // surrogate (per-sweep proxy change). With near-zero thresholds
        // the duals balance the shrinkage exactly and the primal
        // residuals collapse while the fit is still improving, so both
        // families must be small before stopping.
        report.primal_residual =
            relative_residual(&state.u, &state.y).max(relative_residual(&state.v, &state.w));
        report.dual_residual =
            relative_residual(&state.u, &prev_u).max(relative_residual(&state.v, &prev_v));
        if report.primal_residual.max(report.dual_residual) <= cfg.inner_tol {
            converged = true;
            break;
        }
        prev_u.copy_from(&state.u);
        prev_v.copy_from(&state.v);
    }

    let code = LowRankCode::new(state.u.clone(), state.v.clone())?;
    let fit = (x - code.reconstruct(dict)).norm_squared();
    report.data_fit = fit;
    report.nnz = Some(CodeNnz::LowRank {
        y: count_nonzero(&state.u),
        w: count_nonzero(&state.v),
    });
    report.iterations_used = iterations;
    report.converged = converged;
    Ok(EncodeOutput { code, report })
}

/// Masked variant: the objective fits a data proxy D instead of X and
/// ties D to X on observed entries with weight lambda3. Each sweep
/// refreshes `D = (L·Y·W·Rᵀ + λ₃·Ω⊙X) ⊘ (𝟙 + λ₃·Ω)` and then runs the
/// unmasked updates against D. The returned proxy D (recomputed from the
/// final sparse codes) is the imputation.
pub(crate) fn encode_masked(
    sample: &DataSample,
    dict: &DictionaryPair,
    grams: &DictGrams,
    cfg: &SolverConfig,
    state: &mut AdmmState,
    record_trace: bool,
) -> Result<EncodeOutput> {
    let mask = sample.mask().ok_or_else(|| {
        AodlError::InvalidInput("masked encoding requires a sample mask".into())
    })?;
    let x = sample.values();
    if !(cfg.lambda3 >= 0.0) {
        return Err(AodlError::InvalidConfig(format!(
            "lambda3 must be >= 0, got {}",
            cfg.lambda3
        )));
    }
    let mut report = FitReport::default();
    if mask.iter().all(|&v| v == 0.0) {
        report
            .warnings
            .push("mask has no observed entries; imputation is unconstrained".into());
    }
    let observed = mask.iter().filter(|&&v| v == 1.0).count() as f64;

    // Elementwise pieces of the D update that do not change across sweeps.
    let masked_x = x.component_mul(mask).scale(cfg.lambda3);
    let denom = mask.map(|v| 1.0 + cfg.lambda3 * v);
    let update_d = |yy: &DMatrix<f64>, ww: &DMatrix<f64>| {
        let recon = dict.left() * yy * ww * dict.right().transpose();
        let mut d = recon + &masked_x;
        d.component_div_assign(&denom);
        d
    };

    let mut iterations = 0usize;
    let mut converged = false;
    let mut prev_u = state.u.clone();
    let mut prev_v = state.v.clone();
    for _ in 0..cfg.inner_iters {
        iterations += 1;
        let d = update_d(&state.y, &state.w);
        let ltxr = dict.left().transpose() * &d * dict.right();
        state.y = update_y_with(&ltxr, &grams.eig_ltl, dict.right(), state, cfg.rho1)?;
        state.w = update_w_with(&ltxr, dict.left(), &grams.eig_rtr, state, cfg.rho2)?;

        let h1 = &state.y - state.gamma1.scale(1.0 / cfg.rho1);
        let h2 = &state.w - state.gamma2.scale(1.0 / cfg.rho2);
        state.u = soft_threshold(&h1, cfg.lambda1 / cfg.rho1)?;
        state.v = soft_threshold(&h2, cfg.lambda2 / cfg.rho2)?;
        state.gamma1 += (&state.u - &state.y).scale(cfg.rho1);
        state.gamma2 += (&state.v - &state.w).scale(cfg.rho2);

        if record_trace {
            let recon = dict.left() * &state.u * &state.v * dict.right().transpose();
            let fit = (&d - &recon).norm_squared();
            let tie = (d - x).component_mul(mask).norm_squared() * cfg.lambda3;
            let g = fit + tie + cfg.lambda1 * l1_norm(&state.u) + cfg.lambda2 * l1_norm(&state.v);
            let masked_err = (x - &recon).component_mul(mask).norm_squared();
            report.fit_trace.push(fit + tie);
            report.objective_trace.push(g);
            report
                .rmse_trace
                .push((masked_err / observed.max(1.0)).sqrt());
            report
                .nnz_trace
                .push((count_nonzero(&state.u) + count_nonzero(&state.v)) as f64);
        }

        // Primal residuals (proxy vs variable) and the dual-residual
        // surrogate (per-sweep proxy change). With near-zero thresholds
        // the duals balance the shrinkage exactly and the primal
        // residuals collapse while the fit is still improving, so both
        // families must be small before stopping.
        report.primal_residual =
            relative_residual(&state.u, &state.y).max(relative_residual(&state.v, &state.w));
        report.dual_residual =
            relative_residual(&state.u, &prev_u).max(relative_residual(&state.v, &prev_v));
        if report.primal_residual.max(report.dual_residual) <= cfg.inner_tol {
            converged = true;
            break;
        }
        prev_u.copy_from(&state.u);
        prev_v.copy_from(&state.v);
    }

    // Final proxy from the returned (exactly sparse) codes.
    let d = update_d(&state.u, &state.v);
    let code = LowRankCode::new(state.u.clone(), state.v.clone())?;
    let recon = code.reconstruct(dict);
    report.data_fit =
        (&d - recon).norm_squared() + (&d - x).component_mul(mask).norm_squared() * cfg.lambda3;
    report.nnz = Some(CodeNnz::LowRank {
        y: count_nonzero(&state.u),
        w: count_nonzero(&state.v),
    });
    report.iterations_used = iterations;
    report.converged = converged;
    state.d = Some(d);
    Ok(EncodeOutput { code, report })
}

fn check_shapes(x: &DataSample, dict: &DictionaryPair, cfg: &SolverConfig) -> Result<()> {
    if dict.left().nrows() != x.nrows() || dict.right().nrows() != x.ncols() {
        return Err(AodlError::ShapeMismatch(format!(
            "sample is {}x{} but dictionaries act on {}x{}",
            x.nrows(),
            x.ncols(),
            dict.left().nrows(),
            dict.right().nrows()
        )));
    }
    cfg.validate(dict.p(), dict.q())
}

/// Sparse-codes one unmasked sample against fixed dictionaries.
///
/// Returns the exactly sparse proxy pair and a report whose
/// `objective_trace` holds the single-sample regularized objective per
/// ADMM sweep. Non-convergence within `inner_iters` is reported, not an
/// error. Deterministic for a given `cfg.seed`.
pub fn lrsc(
    x: &DataSample,
    dict: &DictionaryPair,
    cfg: &SolverConfig,
) -> Result<(LowRankCode, FitReport)> {
    check_shapes(x, dict, cfg)?;
    if x.mask().is_some() {
        return Err(AodlError::InvalidInput(
            "sample carries a mask; use lrsc_masked".into(),
        ));
    }
    let grams = DictGrams::new(dict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdmmState::init_random(dict.p(), cfg.rank_k, dict.q(), &mut rng);
    let out = encode_unmasked(x.values(), dict, &grams, cfg, &mut state, true)?;
    Ok((out.code, out.report))
}

/// Sparse-codes one masked sample and imputes its missing entries.
///
/// `lambda3 = 0` is allowed here (the proxy then equals the
/// reconstruction everywhere); the dictionary-learning loops require it
/// to be positive.
pub fn lrsc_masked(
    x: &DataSample,
    dict: &DictionaryPair,
    cfg: &SolverConfig,
) -> Result<(LowRankCode, DMatrix<f64>, FitReport)> {
    check_shapes(x, dict, cfg)?;
    if x.mask().is_none() {
        return Err(AodlError::InvalidInput(
            "lrsc_masked requires a sample mask".into(),
        ));
    }
    let grams = DictGrams::new(dict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdmmState::init_random(dict.p(), cfg.rank_k, dict.q(), &mut rng);
    let out = encode_masked(x, dict, &grams, cfg, &mut state, true)?;
    let imputed = state.d.take().expect("masked encode always sets the proxy");
    Ok((out.code, imputed, out.report))
}

/// Sparse-codes every sample of a dataset against fixed dictionaries.
/// Samples are solved independently (in parallel when a thread pool is
/// available); outputs are in sample order regardless of scheduling.
pub fn encode_dataset(
    data: &crate::types::Dataset,
    dict: &DictionaryPair,
    cfg: &SolverConfig,
) -> Result<Vec<(LowRankCode, FitReport)>> {
    use rayon::prelude::*;
    check_shapes(&data.samples()[0], dict, cfg)?;
    let grams = DictGrams::new(dict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let template = AdmmState::init_random(dict.p(), cfg.rank_k, dict.q(), &mut rng);
    data.samples()
        .par_iter()
        .map(|sample| {
            let mut state = template.clone();
            let out = if sample.mask().is_some() {
                encode_masked(sample, dict, &grams, cfg, &mut state, false)?
            } else {
                encode_unmasked(sample.values(), dict, &grams, cfg, &mut state, false)?
            };
            Ok((out.code, out.report))
        })
        .collect()
}

/// Probe hook used by the scratch example; returns (code, iterations).
pub fn probe_encode(
    x: &DMatrix<f64>,
    dict: &DictionaryPair,
    grams: &DictGrams,
    cfg: &SolverConfig,
    state: &mut AdmmState,
) -> Result<(LowRankCode, usize)> {
    let out = encode_unmasked(x, dict, grams, cfg, state, false)?;
    Ok((out.code, out.report.iterations_used))
}
