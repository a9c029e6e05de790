//! Full-rank two-way dictionary learning baseline with ADMM sparse
//! coding. Each sample is encoded by a single P×Q matrix Z instead of
//! the slim pair (Y, W); the algebra is otherwise the same: a scaled
//! two-sided solve for Z, soft-thresholding of its proxy, and the same
//! closed-form dictionary sweeps with Z in place of Y·W.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dict::{init_dictionaries, normalize_with_guard};
use crate::error::{AodlError, Result};
use crate::linalg::{ridge_inverse, solve_scaled_sylvester_with};
use crate::lrsc::{soft_threshold, DictGrams};
use crate::types::{
    CodeNnz, DataSample, Dataset, DictionaryPair, FitReport, FullRankCode, SolverConfig,
};

const INIT_SCALE: f64 = 0.1;

/// ADMM iterate for one full-rank encoding.
#[derive(Debug, Clone)]
struct CmodState {
    z: DMatrix<f64>,
    u: DMatrix<f64>,
    gamma: DMatrix<f64>,
    d: Option<DMatrix<f64>>,
}

impl CmodState {
    fn init_random(p: usize, q: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| {
                INIT_SCALE * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            })
        };
        let z = draw(p, q);
        let u = draw(p, q);
        let gamma = draw(p, q);
        Self {
            z,
            u,
            gamma,
            d: None,
        }
    }

    fn compensate(&mut self, left_scales: &[f64], right_scales: &[f64]) {
        for m in [&mut self.z, &mut self.u, &mut self.gamma] {
            for (i, &f) in left_scales.iter().enumerate() {
                m.row_mut(i).scale_mut(f);
            }
            for (j, &f) in right_scales.iter().enumerate() {
                m.column_mut(j).scale_mut(f);
            }
        }
    }
}

fn count_nonzero(m: &DMatrix<f64>) -> usize {
    m.iter().filter(|&&v| v != 0.0).count()
}

fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

struct CmodOutput {
    code: FullRankCode,
    report: FitReport,
}

/// ADMM sweeps for one sample. The Z step solves
/// `2·LᵀL·Z·RᵀR + rho·Z = 2·LᵀXR + rho·U + Γ`; the proxy U is the
/// soft-thresholded iterate and is what gets returned.
fn encode_full_rank(
    sample: &DataSample,
    dict: &DictionaryPair,
    grams: &DictGrams,
    lambda1: f64,
    rho: f64,
    cfg: &SolverConfig,
    state: &mut CmodState,
    masked: bool,
    record_trace: bool,
) -> Result<CmodOutput> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(AodlError::InvalidConfig(format!(
            "rho must be finite and > 0, got {rho}"
        )));
    }
    if !(lambda1 >= 0.0) {
        return Err(AodlError::InvalidConfig(format!(
            "lambda1 must be >= 0, got {lambda1}"
        )));
    }
    let x = sample.values();
    let mask = if masked {
        Some(sample.mask().ok_or_else(|| {
            AodlError::InvalidInput("masked encoding requires a sample mask".into())
        })?)
    } else {
        None
    };
    let mut report = FitReport::default();
    if let Some(mask) = mask {
        if mask.iter().all(|&v| v == 0.0) {
            report
                .warnings
                .push("mask has no observed entries; imputation is unconstrained".into());
        }
    }

    let ltxr = dict.left().transpose() * x * dict.right();
    let masked_x = mask.map(|m| x.component_mul(m).scale(cfg.lambda3));
    let denom = mask.map(|m| m.map(|v| 1.0 + cfg.lambda3 * v));
    let update_d = |zz: &DMatrix<f64>| {
        let recon = dict.left() * zz * dict.right().transpose();
        let mut d = recon + masked_x.as_ref().unwrap();
        d.component_div_assign(denom.as_ref().unwrap());
        d
    };

    let elements = (x.nrows() * x.ncols()) as f64;
    let observed = mask
        .map(|m| m.iter().filter(|&&v| v == 1.0).count() as f64)
        .unwrap_or(elements);

    let mut iterations = 0usize;
    let mut converged = false;
    let mut prev_u = state.u.clone();
    for _ in 0..cfg.inner_iters {
        iterations += 1;
        let pi = if masked {
            let d = update_d(&state.z);
            let ltdr = dict.left().transpose() * &d * dict.right();
            ltdr.scale(2.0) + state.u.scale(rho) + &state.gamma
        } else {
            ltxr.scale(2.0) + state.u.scale(rho) + &state.gamma
        };
        state.z = solve_scaled_sylvester_with(&grams.eig_ltl, &grams.eig_rtr, &pi, rho)?;
        let h = &state.z - state.gamma.scale(1.0 / rho);
        state.u = soft_threshold(&h, lambda1 / rho)?;
        state.gamma += (&state.u - &state.z).scale(rho);

        if record_trace {
            let recon = dict.left() * &state.u * dict.right().transpose();
            let (fit, rmse) = match mask {
                Some(m) => {
                    let d = update_d(&state.u);
                    let fit = (&d - &recon).norm_squared()
                        + cfg.lambda3 * (&d - x).component_mul(m).norm_squared();
                    let masked_err = (x - &recon).component_mul(m).norm_squared();
                    (fit, (masked_err / observed.max(1.0)).sqrt())
                }
                None => {
                    let fit = (x - &recon).norm_squared();
                    (fit, (fit / elements).sqrt())
                }
            };
            report.fit_trace.push(fit);
            report.objective_trace.push(fit + lambda1 * l1_norm(&state.u));
            report.rmse_trace.push(rmse);
            report.nnz_trace.push(count_nonzero(&state.u) as f64);
        }

        // Combined primal and dual-surrogate residuals; see the
        // low-rank encoder for why primal alone terminates too early.
        report.primal_residual = (&state.u - &state.z).norm() / state.z.norm().max(1.0);
        report.dual_residual = (&state.u - &prev_u).norm() / prev_u.norm().max(1.0);
        if report.primal_residual.max(report.dual_residual) <= cfg.inner_tol {
            converged = true;
            break;
        }
        prev_u.copy_from(&state.u);
    }

    let code = FullRankCode::new(state.u.clone())?;
    let recon = code.reconstruct(dict);
    report.data_fit = match mask {
        Some(m) => {
            let d = update_d(&state.u);
            let fit = (&d - &recon).norm_squared()
                + cfg.lambda3 * (&d - x).component_mul(m).norm_squared();
            state.d = Some(d);
            fit
        }
        None => (x - recon).norm_squared(),
    };
    report.nnz = Some(CodeNnz::FullRank {
        z: count_nonzero(&state.u),
    });
    report.iterations_used = iterations;
    report.converged = converged;
    Ok(CmodOutput { code, report })
}

/// Sparse-codes one unmasked sample with the full-rank model against
/// fixed dictionaries. Mirrors the low-rank encoder's contract: returned
/// codes are the exactly sparse proxy.
pub fn cmod_sparse_code(
    x: &DataSample,
    dict: &DictionaryPair,
    lambda1: f64,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<(FullRankCode, FitReport)> {
    if dict.left().nrows() != x.nrows() || dict.right().nrows() != x.ncols() {
        return Err(AodlError::ShapeMismatch(format!(
            "sample is {}x{} but dictionaries act on {}x{}",
            x.nrows(),
            x.ncols(),
            dict.left().nrows(),
            dict.right().nrows()
        )));
    }
    if x.mask().is_some() {
        return Err(AodlError::InvalidInput(
            "sample carries a mask; use cmod_masked for masked data".into(),
        ));
    }
    let grams = DictGrams::new(dict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = CmodState::init_random(dict.p(), dict.q(), &mut rng);
    let out = encode_full_rank(x, dict, &grams, lambda1, rho, cfg, &mut state, false, true)?;
    Ok((out.code, out.report))
}

/// Full-rank dictionary learning (unmasked). Uses `cfg.lambda1` as the
/// sparsity weight and `cfg.rho1` as the ADMM penalty.
pub fn cmod_learn(
    data: &Dataset,
    cfg: &SolverConfig,
) -> Result<(DictionaryPair, Vec<FullRankCode>, FitReport)> {
    if data.samples().iter().any(|s| s.mask().is_some()) {
        return Err(AodlError::InvalidInput(
            "dataset carries masks; use cmod_masked".into(),
        ));
    }
    let (dict, codes, _, report) = run_cmod_loop(data, cfg, false)?;
    Ok((dict, codes, report))
}

/// Full-rank dictionary learning with missing values; mirrors the
/// masked low-rank learner (proxy D per sample, imputation at the end).
pub fn cmod_masked(
    data: &Dataset,
    cfg: &SolverConfig,
) -> Result<(DictionaryPair, Vec<FullRankCode>, Vec<DMatrix<f64>>, FitReport)> {
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
    let (dict, codes, imputed, report) = run_cmod_loop(data, cfg, true)?;
    Ok((dict, codes, imputed, report))
}

#[allow(clippy::type_complexity)]
fn run_cmod_loop(
    data: &Dataset,
    cfg: &SolverConfig,
    masked: bool,
) -> Result<(DictionaryPair, Vec<FullRankCode>, Vec<DMatrix<f64>>, FitReport)> {
    let (n, m) = (data.nrows(), data.ncols());
    let (p, q) = cfg.dict_sizes(n, m);
    cfg.validate(p, q)?;
    let mut dict = init_dictionaries(data, p, q, cfg.init, cfg.seed)?;

    let mut codes: Vec<FullRankCode> = (0..data.len()).map(|_| FullRankCode::zeros(p, q)).collect();
    let mut report = FitReport::default();
    if cfg.outer_iters == 0 {
        report.nnz = Some(CodeNnz::FullRank { z: 0 });
        return Ok((dict, codes, Vec::new(), report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let template = CmodState::init_random(p, q, &mut rng);
    let mut states: Vec<CmodState> = vec![template; data.len()];

    let mut g_prev: Option<f64> = None;
    for _ in 0..cfg.outer_iters {
        report.iterations_used += 1;
        let grams = DictGrams::new(&dict)?;

        let results: Vec<FullRankCode> = data
            .samples()
            .par_iter()
            .zip(states.par_iter_mut())
            .map(|(sample, state)| {
                let out = encode_full_rank(
                    sample, &dict, &grams, cfg.lambda1, cfg.rho1, cfg, state, masked, false,
                )?;
                Ok(out.code)
            })
            .collect::<Result<_>>()?;
        codes = results;

        let (new_dict, lscales, rscales) = if masked {
            let proxies: Vec<DataSample> = states
                .iter()
                .map(|s| {
                    DataSample::new(s.d.clone().expect("masked encode always sets the proxy"))
                })
                .collect::<Result<_>>()?;
            update_full_rank_dictionaries(&Dataset::new(proxies)?, &mut codes, &dict, cfg.ridge_eps)?
        } else {
            update_full_rank_dictionaries(data, &mut codes, &dict, cfg.ridge_eps)?
        };
        dict = new_dict;
        for state in states.iter_mut() {
            state.compensate(&lscales, &rscales);
        }

        // Trace entry at the proxies.
        let mut fit = 0.0;
        let mut penalty = 0.0;
        let mut rmse = 0.0;
        let mut nnz = 0usize;
        for ((sample, code), state) in data.samples().iter().zip(&codes).zip(&states) {
            let recon = code.reconstruct(&dict);
            if masked {
                let mask = sample.mask().expect("checked above");
                let d = state.d.as_ref().expect("masked encode always sets the proxy");
                fit += (d - &recon).norm_squared()
                    + cfg.lambda3 * (d - sample.values()).component_mul(mask).norm_squared();
                let observed = mask.iter().filter(|&&v| v == 1.0).count();
                let err = (sample.values() - &recon).component_mul(mask).norm_squared();
                rmse += (err / observed.max(1) as f64).sqrt();
            } else {
                let err = (sample.values() - &recon).norm_squared();
                fit += err;
                rmse += (err / recon.len() as f64).sqrt();
            }
            penalty += cfg.lambda1 * l1_norm(code.z());
            nnz += count_nonzero(code.z());
        }
        let s = data.len() as f64;
        let g = fit + penalty;
        report.fit_trace.push(fit);
        report.objective_trace.push(g);
        report.rmse_trace.push(rmse / s);
        report.nnz_trace.push(nnz as f64 / s);
        report.data_fit = fit;
        report.nnz = Some(CodeNnz::FullRank { z: nnz });

        if let Some(prev) = g_prev {
            if (g - prev).abs() / prev.max(1.0) <= cfg.outer_tol {
                report.converged = true;
                break;
            }
        }
        g_prev = Some(g);
    }

    let imputed = if masked {
        data.samples()
            .iter()
            .zip(&states)
            .map(|(sample, state)| {
                let mask = sample.mask().expect("checked above");
                let d = state.d.as_ref().expect("masked encode always sets the proxy");
                DMatrix::from_fn(n, m, |i, j| {
                    if mask[(i, j)] == 1.0 {
                        sample.values()[(i, j)]
                    } else {
                        d[(i, j)]
                    }
                })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((dict, codes, imputed, report))
}

/// Closed-form dictionary sweep with Z in place of Y·W: L from
/// `(Σ X·R·Zᵀ)(Σ Z·RᵀR·Zᵀ)⁻¹`, then R against the new L, with the same
/// normalize-and-compensate treatment (Z rows and columns pick up the
/// raw atom norms).
fn update_full_rank_dictionaries(
    data: &Dataset,
    codes: &mut [FullRankCode],
    current: &DictionaryPair,
    ridge_eps: f64,
) -> Result<(DictionaryPair, Vec<f64>, Vec<f64>)> {
    let (p, q) = (current.p(), current.q());
    let mut num_l = DMatrix::zeros(data.nrows(), p);
    let mut gram_l = DMatrix::zeros(p, p);
    for (sample, code) in data.samples().iter().zip(codes.iter()) {
        let xr = sample.values() * current.right();
        num_l += xr * code.z().transpose();
        let zrt = code.z() * current.right().transpose();
        gram_l += &zrt * zrt.transpose();
    }
    let raw_l = &num_l * ridge_inverse(&gram_l, ridge_eps)?;
    let (left, left_scales) = normalize_with_guard(raw_l, current.left());
    for code in codes.iter_mut() {
        code.scale_rows(&left_scales);
    }

    let mut num_r = DMatrix::zeros(data.ncols(), q);
    let mut gram_r = DMatrix::zeros(q, q);
    for (sample, code) in data.samples().iter().zip(codes.iter()) {
        let lz = &left * code.z();
        num_r += sample.values().transpose() * &lz;
        gram_r += lz.transpose() * lz;
    }
    let raw_r = &num_r * ridge_inverse(&gram_r, ridge_eps)?;
    let (right, right_scales) = normalize_with_guard(raw_r, current.right());
    for code in codes.iter_mut() {
        code.scale_cols(&right_scales);
    }

    Ok((DictionaryPair::new(left, right)?, left_scales, right_scales))
}
