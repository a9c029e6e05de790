//! End-to-end solver behavior: ADMM update oracles, encoder quality on
//! generated data, dictionary-update algebra, outer-loop invariants, the
//! masked variants, the full-rank baseline, and regularizer tuning.

mod common;

use aodl_core::dict::{
    aodl, init_dictionaries, objective, tune_lambda_for_kappa, update_dictionaries, TuneMode,
};
use aodl_core::lrsc::{encode_dataset, lrsc, lrsc_masked, update_w, update_y, AdmmState};
use aodl_core::synth::{generate, AtomMode, GenConfig};
use aodl_core::{
    cmod, eval, missing, DataSample, Dataset, DictionaryPair, InitStrategy, LowRankCode,
    SolverConfig,
};
use common::{kron_solve, randn, rng};
use nalgebra::DMatrix;

fn small_gen(seed: u64) -> (Dataset, DictionaryPair, Vec<LowRankCode>) {
    let gcfg = GenConfig {
        n: 8,
        m: 10,
        p: 8,
        q: 10,
        k: 2,
        s_samples: 12,
        nnz_y: 6,
        nnz_w: 6,
        snr_db: Some(30.0),
        l1_budget: None,
        atoms: AtomMode::NearOrthogonal,
    };
    generate(&gcfg, seed).unwrap()
}

fn small_cfg() -> SolverConfig {
    SolverConfig {
        lambda1: 0.05,
        lambda2: 0.05,
        rank_k: 2,
        outer_iters: 40,
        outer_tol: 1e-10,
        inner_iters: 15,
        inner_tol: 1e-6,
        seed: 1,
        ..SolverConfig::default()
    }
}

// --- ADMM update steps against the Kronecker oracle ---

#[test]
fn update_y_matches_kron_oracle() {
    // N=4, M=5, P=3, Q=4, k=2, seed 3: the stationarity system
    // 2·LᵀL·Y·BBᵀ + rho·Y = Pi solved blind by vectorization.
    let mut r = rng(3);
    let left = randn(4, 3, &mut r);
    let right = randn(5, 4, &mut r);
    let x = randn(4, 5, &mut r);
    let state = AdmmState::init_random(3, 2, 4, &mut r);
    let rho1 = 0.9;
    let y = update_y(&x, &left, &right, &state, rho1).unwrap();

    let b = &state.w * right.transpose();
    let g_left = left.transpose() * &left;
    let g_right = &b * b.transpose();
    let pi = (left.transpose() * &x * b.transpose()).scale(2.0)
        + state.u.scale(rho1)
        + &state.gamma1;
    let expected = kron_solve(&g_left, &g_right, &pi, rho1);
    assert!((&y - &expected).norm() <= 1e-8 * expected.norm().max(1.0));
    let residual = (g_left * &y * &g_right).scale(2.0) + y.scale(rho1) - &pi;
    assert!(residual.norm() <= 1e-8 * pi.norm().max(1.0));
}

#[test]
fn update_w_matches_kron_oracle() {
    let mut r = rng(3);
    let left = randn(4, 3, &mut r);
    let right = randn(5, 4, &mut r);
    let x = randn(4, 5, &mut r);
    let state = AdmmState::init_random(3, 2, 4, &mut r);
    let rho2 = 1.7;
    let w = update_w(&x, &left, &right, &state, rho2).unwrap();

    let a = &left * &state.y;
    let g_left = a.transpose() * &a;
    let g_right = right.transpose() * &right;
    let pi = (a.transpose() * &x * &right).scale(2.0) + state.v.scale(rho2) + &state.gamma2;
    let expected = kron_solve(&g_left, &g_right, &pi, rho2);
    assert!((&w - &expected).norm() <= 1e-8 * expected.norm().max(1.0));
}

// --- single-sample encoders ---

#[test]
fn lrsc_reconstructs_noise_free_data() {
    // Generated exactly as L·Y*·W*·Rᵀ; with the true rank and small
    // regularization the encoder must reach RMSE <= 1e-2.
    let gcfg = GenConfig {
        s_samples: 10,
        ..GenConfig::default()
    };
    let (data, gt, _) = generate(&gcfg, 1).unwrap();
    let cfg = SolverConfig {
        lambda1: 1e-4,
        lambda2: 1e-4,
        rank_k: 3,
        inner_iters: 400,
        inner_tol: 1e-8,
        seed: 1,
        ..SolverConfig::default()
    };
    let encoded = encode_dataset(&data, &gt, &cfg).unwrap();
    let recons: Vec<DMatrix<f64>> = encoded.iter().map(|(c, _)| c.reconstruct(&gt)).collect();
    let rmse = eval::rmse_matrices(&data, &recons, false).unwrap();
    assert!(rmse <= 1e-2, "rmse {rmse}");
}

#[test]
fn lrsc_high_precision_on_noise_free_samples() {
    // Tiny regularization and a small penalty weight drive the
    // reconstruction to near machine level.
    let gcfg = GenConfig {
        s_samples: 3,
        ..GenConfig::default()
    };
    let (data, gt, _) = generate(&gcfg, 1).unwrap();
    let cfg = SolverConfig {
        lambda1: 1e-6,
        lambda2: 1e-6,
        rho1: 0.05,
        rho2: 0.05,
        rank_k: 3,
        inner_iters: 2500,
        inner_tol: 1e-14,
        seed: 1,
        ..SolverConfig::default()
    };
    for sample in data.samples() {
        let (code, _) = lrsc(sample, &gt, &cfg).unwrap();
        let recon = code.reconstruct(&gt);
        let rmse = ((sample.values() - recon).norm_squared() / (20.0 * 30.0)).sqrt();
        assert!(rmse <= 1e-6, "rmse {rmse}");
    }
}

#[test]
fn lrsc_primal_residuals_reach_tolerance() {
    // On the reference synthetic configuration the primal residuals
    // drop below the tolerance given a sufficient sweep budget.
    let gcfg = GenConfig {
        snr_db: Some(30.0),
        ..GenConfig::default()
    };
    let (data, gt, _) = generate(&gcfg, 1).unwrap();
    let cfg = SolverConfig {
        lambda1: 0.1,
        lambda2: 0.1,
        rank_k: 3,
        inner_iters: 2500,
        inner_tol: 1e-6,
        seed: 1,
        ..SolverConfig::default()
    };
    let (_, report) = lrsc(&data.samples()[0], &gt, &cfg).unwrap();
    assert!(
        report.primal_residual <= cfg.inner_tol,
        "primal residual {}",
        report.primal_residual
    );
}

#[test]
fn lrsc_is_deterministic() {
    let (data, gt, _) = small_gen(5);
    let cfg = small_cfg();
    let (a, ra) = lrsc(&data.samples()[0], &gt, &cfg).unwrap();
    let (b, rb) = lrsc(&data.samples()[0], &gt, &cfg).unwrap();
    assert_eq!(a.y(), b.y());
    assert_eq!(a.w(), b.w());
    assert_eq!(ra.objective_trace, rb.objective_trace);
}

#[test]
fn masked_all_ones_matches_unmasked() {
    // With a full mask and a huge tie weight the masked solver follows
    // the unmasked one.
    let (data, gt, _) = small_gen(6);
    let sample = &data.samples()[0];
    let cfg = SolverConfig {
        lambda3: 1e9,
        inner_iters: 60,
        ..small_cfg()
    };
    let (plain_code, plain_report) = lrsc(sample, &gt, &cfg).unwrap();
    let masked_sample = DataSample::with_mask(
        sample.values().clone(),
        DMatrix::from_element(sample.nrows(), sample.ncols(), 1.0),
    )
    .unwrap();
    let (masked_code, _, masked_report) = lrsc_masked(&masked_sample, &gt, &cfg).unwrap();

    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm().max(1.0);
    assert!(rel(masked_code.y(), plain_code.y()) < 1e-4);
    assert!(rel(masked_code.w(), plain_code.w()) < 1e-4);
    // Relative objective agreement (the masked objective at D = X and a
    // full mask is the unmasked one).
    let go = plain_report.objective_trace.last().unwrap();
    let gm = masked_report.objective_trace.last().unwrap();
    assert!((go - gm).abs() / go.max(1.0) < 1e-4, "objectives {go} vs {gm}");
}

// --- dictionary updates ---

#[test]
fn dictionary_update_recovers_exact_least_squares() {
    // Full-rank codes (k = P = Q) make the Grams invertible; starting
    // from the truth on the R side, one sweep recovers the generating L
    // and the fit residual vanishes.
    let mut r = rng(21);
    let left_true = randn(6, 3, &mut r);
    let right_true = randn(5, 3, &mut r);
    let truth = DictionaryPair::new_normalized(left_true, right_true).unwrap();
    let y = randn(3, 3, &mut r);
    let w = randn(3, 3, &mut r);
    let code = LowRankCode::new(y, w).unwrap();
    let x = code.reconstruct(&truth);
    let data = Dataset::new(vec![DataSample::new(x.clone()).unwrap()]).unwrap();

    let mut codes = vec![code];
    let updated = update_dictionaries(&data, &mut codes, &truth, 0.0).unwrap();
    let recon = codes[0].reconstruct(&updated);
    assert!((x - recon).norm() <= 1e-8, "fit residual too large");
    for j in 0..updated.p() {
        assert!((updated.left().column(j).norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dictionary_update_never_increases_fit() {
    // Random instances: the closed-form sweep is a descent step on the
    // data-fit objective for fixed codes.
    for seed in 0..5u64 {
        let (data, _, _) = small_gen(seed + 30);
        let dict = init_dictionaries(&data, 8, 10, InitStrategy::Random, seed).unwrap();
        let mut r = rng(seed * 7 + 1);
        let mut codes: Vec<LowRankCode> = (0..data.len())
            .map(|_| LowRankCode::new(randn(8, 2, &mut r), randn(2, 10, &mut r)).unwrap())
            .collect();
        let (before, _) = objective(&data, &dict, &codes, 0.0, 0.0, false).unwrap();
        let updated = update_dictionaries(&data, &mut codes, &dict, 1e-10).unwrap();
        let (after, _) = objective(&data, &updated, &codes, 0.0, 0.0, false).unwrap();
        assert!(after <= before + 1e-9 * before.max(1.0), "{after} > {before}");
    }
}

#[test]
fn normalization_compensation_preserves_products() {
    // Oracle: replay the same two least-squares solves without any
    // normalization or compensation; the reconstructions must agree to
    // 1e-10 relative, entirely through the rescaling bookkeeping.
    let (data, _, _) = small_gen(40);
    let dict = init_dictionaries(&data, 8, 10, InitStrategy::Random, 3).unwrap();
    let mut r = rng(41);
    let originals: Vec<LowRankCode> = (0..data.len())
        .map(|_| LowRankCode::new(randn(8, 2, &mut r), randn(2, 10, &mut r)).unwrap())
        .collect();

    let mut num_l = DMatrix::zeros(8, 8);
    let mut gram_l = DMatrix::zeros(8, 8);
    for (sample, code) in data.samples().iter().zip(&originals) {
        num_l += sample.values() * dict.right() * code.w().transpose() * code.y().transpose();
        let yw_rt = code.y() * code.w() * dict.right().transpose();
        gram_l += &yw_rt * yw_rt.transpose();
    }
    let left_raw = &num_l * gram_l.try_inverse().unwrap();
    let mut num_r = DMatrix::zeros(10, 10);
    let mut gram_r = DMatrix::zeros(10, 10);
    for (sample, code) in data.samples().iter().zip(&originals) {
        let lyw = &left_raw * code.y() * code.w();
        num_r += sample.values().transpose() * &lyw;
        gram_r += lyw.transpose() * lyw;
    }
    let right_raw = &num_r * gram_r.try_inverse().unwrap();

    let mut codes = originals.clone();
    let updated = update_dictionaries(&data, &mut codes, &dict, 0.0).unwrap();
    for (compensated, original) in codes.iter().zip(&originals) {
        let normalized = updated.left()
            * compensated.y()
            * compensated.w()
            * updated.right().transpose();
        let raw = &left_raw * original.y() * original.w() * right_raw.transpose();
        let rel = (&normalized - &raw).norm() / raw.norm().max(1.0);
        assert!(rel <= 1e-10, "product drift {rel}");
    }
}

// --- the outer loop ---

#[test]
fn aodl_trace_is_monotone_within_slack() {
    let (data, _, _) = small_gen(50);
    let cfg = small_cfg();
    let (_, _, report) = aodl(&data, &cfg).unwrap();
    assert!(report.iterations_used > 3);
    for pair in report.objective_trace.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-6 * pair[0].max(1.0),
            "objective rose from {} to {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn aodl_atoms_unit_norm_and_deterministic() {
    let (data, _, _) = small_gen(51);
    let cfg = small_cfg();
    let (dict_a, codes_a, report_a) = aodl(&data, &cfg).unwrap();
    for j in 0..dict_a.p() {
        assert!((dict_a.left().column(j).norm() - 1.0).abs() < 1e-10);
    }
    for j in 0..dict_a.q() {
        assert!((dict_a.right().column(j).norm() - 1.0).abs() < 1e-10);
    }
    // Bitwise determinism across reruns.
    let (dict_b, codes_b, report_b) = aodl(&data, &cfg).unwrap();
    assert_eq!(report_a.objective_trace, report_b.objective_trace);
    assert_eq!(dict_a.left(), dict_b.left());
    for (a, b) in codes_a.iter().zip(&codes_b) {
        assert_eq!(a.y(), b.y());
        assert_eq!(a.w(), b.w());
    }
}

#[test]
fn aodl_identical_samples_get_identical_codes() {
    let (base, _, _) = small_gen(52);
    let sample = base.samples()[0].clone();
    let data = Dataset::new(vec![sample.clone(), sample.clone(), sample]).unwrap();
    let cfg = SolverConfig {
        outer_iters: 10,
        ..small_cfg()
    };
    let (_, codes, _) = aodl(&data, &cfg).unwrap();
    for other in &codes[1..] {
        assert_eq!(codes[0].y(), other.y());
        assert_eq!(codes[0].w(), other.w());
    }
}

#[test]
fn aodl_noise_free_reaches_small_rmse() {
    // Self-consistency: data generated from the model, learned from
    // scratch with small regularization.
    let gcfg = GenConfig {
        n: 8,
        m: 10,
        p: 8,
        q: 10,
        k: 2,
        s_samples: 30,
        nnz_y: 6,
        nnz_w: 6,
        snr_db: None,
        l1_budget: None,
        atoms: AtomMode::NearOrthogonal,
    };
    let (data, _, _) = generate(&gcfg, 1).unwrap();
    let cfg = SolverConfig {
        lambda1: 0.01,
        lambda2: 0.01,
        rank_k: 2,
        outer_iters: 150,
        outer_tol: 1e-12,
        inner_iters: 20,
        inner_tol: 1e-6,
        seed: 1,
        ..SolverConfig::default()
    };
    let (_, _, report) = aodl(&data, &cfg).unwrap();
    let rmse = *report.rmse_trace.last().unwrap();
    assert!(rmse <= 1e-2, "rmse {rmse}");
}

// --- masked learning ---

#[test]
fn aodl_masked_all_ones_tracks_unmasked() {
    let (data, _gt, _) = small_gen(53);
    let masked = Dataset::new(
        data.samples()
            .iter()
            .map(|s| {
                DataSample::with_mask(
                    s.values().clone(),
                    DMatrix::from_element(s.nrows(), s.ncols(), 1.0),
                )
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let cfg = SolverConfig {
        lambda3: 1e9,
        ..small_cfg()
    };
    let (dict_plain, _, _) = aodl(&data, &cfg).unwrap();
    let (dict_masked, _, _, report) = missing::aodl_masked(&masked, &cfg).unwrap();
    // Same seed, numerically equivalent problem: the learned
    // dictionaries must align.
    let f1 = eval::dictionary_f1(&dict_masked, &dict_plain, eval::F1Mode::Left).unwrap();
    assert!(f1 >= 0.99, "left F1 {f1}");
    let f1 = eval::dictionary_f1(&dict_masked, &dict_plain, eval::F1Mode::Right).unwrap();
    assert!(f1 >= 0.99, "right F1 {f1}");
    // Masked trace is monotone within the same slack.
    for pair in report.objective_trace.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-6 * pair[0].max(1.0));
    }
}

#[test]
fn masked_learning_beats_zero_imputation() {
    let mut ours = Vec::new();
    let mut zeros = Vec::new();
    for seed in 1..=5u64 {
        let (clean, _, _) = small_gen(seed + 60);
        let (masked, eval_masks) = missing::hide_fraction(&clean, 0.2, seed).unwrap();
        let cfg = SolverConfig {
            lambda3: 10.0,
            seed,
            ..small_cfg()
        };
        let (_, _, imputed, _) = missing::aodl_masked(&masked, &cfg).unwrap();
        let truth = Dataset::new(
            clean
                .samples()
                .iter()
                .zip(&eval_masks)
                .map(|(s, m)| DataSample::with_mask(s.values().clone(), m.clone()).unwrap())
                .collect(),
        )
        .unwrap();
        ours.push(eval::rmse_matrices(&truth, &imputed, true).unwrap());
        let zero_fill: Vec<DMatrix<f64>> = masked
            .samples()
            .iter()
            .map(|s| s.values().clone())
            .collect();
        zeros.push(eval::rmse_matrices(&truth, &zero_fill, true).unwrap());
    }
    ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(ours[2] <= zeros[2], "median {} vs zero-imputation {}", ours[2], zeros[2]);
}

// --- full-rank baseline ---

#[test]
fn cmod_trace_monotone_and_atoms_unit() {
    let (data, _, _) = small_gen(70);
    let cfg = small_cfg();
    let (dict, _, report) = cmod::cmod_learn(&data, &cfg).unwrap();
    for pair in report.objective_trace.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-6 * pair[0].max(1.0));
    }
    for j in 0..dict.p() {
        assert!((dict.left().column(j).norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn full_rank_beats_rank_one_on_rank_two_data() {
    // A rank-2 instance encoded with k = 1 cannot match the full-rank
    // model's fit at equal (small) regularization.
    let mut r = rng(71);
    let left = randn(6, 6, &mut r).qr().q();
    let right = randn(7, 7, &mut r).qr().q();
    let dict = DictionaryPair::new_normalized(left, right).unwrap();
    let y = randn(6, 2, &mut r);
    let w = randn(2, 7, &mut r);
    let x_mat = dict.left() * &y * &w * dict.right().transpose();
    let x = DataSample::new(x_mat.clone()).unwrap();

    let cfg = SolverConfig {
        lambda1: 1e-3,
        lambda2: 1e-3,
        rank_k: 1,
        inner_iters: 400,
        inner_tol: 1e-10,
        seed: 2,
        ..SolverConfig::default()
    };
    let (lr_code, _) = lrsc(&x, &dict, &cfg).unwrap();
    let lr_fit = (&x_mat - lr_code.reconstruct(&dict)).norm_squared();
    let (fr_code, _) = cmod::cmod_sparse_code(&x, &dict, 1e-3, 1.0, &cfg).unwrap();
    let fr_fit = (&x_mat - fr_code.reconstruct(&dict)).norm_squared();
    assert!(fr_fit <= lr_fit, "full-rank {fr_fit} vs rank-1 {lr_fit}");
}

#[test]
fn cmod_masked_all_ones_tracks_unmasked() {
    let (data, _, _) = small_gen(72);
    let masked = Dataset::new(
        data.samples()
            .iter()
            .map(|s| {
                DataSample::with_mask(
                    s.values().clone(),
                    DMatrix::from_element(s.nrows(), s.ncols(), 1.0),
                )
                .unwrap()
            })
            .collect(),
    )
    .unwrap();
    let cfg = SolverConfig {
        lambda3: 1e9,
        ..small_cfg()
    };
    let (dict_plain, _, _) = cmod::cmod_learn(&data, &cfg).unwrap();
    let (dict_masked, _, imputed, _) = cmod::cmod_masked(&masked, &cfg).unwrap();
    let f1 = eval::dictionary_f1(&dict_masked, &dict_plain, eval::F1Mode::Left).unwrap();
    assert!(f1 >= 0.99, "left F1 {f1}");
    // Full mask: the imputation is exactly the data.
    for (m, s) in imputed.iter().zip(data.samples()) {
        assert_eq!(m, s.values());
    }
}

// --- regularizer tuning ---

#[test]
fn kappa_monotone_in_lambda_and_zero_at_huge_lambda() {
    let (data, gt, _) = small_gen(80);
    let encode_at = |lambda: f64| {
        let cfg = SolverConfig {
            lambda1: lambda,
            lambda2: lambda,
            inner_iters: 60,
            ..small_cfg()
        };
        let codes: Vec<LowRankCode> = encode_dataset(&data, &gt, &cfg)
            .unwrap()
            .into_iter()
            .map(|(c, _)| c)
            .collect();
        eval::kappa_of(&codes)
    };
    let loose = encode_at(0.1);
    let tight = encode_at(10.0);
    assert!(tight <= loose, "kappa(10) = {tight} > kappa(0.1) = {loose}");
    assert_eq!(encode_at(1e6), 0.0);
}

#[test]
fn tune_lambda_hits_target_kappa() {
    // On the reference synthetic configuration the achieved sparsity
    // level is a practically continuous function of the regularizer, so
    // bisection lands within the 5% window. (On very small datasets the
    // max-over-samples makes it piecewise and targets can fall into a
    // jump; that case is covered by the unreachable-target test.)
    let gcfg = GenConfig {
        snr_db: Some(30.0),
        ..GenConfig::default()
    };
    let (data, gt, _) = generate(&gcfg, 81).unwrap();
    let cfg = SolverConfig {
        rank_k: 3,
        inner_iters: 60,
        inner_tol: 1e-6,
        seed: 81,
        ..SolverConfig::default()
    };
    let target = 5.0;
    let tuned =
        tune_lambda_for_kappa(&data, &cfg, target, 24, TuneMode::FixedDictionaries(&gt)).unwrap();
    assert!(tuned.converged, "achieved {}", tuned.achieved_kappa);
    assert!((tuned.achieved_kappa - target).abs() <= 0.05 * target);
    assert_eq!(tuned.lambda1, tuned.lambda2);
}

#[test]
fn tune_lambda_flags_unreachable_target() {
    let (data, gt, _) = small_gen(82);
    let cfg = SolverConfig {
        inner_iters: 30,
        ..small_cfg()
    };
    let tuned =
        tune_lambda_for_kappa(&data, &cfg, 1e9, 4, TuneMode::FixedDictionaries(&gt)).unwrap();
    assert!(!tuned.converged);
}
