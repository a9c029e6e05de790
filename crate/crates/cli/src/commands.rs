//! Command implementations. Every command is reproducible: identical
//! flags and seed produce byte-identical files, and nothing is written
//! outside `--out`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use aodl_core::io::{self, ReportFormat};
use aodl_core::{
    cmod, dict, eval, lrsc, missing, synth, AodlError, DataSample, Dataset, DictionaryPair,
    FullRankCode, InitStrategy, LowRankCode, Result, SolverConfig,
};
use nalgebra::DMatrix;

use crate::{
    AtomsArg, BoundArgs, CodeModelArg, EncodeArgs, EvalArgs, ImputeArgs, InitArg, ModelArg,
    ReportFormatArg, SolverArgs, SynthArgs, TrainArgs, TuneKappaArgs,
};

macro_rules! progress {
    ($quiet:expr, $($arg:tt)*) => {
        if !$quiet {
            eprintln!($($arg)*);
        }
    };
}

impl SolverArgs {
    fn to_config(&self) -> SolverConfig {
        SolverConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            rho1: self.rho1,
            rho2: self.rho2,
            rank_k: self.rank_k,
            dict_p: self.dict_p,
            dict_q: self.dict_q,
            outer_iters: self.outer_iters,
            inner_iters: self.inner_iters,
            outer_tol: self.outer_tol,
            inner_tol: self.inner_tol,
            init: match self.init {
                InitArg::Random => InitStrategy::Random,
                InitArg::Hosvd => InitStrategy::Hosvd,
            },
            seed: self.seed,
            ridge_eps: self.ridge_eps,
        }
    }
}

fn format_value(v: f64) -> String {
    format!("{v:e}")
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_low_rank_codes(dir: &Path, codes: &[LowRankCode]) -> Result<()> {
    for (i, code) in codes.iter().enumerate() {
        io::write_matrix(code.y(), &dir.join(format!("y_{i:04}.mtx")))?;
        io::write_matrix(code.w(), &dir.join(format!("w_{i:04}.mtx")))?;
    }
    Ok(())
}

fn write_full_rank_codes(dir: &Path, codes: &[FullRankCode]) -> Result<()> {
    for (i, code) in codes.iter().enumerate() {
        io::write_matrix(code.z(), &dir.join(format!("z_{i:04}.mtx")))?;
    }
    Ok(())
}

fn load_dictionaries(left: &Path, right: &Path) -> Result<DictionaryPair> {
    DictionaryPair::new_normalized(io::read_matrix(left)?, io::read_matrix(right)?)
}

pub fn run_synth(args: SynthArgs, quiet: bool) -> Result<()> {
    let gcfg = synth::GenConfig {
        n: args.n,
        m: args.m,
        p: args.p,
        q: args.q,
        k: args.k,
        s_samples: args.samples,
        nnz_y: args.nnz_y,
        nnz_w: args.nnz_w,
        snr_db: args.snr_db,
        l1_budget: args.l1_budget,
        atoms: match args.atoms {
            AtomsArg::Random => synth::AtomMode::Random,
            AtomsArg::NearOrthogonal => synth::AtomMode::NearOrthogonal,
        },
    };
    ensure_out(&args.out)?;
    progress!(quiet, "generating {} samples of {}x{}", args.samples, args.n, args.m);
    let (data, gt, gt_codes) = synth::generate(&gcfg, args.seed)?;
    io::write_dataset(&data, &args.out)?;
    io::write_matrix(gt.left(), &args.out.join("gt_left.mtx"))?;
    io::write_matrix(gt.right(), &args.out.join("gt_right.mtx"))?;
    let codes_dir = args.out.join("gt_codes");
    fs::create_dir_all(&codes_dir)?;
    write_low_rank_codes(&codes_dir, &gt_codes)?;
    progress!(quiet, "wrote dataset and ground truth to {}", args.out.display());
    Ok(())
}

pub fn run_train(args: TrainArgs, quiet: bool) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let cfg = args.solver.to_config();
    ensure_out(&args.out)?;
    let masked = data.all_masked();
    if !masked && data.samples().iter().any(|s| s.mask().is_some()) {
        return Err(AodlError::Manifest(
            "manifest mixes masked and unmasked samples".into(),
        ));
    }
    let format = match args.report_format {
        ReportFormatArg::Csv => ReportFormat::Csv,
        ReportFormatArg::Json => ReportFormat::Json,
    };
    let report_name = match args.report_format {
        ReportFormatArg::Csv => "report.csv",
        ReportFormatArg::Json => "report.json",
    };
    match (args.model, masked) {
        (ModelArg::Aodl, false) => {
            progress!(quiet, "training aodl on {} samples", data.len());
            let (dictionary, codes, report) = dict::aodl(&data, &cfg)?;
            io::write_matrix(dictionary.left(), &args.out.join("left.mtx"))?;
            io::write_matrix(dictionary.right(), &args.out.join("right.mtx"))?;
            write_low_rank_codes(&args.out, &codes)?;
            io::write_report(&report, &args.out.join(report_name), format)?;
            progress!(quiet, "done in {} outer iterations", report.iterations_used);
        }
        (ModelArg::Aodl, true) => {
            progress!(quiet, "training masked aodl on {} samples", data.len());
            let (dictionary, codes, imputed, report) = missing::aodl_masked(&data, &cfg)?;
            io::write_matrix(dictionary.left(), &args.out.join("left.mtx"))?;
            io::write_matrix(dictionary.right(), &args.out.join("right.mtx"))?;
            write_low_rank_codes(&args.out, &codes)?;
            for (i, m) in imputed.iter().enumerate() {
                io::write_matrix(m, &args.out.join(format!("imputed_{i:04}.mtx")))?;
            }
            io::write_report(&report, &args.out.join(report_name), format)?;
            progress!(quiet, "done in {} outer iterations", report.iterations_used);
        }
        (ModelArg::Cmod, false) => {
            progress!(quiet, "training cmod on {} samples", data.len());
            let (dictionary, codes, report) = cmod::cmod_learn(&data, &cfg)?;
            io::write_matrix(dictionary.left(), &args.out.join("left.mtx"))?;
            io::write_matrix(dictionary.right(), &args.out.join("right.mtx"))?;
            write_full_rank_codes(&args.out, &codes)?;
            io::write_report(&report, &args.out.join(report_name), format)?;
            progress!(quiet, "done in {} outer iterations", report.iterations_used);
        }
        (ModelArg::Cmod, true) => {
            progress!(quiet, "training masked cmod on {} samples", data.len());
            let (dictionary, codes, imputed, report) = cmod::cmod_masked(&data, &cfg)?;
            io::write_matrix(dictionary.left(), &args.out.join("left.mtx"))?;
            io::write_matrix(dictionary.right(), &args.out.join("right.mtx"))?;
            write_full_rank_codes(&args.out, &codes)?;
            for (i, m) in imputed.iter().enumerate() {
                io::write_matrix(m, &args.out.join(format!("imputed_{i:04}.mtx")))?;
            }
            io::write_report(&report, &args.out.join(report_name), format)?;
            progress!(quiet, "done in {} outer iterations", report.iterations_used);
        }
    }
    Ok(())
}

pub fn run_encode(args: EncodeArgs, quiet: bool) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let dictionary = load_dictionaries(&args.left, &args.right)?;
    let cfg = args.solver.to_config();
    ensure_out(&args.out)?;

    let mut summary = String::from("sample,objective_f,objective_g,rmse,nnz\n");
    match args.model {
        CodeModelArg::Lowrank => {
            progress!(quiet, "encoding {} samples (low-rank)", data.len());
            let mut codes = Vec::with_capacity(data.len());
            for (i, sample) in data.samples().iter().enumerate() {
                let (code, report) = if sample.mask().is_some() {
                    let (code, imputed, report) = lrsc::lrsc_masked(sample, &dictionary, &cfg)?;
                    io::write_matrix(&imputed, &args.out.join(format!("imputed_{i:04}.mtx")))?;
                    (code, report)
                } else {
                    lrsc::lrsc(sample, &dictionary, &cfg)?
                };
                let recon = code.reconstruct(&dictionary);
                let fit = (sample.values() - &recon).norm_squared();
                let g = report.objective_trace.last().copied().unwrap_or(fit);
                let rmse = (fit / recon.len() as f64).sqrt();
                let nnz = report.nnz.map(|n| n.total()).unwrap_or(0);
                let _ = writeln!(
                    summary,
                    "{i},{},{},{},{nnz}",
                    format_value(fit),
                    format_value(g),
                    format_value(rmse)
                );
                codes.push(code);
            }
            write_low_rank_codes(&args.out, &codes)?;
        }
        CodeModelArg::Fullrank => {
            progress!(quiet, "encoding {} samples (full-rank)", data.len());
            let mut codes = Vec::with_capacity(data.len());
            for (i, sample) in data.samples().iter().enumerate() {
                let (code, report) =
                    cmod::cmod_sparse_code(sample, &dictionary, cfg.lambda1, cfg.rho1, &cfg)?;
                let recon = code.reconstruct(&dictionary);
                let fit = (sample.values() - &recon).norm_squared();
                let g = report.objective_trace.last().copied().unwrap_or(fit);
                let rmse = (fit / recon.len() as f64).sqrt();
                let nnz = report.nnz.map(|n| n.total()).unwrap_or(0);
                let _ = writeln!(
                    summary,
                    "{i},{},{},{},{nnz}",
                    format_value(fit),
                    format_value(g),
                    format_value(rmse)
                );
                codes.push(code);
            }
            write_full_rank_codes(&args.out, &codes)?;
        }
    }
    fs::write(args.out.join("encode_summary.csv"), summary)?;
    Ok(())
}

pub fn run_impute(args: ImputeArgs, quiet: bool) -> Result<()> {
    let truth = io::read_dataset(&args.data)?;
    if truth.samples().iter().any(|s| s.mask().is_some()) {
        return Err(AodlError::InvalidInput(
            "imputation benchmarking expects a fully observed dataset".into(),
        ));
    }
    if args.seeds.is_empty() {
        return Err(AodlError::InvalidInput("need at least one seed".into()));
    }
    ensure_out(&args.out)?;
    let base_cfg = args.solver.to_config();

    let mut table = String::from("seed,hide_fraction,model,hidden_rmse,colmean_rmse\n");
    for (run, &seed) in args.seeds.iter().enumerate() {
        let (masked, eval_masks) = missing::hide_fraction(&truth, args.hide_fraction, seed)?;
        let cfg = SolverConfig { seed, ..base_cfg.clone() };
        progress!(
            quiet,
            "seed {seed}: hiding {:.0}% and training",
            args.hide_fraction * 100.0
        );
        let (imputed, model_name) = match args.model {
            ModelArg::Aodl => {
                let (_, _, imputed, _) = missing::aodl_masked(&masked, &cfg)?;
                (imputed, "aodl")
            }
            ModelArg::Cmod => {
                let (_, _, imputed, _) = cmod::cmod_masked(&masked, &cfg)?;
                (imputed, "cmod")
            }
        };
        let scored_truth = Dataset::new(
            truth
                .samples()
                .iter()
                .zip(&eval_masks)
                .map(|(s, m)| DataSample::with_mask(s.values().clone(), m.clone()))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let hidden_rmse = eval::rmse_matrices(&scored_truth, &imputed, true)?;
        let baseline: Vec<DMatrix<f64>> = masked
            .samples()
            .iter()
            .map(missing::column_mean_impute)
            .collect();
        let baseline_rmse = eval::rmse_matrices(&scored_truth, &baseline, true)?;
        let _ = writeln!(
            table,
            "{seed},{},{model_name},{},{}",
            format_value(args.hide_fraction),
            format_value(hidden_rmse),
            format_value(baseline_rmse)
        );
        if run == 0 {
            for (i, m) in imputed.iter().enumerate() {
                io::write_matrix(m, &args.out.join(format!("imputed_{i:04}.mtx")))?;
            }
        }
    }
    fs::write(args.out.join("impute_rmse.csv"), table)?;
    Ok(())
}

fn read_low_rank_codes(dir: &Path, count: usize) -> Result<Vec<LowRankCode>> {
    (0..count)
        .map(|i| {
            let y = io::read_matrix(&dir.join(format!("y_{i:04}.mtx")))?;
            let w = io::read_matrix(&dir.join(format!("w_{i:04}.mtx")))?;
            LowRankCode::new(y, w)
        })
        .collect()
}

fn read_full_rank_codes(dir: &Path, count: usize) -> Result<Vec<FullRankCode>> {
    (0..count)
        .map(|i| FullRankCode::new(io::read_matrix(&dir.join(format!("z_{i:04}.mtx")))?))
        .collect()
}

pub fn run_eval(args: EvalArgs, quiet: bool) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let dictionary = load_dictionaries(&args.left, &args.right)?;
    ensure_out(&args.out)?;
    progress!(quiet, "scoring {} samples", data.len());

    let mut metrics: Vec<(String, f64)> = Vec::new();
    match args.model {
        CodeModelArg::Lowrank => {
            let codes = read_low_rank_codes(&args.codes, data.len())?;
            let recons: Vec<DMatrix<f64>> =
                codes.iter().map(|c| c.reconstruct(&dictionary)).collect();
            metrics.push(("rmse".into(), eval::rmse_matrices(&data, &recons, false)?));
            metrics.push(("nnz".into(), eval::nnz(&codes, 0.0)));
            metrics.push(("kappa".into(), eval::kappa_of(&codes)));
        }
        CodeModelArg::Fullrank => {
            let codes = read_full_rank_codes(&args.codes, data.len())?;
            let recons: Vec<DMatrix<f64>> =
                codes.iter().map(|c| c.reconstruct(&dictionary)).collect();
            metrics.push(("rmse".into(), eval::rmse_matrices(&data, &recons, false)?));
            metrics.push(("nnz".into(), eval::nnz(&codes, 0.0)));
        }
    }
    match (&args.gt_left, &args.gt_right) {
        (Some(gl), Some(gr)) => {
            let gt = load_dictionaries(gl, gr)?;
            metrics.push((
                "f1_left".into(),
                eval::dictionary_f1(&dictionary, &gt, eval::F1Mode::Left)?,
            ));
            metrics.push((
                "f1_right".into(),
                eval::dictionary_f1(&dictionary, &gt, eval::F1Mode::Right)?,
            ));
            metrics.push((
                "f1_kron".into(),
                eval::dictionary_f1(&dictionary, &gt, eval::F1Mode::Kron)?,
            ));
        }
        (None, None) => {}
        _ => {
            return Err(AodlError::InvalidInput(
                "--gt-left and --gt-right must be given together".into(),
            ))
        }
    }

    let mut out = String::from("metric,value\n");
    for (name, value) in metrics {
        let _ = writeln!(out, "{name},{}", format_value(value));
    }
    fs::write(args.out.join("metrics.csv"), out)?;
    Ok(())
}

pub fn run_bound(args: BoundArgs, quiet: bool) -> Result<()> {
    if args.s.is_empty() {
        return Err(AodlError::InvalidInput("need at least one sample count".into()));
    }
    let mut csv = String::from("n,m,p,q,s,c,kappa,x,bound\n");
    for &s in &args.s {
        let value =
            eval::generalization_bound(args.n, args.m, args.p, args.q, s, args.c, args.kappa, args.x)?;
        println!("{value:.6e}");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            args.n,
            args.m,
            args.p,
            args.q,
            s,
            format_value(args.c),
            format_value(args.kappa),
            format_value(args.x),
            format_value(value)
        );
    }
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(out, csv)?;
        progress!(quiet, "wrote {}", out.display());
    }
    Ok(())
}

pub fn run_tune_kappa(args: TuneKappaArgs, quiet: bool) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let cfg = args.solver.to_config();
    ensure_out(&args.out)?;
    let fixed = match (&args.left, &args.right) {
        (Some(l), Some(r)) => Some(load_dictionaries(l, r)?),
        (None, None) => None,
        _ => {
            return Err(AodlError::InvalidInput(
                "--left and --right must be given together".into(),
            ))
        }
    };
    let mut out = String::from("target_kappa,lambda1,lambda2,achieved_kappa,converged,evaluations\n");
    for &target in &args.target_kappa {
        progress!(quiet, "bisecting for kappa = {target}");
        let mode = match &fixed {
            Some(dictionary) => dict::TuneMode::FixedDictionaries(dictionary),
            None => dict::TuneMode::Aodl,
        };
        let tuned = dict::tune_lambda_for_kappa(&data, &cfg, target, args.max_bisect, mode)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_value(target),
            format_value(tuned.lambda1),
            format_value(tuned.lambda2),
            format_value(tuned.achieved_kappa),
            tuned.converged,
            tuned.evaluations
        );
    }
    fs::write(args.out.join("tune_kappa.csv"), out)?;
    Ok(())
}
