//! `aodl` — experiment front end for two-way low-rank dictionary
//! learning: data generation, training, encoding, imputation, metrics,
//! the generalization-bound calculator, and sparsity-level tuning.
//!
//! Exit codes: 0 on success, 1 on validation/usage errors, 2 on
//! numerical failures. Progress goes to standard error; results go to
//! files under `--out` (the bound calculator also prints its value).

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aodl", version, about = "Two-way dictionary learning with low-rank sparse coding")]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads for per-sample parallelism (default: available
    /// parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known dictionaries.
    Synth(SynthArgs),
    /// Learn dictionaries and codes from a dataset manifest.
    Train(TrainArgs),
    /// Sparse-code a dataset against fixed dictionaries.
    Encode(EncodeArgs),
    /// Hide entries, learn with masks, score hidden-entry recovery.
    Impute(ImputeArgs),
    /// Metrics for stored codes and dictionaries.
    Eval(EvalArgs),
    /// Generalization-bound calculator.
    Bound(BoundArgs),
    /// Bisection search of the regularizers for a target sparsity level.
    TuneKappa(TuneKappaArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Aodl,
    Cmod,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeModelArg {
    Lowrank,
    Fullrank,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Hosvd,
}

#[derive(Clone, Copy, ValueEnum)]
enum AtomsArg {
    Random,
    NearOrthogonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 30)]
    q: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long = "nnz-y", default_value_t = 15)]
    nnz_y: usize,
    #[arg(long = "nnz-w", default_value_t = 15)]
    nnz_w: usize,
    /// Signal-to-noise ratio in dB; omit for noise-free data.
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    /// Exact L1 norm for every code factor.
    #[arg(long = "l1-budget")]
    l1_budget: Option<f64>,
    #[arg(long, value_enum, default_value_t = AtomsArg::Random)]
    atoms: AtomsArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda2: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda3: f64,
    #[arg(long, default_value_t = 1.0)]
    rho1: f64,
    #[arg(long, default_value_t = 1.0)]
    rho2: f64,
    #[arg(long = "rank-k", default_value_t = 3)]
    rank_k: usize,
    /// Left atom count; defaults to N (square dictionary).
    #[arg(long = "dict-p")]
    dict_p: Option<usize>,
    /// Right atom count; defaults to M.
    #[arg(long = "dict-q")]
    dict_q: Option<usize>,
    #[arg(long = "outer-iters", default_value_t = 300)]
    outer_iters: usize,
    #[arg(long = "outer-tol", default_value_t = 1e-6)]
    outer_tol: f64,
    #[arg(long = "inner-iters", default_value_t = 200)]
    inner_iters: usize,
    #[arg(long = "inner-tol", default_value_t = 1e-6)]
    inner_tol: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
    #[arg(long = "ridge-eps", default_value_t = 1e-8)]
    ridge_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Aodl)]
    model: ModelArg,
    /// Dataset manifest (JSON). A manifest with masks selects the
    /// masked learner automatically.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long = "report-format", value_enum, default_value_t = ReportFormatArg::Csv)]
    report_format: ReportFormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Left dictionary matrix file.
    #[arg(long)]
    left: PathBuf,
    /// Right dictionary matrix file.
    #[arg(long)]
    right: PathBuf,
    #[arg(long, value_enum, default_value_t = CodeModelArg::Lowrank)]
    model: CodeModelArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Fraction of observed entries to hide, in [0, 1].
    #[arg(long = "hide-fraction", default_value_t = 0.1)]
    hide_fraction: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Aodl)]
    model: ModelArg,
    /// Comma-separated list of seeds; one run per seed.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    /// Directory holding y_####.mtx/w_####.mtx (or z_####.mtx) files.
    #[arg(long)]
    codes: PathBuf,
    #[arg(long, value_enum, default_value_t = CodeModelArg::Lowrank)]
    model: CodeModelArg,
    /// Ground-truth dictionaries enabling the F1 scores.
    #[arg(long = "gt-left")]
    gt_left: Option<PathBuf>,
    #[arg(long = "gt-right")]
    gt_right: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 30)]
    q: usize,
    /// Sample counts; several values produce one row per count.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    s: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 2.0)]
    x: f64,
    /// Optional CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneKappaArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated target sparsity levels.
    #[arg(long = "target-kappa", value_delimiter = ',', default_value = "10")]
    target_kappa: Vec<f64>,
    #[arg(long = "max-bisect", default_value_t = 20)]
    max_bisect: usize,
    /// Fixed dictionaries: tune by sparse coding only. Omit both to run
    /// full dictionary learning per bisection step.
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    right: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            return ExitCode::from(1);
        }
    };

    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure thread pool: {err}");
            return ExitCode::from(1);
        }
    }

    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Synth(args) => commands::run_synth(args, quiet),
        Command::Train(args) => commands::run_train(args, quiet),
        Command::Encode(args) => commands::run_encode(args, quiet),
        Command::Impute(args) => commands::run_impute(args, quiet),
        Command::Eval(args) => commands::run_eval(args, quiet),
        Command::Bound(args) => commands::run_bound(args, quiet),
        Command::TuneKappa(args) => commands::run_tune_kappa(args, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
