//! Two-way dictionary learning with low-rank sparse coding.
//!
//! A dataset of matrix samples X_s is modeled as X_s ≈ L·Y_s·W_s·Rᵀ with
//! shared left/right dictionaries (L, R) learned from the data and slim
//! per-sample code factors (Y_s, W_s) of rank at most k. Sparse coding is
//! ADMM with closed-form two-sided solves and soft-thresholding;
//! dictionary updates are closed-form least squares with atom
//! normalization compensated into the codes. The crate also ships the
//! masked (missing-value) variants, the full-rank CMOD-ADMM baseline,
//! a synthetic-data generator, metrics, a generalization-bound
//! evaluator, and plain-text file formats for all artifacts.

pub mod cmod;
pub mod dict;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod lrsc;
pub mod missing;
pub mod synth;
pub mod types;

pub use error::{AodlError, Result};
pub use types::{
    CodeNnz, DataSample, Dataset, DictionaryPair, FitReport, FullRankCode, InitStrategy,
    LowRankCode, SolverConfig,
};
