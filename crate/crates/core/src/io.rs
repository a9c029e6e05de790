//! Plain-text file formats for matrices, datasets and solver reports.
//!
//! Matrix files ("MTX-TXT"): the first line is `<rows> <cols>`, followed
//! by one line per row of space-separated decimal floats. Values are
//! written in shortest-round-trip scientific notation, so a write→read
//! round trip is bitwise exact. LF line endings, no trailing whitespace.
//!
//! Dataset manifests are JSON files listing the sample files (and
//! optionally a parallel list of mask files) with the expected shape;
//! relative paths resolve against the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AodlError, Result};
use crate::types::{DataSample, Dataset, FitReport};

fn format_value(v: f64) -> String {
    format!("{v:e}")
}

/// Serializes a matrix in the MTX-TXT format.
pub fn write_matrix(matrix: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", matrix.nrows(), matrix.ncols());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format_value(matrix[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses a MTX-TXT file. Errors carry the 1-based line number of the
/// offending token, including for short files and extra rows.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let content = fs::read_to_string(path)?;
    parse_matrix(&content)
}

/// Parses MTX-TXT content from a string; see [`read_matrix`].
pub fn parse_matrix(content: &str) -> Result<DMatrix<f64>> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or(AodlError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(AodlError::Parse {
            line: 1,
            message: format!("expected '<rows> <cols>', got '{header}'"),
        });
    }
    let parse_dim = |token: &str| {
        token.parse::<usize>().map_err(|_| AodlError::Parse {
            line: 1,
            message: format!("'{token}' is not a dimension"),
        })
    };
    let rows = parse_dim(dims[0])?;
    let cols = parse_dim(dims[1])?;

    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            return Err(AodlError::Parse {
                line: lineno,
                message: "blank line inside matrix body".into(),
            });
        }
        if seen_rows == rows {
            return Err(AodlError::Parse {
                line: lineno,
                message: format!("header declared {rows} rows but more data follows"),
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(AodlError::Parse {
                line: lineno,
                message: format!("expected {cols} values, found {}", tokens.len()),
            });
        }
        for token in tokens {
            let v: f64 = token.parse().map_err(|_| AodlError::Parse {
                line: lineno,
                message: format!("'{token}' is not a number"),
            })?;
            data.push(v);
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(AodlError::Parse {
            line: seen_rows + 2,
            message: format!("header declared {rows} rows but file ends after {seen_rows}"),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    n: usize,
    m: usize,
    samples: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    masks: Option<Vec<String>>,
}

/// Writes every sample (and mask) of a dataset as MTX-TXT files inside
/// `dir` plus a `manifest.json` tying them together. Returns the
/// manifest path.
pub fn write_dataset(data: &Dataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut samples = Vec::with_capacity(data.len());
    let mut masks = Vec::new();
    let any_masks = data.samples().iter().any(|s| s.mask().is_some());
    for (i, sample) in data.samples().iter().enumerate() {
        let name = format!("sample_{i:04}.mtx");
        write_matrix(sample.values(), &dir.join(&name))?;
        samples.push(name);
        if any_masks {
            let mask = sample.mask().ok_or_else(|| {
                AodlError::Manifest("cannot write a dataset with masks on only some samples".into())
            })?;
            let mask_name = format!("mask_{i:04}.mtx");
            write_matrix(mask, &dir.join(&mask_name))?;
            masks.push(mask_name);
        }
    }
    let manifest = ManifestFile {
        n: data.nrows(),
        m: data.ncols(),
        samples,
        masks: if any_masks { Some(masks) } else { None },
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Loads a dataset from a manifest, validating the declared shape and
/// the sample/mask pairing.
pub fn read_dataset(manifest_path: &Path) -> Result<Dataset> {
    let content = fs::read_to_string(manifest_path)?;
    let manifest: ManifestFile = serde_json::from_str(&content)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    if manifest.samples.is_empty() {
        return Err(AodlError::Manifest("manifest lists no samples".into()));
    }
    if let Some(masks) = &manifest.masks {
        if masks.len() != manifest.samples.len() {
            return Err(AodlError::Manifest(format!(
                "{} samples but {} masks",
                manifest.samples.len(),
                masks.len()
            )));
        }
    }
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for (i, rel) in manifest.samples.iter().enumerate() {
        let values = read_matrix(&base.join(rel))?;
        if values.nrows() != manifest.n || values.ncols() != manifest.m {
            return Err(AodlError::Manifest(format!(
                "sample '{rel}' is {}x{} but the manifest declares {}x{}",
                values.nrows(),
                values.ncols(),
                manifest.n,
                manifest.m
            )));
        }
        let sample = match &manifest.masks {
            Some(masks) => {
                let mask = read_matrix(&base.join(&masks[i]))?;
                DataSample::with_mask(values, mask)?
            }
            None => DataSample::new(values)?,
        };
        samples.push(sample);
    }
    Dataset::new(samples)
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct ReportRow {
    iter: usize,
    objective_f: f64,
    objective_g: f64,
    rmse: f64,
    nnz: f64,
}

#[derive(Serialize)]
struct ReportDoc {
    iterations_used: usize,
    converged: bool,
    data_fit: f64,
    rows: Vec<ReportRow>,
}

fn report_rows(report: &FitReport) -> Vec<ReportRow> {
    (0..report.objective_trace.len())
        .map(|i| ReportRow {
            iter: i + 1,
            objective_f: report.fit_trace.get(i).copied().unwrap_or(f64::NAN),
            objective_g: report.objective_trace[i],
            rmse: report.rmse_trace.get(i).copied().unwrap_or(f64::NAN),
            nnz: report.nnz_trace.get(i).copied().unwrap_or(f64::NAN),
        })
        .collect()
}

/// Writes the per-iteration convergence table, one row per iteration.
pub fn write_report(report: &FitReport, path: &Path, format: ReportFormat) -> Result<()> {
    let rows = report_rows(report);
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("iter,objective_f,objective_g,rmse,nnz\n");
            for row in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.iter,
                    format_value(row.objective_f),
                    format_value(row.objective_g),
                    format_value(row.rmse),
                    format_value(row.nnz)
                );
            }
            fs::write(path, out)?;
        }
        ReportFormat::Json => {
            let doc = ReportDoc {
                iterations_used: report.iterations_used,
                converged: report.converged,
                data_fit: report.data_fit,
                rows,
            };
            fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}
