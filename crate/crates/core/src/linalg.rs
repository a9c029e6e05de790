//! Dense linear-algebra kernels backing the closed-form updates:
//! symmetric eigendecomposition, the scaled two-sided (generalized
//! Sylvester) solve, and ridge-stabilized inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{AodlError, Result};

/// Eigendecomposition A = Q Λ Qᵀ of a symmetric PSD matrix, with the
/// eigenvalues clamped at zero.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    /// Nonnegative eigenvalues, same order as the columns of `vectors`.
    pub values: DVector<f64>,
}

impl SymEig {
    /// Rebuilds Q Λ Qᵀ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        &scaled * self.vectors.transpose()
    }
}

/// Symmetric PSD eigendecomposition.
///
/// The input is symmetrized as (A + Aᵀ)/2 before decomposition to scrub
/// floating-point asymmetry of Gram products. Eigenvalues that round
/// slightly below zero are clamped at 0; an eigenvalue below
/// −1e-6·max(1, ‖A‖_F) means the input is not PSD and is an error.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEig> {
    if a.nrows() != a.ncols() {
        return Err(AodlError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(AodlError::InvalidInput(
            "eigendecomposition input contains non-finite entries".into(),
        ));
    }
    let sym = (a + a.transpose()).scale(0.5);
    let scale = sym.norm().max(1.0);
    let eig = sym.symmetric_eigen();
    let floor = -1e-6 * scale;
    let mut values = eig.eigenvalues;
    for v in values.iter_mut() {
        if *v < floor {
            return Err(AodlError::Numerical(format!(
                "input is not PSD: eigenvalue {v} below {floor}"
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(SymEig {
        vectors: eig.eigenvectors,
        values,
    })
}

/// Solves `2·G_left·X·G_right + rho·X = Pi` for X, with `G_left` (p×p)
/// and `G_right` (q×q) symmetric PSD and `rho > 0`.
///
/// Diagonalizing both Grams reduces the system to an elementwise divide:
/// with G_left = Q₁Λ₁Q₁ᵀ and G_right = Q₂Λ₂Q₂ᵀ,
/// `[E]_ij = [Q₁ᵀ Π Q₂]_ij / (2·Λ₁_ii·Λ₂_jj + rho)` and `X = Q₁ E Q₂ᵀ`.
pub fn solve_scaled_sylvester(
    g_left: &DMatrix<f64>,
    g_right: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    rho: f64,
) -> Result<DMatrix<f64>> {
    let left = sym_eig(g_left)?;
    let right = sym_eig(g_right)?;
    solve_scaled_sylvester_with(&left, &right, pi, rho)
}

/// Same as [`solve_scaled_sylvester`] but reusing precomputed
/// eigendecompositions of the Gram factors. The ADMM loops call this with
/// cached dictionary Grams.
pub fn solve_scaled_sylvester_with(
    g_left: &SymEig,
    g_right: &SymEig,
    pi: &DMatrix<f64>,
    rho: f64,
) -> Result<DMatrix<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(AodlError::InvalidInput(format!(
            "rho must be finite and > 0, got {rho}"
        )));
    }
    let (p, q) = (g_left.vectors.nrows(), g_right.vectors.nrows());
    if pi.nrows() != p || pi.ncols() != q {
        return Err(AodlError::ShapeMismatch(format!(
            "Pi is {}x{} but Grams are {p}x{p} and {q}x{q}",
            pi.nrows(),
            pi.ncols()
        )));
    }
    let mut e = g_left.vectors.transpose() * pi * &g_right.vectors;
    for j in 0..q {
        for i in 0..p {
            e[(i, j)] /= 2.0 * g_left.values[i] * g_right.values[j] + rho;
        }
    }
    Ok(&g_left.vectors * e * g_right.vectors.transpose())
}

/// Inverse of `A + eps·max(1, trace(A)/n)·I`.
///
/// With `eps = 0` this is the plain inverse; a singular input then yields
/// an error suggesting a positive ridge. The ridge magnitude tracks the
/// trace so the stabilization is scale-free.
pub fn ridge_inverse(a: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(AodlError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(AodlError::InvalidInput(
            "inversion input contains non-finite entries".into(),
        ));
    }
    if eps < 0.0 {
        return Err(AodlError::InvalidInput(format!(
            "ridge eps must be >= 0, got {eps}"
        )));
    }
    let n = a.nrows();
    let ridged = if eps > 0.0 {
        let ridge = eps * (a.trace() / n as f64).max(1.0);
        let mut r = a.clone();
        for i in 0..n {
            r[(i, i)] += ridge;
        }
        r
    } else {
        a.clone()
    };
    ridged.try_inverse().ok_or_else(|| {
        AodlError::SingularMatrix(
            "matrix is singular to machine precision; set ridge_eps > 0".into(),
        )
    })
}
