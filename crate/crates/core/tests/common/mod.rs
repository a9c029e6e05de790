//! Shared test helpers: a brute-force Kronecker-vectorized solver used
//! as the independent oracle for the two-sided scaled solves, and
//! seeded random-matrix generators. Nothing here touches the library's
//! eigendecomposition path.

// Each integration-test binary compiles this module separately and uses
// a different subset of it.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    })
}

/// Random symmetric PSD matrix G·Gᵀ.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = randn(n, n, rng);
    &g * g.transpose()
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scaled = b.scale(a[(i, j)]);
            for bi in 0..br {
                for bj in 0..bc {
                    out[(i * br + bi, j * bc + bj)] = scaled[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut v = DMatrix::zeros(r * c, 1);
    for j in 0..c {
        for i in 0..r {
            v[(j * r + i, 0)] = m[(i, j)];
        }
    }
    v
}

fn unvec(v: &DMatrix<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[(j * rows + i, 0)];
        }
    }
    m
}

/// Brute-force solution of `2·G_left·X·G_right + rho·X = Pi` via the
/// dense linear system `(2·G_rightᵀ ⊗ G_left + rho·I)·vec(X) = vec(Pi)`.
pub fn kron_solve(
    g_left: &DMatrix<f64>,
    g_right: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    rho: f64,
) -> DMatrix<f64> {
    let (p, q) = pi.shape();
    let mut system = kron(&g_right.transpose(), g_left).scale(2.0);
    for i in 0..p * q {
        system[(i, i)] += rho;
    }
    let rhs = vec_of(pi);
    let solution = system
        .lu()
        .solve(&rhs)
        .expect("oracle system is positive definite");
    unvec(&solution, p, q)
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
