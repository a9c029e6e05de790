//! Linear-algebra kernels checked against independent brute-force
//! oracles: the Kronecker-vectorized dense solve for the two-sided
//! system, and direct reconstruction for the eigendecomposition.

mod common;

use aodl_core::linalg::{ridge_inverse, solve_scaled_sylvester, sym_eig};
use common::{kron_solve, random_psd, randn, rel_err, rng};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn sym_eig_reconstructs_random_gram() {
    let mut r = rng(7);
    let g = randn(5, 5, &mut r);
    let a = &g * g.transpose();
    let eig = sym_eig(&a).unwrap();
    let residual = (eig.reconstruct() - &a).norm();
    assert!(residual <= 1e-8 * a.norm().max(1.0), "residual {residual}");
    let qtq = eig.vectors.transpose() * &eig.vectors;
    assert!((qtq - DMatrix::identity(5, 5)).norm() < 1e-8);
    assert!(eig.values.iter().all(|&v| v >= 0.0));
}

#[test]
fn sylvester_matches_kron_oracle_on_seeded_instances() {
    // The reference instance family: random PSD Grams, 3x4 unknowns.
    let mut r = rng(11);
    for _ in 0..20 {
        let g_left = random_psd(3, &mut r);
        let g_right = random_psd(4, &mut r);
        let pi = randn(3, 4, &mut r);
        let rho = 0.7;
        let x = solve_scaled_sylvester(&g_left, &g_right, &pi, rho).unwrap();
        let expected = kron_solve(&g_left, &g_right, &pi, rho);
        assert!(rel_err(&x, &expected) <= 1e-8);
        // And the stationarity equation itself.
        let residual = (g_left.clone() * &x * &g_right).scale(2.0) + x.scale(rho) - &pi;
        assert!(residual.norm() <= 1e-8 * pi.norm().max(1.0));
    }
}

#[test]
fn sylvester_matches_oracle_across_dimensions() {
    let mut r = rng(13);
    for p in 1..=6 {
        for q in 1..=6 {
            let g_left = random_psd(p, &mut r);
            let g_right = random_psd(q, &mut r);
            let pi = randn(p, q, &mut r);
            let x = solve_scaled_sylvester(&g_left, &g_right, &pi, 1.3).unwrap();
            let expected = kron_solve(&g_left, &g_right, &pi, 1.3);
            assert!(rel_err(&x, &expected) <= 1e-8, "p={p} q={q}");
        }
    }
}

#[test]
fn ridge_inverse_rank_deficient_stays_bounded() {
    // Repeated row: singular without a ridge; with eps = 1e-6 the
    // product A·out deviates from the identity only on the order of the
    // ridge correction.
    let a = DMatrix::from_row_slice(
        3,
        3,
        &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 0.5, -1.0, 2.0],
    );
    let eps = 1e-6;
    let out = ridge_inverse(&a, eps).unwrap();
    let ridge = eps * (a.trace() / 3.0).max(1.0);
    // (A + ridge·I)·out = I exactly, so A·out = I − ridge·out.
    let residual = (&a * &out) - DMatrix::identity(3, 3) + out.scale(ridge);
    assert!(residual.norm() < 1e-6, "residual {}", residual.norm());
}

#[test]
fn ridge_inverse_well_conditioned_is_exact() {
    let mut r = rng(17);
    for _ in 0..10 {
        let a = random_psd(4, &mut r) + DMatrix::identity(4, 4);
        let inv = ridge_inverse(&a, 0.0).unwrap();
        assert!((inv * &a - DMatrix::identity(4, 4)).norm() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Linearity in Pi: solve(aP1 + bP2) = a·solve(P1) + b·solve(P2).
    #[test]
    fn sylvester_is_linear_in_pi(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut r = rng(seed);
        let g_left = random_psd(3, &mut r);
        let g_right = random_psd(2, &mut r);
        let p1 = randn(3, 2, &mut r);
        let p2 = randn(3, 2, &mut r);
        let combined = p1.scale(alpha) + p2.scale(beta);
        let x1 = solve_scaled_sylvester(&g_left, &g_right, &p1, 1.0).unwrap();
        let x2 = solve_scaled_sylvester(&g_left, &g_right, &p2, 1.0).unwrap();
        let xc = solve_scaled_sylvester(&g_left, &g_right, &combined, 1.0).unwrap();
        let expected = x1.scale(alpha) + x2.scale(beta);
        prop_assert!((xc - &expected).norm() <= 1e-9 * expected.norm().max(1.0));
    }

    // PSD reconstruction across random shapes.
    #[test]
    fn sym_eig_reconstruction_property(seed in 0u64..1000, n in 1usize..7) {
        let mut r = rng(seed);
        let a = random_psd(n, &mut r);
        let eig = sym_eig(&a).unwrap();
        let residual = (eig.reconstruct() - &a).norm();
        prop_assert!(residual <= 1e-8 * a.norm().max(1.0));
    }
}
