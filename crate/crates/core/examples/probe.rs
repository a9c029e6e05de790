// scratch probe: cmod tiny-lambda behavior under primal-only stopping
use aodl_core::*;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    let left = draw(4, 4).qr().q();
    let right = draw(5, 5).qr().q();
    let dict = DictionaryPair::new_normalized(left, right).unwrap();
    let z_true = DMatrix::from_fn(4, 5, |i, j| ((i + 2 * j) as f64).cos());
    let x_mat = dict.left() * &z_true * dict.right().transpose();
    let x = DataSample::new(x_mat.clone()).unwrap();
    for (lam, rho, tol) in [(1e-8, 1.0, 1e-10), (1e-6, 1.0, 1e-10), (1e-4, 1.0, 1e-10), (1e-4, 1.0, 1e-8), (1e-4, 0.3, 1e-8)] {
        let cfg = SolverConfig { inner_iters: 500, inner_tol: tol, ..SolverConfig::default() };
        let (code, rep) = cmod::cmod_sparse_code(&x, &dict, lam, rho, &cfg).unwrap();
        let rel = (&x_mat - code.reconstruct(&dict)).norm() / x_mat.norm();
        println!("lam={lam:.0e} rho={rho} tol={tol:.0e}: rel={rel:.2e} used={} conv={}", rep.iterations_used, rep.converged);
    }
    // lrsc noise-free example check under primal-only stopping
    let (data, gt, _) = synth::generate(&synth::GenConfig { s_samples: 10, ..Default::default() }, 1).unwrap();
    for (lam, rho, tol) in [(1e-4, 1.0, 1e-6), (1e-4, 1.0, 1e-8), (1e-6, 0.05, 1e-12)] {
        let cfg = SolverConfig { lambda1: lam, lambda2: lam, rho1: rho, rho2: rho, rank_k: 3, inner_iters: 2000, inner_tol: tol, seed: 1, ..Default::default() };
        let enc = lrsc::encode_dataset(&data, &gt, &cfg).unwrap();
        let recons: Vec<_> = enc.iter().map(|(c, _)| c.reconstruct(&gt)).collect();
        let r = eval::rmse_matrices(&data, &recons, false).unwrap();
        let it: f64 = enc.iter().map(|(_, rp)| rp.iterations_used as f64).sum::<f64>() / enc.len() as f64;
        println!("lrsc lam={lam:.0e} rho={rho} tol={tol:.0e}: rmse={r:.2e} mean_iters={it:.0}");
    }
}
