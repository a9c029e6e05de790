//! Synthetic data generation: samples follow `X_s = L·Y_s·W_s·Rᵀ + ε`
//! with ground-truth unit-norm dictionaries, fixed per-sample nonzero
//! counts, optional SNR-controlled Gaussian noise, and an optional exact
//! L1 budget per code factor.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AodlError, Result};
use crate::types::{DataSample, Dataset, DictionaryPair, LowRankCode};

/// How ground-truth atoms are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomMode {
    /// Independent N(0, 1) atoms, normalized.
    Random,
    /// A QR-orthonormalized draw blended 0.95/0.05 with the raw draw and
    /// renormalized; atoms end up almost orthogonal.
    NearOrthogonal,
}

/// Generation parameters. Defaults match the reference synthetic
/// configuration: 20×30 samples, square 20/30-atom dictionaries,
/// rank 3, 100 samples, 15 nonzeros in each code factor, no noise.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub s_samples: usize,
    pub nnz_y: usize,
    pub nnz_w: usize,
    /// Target signal-to-noise ratio in dB; `None` disables noise.
    pub snr_db: Option<f64>,
    /// Rescale each Y_s and W_s to this exact L1 norm.
    pub l1_budget: Option<f64>,
    pub atoms: AtomMode,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m: 30,
            p: 20,
            q: 30,
            k: 3,
            s_samples: 100,
            nnz_y: 15,
            nnz_w: 15,
            snr_db: None,
            l1_budget: None,
            atoms: AtomMode::Random,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.p == 0 || self.q == 0 || self.k == 0 {
            return Err(AodlError::InvalidConfig("all dimensions must be positive".into()));
        }
        if self.s_samples == 0 {
            return Err(AodlError::InvalidConfig("need at least one sample".into()));
        }
        if self.k > self.p.min(self.q) {
            return Err(AodlError::InvalidConfig(format!(
                "rank k = {} exceeds min(P, Q) = {}",
                self.k,
                self.p.min(self.q)
            )));
        }
        if self.nnz_y == 0 || self.nnz_y > self.p * self.k {
            return Err(AodlError::InvalidConfig(format!(
                "nnz_y = {} must lie in [1, {}]",
                self.nnz_y,
                self.p * self.k
            )));
        }
        if self.nnz_w == 0 || self.nnz_w > self.k * self.q {
            return Err(AodlError::InvalidConfig(format!(
                "nnz_w = {} must lie in [1, {}]",
                self.nnz_w,
                self.k * self.q
            )));
        }
        if self.atoms == AtomMode::NearOrthogonal && (self.p > self.n || self.q > self.m) {
            return Err(AodlError::InvalidConfig(
                "near-orthogonal atoms require P <= N and Q <= M".into(),
            ));
        }
        Ok(())
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn draw_dictionary(rows: usize, atoms: usize, mode: AtomMode, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(rows, atoms, |_, _| standard_normal(rng));
    let mut out = match mode {
        AtomMode::Random => raw,
        AtomMode::NearOrthogonal => {
            let qr = raw.clone().qr();
            let q = qr.q();
            let mut normalized = raw;
            for j in 0..atoms {
                let norm = normalized.column(j).norm().max(1e-12);
                normalized.column_mut(j).scale_mut(1.0 / norm);
            }
            q.columns(0, atoms).scale(0.95) + normalized.scale(0.05)
        }
    };
    for j in 0..atoms {
        let norm = out.column(j).norm().max(1e-12);
        out.column_mut(j).scale_mut(1.0 / norm);
    }
    out
}

/// Sparse matrix with exactly `nnz` standard-normal entries at uniform
/// positions (without replacement), optionally rescaled to an exact L1
/// norm.
fn draw_code_factor(
    rows: usize,
    cols: usize,
    nnz: usize,
    l1_budget: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    let picks = rand::seq::index::sample(rng, rows * cols, nnz);
    for idx in picks.iter() {
        // Column-major layout, matching vec-indexing elsewhere.
        let (i, j) = (idx % rows, idx / rows);
        let mut v = standard_normal(rng);
        // An exactly-zero draw would break the nonzero count.
        while v == 0.0 {
            v = standard_normal(rng);
        }
        m[(i, j)] = v;
    }
    if let Some(budget) = l1_budget {
        let l1: f64 = m.iter().map(|v| v.abs()).sum();
        if l1 > 0.0 {
            m.scale_mut(budget / l1);
        }
    }
    m
}

/// Generates a dataset together with the ground-truth dictionaries and
/// codes. Deterministic per seed: the dictionaries come from RNG
/// stream 0, sample `s`'s codes from stream `1 + s`, and its noise from
/// stream `1 + S + s`.
///
/// With `snr_db` set, one global noise scale is chosen so the measured
/// dataset-level SNR `10·log10(‖signal‖²_F / ‖noise‖²_F)` equals the
/// target exactly (well within 0.1 dB).
pub fn generate(gcfg: &GenConfig, seed: u64) -> Result<(Dataset, DictionaryPair, Vec<LowRankCode>)> {
    gcfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let left = draw_dictionary(gcfg.n, gcfg.p, gcfg.atoms, &mut rng);
    let right = draw_dictionary(gcfg.m, gcfg.q, gcfg.atoms, &mut rng);
    let gt = DictionaryPair::new_normalized(left, right)?;

    let mut codes = Vec::with_capacity(gcfg.s_samples);
    let mut clean = Vec::with_capacity(gcfg.s_samples);
    for s in 0..gcfg.s_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + s as u64);
        let y = draw_code_factor(gcfg.p, gcfg.k, gcfg.nnz_y, gcfg.l1_budget, &mut rng);
        let w = draw_code_factor(gcfg.k, gcfg.q, gcfg.nnz_w, gcfg.l1_budget, &mut rng);
        let code = LowRankCode::new(y, w)?;
        clean.push(code.reconstruct(&gt));
        codes.push(code);
    }

    let samples = match gcfg.snr_db {
        None => clean
            .into_iter()
            .map(DataSample::new)
            .collect::<Result<Vec<_>>>()?,
        Some(snr_db) => {
            let mut noise = Vec::with_capacity(gcfg.s_samples);
            for s in 0..gcfg.s_samples {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1 + (gcfg.s_samples + s) as u64);
                noise.push(DMatrix::from_fn(gcfg.n, gcfg.m, |_, _| standard_normal(&mut rng)));
            }
            let signal_energy: f64 = clean.iter().map(|x| x.norm_squared()).sum();
            let noise_energy: f64 = noise.iter().map(|e| e.norm_squared()).sum();
            if noise_energy == 0.0 {
                return Err(AodlError::Numerical("drew an all-zero noise tensor".into()));
            }
            let alpha = (signal_energy / (noise_energy * 10f64.powf(snr_db / 10.0))).sqrt();
            clean
                .into_iter()
                .zip(noise)
                .map(|(x, e)| DataSample::new(x + e.scale(alpha)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok((Dataset::new(samples)?, gt, codes))
}

/// Maximum sample Frobenius norm in the bound experiment.
pub const BOUND_SAMPLE_CAP: f64 = 10.0;

/// Training and testing sets for the generalization-bound experiment:
/// shared almost-orthogonal ground-truth dictionaries, rank-5 codes with
/// 20/30 nonzeros, both factors rescaled to L1 norm 10, no noise, and
/// every sample capped at Frobenius norm 10.
pub fn generate_bound_experiment(
    seed: u64,
    s_train: usize,
    s_test: usize,
) -> Result<(Dataset, Dataset, DictionaryPair)> {
    if s_train == 0 || s_test == 0 {
        return Err(AodlError::InvalidConfig(
            "need at least one training and one testing sample".into(),
        ));
    }
    let gcfg = GenConfig {
        n: 20,
        m: 30,
        p: 20,
        q: 30,
        k: 5,
        s_samples: s_train + s_test,
        nnz_y: 20,
        nnz_w: 30,
        snr_db: None,
        l1_budget: Some(10.0),
        atoms: AtomMode::NearOrthogonal,
    };
    let (data, gt, _) = generate(&gcfg, seed)?;
    let capped: Vec<DataSample> = data
        .samples()
        .iter()
        .map(|sample| {
            let norm = sample.values().norm();
            let values = if norm > BOUND_SAMPLE_CAP {
                sample.values().scale(BOUND_SAMPLE_CAP / norm)
            } else {
                sample.values().clone()
            };
            DataSample::new(values)
        })
        .collect::<Result<_>>()?;
    let train = Dataset::new(capped[..s_train].to_vec())?;
    let test = Dataset::new(capped[s_train..].to_vec())?;
    Ok((train, test, gt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_generate_rank_k_samples() {
        let (data, _, codes) = generate(&GenConfig::default(), 1).unwrap();
        assert_eq!(data.len(), 100);
        assert_eq!(data.nrows(), 20);
        assert_eq!(data.ncols(), 30);
        // Noise-free samples are products of rank-3 factors.
        let svd = data.samples()[0].values().clone().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for &v in sv.iter().skip(3) {
            assert!(v < 1e-10, "singular value {v} beyond rank 3");
        }
        // Exact nonzero counts.
        for code in &codes {
            assert_eq!(code.y().iter().filter(|&&v| v != 0.0).count(), 15);
            assert_eq!(code.w().iter().filter(|&&v| v != 0.0).count(), 15);
        }
    }

    #[test]
    fn snr_is_hit_exactly() {
        let gcfg = GenConfig {
            snr_db: Some(30.0),
            ..GenConfig::default()
        };
        let (noisy, gt, codes) = generate(&gcfg, 2).unwrap();
        let mut signal = 0.0;
        let mut noise = 0.0;
        for (sample, code) in noisy.samples().iter().zip(&codes) {
            let clean = code.reconstruct(&gt);
            signal += clean.norm_squared();
            noise += (sample.values() - clean).norm_squared();
        }
        let snr = 10.0 * (signal / noise).log10();
        assert!((snr - 30.0).abs() < 0.1, "measured SNR {snr}");
    }

    #[test]
    fn l1_budget_is_exact() {
        let gcfg = GenConfig {
            l1_budget: Some(10.0),
            ..GenConfig::default()
        };
        let (_, _, codes) = generate(&gcfg, 3).unwrap();
        for code in &codes {
            let y_l1: f64 = code.y().iter().map(|v| v.abs()).sum();
            let w_l1: f64 = code.w().iter().map(|v| v.abs()).sum();
            assert!((y_l1 - 10.0).abs() < 1e-9);
            assert!((w_l1 - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, _, _) = generate(&GenConfig::default(), 7).unwrap();
        let (b, _, _) = generate(&GenConfig::default(), 7).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn near_orthogonal_atoms_are_nearly_orthogonal() {
        let gcfg = GenConfig {
            atoms: AtomMode::NearOrthogonal,
            s_samples: 1,
            ..GenConfig::default()
        };
        let (_, gt, _) = generate(&gcfg, 4).unwrap();
        let gram = gt.left().transpose() * gt.left();
        for i in 0..gt.p() {
            for j in 0..gt.p() {
                if i != j {
                    assert!(gram[(i, j)].abs() < 0.2, "off-diagonal {}", gram[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn bound_experiment_caps_and_shares_dictionaries() {
        let (train, test, gt) = generate_bound_experiment(5, 8, 4).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 4);
        for sample in train.samples().iter().chain(test.samples()) {
            assert!(sample.values().norm() <= BOUND_SAMPLE_CAP + 1e-12);
        }
        let (_, _, gt2) = generate_bound_experiment(5, 3, 2).map(|(a, b, g)| (a, b, g)).unwrap();
        assert_eq!(gt.left(), gt2.left());
        assert_eq!(gt.right(), gt2.right());
    }

    #[test]
    fn infeasible_nnz_rejected() {
        let gcfg = GenConfig {
            nnz_y: 61,
            ..GenConfig::default()
        };
        assert!(generate(&gcfg, 0).is_err());
    }
}
