use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::partition::PartitionOfUnity;
use crate::error::{Error, Result};
use crate::spectral::ComplexField;

/// How the cell coefficients `g_n` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Randomization {
    /// i.i.d. standard normals.
    Gaussian,
    /// Every `g_n = 1`, which reproduces the deterministic data.
    AllOnes,
}

/// Seed of sample `index` under `master_seed` (SplitMix64 finalizer over both).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z =
        master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal attached to `cell`, drawn from its own ChaCha stream so
/// the value does not depend on which other cells are drawn or in what order.
pub fn cell_gaussian(seed: u64, cell: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone)]
pub struct RandomDataSample {
    pub index: u64,
    pub seed: u64,
    pub gaussians: Vec<f64>,
    /// `sum_n phi_n g_n u0`.
    pub field: ComplexField,
}

pub fn sample_random_data(
    u0: &ComplexField,
    partition: &PartitionOfUnity,
    master_seed: u64,
    index: u64,
    mode: Randomization,
) -> Result<RandomDataSample> {
    if u0.grid() != partition.grid() {
        return Err(Error::GridMismatch);
    }
    let seed = derive_seed(master_seed, index);
    let gaussians: Vec<f64> = match mode {
        Randomization::Gaussian => (0..partition.len() as u64)
            .map(|cell| cell_gaussian(seed, cell))
            .collect(),
        Randomization::AllOnes => vec![1.0; partition.len()],
    };
    let field = match mode {
        Randomization::AllOnes => u0.clone(),
        Randomization::Gaussian => {
            let modulation = partition.combine(&gaussians);
            let values: Vec<Complex64> = u0
                .values()
                .iter()
                .zip(&modulation)
                .map(|(v, m)| v * m)
                .collect();
            ComplexField::new(*u0.grid(), values)?
        }
    };
    Ok(RandomDataSample {
        index,
        seed,
        gaussians,
        field,
    })
}

/// `E ||u0^omega||_{L^2}^2 = ||(sum_n phi_n^2)^{1/2} u0||_{L^2}^2`.
pub fn expected_mass(u0: &ComplexField, partition: &PartitionOfUnity) -> f64 {
    let sq = partition.sum_of_squares();
    u0.values()
        .iter()
        .zip(&sq)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum::<f64>()
        * u0.grid().cell_volume()
}

/// `(E|g|^rho)^{1/rho} / sqrt(rho)` for a standard normal `g`, from
/// `E|g|^rho = 2^{rho/2} Gamma((rho+1)/2) / sqrt(pi)`.
pub fn exact_moment_constant(rho: f64) -> f64 {
    let ln_moment = 0.5 * rho * std::f64::consts::LN_2 + ln_gamma(0.5 * (rho + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    (ln_moment / rho).exp() / rho.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub rho: f64,
    pub samples: usize,
    /// Empirical `(E|sum c_n g_n|^rho)^{1/rho} / (sqrt(rho) |c|)`.
    pub ratio: f64,
    /// The same quantity in closed form.
    pub exact: f64,
}

/// Monte-Carlo estimate of the Gaussian moment ratio for coefficients `c`.
pub fn gaussian_moment_check(
    c: &[f64],
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MomentCheck> {
    if !(2.0..=20.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "moment order must lie in [2, 20] (got {rho})"
        )));
    }
    if n_samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10^4 samples (got {n_samples})"
        )));
    }
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument(
            "coefficient vector must be nonzero and finite".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // normalize first so the rho-th powers stay in range for any scale of c
    let mut acc = 0.0;
    for _ in 0..n_samples {
        let x: f64 = c
            .iter()
            .map(|&v| v / norm * rng.sample::<f64, _>(StandardNormal))
            .sum();
        acc += x.abs().powf(rho);
    }
    let moment = (acc / n_samples as f64).powf(1.0 / rho);
    Ok(MomentCheck {
        rho,
        samples: n_samples,
        ratio: moment / rho.sqrt(),
        exact: exact_moment_constant(rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::partition::{build_partition, SmoothBump};
    use crate::spectral::Grid;

    /// `E|g|^rho` for even `rho` is the double factorial `(rho-1)!!`.
    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn exact_constant_matches_double_factorial() {
        for rho in [2u32, 4, 8, 16] {
            let expected = double_factorial(rho - 1).powf(1.0 / rho as f64) / (rho as f64).sqrt();
            assert!((exact_moment_constant(rho as f64) - expected).abs() < 1e-12);
        }
        assert!((exact_moment_constant(2.0) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn moment_ratio_is_scale_free() {
        let c = [0.3, -1.2, 0.5];
        let a = gaussian_moment_check(&c, 4.0, 20_000, 9).unwrap();
        let scaled: Vec<f64> = c.iter().map(|v| v * 10.0).collect();
        let b = gaussian_moment_check(&scaled, 4.0, 20_000, 9).unwrap();
        assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio);
        assert!(gaussian_moment_check(&c, 1.0, 20_000, 9).is_err());
        assert!(gaussian_moment_check(&c, 4.0, 100, 9).is_err());
    }

    #[test]
    fn second_moment_of_one_normal() {
        let check = gaussian_moment_check(&[1.0], 2.0, 100_000, 3).unwrap();
        // relative standard error of the second moment is sqrt(2/n)
        assert!((check.ratio - 0.5f64.sqrt()).abs() < 0.02);
    }

    #[test]
    fn cell_draws_are_order_independent() {
        let forward: Vec<f64> = (0..20).map(|c| cell_gaussian(11, c)).collect();
        let backward: Vec<f64> = (0..20).rev().map(|c| cell_gaussian(11, c)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert_ne!(cell_gaussian(11, 0), cell_gaussian(12, 0));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn all_ones_reproduces_data() {
        let grid = Grid::new(2, 32, 8.0).unwrap();
        let p = build_partition(&grid, 1.0, &SmoothBump::for_spacing(1.0)).unwrap();
        let u0 = ComplexField::gaussian(grid, 1.0, 1.0, [0.0; 3]);
        let s = sample_random_data(&u0, &p, 5, 0, Randomization::AllOnes).unwrap();
        assert_eq!(s.field, u0);
        let modulated: Vec<f64> = p.combine(&s.gaussians);
        assert!(modulated.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn samples_are_reproducible() {
        let grid = Grid::new(2, 32, 8.0).unwrap();
        let p = build_partition(&grid, 1.0, &SmoothBump::for_spacing(1.0)).unwrap();
        let u0 = ComplexField::gaussian(grid, 1.0, 1.0, [0.0; 3]);
        let a = sample_random_data(&u0, &p, 5, 3, Randomization::Gaussian).unwrap();
        let b = sample_random_data(&u0, &p, 5, 3, Randomization::Gaussian).unwrap();
        assert_eq!(a.field, b.field);
        let c = sample_random_data(&u0, &p, 5, 4, Randomization::Gaussian).unwrap();
        assert_ne!(a.field, c.field);
    }
}
