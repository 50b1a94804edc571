//! Monte Carlo and Christoffel (arcsine) sample sets and their weights.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::error::{QuadError, Result};
use crate::orthopoly::{basis_matrix, Family, MultiIndexSet, RecurrenceTable};

/// Identifier of the pseudo-random stream, stored with every sample set.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.3";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStrategy {
    MonteCarlo,
    Christoffel,
}

/// Generator seed plus an independent stream number (one per trial).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    #[serde(default)]
    pub stream: u64,
}

impl Seed {
    pub fn new(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Self { value, stream: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub strategy: SampleStrategy,
    pub seed: Seed,
    pub algorithm: String,
    /// Target density in each direction.
    pub density: Vec<Family>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform variate strictly inside (0, 1) from the top 53 bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

enum Marginal {
    Uniform,
    Arcsine,
    Normal(Normal),
    Beta(Beta),
}

impl Marginal {
    fn new(f: Family) -> Result<Self> {
        Ok(match f {
            Family::Legendre => Marginal::Uniform,
            Family::Chebyshev1 => Marginal::Arcsine,
            Family::Hermite => Marginal::Normal(Normal::new(0.0, 1.0).expect("standard normal")),
            Family::Jacobi { a, b } => {
                // (1 - x)^a (1 + x)^b is Beta(b + 1, a + 1) on t = (1 + x) / 2
                let beta = Beta::new(b + 1.0, a + 1.0)
                    .map_err(|e| QuadError::invalid(format!("jacobi({a}, {b}): {e}")))?;
                Marginal::Beta(beta)
            }
            Family::Custom => {
                return Err(QuadError::UnsupportedFamily(
                    "custom densities cannot be sampled".into(),
                ))
            }
        })
    }

    fn transform(&self, u: f64) -> f64 {
        match self {
            Marginal::Uniform => 2.0 * u - 1.0,
            Marginal::Arcsine => (std::f64::consts::PI * u).cos(),
            Marginal::Normal(n) => n.inverse_cdf(u),
            Marginal::Beta(b) => 2.0 * b.inverse_cdf(u) - 1.0,
        }
    }
}

fn draw(marginals: &[Marginal], m: usize, seed: Seed) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    (0..m)
        .map(|_| marginals.iter().map(|g| g.transform(unit(&mut rng))).collect())
        .collect()
}

/// i.i.d. draws from the product density by inverse-CDF transforms.
pub fn monte_carlo_sample(density: &[Family], m: usize, seed: impl Into<Seed>) -> Result<SampleSet> {
    if m == 0 || density.is_empty() {
        return Err(QuadError::invalid("need m >= 1 and at least one dimension"));
    }
    let seed = seed.into();
    let marginals = density.iter().map(|f| Marginal::new(*f)).collect::<Result<Vec<_>>>()?;
    Ok(SampleSet {
        points: draw(&marginals, m, seed),
        strategy: SampleStrategy::MonteCarlo,
        seed,
        algorithm: RNG_ALGORITHM.into(),
        density: density.to_vec(),
    })
}

/// Arcsine draws `cos(pi u)` per dimension, for the uniform density on [-1, 1]^d.
pub fn christoffel_sample(d: usize, m: usize, seed: impl Into<Seed>) -> Result<SampleSet> {
    if m == 0 || d == 0 {
        return Err(QuadError::invalid("need m >= 1 and d >= 1"));
    }
    let seed = seed.into();
    let marginals: Vec<Marginal> = (0..d).map(|_| Marginal::Arcsine).collect();
    Ok(SampleSet {
        points: draw(&marginals, m, seed),
        strategy: SampleStrategy::Christoffel,
        seed,
        algorithm: RNG_ALGORITHM.into(),
        density: vec![Family::Legendre; d],
    })
}

/// Christoffel sample set for an arbitrary (bounded) target density; only
/// the uniform target is supported.
pub fn christoffel_sample_for(density: &[Family], m: usize, seed: impl Into<Seed>) -> Result<SampleSet> {
    if let Some(f) = density.iter().find(|f| **f != Family::Legendre) {
        return Err(QuadError::UnsupportedFamily(format!(
            "christoffel sampling supports the uniform density only, got {}",
            f.name()
        )));
    }
    christoffel_sample(density.len(), m, seed)
}

/// Normalized weights `(n/m) / K_n(z_i)` with `K_n = sum_j psi_j^2`.
pub fn sample_weights(
    points: &[Vec<f64>],
    basis: &MultiIndexSet,
    recurrences: &[RecurrenceTable],
) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(QuadError::invalid("no points"));
    }
    let psi = basis_matrix(basis, recurrences, points)?;
    let (m, n) = psi.shape();
    let scale = n as f64 / m as f64;
    let mut w = Vec::with_capacity(m);
    for i in 0..m {
        let k: f64 = psi.row(i).iter().map(|v| v * v).sum();
        if !(k > 1e-300) || !k.is_finite() {
            return Err(QuadError::ZeroKernel(i));
        }
        w.push(scale / k);
    }
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::{multi_index_set, recurrence_coefficients, IndexKind};
    use crate::quadrature::{golub_welsch, tensor_grid};
    use proptest::prelude::*;

    #[test]
    fn uniform_mean_within_clt_bound() {
        let m = 10_000;
        let s = monte_carlo_sample(&[Family::Legendre], m, 12345).unwrap();
        let mean: f64 = s.points.iter().map(|p| p[0]).sum::<f64>() / m as f64;
        let sigma = (1.0f64 / 3.0).sqrt();
        assert!(mean.abs() < 3.0 * sigma / (m as f64).sqrt());
        assert!(s.points.iter().all(|p| p[0] > -1.0 && p[0] < 1.0));
    }

    #[test]
    fn arcsine_symmetry() {
        let m = 100_000;
        let s = christoffel_sample(1, m, 99).unwrap();
        let below = s.points.iter().filter(|p| p[0] <= 0.0).count() as f64 / m as f64;
        assert!((below - 0.5).abs() < 0.01);
        let mean: f64 = s.points.iter().map(|p| p[0]).sum::<f64>() / m as f64;
        assert!(mean.abs() < 0.01);
    }

    #[test]
    fn other_marginals_have_the_right_moments() {
        let m = 50_000;
        let s = monte_carlo_sample(&[Family::Hermite, Family::Jacobi { a: 1.0, b: 0.0 }], m, 4).unwrap();
        let mean0: f64 = s.points.iter().map(|p| p[0]).sum::<f64>() / m as f64;
        let var0: f64 = s.points.iter().map(|p| p[0] * p[0]).sum::<f64>() / m as f64;
        assert!(mean0.abs() < 0.03 && (var0 - 1.0).abs() < 0.03);
        // density (1 - x) / 2 has mean -1/3
        let mean1: f64 = s.points.iter().map(|p| p[1]).sum::<f64>() / m as f64;
        assert!((mean1 + 1.0 / 3.0).abs() < 0.02);
        assert!(monte_carlo_sample(&[Family::Custom], 3, 0).is_err());
        assert!(christoffel_sample_for(&[Family::Hermite], 3, 0).is_err());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a = christoffel_sample(2, 50, Seed::new(7, 0)).unwrap();
        let b = christoffel_sample(2, 50, Seed::new(7, 1)).unwrap();
        let c = christoffel_sample(2, 50, Seed::new(7, 0)).unwrap();
        assert_ne!(a.points, b.points);
        assert_eq!(a, c);
    }

    #[test]
    fn trivial_weights() {
        let t = recurrence_coefficients(Family::Legendre, 3).unwrap();
        let b0 = MultiIndexSet::univariate(0);
        assert_eq!(sample_weights(&[vec![0.2]], &b0, std::slice::from_ref(&t)).unwrap(), vec![1.0]);
        let w = sample_weights(&[vec![0.2], vec![-0.5], vec![0.9]], &b0, &[t]).unwrap();
        assert!(w.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn kernel_integrates_to_n() {
        let t = recurrence_coefficients(Family::Legendre, 8).unwrap();
        let g = golub_welsch(&t, 7).unwrap();
        let rule = tensor_grid(&[g.clone(), g]).unwrap();
        let basis = multi_index_set(IndexKind::TotalOrder, 2, 5, None).unwrap();
        let psi = basis_matrix(&basis, &[t.clone(), t], &rule.points).unwrap();
        let total: f64 = (0..rule.len())
            .map(|i| rule.weights[i] * psi.row(i).iter().map(|v| v * v).sum::<f64>())
            .sum();
        assert!((total - basis.len() as f64).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), stream in 0u64..100, d in 1usize..4, m in 1usize..50) {
            let a = christoffel_sample(d, m, Seed::new(seed, stream)).unwrap();
            let b = christoffel_sample(d, m, Seed::new(seed, stream)).unwrap();
            prop_assert_eq!(
                a.points.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.points.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            let c = monte_carlo_sample(&vec![Family::Legendre; d], m, Seed::new(seed, stream)).unwrap();
            let e = monte_carlo_sample(&vec![Family::Legendre; d], m, Seed::new(seed, stream)).unwrap();
            prop_assert_eq!(c, e);
        }

        #[test]
        fn weights_positive_and_normalized(seed in any::<u64>(), k in 0usize..6) {
            let basis = multi_index_set(IndexKind::TotalOrder, 2, k, None).unwrap();
            let m = 2 * basis.len();
            let t = recurrence_coefficients(Family::Legendre, k + 1).unwrap();
            for s in [
                christoffel_sample(2, m, seed).unwrap(),
                monte_carlo_sample(&[Family::Legendre; 2], m, seed).unwrap(),
            ] {
                let w = sample_weights(&s.points, &basis, &[t.clone(), t.clone()]).unwrap();
                prop_assert!(w.iter().all(|v| *v > 0.0));
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }
}
