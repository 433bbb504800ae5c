//! Seeded variates of `Z = Z1 + Z2` and a Kolmogorov-Smirnov check of the
//! analytic mixture against them.
//!
//! All randomness comes from [`NoiseStream`], a ChaCha8 generator seeded
//! through `SeedableRng::seed_from_u64`. Output is reproducible for a given
//! build; it is not promised to match other implementations.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{GaussianParams, HybridMixture, PoissonParams};
use crate::special::CompensatedSum;

/// Largest Poisson rate the inversion sampler accepts.
pub const MAX_SAMPLER_RATE: f64 = 1000.0;

/// Large-sample 5% critical constant of the KS statistic.
pub const KS_CRITICAL_5PCT: f64 = 1.358;

pub const MIN_KS_SAMPLES: usize = 50;

/// Single-owner uniform/normal stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sub-stream for task `task` of a job seeded with `seed`: the 256-bit
    /// ChaCha key is `seed` in the first word and `task` in the second.
    pub fn for_task(seed: u64, task: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&task.to_le_bytes());
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Box-Muller, cosine branch: exactly two uniforms per variate.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Poisson sampler by sequential inversion starting at the mode.
///
/// Holds the pmf at the mode and the cdf up to it; each draw consumes one
/// uniform and walks down or up from the mode with the pmf recurrence.
#[derive(Debug, Clone)]
pub struct PoissonSampler {
    lambda: f64,
    mode: u64,
    pmf_mode: f64,
    cdf_mode: f64,
}

impl PoissonSampler {
    pub fn new(p: PoissonParams) -> Result<Self> {
        let lambda = p.lambda();
        if lambda > MAX_SAMPLER_RATE {
            return Err(Error::UnsupportedRate {
                lambda,
                max: MAX_SAMPLER_RATE,
            });
        }
        let mode = lambda.floor() as u64;
        let cdf_mode: CompensatedSum = (0..=mode).map(|i| p.weight(i)).collect();
        Ok(Self {
            lambda,
            mode,
            pmf_mode: p.weight(mode),
            cdf_mode: cdf_mode.value(),
        })
    }

    pub fn sample(&self, stream: &mut NoiseStream) -> u64 {
        let u = stream.uniform();
        self.invert(u)
    }

    fn invert(&self, u: f64) -> u64 {
        if self.lambda == 0.0 {
            return 0;
        }
        let mut k = self.mode;
        let mut pmf = self.pmf_mode;
        let mut cdf = self.cdf_mode;
        if u < cdf {
            // walk down while u is still below P(X <= k - 1)
            while k > 0 {
                let below = cdf - pmf;
                if u >= below {
                    break;
                }
                cdf = below;
                pmf *= k as f64 / self.lambda;
                k -= 1;
            }
            k
        } else {
            loop {
                k += 1;
                pmf *= self.lambda / k as f64;
                cdf += pmf;
                if u < cdf || pmf == 0.0 {
                    return k;
                }
            }
        }
    }
}

/// One Poisson draw. Builds a fresh [`PoissonSampler`]; reuse one for
/// repeated draws at the same rate.
pub fn sample_poisson(p: PoissonParams, stream: &mut NoiseStream) -> Result<u64> {
    Ok(PoissonSampler::new(p)?.sample(stream))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub lambda: f64,
    pub gaussian: GaussianParams,
    pub count: usize,
}

/// `count` draws of `Poisson(lambda) + N(mean, sd^2)` from one stream.
///
/// Each value takes one uniform for the Poisson count and two for the
/// Gaussian offset, in that order.
pub fn sample_hybrid(
    g: GaussianParams,
    p: PoissonParams,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::invalid("count", "must be >= 1"));
    }
    let sampler = PoissonSampler::new(p)?;
    let mut stream = NoiseStream::new(seed);
    let values = (0..count)
        .map(|_| {
            let photons = sampler.sample(&mut stream);
            photons as f64 + g.mean() + g.sd() * stream.standard_normal()
        })
        .collect();
    Ok(SampleBatch {
        values,
        seed,
        lambda: p.lambda(),
        gaussian: g,
        count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub ks_statistic: f64,
    pub sample_count: usize,
    pub critical_value_5pct: f64,
    pub pass: bool,
}

/// Two-sided KS statistic of `values` against the mixture's CDF (divided by
/// its total weight).
pub fn ks_statistic(values: &[f64], m: &HybridMixture) -> Result<f64> {
    let w_total = m.total_weight();
    if w_total <= 0.0 {
        return Err(Error::DegenerateMixture);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = (m.cdf(*x) / w_total).min(1.0);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// KS goodness of fit of a sample batch against a mixture built from the
/// same `(lambda, mean, sd)`.
pub fn ks_test(batch: &SampleBatch, m: &HybridMixture) -> Result<GofReport> {
    if batch.lambda != m.poisson().lambda() || batch.gaussian != m.gaussian() {
        return Err(Error::ParameterMismatch(format!(
            "batch (lambda={}, mean={}, sd={}) vs mixture (lambda={}, mean={}, sd={})",
            batch.lambda,
            batch.gaussian.mean(),
            batch.gaussian.sd(),
            m.poisson().lambda(),
            m.gaussian().mean(),
            m.gaussian().sd()
        )));
    }
    if batch.values.len() < MIN_KS_SAMPLES {
        return Err(Error::invalid(
            "count",
            format!(
                "KS test needs at least {MIN_KS_SAMPLES} samples, got {}",
                batch.values.len()
            ),
        ));
    }
    let ks = ks_statistic(&batch.values, m)?;
    let critical = KS_CRITICAL_5PCT / (batch.values.len() as f64).sqrt();
    Ok(GofReport {
        ks_statistic: ks,
        sample_count: batch.values.len(),
        critical_value_5pct: critical,
        pass: ks <= critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pois(l: f64) -> PoissonParams {
        PoissonParams::new(l).unwrap()
    }

    #[test]
    fn uniform_range_and_determinism() {
        let mut a = NoiseStream::new(9);
        let mut b = NoiseStream::new(9);
        for _ in 0..10_000 {
            let u = a.uniform();
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
        let mut c = NoiseStream::new(10);
        assert_ne!(NoiseStream::new(9).uniform(), c.uniform());
        assert_ne!(
            NoiseStream::for_task(9, 0).uniform(),
            NoiseStream::for_task(9, 1).uniform()
        );
    }

    #[test]
    fn zero_rate_always_zero() {
        let mut s = NoiseStream::new(1);
        let sampler = PoissonSampler::new(pois(0.0)).unwrap();
        assert!((0..1000).all(|_| sampler.sample(&mut s) == 0));
    }

    #[test]
    fn inversion_matches_cdf_boundaries() {
        let p = pois(4.5);
        let sampler = PoissonSampler::new(p).unwrap();
        let mut cdf = 0.0;
        for k in 0..20u64 {
            let next = cdf + p.weight(k);
            let mid = 0.5 * (cdf + next);
            assert_eq!(sampler.invert(mid), k);
            cdf = next;
        }
        assert_eq!(sampler.invert(0.0), 0);
    }

    #[test]
    fn poisson_moments() {
        let lambda = 10.0;
        let sampler = PoissonSampler::new(pois(lambda)).unwrap();
        let mut s = NoiseStream::new(2024);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut s) as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(
            (mean - lambda).abs() < 3.0 * (lambda / n as f64).sqrt(),
            "{mean}"
        );
        // Var of the sample variance of Poisson: (mu4 - sigma^4)/n = (lambda + 2 lambda^2)/n
        let se_var = ((lambda + 2.0 * lambda * lambda) / n as f64).sqrt();
        assert!((var - lambda).abs() < 3.0 * se_var, "{var}");
    }

    #[test]
    fn unsupported_rate() {
        assert!(matches!(
            PoissonSampler::new(pois(1000.5)),
            Err(Error::UnsupportedRate { .. })
        ));
        let mut s = NoiseStream::new(0);
        assert!(sample_poisson(pois(1000.0), &mut s).is_ok());
    }

    #[test]
    fn hybrid_standard_normal() {
        let b = sample_hybrid(GaussianParams::standard(), pois(0.0), 1_000_000, 5).unwrap();
        let n = b.values.len() as f64;
        let mean = b.values.iter().sum::<f64>() / n;
        let sd = (b.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.003, "{mean}");
        assert!((sd - 1.0).abs() < 0.003, "{sd}");
    }

    #[test]
    fn hybrid_single_value_reproducible() {
        let g = GaussianParams::new(1.0, 0.5).unwrap();
        let a = sample_hybrid(g, pois(3.0), 1, 77).unwrap();
        let b = sample_hybrid(g, pois(3.0), 1, 77).unwrap();
        assert_eq!(a.values.len(), 1);
        assert_eq!(a, b);
        assert!(sample_hybrid(g, pois(3.0), 0, 77).is_err());
    }

    #[test]
    fn ks_examples() {
        let g = GaussianParams::standard();
        let b = sample_hybrid(g, pois(0.0), 100_000, 11).unwrap();
        let m = crate::mixture::build_mixture(g, pois(0.0), 0);
        assert!(ks_test(&b, &m).unwrap().pass);

        let b = sample_hybrid(g, pois(20.0), 100_000, 11).unwrap();
        let m = crate::mixture::build_mixture(g, pois(20.0), 20)
            .renormalize()
            .unwrap();
        let r = ks_test(&b, &m).unwrap();
        assert!(!r.pass);
        assert!(r.ks_statistic > 0.2, "{r:?}");
    }

    #[test]
    fn ks_rejects_mismatch_and_small_batches() {
        let g = GaussianParams::standard();
        let b = sample_hybrid(g, pois(2.0), 1000, 1).unwrap();
        let other = crate::mixture::build_mixture(g, pois(3.0), 20);
        assert!(matches!(
            ks_test(&b, &other),
            Err(Error::ParameterMismatch(_))
        ));
        let other =
            crate::mixture::build_mixture(GaussianParams::new(0.0, 2.0).unwrap(), pois(2.0), 20);
        assert!(matches!(
            ks_test(&b, &other),
            Err(Error::ParameterMismatch(_))
        ));
        let small = sample_hybrid(g, pois(2.0), 49, 1).unwrap();
        let m = crate::mixture::build_mixture(g, pois(2.0), 20);
        assert!(ks_test(&small, &m).is_err());
    }
}
