//! Differential entropy `H(Z) = -integral f log2 f` of the renormalized
//! truncated mixture, in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{Domain, HybridMixture};
use crate::quadrature::{integrate, DEFAULT_MAX_DEPTH};
use crate::sampling::NoiseStream;
use crate::special::{gaussian_entropy_bits, nats_to_bits, DENSITY_FLOOR};
use crate::truncation::tail_mass;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest discarded Poisson mass for which the truncated mixture is taken
/// to stand in for the full noise density.
pub const MAX_TAIL_MASS: f64 = 0.02;

pub const MIN_MONTE_CARLO_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Bits. Multiply by `ln 2` for nats.
    pub value: f64,
    pub method: EntropyMethod,
    /// Quadrature: accumulated error estimate. Monte Carlo: standard error.
    pub error: f64,
    pub sample_count: usize,
}

fn check_tail(m: &HybridMixture, override_tail_check: bool) -> Result<()> {
    if override_tail_check {
        return Ok(());
    }
    let tail = tail_mass(m.poisson(), m.order());
    if tail > MAX_TAIL_MASS {
        return Err(Error::TruncationInadequate {
            tail_mass: tail,
            threshold: MAX_TAIL_MASS,
        });
    }
    Ok(())
}

/// Entropy by adaptive Gauss-Kronrod quadrature over `domain`, with the
/// component means as initial breakpoints.
pub fn entropy_quadrature(
    m: &HybridMixture,
    domain: &Domain,
    tol: f64,
    override_tail_check: bool,
) -> Result<EntropyEstimate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(
            "tolerance",
            format!("must be > 0, got {tol}"),
        ));
    }
    check_tail(m, override_tail_check)?;
    let w_total = m.total_weight();
    if w_total <= 0.0 {
        return Err(Error::DegenerateMixture);
    }

    let mut breaks = Vec::with_capacity(m.order() + 3);
    breaks.push(domain.lo());
    breaks.extend(
        m.component_means()
            .iter()
            .copied()
            .filter(|mu| *mu > domain.lo() && *mu < domain.hi()),
    );
    breaks.push(domain.hi());

    let integrand = |z: f64| {
        let f = m.pdf(z) / w_total;
        if f < DENSITY_FLOOR {
            0.0
        } else {
            -f * f.log2()
        }
    };
    let res = integrate(integrand, &breaks, tol, DEFAULT_MAX_DEPTH);
    if !res.converged {
        return Err(Error::QuadratureFailure {
            estimate: res.value,
            error: res.error,
        });
    }
    Ok(EntropyEstimate {
        value: res.value,
        method: EntropyMethod::Quadrature,
        error: res.error,
        sample_count: 0,
    })
}

/// Plain Monte Carlo estimate `-(1/n) sum log2 f(z_j)` with `z_j` drawn from
/// the renormalized mixture.
///
/// The component index comes from inverting the cumulative weights with one
/// uniform; the Gaussian offset from a Box-Muller transform of two more.
pub fn entropy_monte_carlo(
    m: &HybridMixture,
    n: usize,
    seed: u64,
    override_tail_check: bool,
) -> Result<EntropyEstimate> {
    if n < MIN_MONTE_CARLO_SAMPLES {
        return Err(Error::invalid(
            "count",
            format!(
                "Monte Carlo entropy needs at least {MIN_MONTE_CARLO_SAMPLES} samples, got {n}"
            ),
        ));
    }
    check_tail(m, override_tail_check)?;
    let w_total = m.total_weight();
    if w_total <= 0.0 {
        return Err(Error::DegenerateMixture);
    }
    let ln_w_total = w_total.ln();

    let mut cumulative = Vec::with_capacity(m.weights().len());
    let mut acc = crate::special::CompensatedSum::new();
    for w in m.weights() {
        acc.add(*w);
        cumulative.push(acc.value() / w_total);
    }
    let last = cumulative.len() - 1;
    let sd = m.gaussian().sd();
    let means = m.component_means();

    let mut stream = NoiseStream::new(seed);
    // Welford running mean / variance of -ln f
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for j in 0..n {
        let u = stream.uniform();
        let idx = cumulative.partition_point(|c| *c <= u).min(last);
        let z = means[idx] + sd * stream.standard_normal();
        let x = -(m.ln_pdf(z) - ln_w_total);
        let delta = x - mean;
        mean += delta / (j + 1) as f64;
        m2 += delta * (x - mean);
    }
    let sample_var = m2 / (n - 1) as f64;
    Ok(EntropyEstimate {
        value: nats_to_bits(mean),
        method: EntropyMethod::MonteCarlo,
        error: nats_to_bits((sample_var / n as f64).sqrt()),
        sample_count: n,
    })
}

/// `(1/2 log2(2 pi e sd^2), 1/2 log2(2 pi e Var))`.
///
/// The lower bound is the entropy given the component index; the upper is
/// the Gaussian with the mixture's variance.
pub fn entropy_bounds(m: &HybridMixture) -> Result<(f64, f64)> {
    let (_, var) = m.moments(true)?;
    let lower = gaussian_entropy_bits(m.gaussian().sd());
    let upper = gaussian_entropy_bits(var.sqrt());
    Ok((lower, upper.max(lower)))
}
