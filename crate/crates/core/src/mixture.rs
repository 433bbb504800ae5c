//! The hybrid noise density `Z = Z1 + Z2` with `Z1 ~ Poisson(lambda)` and
//! `Z2 ~ N(mean, sd^2)`, truncated to a finite Poisson-weighted mixture of
//! unit-spaced Gaussians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    compensated_sum, ln_factorial, log_sum_exp, std_normal_cdf, CompensatedSum, INV_SQRT_2PI,
    LN_INV_SQRT_2PI,
};

/// Half-width, in standard deviations, of the default evaluation domain
/// around the outermost component means.
pub const DEFAULT_DOMAIN_SIGMAS: f64 = 12.0;

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Parameters of the classical additive Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussian")]
pub struct GaussianParams {
    mean: f64,
    sd: f64,
}

#[derive(Deserialize)]
struct RawGaussian {
    mean: f64,
    sd: f64,
}

impl TryFrom<RawGaussian> for GaussianParams {
    type Error = Error;

    fn try_from(raw: RawGaussian) -> Result<Self> {
        GaussianParams::new(raw.mean, raw.sd)
    }
}

impl GaussianParams {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid(
                "mean",
                format!("must be finite, got {mean}"),
            ));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::invalid(
                "sd",
                format!("must be finite and > 0, got {sd}"),
            ));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// Rate of the Poisson (photon count) component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PoissonParams {
    lambda: f64,
}

impl TryFrom<f64> for PoissonParams {
    type Error = Error;

    fn try_from(lambda: f64) -> Result<Self> {
        PoissonParams::new(lambda)
    }
}

impl From<PoissonParams> for f64 {
    fn from(p: PoissonParams) -> f64 {
        p.lambda
    }
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and >= 0, got {lambda}"),
            ));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ln w_i`; `-inf` for `lambda = 0, i > 0`.
    pub fn ln_weight(&self, i: u64) -> f64 {
        if self.lambda == 0.0 {
            return if i == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        i as f64 * self.lambda.ln() - self.lambda - ln_factorial(i)
    }

    /// Poisson probability of `i` events, `e^-lambda lambda^i / i!`.
    pub fn weight(&self, i: u64) -> f64 {
        poisson_weight(*self, i)
    }
}

/// `e^-lambda lambda^i / i!`, evaluated in log space; large indices and rates
/// do not overflow.
pub fn poisson_weight(p: PoissonParams, i: u64) -> f64 {
    if p.lambda == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    p.ln_weight(i).exp()
}

/// Density of the `shift`-th component: `N(z; shift + mean, sd^2)`.
#[inline]
pub fn gaussian_pdf(g: GaussianParams, shift: u64, z: f64) -> f64 {
    let x = (z - shift as f64 - g.mean) / g.sd;
    INV_SQRT_2PI / g.sd * (-0.5 * x * x).exp()
}

/// Closed interval with an evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: f64,
    hi: f64,
    grid_points: usize,
}

impl Domain {
    pub fn new(lo: f64, hi: f64, grid_points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "bounds must be finite, got [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidDomain(format!(
                "lower bound {lo} must be below upper bound {hi}"
            )));
        }
        if grid_points < 2 {
            return Err(Error::InvalidDomain(format!(
                "grid needs at least 2 points, got {grid_points}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            grid_points,
        })
    }

    /// `[mean - 12 sd, order + mean + 12 sd]`. Every component keeps all but
    /// ~1e-33 of its mass inside.
    pub fn around(g: GaussianParams, order: usize, grid_points: usize) -> Result<Self> {
        let pad = DEFAULT_DOMAIN_SIGMAS * g.sd;
        Self::new(g.mean - pad, order as f64 + g.mean + pad, grid_points)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.grid_points - 1) as f64
    }

    /// Evenly spaced points; the last one is exactly `hi`.
    pub fn grid(&self) -> impl ExactSizeIterator<Item = f64> + Clone + '_ {
        let n = self.grid_points;
        let step = self.step();
        (0..n).map(move |k| {
            if k + 1 == n {
                self.hi
            } else {
                self.lo + step * k as f64
            }
        })
    }

    /// Trapezoidal-rule weights matching [`Domain::grid`].
    pub fn trapezoid_weight(&self, k: usize) -> f64 {
        let h = self.step();
        if k == 0 || k + 1 == self.grid_points {
            0.5 * h
        } else {
            h
        }
    }
}

/// Poisson-weighted mixture of unit-spaced Gaussians, truncated after
/// component `order`.
///
/// Weights are stored as computed (they sum to less than one); see
/// [`HybridMixture::renormalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMixture {
    gaussian: GaussianParams,
    poisson: PoissonParams,
    order: usize,
    weights: Vec<f64>,
    ln_weights: Vec<f64>,
    component_means: Vec<f64>,
    total_weight: f64,
}

/// Builds the truncated mixture with components `0..=order`.
pub fn build_mixture(g: GaussianParams, p: PoissonParams, order: usize) -> HybridMixture {
    let ln_weights: Vec<f64> = (0..=order as u64).map(|i| p.ln_weight(i)).collect();
    let weights: Vec<f64> = (0..=order as u64).map(|i| poisson_weight(p, i)).collect();
    let component_means = (0..=order).map(|i| i as f64 + g.mean).collect();
    let total_weight = compensated_sum(weights.iter().copied());
    HybridMixture {
        gaussian: g,
        poisson: p,
        order,
        weights,
        ln_weights,
        component_means,
        total_weight,
    }
}

impl HybridMixture {
    /// Validating constructor from raw parameters.
    pub fn new(mean: f64, sd: f64, lambda: f64, order: usize) -> Result<Self> {
        Ok(build_mixture(
            GaussianParams::new(mean, sd)?,
            PoissonParams::new(lambda)?,
            order,
        ))
    }

    pub fn gaussian(&self) -> GaussianParams {
        self.gaussian
    }

    pub fn poisson(&self) -> PoissonParams {
        self.poisson
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn component_means(&self) -> &[f64] {
        &self.component_means
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// The default domain for this mixture with `grid_points` points.
    pub fn default_domain(&self, grid_points: usize) -> Result<Domain> {
        Domain::around(self.gaussian, self.order, grid_points)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        let sd = self.gaussian.sd;
        let scale = INV_SQRT_2PI / sd;
        let mut acc = 0.0;
        for (w, mu) in self.weights.iter().zip(&self.component_means) {
            let x = (z - mu) / sd;
            acc += w * scale * (-0.5 * x * x).exp();
        }
        acc
    }

    /// Natural log of [`HybridMixture::pdf`], finite far into the tails
    /// where the density itself underflows.
    pub fn ln_pdf(&self, z: f64) -> f64 {
        let direct = self.pdf(z);
        if direct > 1e-280 {
            return direct.ln();
        }
        let sd = self.gaussian.sd;
        let base = LN_INV_SQRT_2PI - sd.ln();
        let terms = self
            .ln_weights
            .iter()
            .zip(&self.component_means)
            .map(move |(lw, mu)| {
                let x = (z - mu) / sd;
                lw + base - 0.5 * x * x
            });
        log_sum_exp(terms)
    }

    /// `sum_i w_i Phi((z - mu_i) / sd)`; tends to `total_weight` as `z -> inf`.
    pub fn cdf(&self, z: f64) -> f64 {
        let sd = self.gaussian.sd;
        let mut acc = CompensatedSum::new();
        for (w, mu) in self.weights.iter().zip(&self.component_means) {
            acc.add(w * std_normal_cdf((z - mu) / sd));
        }
        acc.value()
    }

    /// Mean and variance of the mixture.
    ///
    /// With `renormalized` the weights are divided by the total weight first,
    /// which gives the moments of the truncated density as a distribution.
    /// Without it the raw sub-unity weights are used as-is.
    pub fn moments(&self, renormalized: bool) -> Result<(f64, f64)> {
        let scale = if renormalized {
            if self.total_weight <= 0.0 {
                return Err(Error::DegenerateMixture);
            }
            1.0 / self.total_weight
        } else {
            1.0
        };
        let mean = compensated_sum(
            self.weights
                .iter()
                .zip(&self.component_means)
                .map(|(w, mu)| w * scale * mu),
        );
        let sd2 = self.gaussian.sd * self.gaussian.sd;
        let variance = if renormalized {
            // sd^2 + spread of the means; algebraically equal to the raw
            // second moment minus mean^2 but without the cancellation.
            sd2 + compensated_sum(
                self.weights
                    .iter()
                    .zip(&self.component_means)
                    .map(|(w, mu)| w * scale * (mu - mean) * (mu - mean)),
            )
        } else {
            let second = compensated_sum(
                self.weights
                    .iter()
                    .zip(&self.component_means)
                    .map(|(w, mu)| w * (sd2 + mu * mu)),
            );
            second - mean * mean
        };
        Ok((mean, variance))
    }

    /// Scales the weights by `1 / total_weight`.
    pub fn renormalize(&self) -> Result<HybridMixture> {
        if self.total_weight <= 0.0 {
            return Err(Error::DegenerateMixture);
        }
        if self.total_weight == 1.0 {
            return Ok(self.clone());
        }
        let w_total = self.total_weight;
        let ln_total = w_total.ln();
        let weights: Vec<f64> = self.weights.iter().map(|w| w / w_total).collect();
        let ln_weights = self.ln_weights.iter().map(|lw| lw - ln_total).collect();
        let total_weight = compensated_sum(weights.iter().copied());
        Ok(HybridMixture {
            weights,
            ln_weights,
            total_weight,
            ..self.clone()
        })
    }

    /// Index of the heaviest component (first one on ties).
    pub fn dominant_component(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}
