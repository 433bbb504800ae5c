//! Numeric helpers shared by the mixture, truncation and entropy code.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

/// ln(1/sqrt(2*pi))
pub const LN_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_8;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Densities below this are treated as zero in `x log x` integrands.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Neumaier's variant of compensated summation.
///
/// Unlike plain Kahan summation it stays accurate when an added term is
/// larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`.
///
/// Going through `erfc` keeps full relative accuracy in the lower tail.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln(n!)` via `lgamma(n + 1)`.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0)
}

/// `ln(sum(exp(terms)))` without overflow or spurious underflow.
pub fn log_sum_exp<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let scaled: f64 = compensated_sum(iter.map(|t| (t - max).exp()));
    max + scaled.ln()
}

#[inline]
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Differential entropy of a normal distribution with standard deviation
/// `sd`, in bits.
pub fn gaussian_entropy_bits(sd: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sd * sd).log2()
}
