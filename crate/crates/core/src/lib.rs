//! Hybrid quantum noise: the density of `Z = Z1 + Z2` where `Z1` is a Poisson
//! photon count and `Z2` additive Gaussian noise.
//!
//! The density is an infinite Poisson-weighted mixture of unit-spaced
//! Gaussians. This crate truncates it to a finite mixture, measures how good
//! the truncation is, computes the differential entropy (adaptive quadrature
//! and Monte Carlo) and draws seeded samples of `Z` for goodness-of-fit checks.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod mixture;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod truncation;

pub use entropy::{
    entropy_bounds, entropy_monte_carlo, entropy_quadrature, EntropyEstimate, EntropyMethod,
};
pub use error::{Error, Result};
pub use mixture::{
    build_mixture, gaussian_pdf, poisson_weight, Domain, GaussianParams, HybridMixture,
    PoissonParams,
};
pub use sampling::{
    ks_test, sample_hybrid, sample_poisson, GofReport, NoiseStream, PoissonSampler, SampleBatch,
};
pub use truncation::{
    adequacy_sweep, approximation_report, minimal_components, tail_mass, ApproximationReport,
    DomainRule, SweepResult, Thresholds,
};
