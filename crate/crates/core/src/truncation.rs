//! How many mixture components are enough.
//!
//! A truncated mixture is compared against a high-order reference mixture
//! whose discarded Poisson mass is below [`REFERENCE_EPSILON`]. The verdict
//! combines the discarded mass with the largest pointwise density gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{build_mixture, Domain, GaussianParams, HybridMixture, PoissonParams};
use crate::special::{CompensatedSum, DENSITY_FLOOR};

pub const REFERENCE_EPSILON: f64 = 1e-12;

/// Upper bound on the reference order: `lambda + 40 sqrt(lambda + 1) + 60`.
pub fn reference_order_cap(p: PoissonParams) -> usize {
    let l = p.lambda();
    (l + 40.0 * (l + 1.0).sqrt() + 60.0).floor() as usize
}

/// Poisson mass beyond component `order`: `1 - sum_{i<=order} w_i`.
///
/// Below the mode this is `1 - cdf`. Past the mode the terms decrease
/// geometrically, so the upper tail is summed directly and stays accurate
/// relative to its own size rather than to one.
pub fn tail_mass(p: PoissonParams, order: usize) -> f64 {
    let lambda = p.lambda();
    if lambda == 0.0 {
        return 0.0;
    }
    if (order + 1) as f64 > lambda {
        upper_tail(p, order)
    } else {
        let kept: CompensatedSum = (0..=order as u64).map(|i| p.weight(i)).collect();
        (1.0 - kept.value()).clamp(0.0, 1.0)
    }
}

/// `sum_{i > order} w_i`, for `order + 1 > lambda`.
fn upper_tail(p: PoissonParams, order: usize) -> f64 {
    let lambda = p.lambda();
    let mut i = order as u64 + 1;
    let mut term = p.weight(i);
    let mut acc = CompensatedSum::new();
    while term > 0.0 {
        acc.add(term);
        if term < acc.value() * 1e-18 {
            break;
        }
        i += 1;
        term *= lambda / i as f64;
    }
    acc.value().clamp(0.0, 1.0)
}

/// Smallest order whose tail mass is at most `epsilon`.
///
/// Scans forward from component zero, carrying the cumulative weight. Once
/// the scan is past the Poisson mode, the tail is taken from [`tail_mass`]
/// so the result agrees with it exactly.
pub fn minimal_components(p: PoissonParams, epsilon: f64) -> Result<usize> {
    minimal_components_capped(p, epsilon, usize::MAX).map(|(order, _)| order)
}

/// As [`minimal_components`] but stops at `cap`. The flag is `true` when the
/// cap was reached before the tail fell to `epsilon`.
pub fn minimal_components_capped(
    p: PoissonParams,
    epsilon: f64,
    cap: usize,
) -> Result<(usize, bool)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    let lambda = p.lambda();
    let mut kept = CompensatedSum::new();
    let mut order = 0usize;
    loop {
        let tail = if (order + 1) as f64 > lambda {
            tail_mass(p, order)
        } else {
            kept.add(p.weight(order as u64));
            (1.0 - kept.value()).clamp(0.0, 1.0)
        };
        if tail <= epsilon {
            return Ok((order, false));
        }
        if order >= cap {
            return Ok((order, true));
        }
        order += 1;
    }
}

/// Order of the reference mixture used to judge a truncation at `order`,
/// and whether the reference search hit [`reference_order_cap`].
pub fn reference_order(p: PoissonParams, order: usize) -> (usize, bool) {
    let (r_ref, capped) = minimal_components_capped(p, REFERENCE_EPSILON, reference_order_cap(p))
        .expect("reference epsilon is in (0, 1)");
    (r_ref.max(order), capped)
}

/// Adequacy thresholds. `sup_norm` is relative to the peak of the
/// reference density on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tail_mass: f64,
    pub sup_norm_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tail_mass: 0.02,
            sup_norm_rel: 0.05,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_mass >= 0.0 && self.tail_mass <= 1.0) {
            return Err(Error::invalid("tail_mass threshold", "must lie in [0, 1]"));
        }
        if !(self.sup_norm_rel >= 0.0 && self.sup_norm_rel.is_finite()) {
            return Err(Error::invalid(
                "sup_norm threshold",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Error metrics of one truncation against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub lambda: f64,
    pub order: usize,
    pub tail_mass: f64,
    pub sup_norm: f64,
    #[serde(rename = "l1")]
    pub l1_distance: f64,
    #[serde(rename = "kl_bits")]
    pub kl_divergence: f64,
    pub adequate: bool,
    /// Set when the reference order was limited by [`reference_order_cap`].
    #[serde(default, skip_serializing_if = "is_false")]
    pub reference_capped: bool,
}

/// Compares the order-`order` truncation with the reference mixture on the
/// grid of `domain`.
///
/// The KL term is `p ln(p/q) - p + q` integrated by the trapezoidal rule over
/// the renormalized densities. It equals the KL divergence when both integrate
/// to one and is pointwise nonnegative, so grid error cannot push it below
/// zero.
pub fn approximation_report(
    g: GaussianParams,
    p: PoissonParams,
    order: usize,
    domain: &Domain,
    thresholds: &Thresholds,
) -> Result<ApproximationReport> {
    thresholds.validate()?;
    let (ref_order, capped) = reference_order(p, order);
    let truncated = build_mixture(g, p, order);
    let reference = if ref_order == order {
        truncated.clone()
    } else {
        build_mixture(g, p, ref_order)
    };
    let metrics = grid_metrics(&reference, &truncated, domain);
    let tail = tail_mass(p, order);
    let adequate = tail <= thresholds.tail_mass
        && metrics.sup_norm <= thresholds.sup_norm_rel * metrics.reference_peak;
    Ok(ApproximationReport {
        lambda: p.lambda(),
        order,
        tail_mass: tail,
        sup_norm: metrics.sup_norm,
        l1_distance: metrics.l1,
        kl_divergence: metrics.kl_bits,
        adequate,
        reference_capped: capped,
    })
}

struct GridMetrics {
    sup_norm: f64,
    l1: f64,
    kl_bits: f64,
    reference_peak: f64,
}

fn grid_metrics(
    reference: &HybridMixture,
    truncated: &HybridMixture,
    domain: &Domain,
) -> GridMetrics {
    let ln_w_ref = reference.total_weight().ln();
    let ln_w_trunc = truncated.total_weight().ln();
    let mut sup_norm = 0.0f64;
    let mut peak = 0.0f64;
    let mut l1 = CompensatedSum::new();
    let mut kl = CompensatedSum::new();
    for (k, z) in domain.grid().enumerate() {
        let f_ref = reference.pdf(z);
        let f_trunc = truncated.pdf(z);
        let gap = (f_ref - f_trunc).abs();
        let h = domain.trapezoid_weight(k);
        sup_norm = sup_norm.max(gap);
        peak = peak.max(f_ref);
        l1.add(h * gap);

        let ln_p = reference.ln_pdf(z) - ln_w_ref;
        let p_dens = ln_p.exp();
        if p_dens < DENSITY_FLOOR {
            continue;
        }
        let ln_q = truncated.ln_pdf(z) - ln_w_trunc;
        let q_dens = ln_q.exp();
        let term = p_dens * (ln_p - ln_q) - p_dens + q_dens;
        kl.add(h * term.max(0.0));
    }
    GridMetrics {
        sup_norm,
        l1: l1.value(),
        kl_bits: kl.value() / std::f64::consts::LN_2,
        reference_peak: peak,
    }
}

/// How each sweep cell picks its evaluation domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainRule {
    /// `[mean - 12 sd, R + mean + 12 sd]` with `R` the cell's reference order.
    Default {
        grid_points: usize,
    },
    Fixed(Domain),
}

impl Default for DomainRule {
    fn default() -> Self {
        DomainRule::Default {
            grid_points: crate::mixture::DEFAULT_GRID_POINTS,
        }
    }
}

impl DomainRule {
    pub fn domain_for(&self, g: GaussianParams, p: PoissonParams, order: usize) -> Result<Domain> {
        match *self {
            DomainRule::Fixed(d) => Ok(d),
            DomainRule::Default { grid_points } => {
                let (ref_order, _) = reference_order(p, order);
                Domain::around(g, ref_order, grid_points)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub thresholds: Thresholds,
    pub rows: Vec<ApproximationReport>,
}

impl SweepResult {
    pub fn row(&self, lambda: f64, order: usize) -> Option<&ApproximationReport> {
        self.rows
            .iter()
            .find(|r| r.lambda == lambda && r.order == order)
    }
}

/// One report per `(lambda, order)` pair, ordered by `(lambda, order)`.
///
/// Cells are evaluated on a rayon pool of `threads` workers (`None` or
/// `Some(0)` lets rayon decide). Each cell is a pure computation and rows are
/// assembled in a fixed order, so the result does not depend on scheduling.
pub fn adequacy_sweep(
    g: GaussianParams,
    lambdas: &[f64],
    orders: &[usize],
    rule: DomainRule,
    thresholds: Thresholds,
    threads: Option<usize>,
) -> Result<SweepResult> {
    use rayon::prelude::*;

    if lambdas.is_empty() {
        return Err(Error::invalid("lambda", "sweep needs at least one rate"));
    }
    if orders.is_empty() {
        return Err(Error::invalid("order", "sweep needs at least one order"));
    }
    thresholds.validate()?;
    let mut rates = lambdas
        .iter()
        .map(|&l| PoissonParams::new(l))
        .collect::<Result<Vec<_>>>()?;
    rates.sort_by(|a, b| a.lambda().total_cmp(&b.lambda()));
    rates.dedup();
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();

    let cells: Vec<(PoissonParams, usize)> = rates
        .iter()
        .flat_map(|&p| orders.iter().map(move |&r| (p, r)))
        .collect();
    let run_cell = |&(p, order): &(PoissonParams, usize)| {
        rule.domain_for(g, p, order)
            .and_then(|d| approximation_report(g, p, order, &d, &thresholds))
            .map_err(|e| Error::SweepCell {
                lambda: p.lambda(),
                order,
                source: Box::new(e),
            })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    let rows = pool.install(|| cells.par_iter().map(run_cell).collect::<Vec<_>>());
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { thresholds, rows })
}
