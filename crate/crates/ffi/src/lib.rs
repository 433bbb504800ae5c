//! C ABI for `hybridnoise`.
//!
//! Every function returns an [`HnStatus`]; results are written through out
//! pointers. On failure a human-readable message is kept per thread and can
//! be read with [`hn_last_error_message`]. Mixtures and sweep results are
//! opaque handles owned by the caller and released with their `_free`
//! function. Panics never cross the boundary; they surface as
//! `HN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hybridnoise::entropy::DEFAULT_TOLERANCE;
use hybridnoise::mixture::DEFAULT_GRID_POINTS;
use hybridnoise::{
    adequacy_sweep, approximation_report, entropy_bounds, entropy_monte_carlo, entropy_quadrature,
    ks_test, minimal_components, poisson_weight, sample_hybrid, tail_mass, ApproximationReport,
    Domain, DomainRule, EntropyEstimate, EntropyMethod, Error, GaussianParams, HybridMixture,
    PoissonParams, SampleBatch, SweepResult, Thresholds,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    InvalidDomain = 3,
    DegenerateMixture = 4,
    TruncationInadequate = 5,
    QuadratureFailure = 6,
    UnsupportedRate = 7,
    ParameterMismatch = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnEntropyMethod {
    Quadrature = 0,
    MonteCarlo = 1,
}

/// Truncated hybrid-noise mixture.
pub struct HnMixture(HybridMixture);

/// Rows of an adequacy sweep, ordered by rate then order.
pub struct HnSweep(SweepResult);

/// Evaluation domain `[lo, hi]` with `grid_points` equally spaced points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnDomain {
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
}

/// Adequacy thresholds; `sup_norm_rel` is relative to the reference peak.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnThresholds {
    pub tail_mass: f64,
    pub sup_norm_rel: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnReport {
    pub lambda: f64,
    pub order: usize,
    pub tail_mass: f64,
    pub sup_norm: f64,
    pub l1_distance: f64,
    pub kl_divergence_bits: f64,
    pub adequate: bool,
    pub reference_capped: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnEntropy {
    /// Bits.
    pub value: f64,
    pub method: HnEntropyMethod,
    /// Quadrature error estimate or Monte Carlo standard error.
    pub error: f64,
    pub sample_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnGof {
    pub ks_statistic: f64,
    pub sample_count: usize,
    pub critical_value_5pct: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HnStatus {
    match e {
        Error::InvalidParameter { .. } => HnStatus::InvalidArgument,
        Error::InvalidDomain(_) => HnStatus::InvalidDomain,
        Error::DegenerateMixture => HnStatus::DegenerateMixture,
        Error::TruncationInadequate { .. } => HnStatus::TruncationInadequate,
        Error::QuadratureFailure { .. } => HnStatus::QuadratureFailure,
        Error::UnsupportedRate { .. } => HnStatus::UnsupportedRate,
        Error::ParameterMismatch(_) => HnStatus::ParameterMismatch,
        Error::SweepCell { source, .. } => status_of(source),
    }
}

struct Failure(HnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HnStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {msg}"));
            HnStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn mixture_ref<'a>(m: *const HnMixture) -> Result<&'a HybridMixture, Failure> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("mixture"))
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn domain_of(d: &HnDomain) -> Result<Domain, Failure> {
    Ok(Domain::new(d.lo, d.hi, d.grid_points)?)
}

fn thresholds_of(t: *const HnThresholds) -> Thresholds {
    // SAFETY: callers pass either null or a valid pointer.
    match unsafe { t.as_ref() } {
        Some(t) => Thresholds {
            tail_mass: t.tail_mass,
            sup_norm_rel: t.sup_norm_rel,
        },
        None => Thresholds::default(),
    }
}

fn report_of(r: &ApproximationReport) -> HnReport {
    HnReport {
        lambda: r.lambda,
        order: r.order,
        tail_mass: r.tail_mass,
        sup_norm: r.sup_norm,
        l1_distance: r.l1_distance,
        kl_divergence_bits: r.kl_divergence,
        adequate: r.adequate,
        reference_capped: r.reference_capped,
    }
}

fn entropy_of(e: &EntropyEstimate) -> HnEntropy {
    HnEntropy {
        value: e.value,
        method: match e.method {
            EntropyMethod::Quadrature => HnEntropyMethod::Quadrature,
            EntropyMethod::MonteCarlo => HnEntropyMethod::MonteCarlo,
        },
        error: e.error,
        sample_count: e.sample_count,
    }
}

/// Message of the most recent failure on the calling thread, or an empty
/// string. The pointer stays valid until the next failing call on the same
/// thread and must not be freed.
#[no_mangle]
pub extern "C" fn hn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn hn_status_name(status: HnStatus) -> *const c_char {
    let name: &'static [u8] = match status {
        HnStatus::Ok => b"ok\0",
        HnStatus::InvalidArgument => b"invalid argument\0",
        HnStatus::NullPointer => b"null pointer\0",
        HnStatus::InvalidDomain => b"invalid domain\0",
        HnStatus::DegenerateMixture => b"degenerate mixture\0",
        HnStatus::TruncationInadequate => b"truncation inadequate\0",
        HnStatus::QuadratureFailure => b"quadrature failure\0",
        HnStatus::UnsupportedRate => b"unsupported rate\0",
        HnStatus::ParameterMismatch => b"parameter mismatch\0",
        HnStatus::BufferTooSmall => b"buffer too small\0",
        HnStatus::Panic => b"panic\0",
    };
    name.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn hn_thresholds_default() -> HnThresholds {
    let t = Thresholds::default();
    HnThresholds {
        tail_mass: t.tail_mass,
        sup_norm_rel: t.sup_norm_rel,
    }
}

/// Builds the order-`order` truncation of the mixture with Gaussian
/// `N(mean, sd^2)` and Poisson rate `lambda`.
///
/// # Safety
/// `out` must be null or valid for writes. On success `*out` receives a
/// handle to release with [`hn_mixture_free`].
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_new(
    mean: f64,
    sd: f64,
    lambda: f64,
    order: usize,
    out: *mut *mut HnMixture,
) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m = HybridMixture::new(mean, sd, lambda, order)?;
        *out = Box::into_raw(Box::new(HnMixture(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_free(m: *mut HnMixture) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// New handle with weights divided by their sum.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_renormalize(
    m: *const HnMixture,
    out: *mut *mut HnMixture,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(HnMixture(m.renormalize()?)));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_order(m: *const HnMixture, out: *mut usize) -> HnStatus {
    guard(|| {
        *out_ref(out, "out")? = mixture_ref(m)?.order();
        Ok(())
    })
}

/// Sum of the retained weights.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_total_weight(m: *const HnMixture, out: *mut f64) -> HnStatus {
    guard(|| {
        *out_ref(out, "out")? = mixture_ref(m)?.total_weight();
        Ok(())
    })
}

/// Copies the `order + 1` weights into `buf`. `*needed` always receives the
/// weight count; if `len` is smaller nothing is copied and
/// `HN_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `m` must be a live handle, `buf` valid for `len` writes, `needed` null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_weights(
    m: *const HnMixture,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> HnStatus {
    guard(|| {
        let w = mixture_ref(m)?.weights();
        if let Some(n) = needed.as_mut() {
            *n = w.len();
        }
        if len < w.len() {
            return Err(Failure(
                HnStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", w.len()),
            ));
        }
        slice_out(buf, len, "buf")?[..w.len()].copy_from_slice(w);
        Ok(())
    })
}

/// Density at `z`.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_pdf(m: *const HnMixture, z: f64, out: *mut f64) -> HnStatus {
    guard(|| {
        *out_ref(out, "out")? = mixture_ref(m)?.pdf(z);
        Ok(())
    })
}

/// Natural log of the density at `z`, finite far into the tails.
///
/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_ln_pdf(m: *const HnMixture, z: f64, out: *mut f64) -> HnStatus {
    guard(|| {
        *out_ref(out, "out")? = mixture_ref(m)?.ln_pdf(z);
        Ok(())
    })
}

/// Cumulative distribution at `z` (tends to the total weight, not 1, unless
/// the mixture is renormalized).
///
/// # Safety
/// `m` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_cdf(m: *const HnMixture, z: f64, out: *mut f64) -> HnStatus {
    guard(|| {
        *out_ref(out, "out")? = mixture_ref(m)?.cdf(z);
        Ok(())
    })
}

/// Density at each of `n` points.
///
/// # Safety
/// `m` must be a live handle; `z` valid for `n` reads and `out` for `n`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_pdf_many(
    m: *const HnMixture,
    z: *const f64,
    n: usize,
    out: *mut f64,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let z = slice_in(z, n, "z")?;
        let out = slice_out(out, n, "out")?;
        for (o, &x) in out.iter_mut().zip(z) {
            *o = m.pdf(x);
        }
        Ok(())
    })
}

/// Mean and variance, of the truncated weights as given or after
/// renormalization.
///
/// # Safety
/// `m` must be a live handle; `mean` and `variance` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_mixture_moments(
    m: *const HnMixture,
    renormalized: bool,
    mean: *mut f64,
    variance: *mut f64,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let mean = out_ref(mean, "mean")?;
        let variance = out_ref(variance, "variance")?;
        let (mu, var) = m.moments(renormalized)?;
        *mean = mu;
        *variance = var;
        Ok(())
    })
}

/// Poisson weight `e^-lambda lambda^i / i!`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_poisson_weight(lambda: f64, i: u64, out: *mut f64) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = poisson_weight(PoissonParams::new(lambda)?, i);
        Ok(())
    })
}

/// Poisson probability discarded by keeping components `0..=order`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_tail_mass(lambda: f64, order: usize, out: *mut f64) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = tail_mass(PoissonParams::new(lambda)?, order);
        Ok(())
    })
}

/// Smallest order whose tail mass is at most `epsilon`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_minimal_components(
    lambda: f64,
    epsilon: f64,
    out: *mut usize,
) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = minimal_components(PoissonParams::new(lambda)?, epsilon)?;
        Ok(())
    })
}

/// Compares the order-`order` truncation with a high-order reference.
/// `domain` and `thresholds` may be null for the defaults.
///
/// # Safety
/// `domain` and `thresholds` must be null or valid for reads; `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn hn_approximation_report(
    mean: f64,
    sd: f64,
    lambda: f64,
    order: usize,
    domain: *const HnDomain,
    thresholds: *const HnThresholds,
    out: *mut HnReport,
) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let g = GaussianParams::new(mean, sd)?;
        let p = PoissonParams::new(lambda)?;
        let thresholds = thresholds_of(thresholds);
        thresholds.validate()?;
        let domain = match domain.as_ref() {
            Some(d) => domain_of(d)?,
            None => DomainRule::default().domain_for(g, p, order)?,
        };
        *out = report_of(&approximation_report(g, p, order, &domain, &thresholds)?);
        Ok(())
    })
}

/// Evaluates every `(lambda, order)` pair. `thresholds` may be null for the
/// defaults; `threads = 0` lets the runtime choose.
///
/// # Safety
/// `lambdas` and `orders` must be valid for `n_lambdas` and `n_orders` reads,
/// `thresholds` null or valid, `out` valid for writes. On success `*out`
/// receives a handle to release with [`hn_sweep_free`].
#[no_mangle]
pub unsafe extern "C" fn hn_sweep_new(
    mean: f64,
    sd: f64,
    lambdas: *const f64,
    n_lambdas: usize,
    orders: *const usize,
    n_orders: usize,
    thresholds: *const HnThresholds,
    threads: usize,
    out: *mut *mut HnSweep,
) -> HnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let lambdas = slice_in(lambdas, n_lambdas, "lambdas")?;
        let orders = slice_in(orders, n_orders, "orders")?;
        let g = GaussianParams::new(mean, sd)?;
        let res = adequacy_sweep(
            g,
            lambdas,
            orders,
            DomainRule::default(),
            thresholds_of(thresholds),
            Some(threads),
        )?;
        *out = Box::into_raw(Box::new(HnSweep(res)));
        Ok(())
    })
}

/// # Safety
/// `s` must be a live sweep handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_sweep_len(s: *const HnSweep, out: *mut usize) -> HnStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("sweep"))?;
        *out_ref(out, "out")? = s.0.rows.len();
        Ok(())
    })
}

/// # Safety
/// `s` must be a live sweep handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_sweep_row(
    s: *const HnSweep,
    index: usize,
    out: *mut HnReport,
) -> HnStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("sweep"))?;
        let out = out_ref(out, "out")?;
        let row = s.0.rows.get(index).ok_or_else(|| {
            Failure(
                HnStatus::InvalidArgument,
                format!("row {index} out of range (sweep has {})", s.0.rows.len()),
            )
        })?;
        *out = report_of(row);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a sweep handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hn_sweep_free(s: *mut HnSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Entropy in bits by adaptive quadrature. `domain` may be null for the
/// mixture's default domain; `tolerance <= 0` selects the default. On
/// `HN_STATUS_QUADRATURE_FAILURE` `out` holds the best estimate.
///
/// # Safety
/// `m` must be a live handle, `domain` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_entropy_quadrature(
    m: *const HnMixture,
    domain: *const HnDomain,
    tolerance: f64,
    override_tail_check: bool,
    out: *mut HnEntropy,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let out = out_ref(out, "out")?;
        let domain = match domain.as_ref() {
            Some(d) => domain_of(d)?,
            None => m.default_domain(DEFAULT_GRID_POINTS)?,
        };
        let tol = if tolerance > 0.0 {
            tolerance
        } else {
            DEFAULT_TOLERANCE
        };
        match entropy_quadrature(m, &domain, tol, override_tail_check) {
            Ok(e) => {
                *out = entropy_of(&e);
                Ok(())
            }
            Err(e) => {
                if let Error::QuadratureFailure { estimate, error } = e {
                    *out = HnEntropy {
                        value: estimate,
                        method: HnEntropyMethod::Quadrature,
                        error,
                        sample_count: 0,
                    };
                }
                Err(e.into())
            }
        }
    })
}

/// Monte Carlo entropy in bits from `n` seeded draws.
///
/// # Safety
/// `m` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_entropy_monte_carlo(
    m: *const HnMixture,
    n: usize,
    seed: u64,
    override_tail_check: bool,
    out: *mut HnEntropy,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let out = out_ref(out, "out")?;
        *out = entropy_of(&entropy_monte_carlo(m, n, seed, override_tail_check)?);
        Ok(())
    })
}

/// Gaussian lower and upper bounds on the entropy, in bits.
///
/// # Safety
/// `m` must be a live handle; `lower` and `upper` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hn_entropy_bounds(
    m: *const HnMixture,
    lower: *mut f64,
    upper: *mut f64,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let lower = out_ref(lower, "lower")?;
        let upper = out_ref(upper, "upper")?;
        let (lo, hi) = entropy_bounds(m)?;
        *lower = lo;
        *upper = hi;
        Ok(())
    })
}

/// Writes `count` seeded draws of `Poisson(lambda) + N(mean, sd^2)` to `out`.
///
/// # Safety
/// `out` must be valid for `count` writes.
#[no_mangle]
pub unsafe extern "C" fn hn_sample_hybrid(
    mean: f64,
    sd: f64,
    lambda: f64,
    seed: u64,
    out: *mut f64,
    count: usize,
) -> HnStatus {
    guard(|| {
        let out = slice_out(out, count, "out")?;
        let batch = sample_hybrid(
            GaussianParams::new(mean, sd)?,
            PoissonParams::new(lambda)?,
            count,
            seed,
        )?;
        out.copy_from_slice(&batch.values);
        Ok(())
    })
}

/// Kolmogorov-Smirnov test of `n` values, drawn with the mixture's own
/// `(lambda, mean, sd)`, against its renormalized CDF.
///
/// # Safety
/// `m` must be a live handle, `values` valid for `n` reads, `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn hn_ks_test(
    m: *const HnMixture,
    values: *const f64,
    n: usize,
    out: *mut HnGof,
) -> HnStatus {
    guard(|| {
        let m = mixture_ref(m)?;
        let out = out_ref(out, "out")?;
        let batch = SampleBatch {
            values: slice_in(values, n, "values")?.to_vec(),
            seed: 0,
            lambda: m.poisson().lambda(),
            gaussian: m.gaussian(),
            count: n,
        };
        let r = ks_test(&batch, m)?;
        *out = HnGof {
            ks_statistic: r.ks_statistic,
            sample_count: r.sample_count,
            critical_value_5pct: r.critical_value_5pct,
            pass: r.pass,
        };
        Ok(())
    })
}
