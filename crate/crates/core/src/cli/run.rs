use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::json;

use super::config::{
    Command, OutputFormat, RunConfig, DEFAULT_ENTROPY_SAMPLES, DEFAULT_EPSILON,
    DEFAULT_SAMPLE_COUNT, DEFAULT_SEED,
};
use crate::entropy::{self, DEFAULT_TOLERANCE};
use crate::error::Error;
use crate::mixture::{
    build_mixture, Domain, GaussianParams, HybridMixture, PoissonParams, DEFAULT_GRID_POINTS,
};
use crate::sampling::{sample_hybrid, SampleBatch};
use crate::truncation::{
    self, adequacy_sweep, approximation_report, minimal_components, ApproximationReport,
    DomainRule, SweepResult, Thresholds, REFERENCE_EPSILON,
};

pub const THREADS_ENV: &str = "HYBRIDNOISE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(#[from] super::config::ValidationError),
    #[error("out: cannot write '{path}': {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(super::config::ValidationError(vec![msg.into()]))
    }
}

/// What a run produced: the artifact (file or stdout) and a human summary
/// for stdout.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub artifact: String,
    pub summary: Option<String>,
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn gaussian(cfg: &RunConfig) -> Result<GaussianParams, CliError> {
    Ok(GaussianParams::new(cfg.mean, cfg.sd)?)
}

fn poisson(cfg: &RunConfig) -> Result<PoissonParams, CliError> {
    Ok(PoissonParams::new(cfg.rate())?)
}

/// The requested order, or the smallest order with tail mass at most
/// 1e-12.
fn order_or_reference(cfg: &RunConfig, p: PoissonParams) -> Result<usize, CliError> {
    match cfg.single_order() {
        Some(r) => Ok(r),
        None => Ok(minimal_components(p, REFERENCE_EPSILON)?),
    }
}

fn domain_for(cfg: &RunConfig, m: &HybridMixture) -> Result<Domain, CliError> {
    let default = m.default_domain(DEFAULT_GRID_POINTS)?;
    Ok(Domain::new(
        cfg.domain.lo.unwrap_or(default.lo()),
        cfg.domain.hi.unwrap_or(default.hi()),
        cfg.domain.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
    )?)
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            CliError::invalid(format!(
                "{THREADS_ENV}: expected a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Executes a validated configuration and returns its outputs without
/// touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    match cfg.command {
        Command::Pdf | Command::Cdf => {
            let p = poisson(cfg)?;
            let m = build_mixture(gaussian(cfg)?, p, order_or_reference(cfg, p)?);
            let domain = domain_for(cfg, &m)?;
            Ok(RunOutput {
                artifact: grid_artifact(cfg, &m, &domain),
                summary: None,
            })
        }
        Command::Truncate => {
            let p = poisson(cfg)?;
            let eps = cfg.epsilon.unwrap_or(DEFAULT_EPSILON);
            let order = minimal_components(p, eps)?;
            let tail = truncation::tail_mass(p, order);
            let artifact = match cfg.format {
                OutputFormat::Json => json_line(&json!({
                    "lambda": p.lambda(),
                    "epsilon": eps,
                    "order": order,
                    "tail_mass": tail,
                })),
                OutputFormat::Csv => format!(
                    "lambda,epsilon,order,tail_mass\n{},{},{order},{}\n",
                    fmt_f64(p.lambda()),
                    fmt_f64(eps),
                    fmt_f64(tail)
                ),
            };
            Ok(RunOutput {
                artifact,
                summary: Some(format!(
                    "minimal order R = {order} for lambda = {} (tail mass {tail:e} <= epsilon {eps:e})\n",
                    p.lambda()
                )),
            })
        }
        Command::Entropy => entropy_run(cfg),
        Command::Sample => {
            let batch = sample_hybrid(
                gaussian(cfg)?,
                poisson(cfg)?,
                cfg.count.unwrap_or(DEFAULT_SAMPLE_COUNT),
                cfg.seed.unwrap_or(DEFAULT_SEED),
            )?;
            Ok(RunOutput {
                artifact: sample_artifact(cfg.format, &batch),
                summary: None,
            })
        }
        Command::Sweep => {
            let rule = match (cfg.domain.lo, cfg.domain.hi) {
                (Some(lo), Some(hi)) => DomainRule::Fixed(Domain::new(
                    lo,
                    hi,
                    cfg.domain.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
                )?),
                _ => DomainRule::Default {
                    grid_points: cfg.domain.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
                },
            };
            let res = adequacy_sweep(
                gaussian(cfg)?,
                &cfg.lambda,
                &cfg.order,
                rule,
                Thresholds::default(),
                threads_from_env()?,
            )?;
            let capped = res.rows.iter().filter(|r| r.reference_capped).count();
            Ok(RunOutput {
                artifact: sweep_artifact(cfg.format, &res),
                summary: (capped > 0)
                    .then(|| format!("warning: reference order capped in {capped} cell(s)\n")),
            })
        }
        Command::Report => {
            let g = gaussian(cfg)?;
            let p = poisson(cfg)?;
            let order = cfg.single_order().expect("validated: report has an order");
            let (ref_order, _) = truncation::reference_order(p, order);
            let default = Domain::around(g, ref_order, DEFAULT_GRID_POINTS)?;
            let domain = Domain::new(
                cfg.domain.lo.unwrap_or(default.lo()),
                cfg.domain.hi.unwrap_or(default.hi()),
                cfg.domain.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            )?;
            let report = approximation_report(g, p, order, &domain, &Thresholds::default())?;
            let artifact = match cfg.format {
                OutputFormat::Json => json_line(&report),
                OutputFormat::Csv => {
                    let mut s = String::from(REPORT_CSV_HEADER);
                    push_report_row(&mut s, &report);
                    s
                }
            };
            Ok(RunOutput {
                artifact,
                summary: report
                    .reference_capped
                    .then(|| "warning: reference order capped\n".to_string()),
            })
        }
    }
}

fn json_line<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

fn grid_artifact(cfg: &RunConfig, m: &HybridMixture, domain: &Domain) -> String {
    let (column, eval): (&str, Box<dyn Fn(f64) -> f64 + '_>) = match cfg.command {
        Command::Cdf => ("cdf", Box::new(|z| m.cdf(z))),
        _ => ("density", Box::new(|z| m.pdf(z))),
    };
    match cfg.format {
        OutputFormat::Csv => {
            let mut s = format!("z,{column}\n");
            for z in domain.grid() {
                let _ = writeln!(s, "{},{}", fmt_f64(z), fmt_f64(eval(z)));
            }
            s
        }
        OutputFormat::Json => {
            let points: Vec<_> = domain
                .grid()
                .map(|z| json!({ "z": z, column: eval(z) }))
                .collect();
            json_line(&json!({
                "lambda": m.poisson().lambda(),
                "mean": m.gaussian().mean(),
                "sd": m.gaussian().sd(),
                "order": m.order(),
                "total_weight": m.total_weight(),
                "points": points,
            }))
        }
    }
}

fn sample_artifact(format: OutputFormat, batch: &SampleBatch) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from("index,value\n");
            for (i, v) in batch.values.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", fmt_f64(*v));
            }
            s
        }
        OutputFormat::Json => json_line(batch),
    }
}

pub const REPORT_CSV_HEADER: &str = "lambda,order,tail_mass,sup_norm,l1,kl_bits,adequate\n";

fn push_report_row(s: &mut String, r: &ApproximationReport) {
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{}",
        fmt_f64(r.lambda),
        r.order,
        fmt_f64(r.tail_mass),
        fmt_f64(r.sup_norm),
        fmt_f64(r.l1_distance),
        fmt_f64(r.kl_divergence),
        r.adequate
    );
}

fn sweep_artifact(format: OutputFormat, res: &SweepResult) -> String {
    match format {
        OutputFormat::Json => json_line(res),
        OutputFormat::Csv => {
            let mut s = String::from(REPORT_CSV_HEADER);
            for r in &res.rows {
                push_report_row(&mut s, r);
            }
            s
        }
    }
}

fn entropy_run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let p = poisson(cfg)?;
    let m = build_mixture(gaussian(cfg)?, p, order_or_reference(cfg, p)?);
    let domain = domain_for(cfg, &m)?;
    let quad =
        entropy::entropy_quadrature(&m, &domain, DEFAULT_TOLERANCE, cfg.override_tail_check)?;
    let n = cfg.count.unwrap_or(DEFAULT_ENTROPY_SAMPLES);
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let mc = entropy::entropy_monte_carlo(&m, n, seed, cfg.override_tail_check)?;
    let (lower, upper) = entropy::entropy_bounds(&m)?;

    let summary = format!(
        "quadrature   H = {:.6} bits +/- {:.1e}\n\
         monte_carlo  H = {:.6} bits +/- {:.1e} (n = {n}, seed = {seed})\n\
         bounds       {lower:.6} <= H <= {upper:.6} bits\n",
        quad.value, quad.error, mc.value, mc.error
    );
    let artifact = match cfg.format {
        OutputFormat::Json => json_line(&json!({
            "lambda": p.lambda(),
            "mean": cfg.mean,
            "sd": cfg.sd,
            "order": m.order(),
            "quadrature": quad,
            "monte_carlo": mc,
            "bounds": { "lower": lower, "upper": upper },
        })),
        OutputFormat::Csv => format!(
            "method,value_bits,error,sample_count\n\
             quadrature,{},{},0\n\
             monte_carlo,{},{},{}\n\
             lower_bound,{},0,0\n\
             upper_bound,{},0,0\n",
            fmt_f64(quad.value),
            fmt_f64(quad.error),
            fmt_f64(mc.value),
            fmt_f64(mc.error),
            mc.sample_count,
            fmt_f64(lower),
            fmt_f64(upper)
        ),
    };
    Ok(RunOutput {
        artifact,
        summary: Some(summary),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// Runs a configuration: the artifact goes to `--out` (or stdout), the
/// summary to stdout.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = execute(cfg)?;
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    match &cfg.output_path {
        Some(path) => write_file(path, &out.artifact)?,
        None if out.summary.is_none()
            || matches!(cfg.command, Command::Sweep | Command::Report) =>
        {
            let _ = stdout.write_all(out.artifact.as_bytes());
        }
        None => {}
    }
    if let Some(summary) = &out.summary {
        match cfg.command {
            Command::Sweep | Command::Report => eprint!("{summary}"),
            _ => {
                let _ = stdout.write_all(summary.as_bytes());
            }
        }
    }
    Ok(())
}

/// Parses `argv` (without the program name), runs, and returns the process
/// exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use super::config::{parse_args, ParseOutcome};
    let cfg = match parse_args(argv) {
        Ok(ParseOutcome::Config(c)) => c,
        Ok(ParseOutcome::Help(text)) => {
            print!("{text}");
            return 0;
        }
        Err(e) => {
            for problem in &e.0 {
                eprintln!("error: {problem}");
            }
            return 1;
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
