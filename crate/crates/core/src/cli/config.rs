use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::Value;

/// Default rate and order grid for `sweep`.
pub const SWEEP_LAMBDAS: [f64; 4] = [2.0, 5.0, 10.0, 20.0];
pub const SWEEP_ORDERS: [usize; 3] = [10, 20, 30];

pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;
pub const DEFAULT_ENTROPY_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Pdf,
    Cdf,
    Truncate,
    Entropy,
    Sample,
    Sweep,
    Report,
}

impl Command {
    fn default_format(self) -> OutputFormat {
        match self {
            Command::Pdf | Command::Cdf | Command::Sample => OutputFormat::Csv,
            _ => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DomainOverride {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub grid_points: Option<usize>,
}

/// Fully validated settings for one CLI run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// One value, except for `sweep` which takes a list.
    pub lambda: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Empty when not given. A list only for `sweep`.
    pub order: Vec<usize>,
    pub epsilon: Option<f64>,
    pub domain: DomainOverride,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub override_tail_check: bool,
}

impl RunConfig {
    /// The single rate of a non-sweep command.
    pub fn rate(&self) -> f64 {
        self.lambda[0]
    }

    pub fn single_order(&self) -> Option<usize> {
        self.order.first().copied()
    }
}

/// Every problem found while assembling a [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub Vec<String>);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("; "))
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Parser)]
#[command(
    name = "hybridnoise",
    version,
    about = "Truncated Poisson-weighted Gaussian mixtures for hybrid quantum noise",
    allow_negative_numbers = true
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Poisson rate; comma-separated list for `sweep`
    #[arg(long)]
    lambda: Option<String>,
    /// Mean of the Gaussian component
    #[arg(long)]
    mean: Option<String>,
    /// Standard deviation of the Gaussian component
    #[arg(long)]
    sd: Option<String>,
    /// Truncation order R; comma-separated list for `sweep`
    #[arg(long)]
    order: Option<String>,
    /// Tail-mass tolerance for `truncate`
    #[arg(long)]
    epsilon: Option<String>,
    /// Lower end of the evaluation domain (default mean - 12 sd)
    #[arg(long = "domain-lo")]
    domain_lo: Option<String>,
    /// Upper end of the evaluation domain (default R + mean + 12 sd)
    #[arg(long = "domain-hi")]
    domain_hi: Option<String>,
    /// Number of grid points
    #[arg(long)]
    grid: Option<String>,
    /// Random seed for `sample` and the Monte Carlo estimate
    #[arg(long)]
    seed: Option<String>,
    /// Sample count (`sample`) or Monte Carlo draws (`entropy`)
    #[arg(long)]
    count: Option<String>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format (default csv for pdf/cdf/sample, json otherwise)
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Flat JSON file with the same field names; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Compute entropy even when the truncation discards more than 2% of the mass
    #[arg(long = "override-tail-check")]
    override_tail_check: bool,
}

/// Settings as text, before type checks. Config-file values are rendered to
/// the same textual form as flags so both go through one validator.
#[derive(Debug, Default)]
struct RawSettings {
    lambda: Option<String>,
    mean: Option<String>,
    sd: Option<String>,
    order: Option<String>,
    epsilon: Option<String>,
    domain_lo: Option<String>,
    domain_hi: Option<String>,
    grid: Option<String>,
    seed: Option<String>,
    count: Option<String>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    override_tail_check: Option<bool>,
}

impl RawSettings {
    fn overlay(self, top: RawSettings) -> RawSettings {
        RawSettings {
            lambda: top.lambda.or(self.lambda),
            mean: top.mean.or(self.mean),
            sd: top.sd.or(self.sd),
            order: top.order.or(self.order),
            epsilon: top.epsilon.or(self.epsilon),
            domain_lo: top.domain_lo.or(self.domain_lo),
            domain_hi: top.domain_hi.or(self.domain_hi),
            grid: top.grid.or(self.grid),
            seed: top.seed.or(self.seed),
            count: top.count.or(self.count),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            override_tail_check: top.override_tail_check.or(self.override_tail_check),
        }
    }
}

/// Outcome of argument parsing that is not a config: help/version text or a
/// usage error from clap.
#[derive(Debug)]
pub enum ParseOutcome {
    Config(RunConfig),
    Help(String),
}

pub fn parse_args<I, T>(argv: I) -> Result<ParseOutcome, ValidationError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(
        std::iter::once(std::ffi::OsString::from("hybridnoise"))
            .chain(argv.into_iter().map(Into::into)),
    ) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(ParseOutcome::Help(e.to_string()))
                }
                _ => {
                    let text = e.render().to_string();
                    let text = text.trim();
                    Err(ValidationError(vec![text
                        .strip_prefix("error: ")
                        .unwrap_or(text)
                        .to_string()]))
                }
            };
        }
    };
    let mut problems = Vec::new();
    let from_file = match &args.config {
        Some(path) => load_config_file(path, &mut problems),
        None => RawSettings::default(),
    };
    let command = args.command;
    let from_flags = RawSettings {
        lambda: args.lambda,
        mean: args.mean,
        sd: args.sd,
        order: args.order,
        epsilon: args.epsilon,
        domain_lo: args.domain_lo,
        domain_hi: args.domain_hi,
        grid: args.grid,
        seed: args.seed,
        count: args.count,
        out: args.out,
        format: args.format,
        override_tail_check: args.override_tail_check.then_some(true),
    };
    let raw = from_file.overlay(from_flags);
    validate(command, raw, problems).map(ParseOutcome::Config)
}

fn load_config_file(path: &PathBuf, problems: &mut Vec<String>) -> RawSettings {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            problems.push(format!("config: cannot read '{}': {e}", path.display()));
            return RawSettings::default();
        }
    };
    let map = match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => m,
        Ok(_) => {
            problems.push(format!(
                "config: '{}' must contain a flat JSON object",
                path.display()
            ));
            return RawSettings::default();
        }
        Err(e) => {
            problems.push(format!(
                "config: '{}' is not valid JSON: {e}",
                path.display()
            ));
            return RawSettings::default();
        }
    };
    let mut raw = RawSettings::default();
    for (key, value) in map {
        let text = match scalar_text(&value) {
            Some(t) => t,
            None => {
                problems.push(format!(
                    "config: `{key}` must be a number, string, boolean or list of numbers"
                ));
                continue;
            }
        };
        match key.as_str() {
            "lambda" => raw.lambda = Some(text),
            "mean" => raw.mean = Some(text),
            "sd" => raw.sd = Some(text),
            "order" => raw.order = Some(text),
            "epsilon" => raw.epsilon = Some(text),
            "domain_lo" => raw.domain_lo = Some(text),
            "domain_hi" => raw.domain_hi = Some(text),
            "grid" | "grid_points" => raw.grid = Some(text),
            "seed" => raw.seed = Some(text),
            "count" => raw.count = Some(text),
            "out" | "output_path" => raw.out = Some(PathBuf::from(text)),
            "format" => match OutputFormat::from_str(&text, true) {
                Ok(f) => raw.format = Some(f),
                Err(_) => problems.push(format!("format: expected `csv` or `json`, got `{text}`")),
            },
            "override_tail_check" => match text.as_str() {
                "true" => raw.override_tail_check = Some(true),
                "false" => raw.override_tail_check = Some(false),
                _ => problems.push(format!(
                    "override_tail_check: expected a boolean, got `{text}`"
                )),
            },
            other => problems.push(format!("config: unknown field `{other}`")),
        }
    }
    raw
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(|parts| parts.join(",")),
        _ => None,
    }
}

fn parse_f64(name: &str, text: &str, problems: &mut Vec<String>) -> Option<f64> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            problems.push(format!("{name}: expected a finite number, got `{text}`"));
            None
        }
    }
}

fn parse_uint<T: std::str::FromStr>(
    name: &str,
    text: &str,
    problems: &mut Vec<String>,
) -> Option<T> {
    match text.trim().parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            problems.push(format!(
                "{name}: expected a non-negative integer, got `{text}`"
            ));
            None
        }
    }
}

fn parse_list<T>(
    name: &str,
    text: &str,
    problems: &mut Vec<String>,
    item: impl Fn(&str, &str, &mut Vec<String>) -> Option<T>,
) -> Vec<T> {
    text.split(',')
        .filter_map(|part| item(name, part, problems))
        .collect()
}

fn validate(
    command: Command,
    raw: RawSettings,
    mut problems: Vec<String>,
) -> Result<RunConfig, ValidationError> {
    let sweep = command == Command::Sweep;

    let lambda = match raw.lambda.as_deref() {
        Some(t) => {
            let values = parse_list("lambda", t, &mut problems, parse_f64);
            for v in &values {
                if *v < 0.0 {
                    problems.push(format!("lambda: must be >= 0, got {v}"));
                }
            }
            values
        }
        None if sweep => SWEEP_LAMBDAS.to_vec(),
        None => {
            problems.push("lambda: required for this command (use --lambda)".to_string());
            Vec::new()
        }
    };
    if !sweep && lambda.len() > 1 {
        problems.push(
            "lambda: expected a single value; lists are only accepted by `sweep`".to_string(),
        );
    }

    let mean = raw
        .mean
        .as_deref()
        .map_or(Some(0.0), |t| parse_f64("mean", t, &mut problems));
    let sd = raw
        .sd
        .as_deref()
        .map_or(Some(1.0), |t| parse_f64("sd", t, &mut problems));
    if let Some(s) = sd {
        if s <= 0.0 {
            problems.push(format!("sd: must be > 0, got {s}"));
        }
    }

    let order = match raw.order.as_deref() {
        Some(t) => parse_list("order", t, &mut problems, parse_uint::<usize>),
        None if sweep => SWEEP_ORDERS.to_vec(),
        None => Vec::new(),
    };
    if !sweep && order.len() > 1 {
        problems
            .push("order: expected a single value; lists are only accepted by `sweep`".to_string());
    }
    if command == Command::Report && order.is_empty() && raw.order.is_none() {
        problems.push("order: required for `report` (use --order)".to_string());
    }

    let epsilon = raw
        .epsilon
        .as_deref()
        .and_then(|t| parse_f64("epsilon", t, &mut problems));
    if let Some(e) = epsilon {
        if !(e > 0.0 && e < 1.0) {
            problems.push(format!("epsilon: must lie in (0, 1), got {e}"));
        }
    }

    let lo = raw
        .domain_lo
        .as_deref()
        .and_then(|t| parse_f64("domain_lo", t, &mut problems));
    let hi = raw
        .domain_hi
        .as_deref()
        .and_then(|t| parse_f64("domain_hi", t, &mut problems));
    let grid = raw
        .grid
        .as_deref()
        .and_then(|t| parse_uint::<usize>("grid", t, &mut problems));
    if let Some(g) = grid {
        if g < 2 {
            problems.push(format!("grid: needs at least 2 points, got {g}"));
        }
    }
    if let (Some(l), Some(h)) = (lo, hi) {
        if l >= h {
            problems.push(format!("domain_lo: {l} must be below domain_hi {h}"));
        }
    }
    if sweep && (lo.is_some() != hi.is_some()) {
        problems.push("domain_lo/domain_hi: `sweep` needs both bounds or neither".to_string());
    }

    let seed = raw
        .seed
        .as_deref()
        .and_then(|t| parse_uint::<u64>("seed", t, &mut problems));
    let count = raw
        .count
        .as_deref()
        .and_then(|t| parse_uint::<usize>("count", t, &mut problems));
    if let Some(c) = count {
        if command == Command::Sample && c == 0 {
            problems.push("count: must be >= 1".to_string());
        }
        if command == Command::Entropy && c < crate::entropy::MIN_MONTE_CARLO_SAMPLES {
            problems.push(format!(
                "count: Monte Carlo entropy needs at least {} samples, got {c}",
                crate::entropy::MIN_MONTE_CARLO_SAMPLES
            ));
        }
    }

    if !problems.is_empty() {
        return Err(ValidationError(problems));
    }
    Ok(RunConfig {
        command,
        lambda,
        mean: mean.unwrap_or(0.0),
        sd: sd.unwrap_or(1.0),
        order,
        epsilon,
        domain: DomainOverride {
            lo,
            hi,
            grid_points: grid,
        },
        seed,
        count,
        output_path: raw.out,
        format: raw.format.unwrap_or(command.default_format()),
        override_tail_check: raw.override_tail_check.unwrap_or(false),
    })
}
