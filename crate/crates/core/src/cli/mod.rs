//! Command-line front end.
//!
//! Output schemas:
//! - `pdf`: CSV `z,density`; `cdf`: CSV `z,cdf`
//! - `sample`: CSV `index,value`
//! - `sweep`: JSON `{"thresholds":{..},"rows":[{"lambda",..,"order",..,"tail_mass",..,
//!   "sup_norm",..,"l1",..,"kl_bits",..,"adequate",..}]}`
//!
//! CSV floats carry 17 significant digits.

mod config;
mod run;

pub use config::{
    parse_args, Command, DomainOverride, OutputFormat, ParseOutcome, RunConfig, ValidationError,
    SWEEP_LAMBDAS, SWEEP_ORDERS,
};
pub use run::{execute, fmt_f64, main_with_args, run, CliError, RunOutput, THREADS_ENV};
