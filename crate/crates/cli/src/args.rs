use std::path::PathBuf;

use abcmeta_core::batch::{Method, PriorOverrides};
use abcmeta_core::engine::{
    AbcConfig, DEFAULT_ACCEPTANCE_PCT, DEFAULT_CHUNK_SIZE, DEFAULT_ITERATIONS, DEFAULT_SEED,
};
use clap::{Args, Parser, Subcommand};

/// Estimate a study's mean and standard deviation from its reported median,
/// quartiles and range by rejection ABC.
#[derive(Debug, Parser)]
#[command(name = "abcmeta", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a single study given on the command line.
    Estimate(EstimateArgs),
    /// Estimate every study in a CSV or JSON table.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample size of the study.
    #[arg(long, allow_negative_numbers = true)]
    pub n: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    /// First quartile.
    #[arg(long, allow_negative_numbers = true)]
    pub q1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub median: f64,
    /// Third quartile.
    #[arg(long, allow_negative_numbers = true)]
    pub q3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,

    /// Constant added to every summary value before estimation, or `auto`.
    #[arg(long, value_parser = parse_shift, allow_negative_numbers = true)]
    pub shift: Option<Shift>,

    /// Print a JSON object instead of a table.
    #[arg(long)]
    pub json: bool,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// CSV (header required) or JSON array of study objects.
    pub input: PathBuf,

    /// Where to write the report; standard output if omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Write the report as JSON instead of CSV.
    #[arg(long)]
    pub json: bool,

    /// Default shift for rows without a `shift` value.
    #[arg(long, allow_negative_numbers = true)]
    pub shift: Option<f64>,

    /// Stop at the first study that fails instead of recording the error.
    #[arg(long)]
    pub fail_fast: bool,

    /// Add a wall-time column (makes repeated runs differ).
    #[arg(long)]
    pub timings: bool,

    #[command(flatten)]
    pub run: RunArgs,
}

/// Options shared by both subcommands.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Family (normal, lognormal, exponential, weibull, beta) or `select`.
    #[arg(long, default_value = "normal", value_parser = parse_method)]
    pub dist: Method,

    /// Number of simulated data sets.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iters: usize,

    /// Percentage of simulations retained.
    #[arg(long, default_value_t = DEFAULT_ACCEPTANCE_PCT)]
    pub accept_pct: f64,

    #[arg(long, env = "ABCMETA_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,

    /// No progress bar or warnings.
    #[arg(short, long)]
    pub quiet: bool,

    #[command(flatten)]
    pub priors: PriorArgs,
}

/// Upper limits of the uniform priors.
#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Normal and lognormal sigma.
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Exponential mean.
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Weibull shape.
    #[arg(long)]
    pub shape_max: Option<f64>,
    /// Weibull scale.
    #[arg(long)]
    pub scale_max: Option<f64>,
    /// Beta first shape.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Beta second shape.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Lower end of a bounded outcome (beta only).
    #[arg(long, allow_negative_numbers = true)]
    pub lower: Option<f64>,
    /// Upper end of a bounded outcome (beta only).
    #[arg(long, allow_negative_numbers = true)]
    pub upper: Option<f64>,
}

impl PriorArgs {
    pub fn overrides(&self) -> PriorOverrides {
        PriorOverrides {
            sigma_max: self.sigma_max,
            lambda_max: self.lambda_max,
            shape_max: self.shape_max,
            scale_max: self.scale_max,
            alpha_max: self.alpha_max,
            beta_max: self.beta_max,
            lower: self.lower,
            upper: self.upper,
        }
    }
}

impl RunArgs {
    pub fn config(&self) -> AbcConfig {
        AbcConfig {
            n_simul: self.iters,
            acceptance_pct: self.accept_pct,
            seed: self.seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: self.threads,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    By(f64),
    Auto,
}

fn parse_shift(s: &str) -> Result<Shift, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Shift::Auto);
    }
    s.parse()
        .map(Shift::By)
        .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: abcmeta_core::Error| e.to_string())
}
