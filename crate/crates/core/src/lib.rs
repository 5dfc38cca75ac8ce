//! Estimate a study's sample mean and standard deviation from reported
//! summary statistics (minimum, quartiles, median, maximum) by rejection
//! Approximate Bayesian Computation.
//!
//! The usual flow is [`parse_summary`] to validate the reported values,
//! then [`run_abc`] for a chosen family or [`run_selection`] to let the
//! normal, lognormal, exponential and Weibull families compete.

pub mod batch;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod format;
pub mod rescale;
pub mod rng;
pub mod sample_stats;
pub mod summary;
pub mod topk;

pub use batch::{run_batch, BatchFile, BatchSettings, Method, PriorOverrides, ReportRow};
pub use distributions::{draw_params, sample_pseudo, DistributionSpec, Family, ParamDraw};
pub use engine::{
    distance, run_abc, run_abc_with, run_selection, run_selection_with, AbcConfig, AbcResult,
    AbcRun, Candidate, Progress, RunControl, SelectionRun,
};
pub use error::{Error, Result};
pub use rescale::{
    apply_shift, apply_shift_unchecked, from_unit_moments, suggest_shift, to_unit, unshift_result,
    BoundsTransform,
};
pub use rng::RngStream;
pub use sample_stats::{moments_of, summary_of};
pub use summary::{parse_summary, required_positive, FiveNumber, Scenario, SummaryStats};
pub use topk::{top_k, TopK};
