//! Observed summary statistics and the three reporting scenarios.
//!
//! A study reports its median plus either the range, the quartiles, or
//! both. Which of those is present decides the scenario, and the scenario
//! in turn decides which components enter the distance and which pair of
//! values bounds the location prior.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest sample size accepted.
pub const MIN_SAMPLE_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Minimum, median, maximum.
    S1,
    /// First quartile, median, third quartile.
    S2,
    /// All five order statistics.
    S3,
}

impl Scenario {
    fn from_presence(min: bool, q1: bool, q3: bool, max: bool) -> Option<Self> {
        match (min, q1, q3, max) {
            (true, false, false, true) => Some(Scenario::S1),
            (false, true, true, false) => Some(Scenario::S2),
            (true, true, true, true) => Some(Scenario::S3),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The five-number summary of a sample. Always complete.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

/// Validated summary statistics of one study.
///
/// Construct through [`parse_summary`]; the fields are private so that every
/// value in circulation satisfies the ordering and presence invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSummary", into = "RawSummary")]
pub struct SummaryStats {
    n: usize,
    min: Option<f64>,
    q1: Option<f64>,
    median: f64,
    q3: Option<f64>,
    max: Option<f64>,
    scenario: Scenario,
}

/// Validate a presence pattern and its values.
pub fn parse_summary(
    n: usize,
    min: Option<f64>,
    q1: Option<f64>,
    median: f64,
    q3: Option<f64>,
    max: Option<f64>,
) -> Result<SummaryStats> {
    if n < MIN_SAMPLE_SIZE {
        return Err(Error::BadSampleSize(n.to_string()));
    }

    let named = [
        ("min", min),
        ("q1", q1),
        ("median", Some(median)),
        ("q3", q3),
        ("max", max),
    ];
    for (name, value) in named {
        if let Some(v) = value {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(name));
            }
        }
    }

    let scenario =
        Scenario::from_presence(min.is_some(), q1.is_some(), q3.is_some(), max.is_some())
            .ok_or_else(|| {
                let present: Vec<&str> = named
                    .iter()
                    .filter(|(_, v)| v.is_some())
                    .map(|(name, _)| *name)
                    .collect();
                Error::UnsupportedPattern(format!(
                    "got {{{}}}; expected min+median+max, q1+median+q3, or all five",
                    present.join(", ")
                ))
            })?;

    let mut previous: Option<(&str, f64)> = None;
    for (name, value) in named {
        let Some(v) = value else { continue };
        if let Some((prev_name, prev)) = previous {
            if prev > v {
                return Err(Error::OrderingViolation(format!(
                    "{prev_name}={prev} exceeds {name}={v}"
                )));
            }
        }
        previous = Some((name, v));
    }

    Ok(SummaryStats {
        n,
        min,
        q1,
        median,
        q3,
        max,
        scenario,
    })
}

/// True iff every present summary value is strictly positive.
pub fn required_positive(stats: &SummaryStats) -> bool {
    stats.present_values().all(|v| v > 0.0)
}

impl SummaryStats {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min(&self) -> Option<f64> {
        self.min
    }

    pub fn q1(&self) -> Option<f64> {
        self.q1
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn q3(&self) -> Option<f64> {
        self.q3
    }

    pub fn max(&self) -> Option<f64> {
        self.max
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Present values in ascending order-statistic position.
    pub fn present_values(&self) -> impl Iterator<Item = f64> + '_ {
        [self.min, self.q1, Some(self.median), self.q3, self.max]
            .into_iter()
            .flatten()
    }

    /// Smallest present value.
    pub fn lowest(&self) -> f64 {
        self.min.or(self.q1).unwrap_or(self.median)
    }

    /// Largest present value.
    pub fn highest(&self) -> f64 {
        self.max.or(self.q3).unwrap_or(self.median)
    }

    /// Bounds of the uniform location prior: the range under S1, the
    /// interquartile range otherwise.
    pub fn location_bounds(&self) -> (f64, f64) {
        match self.scenario {
            Scenario::S1 => (self.lowest(), self.highest()),
            Scenario::S2 | Scenario::S3 => (
                self.q1.expect("quartiles present"),
                self.q3.expect("quartiles present"),
            ),
        }
    }

    /// Two adjacent present order statistics coincide. Such input is legal
    /// but leaves the distance little to work with.
    pub fn has_ties(&self) -> bool {
        let values: Vec<f64> = self.present_values().collect();
        values.windows(2).any(|w| w[0] == w[1])
    }

    /// Apply a monotone non-decreasing map to every present value.
    ///
    /// Callers guarantee monotonicity, so the ordering invariant survives
    /// without re-validation.
    pub(crate) fn map_present(&self, f: impl Fn(f64) -> f64) -> SummaryStats {
        SummaryStats {
            n: self.n,
            min: self.min.map(&f),
            q1: self.q1.map(&f),
            median: f(self.median),
            q3: self.q3.map(&f),
            max: self.max.map(&f),
            scenario: self.scenario,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSummary {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q1: Option<f64>,
    median: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
}

impl TryFrom<RawSummary> for SummaryStats {
    type Error = Error;

    fn try_from(raw: RawSummary) -> Result<Self> {
        parse_summary(raw.n, raw.min, raw.q1, raw.median, raw.q3, raw.max)
    }
}

impl From<SummaryStats> for RawSummary {
    fn from(s: SummaryStats) -> Self {
        RawSummary {
            n: s.n,
            min: s.min,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            max: s.max,
        }
    }
}
