//! Study tables: parsing, running, and report output.
//!
//! Input is either comma-separated text with a header row or a JSON array of
//! objects, both using the columns `study_id, n, min, q1, median, q3, max,
//! distribution, shift` plus optional `lower, upper` bounds for the beta
//! family. Empty cells (or `null`) mean "not reported".
//!
//! Malformed cells reject the whole table. A well-formed row whose values
//! fail validation (say `n = 2`) only produces an error in its own report
//! row.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::distributions::{DistributionSpec, Family};
use crate::engine::{run_abc_with, run_selection_with, AbcConfig, AbcResult, RunControl};
use crate::error::{Error, Result};
use crate::format::{round6, sig6};
use crate::rescale::{apply_shift, apply_shift_unchecked, unshift_result, BoundsTransform};
use crate::rng::derive_seed;
use crate::summary::{parse_summary, Scenario, SummaryStats};

pub const INPUT_COLUMNS: [&str; 11] = [
    "study_id",
    "n",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "distribution",
    "shift",
    "lower",
    "upper",
];

const REQUIRED_COLUMNS: [&str; 3] = ["study_id", "n", "median"];

/// A single family or distribution selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Family(Family),
    Select,
}

impl Method {
    fn needs_positive_values(self) -> bool {
        match self {
            Method::Family(f) => f.requires_positive_support(),
            Method::Select => true,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("select") {
            Ok(Method::Select)
        } else {
            s.parse().map(Method::Family)
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Family(family) => family.fmt(f),
            Method::Select => f.write_str("select"),
        }
    }
}

/// One validated study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub study_id: String,
    pub stats: SummaryStats,
    pub method: Option<Method>,
    pub shift: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// One input row: the id always parses, the rest may carry a validation
/// error.
#[derive(Debug, Clone)]
pub struct BatchRow {
    /// 1-based line (CSV) or element position (JSON).
    pub position: usize,
    pub study_id: String,
    pub record: Result<StudyRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct BatchParseError {
    pub row: Option<usize>,
    pub column: Option<String>,
    pub message: String,
}

impl fmt::Display for BatchParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.row, &self.column) {
            (Some(r), Some(c)) => write!(f, "row {r}, column `{c}`: {}", self.message),
            (Some(r), None) => write!(f, "row {r}: {}", self.message),
            (None, Some(c)) => write!(f, "column `{c}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl BatchParseError {
    fn new(row: Option<usize>, column: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            row,
            column: column.map(str::to_string),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BatchFile {
    pub rows: Vec<BatchRow>,
}

impl BatchFile {
    /// Read a table, choosing the format by extension (`.json`) or, failing
    /// that, by whether the content starts with `[`.
    pub fn load(path: &Path) -> std::result::Result<Self, BatchParseError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BatchParseError::new(None, None, format!("cannot read {}: {e}", path.display()))
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
            || text.trim_start().starts_with('[');
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_reader(text.as_bytes())
        }
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> std::result::Result<Self, BatchParseError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| BatchParseError::new(Some(1), None, e.to_string()))?
            .clone();
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            return Err(BatchParseError::new(Some(1), None, "missing header row"));
        }
        let columns: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        check_columns(columns.iter().map(String::as_str), None)?;

        let mut raw = Vec::new();
        for record in csv.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize);
                BatchParseError::new(line, None, e.to_string())
            })?;
            let line = record
                .position()
                .map_or(raw.len() + 2, |p| p.line() as usize);
            let cells: HashMap<String, String> = columns
                .iter()
                .cloned()
                .zip(record.iter().map(str::to_string))
                .filter(|(_, v)| !v.is_empty())
                .collect();
            raw.push((line, cells));
        }
        Self::from_cells(raw)
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, BatchParseError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| BatchParseError::new(Some(e.line()), None, e.to_string()))?;
        let Value::Array(items) = value else {
            return Err(BatchParseError::new(
                None,
                None,
                "expected a JSON array of study objects",
            ));
        };
        let mut raw = Vec::with_capacity(items.len());
        for (i, item) in items.into_iter().enumerate() {
            let position = i + 1;
            let Value::Object(obj) = item else {
                return Err(BatchParseError::new(
                    Some(position),
                    None,
                    "expected an object",
                ));
            };
            let keys: Vec<String> = obj.keys().map(|k| k.to_ascii_lowercase()).collect();
            check_columns(keys.iter().map(String::as_str), Some(position))?;
            let mut cells = HashMap::new();
            for (key, v) in obj {
                let text = match v {
                    Value::Null => continue,
                    Value::Number(num) => num.to_string(),
                    Value::String(s) => s.trim().to_string(),
                    other => {
                        return Err(BatchParseError::new(
                            Some(position),
                            Some(&key),
                            format!("expected a number or string, got {other}"),
                        ))
                    }
                };
                if !text.is_empty() {
                    cells.insert(key.to_ascii_lowercase(), text);
                }
            }
            raw.push((position, cells));
        }
        Self::from_cells(raw)
    }

    fn from_cells(
        raw: Vec<(usize, HashMap<String, String>)>,
    ) -> std::result::Result<Self, BatchParseError> {
        let mut seen = HashSet::new();
        let mut rows = Vec::with_capacity(raw.len());
        for (position, cells) in raw {
            let row = parse_row(position, &cells)?;
            if !seen.insert(row.study_id.clone()) {
                return Err(BatchParseError::new(
                    Some(position),
                    Some("study_id"),
                    format!("duplicate study id `{}`", row.study_id),
                ));
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }
}

fn check_columns<'a>(
    columns: impl Iterator<Item = &'a str>,
    row: Option<usize>,
) -> std::result::Result<(), BatchParseError> {
    let mut present = HashSet::new();
    for c in columns {
        if !INPUT_COLUMNS.contains(&c) {
            return Err(BatchParseError::new(row, Some(c), "unknown column"));
        }
        if !present.insert(c) {
            return Err(BatchParseError::new(row, Some(c), "column given twice"));
        }
    }
    // JSON objects may omit absent values, so only the id is mandatory there.
    let required: &[&str] = if row.is_some() {
        &["study_id"]
    } else {
        &REQUIRED_COLUMNS
    };
    for c in required {
        if !present.contains(c) {
            return Err(BatchParseError::new(
                row,
                Some(c),
                "required column is missing",
            ));
        }
    }
    Ok(())
}

fn parse_row(
    position: usize,
    cells: &HashMap<String, String>,
) -> std::result::Result<BatchRow, BatchParseError> {
    let err =
        |column: &str, message: String| BatchParseError::new(Some(position), Some(column), message);
    let number = |column: &str| -> std::result::Result<Option<f64>, BatchParseError> {
        cells
            .get(column)
            .map(|text| {
                text.parse::<f64>()
                    .map_err(|_| err(column, format!("expected a number, got `{text}`")))
            })
            .transpose()
    };

    let study_id = cells
        .get("study_id")
        .cloned()
        .ok_or_else(|| err("study_id", "study id must not be empty".into()))?;
    let n = number("n")?;
    let min = number("min")?;
    let q1 = number("q1")?;
    let median = number("median")?;
    let q3 = number("q3")?;
    let max = number("max")?;
    let shift = number("shift")?;
    let lower = number("lower")?;
    let upper = number("upper")?;
    let method = cells
        .get("distribution")
        .map(|m| {
            m.parse::<Method>()
                .map_err(|e| err("distribution", e.to_string()))
        })
        .transpose()?;

    let record = sample_size(n).and_then(|n| {
        let median =
            median.ok_or_else(|| Error::UnsupportedPattern("the median is required".into()))?;
        let stats = parse_summary(n, min, q1, median, q3, max)?;
        Ok(StudyRecord {
            study_id: study_id.clone(),
            stats,
            method,
            shift,
            lower,
            upper,
        })
    });
    Ok(BatchRow {
        position,
        study_id,
        record,
    })
}

/// Accept integral sample sizes only.
pub fn sample_size(n: Option<f64>) -> Result<usize> {
    match n {
        None => Err(Error::BadSampleSize("missing".into())),
        Some(v) if v.fract() != 0.0 || !(3.0..=u32::MAX as f64).contains(&v) => {
            Err(Error::BadSampleSize(v.to_string()))
        }
        Some(v) => Ok(v as usize),
    }
}

/// Prior limits requested on the command line; `None` keeps the default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PriorOverrides {
    pub sigma_max: Option<f64>,
    pub lambda_max: Option<f64>,
    pub shape_max: Option<f64>,
    pub scale_max: Option<f64>,
    pub alpha_max: Option<f64>,
    pub beta_max: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl PriorOverrides {
    pub fn is_empty(&self) -> bool {
        *self == PriorOverrides::default()
    }

    pub fn spec_for(&self, family: Family) -> Result<DistributionSpec> {
        let spec = match DistributionSpec::default_for(family) {
            DistributionSpec::Normal { sigma_max } => DistributionSpec::Normal {
                sigma_max: self.sigma_max.unwrap_or(sigma_max),
            },
            DistributionSpec::Lognormal { sigma_max } => DistributionSpec::Lognormal {
                sigma_max: self.sigma_max.unwrap_or(sigma_max),
            },
            DistributionSpec::Exponential { lambda_max } => DistributionSpec::Exponential {
                lambda_max: self.lambda_max.unwrap_or(lambda_max),
            },
            DistributionSpec::Weibull {
                shape_max,
                scale_max,
            } => DistributionSpec::Weibull {
                shape_max: self.shape_max.unwrap_or(shape_max),
                scale_max: self.scale_max.unwrap_or(scale_max),
            },
            DistributionSpec::Beta {
                alpha_max,
                beta_max,
                bounds,
            } => DistributionSpec::Beta {
                alpha_max: self.alpha_max.unwrap_or(alpha_max),
                beta_max: self.beta_max.unwrap_or(beta_max),
                bounds: BoundsTransform::new(
                    self.lower.unwrap_or(bounds.lower()),
                    self.upper.unwrap_or(bounds.upper()),
                )?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Defaults applied to every study unless its row says otherwise.
#[derive(Debug, Clone)]
pub struct BatchSettings {
    pub method: Method,
    pub priors: PriorOverrides,
    pub cfg: AbcConfig,
    pub shift: Option<f64>,
    pub fail_fast: bool,
}

impl Default for BatchSettings {
    fn default() -> Self {
        Self {
            method: Method::Family(Family::Normal),
            priors: PriorOverrides::default(),
            cfg: AbcConfig::default(),
            shift: None,
            fail_fast: false,
        }
    }
}

/// Estimate one study: shift if asked, run the chosen method with the seed
/// already in `cfg`, shift the mean back.
///
/// Selection always runs with the default priors.
pub fn estimate_study(
    record: &StudyRecord,
    method: Method,
    priors: &PriorOverrides,
    shift: Option<f64>,
    cfg: &AbcConfig,
    control: RunControl<'_>,
) -> Result<AbcResult> {
    let stats = match shift {
        Some(c) if method.needs_positive_values() => apply_shift(&record.stats, c)?,
        Some(c) => apply_shift_unchecked(&record.stats, c)?,
        None => record.stats.clone(),
    };
    let result = match method {
        Method::Select => run_selection_with(&stats, cfg, &[], control)?.result,
        Method::Family(family) => {
            let priors = PriorOverrides {
                lower: record.lower.or(priors.lower),
                upper: record.upper.or(priors.upper),
                ..*priors
            };
            run_abc_with(&stats, &priors.spec_for(family)?, cfg, control)?.result
        }
    };
    Ok(match shift {
        Some(c) => unshift_result(&result, c),
        None => result,
    })
}

/// One line of output.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub study_id: String,
    pub scenario: Option<Scenario>,
    pub method: Option<Method>,
    pub family: Option<Family>,
    pub est_mean: Option<f64>,
    pub est_sd: Option<f64>,
    pub selection_probability: Option<f64>,
    pub retained: usize,
    pub n_simul: usize,
    pub seed: u64,
    pub shift: Option<f64>,
    pub wall_time: Duration,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn new(
        study_id: &str,
        scenario: Option<Scenario>,
        method: Method,
        shift: Option<f64>,
        cfg: &AbcConfig,
        outcome: &Result<AbcResult>,
        wall_time: Duration,
    ) -> Self {
        let ok = outcome.as_ref().ok();
        Self {
            study_id: study_id.to_string(),
            scenario,
            method: Some(method),
            family: ok.map(|r| r.family),
            est_mean: ok.map(|r| r.est_mean),
            est_sd: ok.map(|r| r.est_sd),
            selection_probability: ok.and_then(|r| r.selection_probability),
            retained: cfg.retained_count(),
            n_simul: cfg.n_simul,
            seed: cfg.seed,
            shift,
            wall_time,
            error: outcome.as_ref().err().map(|e| format!("{}: {e}", e.kind())),
        }
    }
}

/// Per-study seed: a pure function of the global seed and the study id.
pub fn study_seed(global: u64, study_id: &str) -> u64 {
    derive_seed(global, study_id)
}

/// Run every study, in parallel across studies. Output order follows input
/// order.
///
/// Per-study failures land in [`ReportRow::error`]; with `fail_fast` the
/// first failure in input order is returned instead.
pub fn run_batch(
    file: &BatchFile,
    settings: &BatchSettings,
    on_study_done: &(dyn Fn(usize) + Sync),
) -> std::result::Result<Vec<ReportRow>, (String, Error)> {
    if settings.fail_fast {
        if let Some(row) = file.rows.iter().find(|r| r.record.is_err()) {
            let e = row.record.as_ref().unwrap_err().clone();
            return Err((row.study_id.clone(), e));
        }
    }
    let rows: Vec<(ReportRow, Option<Error>)> = file
        .rows
        .par_iter()
        .map(|row| {
            let started = Instant::now();
            let cfg = AbcConfig {
                seed: study_seed(settings.cfg.seed, &row.study_id),
                threads: None,
                ..settings.cfg.clone()
            };
            let (scenario, method, shift) = match &row.record {
                Ok(r) => (
                    Some(r.stats.scenario()),
                    r.method.unwrap_or(settings.method),
                    r.shift.or(settings.shift),
                ),
                Err(_) => (None, settings.method, settings.shift),
            };
            let outcome = row.record.clone().and_then(|record| {
                estimate_study(
                    &record,
                    method,
                    &settings.priors,
                    shift,
                    &cfg,
                    RunControl::default(),
                )
            });
            let report = ReportRow::new(
                &row.study_id,
                scenario,
                method,
                shift,
                &cfg,
                &outcome,
                started.elapsed(),
            );
            on_study_done(row.position);
            (report, outcome.err())
        })
        .collect();

    if settings.fail_fast {
        if let Some((report, Some(e))) = rows.iter().find(|(_, e)| e.is_some()) {
            return Err((report.study_id.clone(), e.clone()));
        }
    }
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

const OUTPUT_COLUMNS: [&str; 13] = [
    "study_id",
    "scenario",
    "method",
    "family",
    "est_mean",
    "est_sd",
    "selection_probability",
    "retained",
    "n_simul",
    "seed",
    "shift",
    "error",
    "wall_time_s",
];

/// Write rows as CSV. Wall time is only included on request, since it
/// would make otherwise identical runs differ.
pub fn write_csv<W: Write>(rows: &[ReportRow], out: W, with_timing: bool) -> std::io::Result<()> {
    let columns = if with_timing {
        &OUTPUT_COLUMNS[..]
    } else {
        &OUTPUT_COLUMNS[..OUTPUT_COLUMNS.len() - 1]
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    let opt = |x: Option<f64>| x.map(sig6).unwrap_or_default();
    for r in rows {
        let mut record = vec![
            r.study_id.clone(),
            r.scenario.map(|s| s.to_string()).unwrap_or_default(),
            r.method.map(|m| m.to_string()).unwrap_or_default(),
            r.family.map(|f| f.to_string()).unwrap_or_default(),
            opt(r.est_mean),
            opt(r.est_sd),
            opt(r.selection_probability),
            r.retained.to_string(),
            r.n_simul.to_string(),
            r.seed.to_string(),
            opt(r.shift),
            r.error.clone().unwrap_or_default(),
        ];
        if with_timing {
            record.push(sig6(r.wall_time.as_secs_f64()));
        }
        w.write_record(&record)?;
    }
    w.flush()
}

pub fn to_json_value(row: &ReportRow, with_timing: bool) -> Value {
    let num = |x: Option<f64>| x.map_or(Value::Null, |v| Value::from(round6(v)));
    let mut obj = Map::new();
    obj.insert("study_id".into(), Value::from(row.study_id.clone()));
    obj.insert(
        "scenario".into(),
        row.scenario.map_or(Value::Null, |s| Value::from(s.label())),
    );
    obj.insert(
        "method".into(),
        row.method
            .map_or(Value::Null, |m| Value::from(m.to_string())),
    );
    obj.insert(
        "family".into(),
        row.family.map_or(Value::Null, |f| Value::from(f.name())),
    );
    obj.insert("est_mean".into(), num(row.est_mean));
    obj.insert("est_sd".into(), num(row.est_sd));
    obj.insert(
        "selection_probability".into(),
        num(row.selection_probability),
    );
    obj.insert("retained".into(), Value::from(row.retained));
    obj.insert("n_simul".into(), Value::from(row.n_simul));
    obj.insert("seed".into(), Value::from(row.seed));
    obj.insert("shift".into(), num(row.shift));
    obj.insert(
        "error".into(),
        row.error.clone().map_or(Value::Null, Value::from),
    );
    if with_timing {
        obj.insert(
            "wall_time_s".into(),
            Value::from(round6(row.wall_time.as_secs_f64())),
        );
    }
    Value::Object(obj)
}

pub fn write_json<W: Write>(
    rows: &[ReportRow],
    mut out: W,
    with_timing: bool,
) -> std::io::Result<()> {
    let values: Vec<Value> = rows.iter().map(|r| to_json_value(r, with_timing)).collect();
    serde_json::to_writer_pretty(&mut out, &values)?;
    writeln!(out)
}
