//! Affine maps between the data scale and the scale the samplers work on.

use serde::{Deserialize, Serialize};

use crate::engine::AbcResult;
use crate::error::{Error, Result};
use crate::summary::SummaryStats;

/// A bounded outcome range `[lower, upper]`, mapped onto `[0, 1]` for the
/// beta family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsTransform {
    lower: f64,
    upper: f64,
}

impl BoundsTransform {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if lower >= upper {
            return Err(Error::InvalidConfig(format!(
                "lower bound {lower} must be below upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn to_unit_value(&self, x: f64) -> f64 {
        (x - self.lower) / self.width()
    }

    pub fn from_unit_value(&self, u: f64) -> f64 {
        self.width() * u + self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }
}

/// Map every present value onto the unit interval.
pub fn to_unit(stats: &SummaryStats, t: &BoundsTransform) -> Result<SummaryStats> {
    if let Some(value) = stats.present_values().find(|&v| !t.contains(v)) {
        return Err(Error::OutOfBounds {
            value,
            lower: t.lower,
            upper: t.upper,
        });
    }
    Ok(stats.map_present(|x| t.to_unit_value(x)))
}

/// Mean and SD of a unit-scale sample, expressed on the original scale.
pub fn from_unit_moments(mean_u: f64, sd_u: f64, t: &BoundsTransform) -> (f64, f64) {
    let width = t.width();
    (width * mean_u + t.lower, width * sd_u)
}

/// Add `c` to every present value. All shifted values must be positive.
pub fn apply_shift(stats: &SummaryStats, c: f64) -> Result<SummaryStats> {
    if !c.is_finite() {
        return Err(Error::NonFiniteValue("shift"));
    }
    if let Some(v) = stats.present_values().find(|&v| v + c <= 0.0) {
        return Err(Error::ShiftInsufficient {
            shift: c,
            value: v + c,
        });
    }
    Ok(stats.map_present(|x| x + c))
}

/// Add `c` to every present value without a positivity requirement, for
/// families supported on the whole line.
pub fn apply_shift_unchecked(stats: &SummaryStats, c: f64) -> Result<SummaryStats> {
    if !c.is_finite() {
        return Err(Error::NonFiniteValue("shift"));
    }
    Ok(stats.map_present(|x| x + c))
}

/// Undo a shift of `c` on an estimate: the mean moves back, the SD stays.
pub fn unshift_result(result: &AbcResult, c: f64) -> AbcResult {
    AbcResult {
        est_mean: result.est_mean - c,
        ..result.clone()
    }
}

/// A round constant that makes every present value positive, or 0 when
/// they already are.
///
/// Uses the decimal magnitude of the lowest value (or of the spread when
/// the lowest value is zero): `-9.65` gives 10, `-10` gives 20.
pub fn suggest_shift(stats: &SummaryStats) -> f64 {
    let lowest = stats.lowest();
    if lowest > 0.0 {
        return 0.0;
    }
    let magnitude = if lowest < 0.0 {
        -lowest
    } else {
        stats.highest() - lowest
    };
    let unit = if magnitude > 0.0 {
        10f64.powf(magnitude.log10().floor())
    } else {
        1.0
    };
    ((-lowest / unit).floor() + 1.0) * unit
}
