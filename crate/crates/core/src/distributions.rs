//! Candidate outcome families, their uniform priors, and variate generators.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rescale::BoundsTransform;
use crate::rng::RngStream;
use crate::summary::{required_positive, SummaryStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Lognormal,
    Exponential,
    Weibull,
    Beta,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Normal,
        Family::Lognormal,
        Family::Exponential,
        Family::Weibull,
        Family::Beta,
    ];

    /// Families competing in selection mode, in tie-break order.
    pub const SELECTION: [Family; 4] = [
        Family::Normal,
        Family::Lognormal,
        Family::Exponential,
        Family::Weibull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
            Family::Beta => "beta",
        }
    }

    /// Substream arm used when simulating this family.
    pub fn arm(self) -> u32 {
        match self {
            Family::Normal => 0,
            Family::Lognormal => 1,
            Family::Exponential => 2,
            Family::Weibull => 3,
            Family::Beta => 4,
        }
    }

    /// Support excludes negative values.
    pub fn requires_positive_support(self) -> bool {
        matches!(
            self,
            Family::Lognormal | Family::Exponential | Family::Weibull
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "lognormal" | "log-normal" => Ok(Family::Lognormal),
            "exponential" => Ok(Family::Exponential),
            "weibull" => Ok(Family::Weibull),
            "beta" => Ok(Family::Beta),
            other => Err(Error::InvalidConfig(format!(
                "unknown distribution `{other}`"
            ))),
        }
    }
}

/// A family together with the upper limits of its uniform priors.
///
/// The exponential parameter is the mean, not the rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Normal {
        sigma_max: f64,
    },
    Lognormal {
        sigma_max: f64,
    },
    Exponential {
        lambda_max: f64,
    },
    Weibull {
        shape_max: f64,
        scale_max: f64,
    },
    Beta {
        alpha_max: f64,
        beta_max: f64,
        bounds: BoundsTransform,
    },
}

impl DistributionSpec {
    /// Default prior limits for a family.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Normal => DistributionSpec::Normal { sigma_max: 50.0 },
            Family::Lognormal => DistributionSpec::Lognormal { sigma_max: 10.0 },
            Family::Exponential => DistributionSpec::Exponential { lambda_max: 40.0 },
            Family::Weibull => DistributionSpec::Weibull {
                shape_max: 50.0,
                scale_max: 50.0,
            },
            Family::Beta => DistributionSpec::Beta {
                alpha_max: 40.0,
                beta_max: 40.0,
                bounds: BoundsTransform::new(0.0, 100.0).expect("default bounds are ordered"),
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::Normal { .. } => Family::Normal,
            DistributionSpec::Lognormal { .. } => Family::Lognormal,
            DistributionSpec::Exponential { .. } => Family::Exponential,
            DistributionSpec::Weibull { .. } => Family::Weibull,
            DistributionSpec::Beta { .. } => Family::Beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limits: &[(&str, f64)] = match self {
            DistributionSpec::Normal { sigma_max } | DistributionSpec::Lognormal { sigma_max } => {
                &[("sigma_max", *sigma_max)]
            }
            DistributionSpec::Exponential { lambda_max } => &[("lambda_max", *lambda_max)],
            DistributionSpec::Weibull {
                shape_max,
                scale_max,
            } => &[("shape_max", *shape_max), ("scale_max", *scale_max)],
            DistributionSpec::Beta {
                alpha_max,
                beta_max,
                ..
            } => &[("alpha_max", *alpha_max), ("beta_max", *beta_max)],
        };
        for &(name, value) in limits {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive number, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// One parameter vector drawn from a family's prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDraw {
    Normal { mu: f64, sigma: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Exponential { mean: f64 },
    Weibull { shape: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ParamDraw {
    pub fn family(&self) -> Family {
        match self {
            ParamDraw::Normal { .. } => Family::Normal,
            ParamDraw::Lognormal { .. } => Family::Lognormal,
            ParamDraw::Exponential { .. } => Family::Exponential,
            ParamDraw::Weibull { .. } => Family::Weibull,
            ParamDraw::Beta { .. } => Family::Beta,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive: &[(&str, f64)] = match self {
            ParamDraw::Normal { sigma, .. } | ParamDraw::Lognormal { sigma, .. } => {
                &[("sigma", *sigma)]
            }
            ParamDraw::Exponential { mean } => &[("mean", *mean)],
            ParamDraw::Weibull { shape, scale } => &[("shape", *shape), ("scale", *scale)],
            ParamDraw::Beta { alpha, beta } => &[("alpha", *alpha), ("beta", *beta)],
        };
        for &(name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if let ParamDraw::Normal { mu, .. } | ParamDraw::Lognormal { mu, .. } = self {
            if !mu.is_finite() {
                return Err(Error::InvalidParam(format!("mu must be finite, got {mu}")));
            }
        }
        Ok(())
    }
}

/// Uniform on `(0, upper)`; the zero boundary is resampled away.
fn positive_uniform(upper: f64, rng: &mut RngStream) -> f64 {
    loop {
        let v = upper * rng.uniform();
        if v > 0.0 {
            return v;
        }
    }
}

fn uniform_between(lo: f64, hi: f64, rng: &mut RngStream) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// Draw a parameter vector from the prior of `spec`.
///
/// Location priors come from the observed statistics: the range under S1,
/// the interquartile range otherwise (on the log scale for the lognormal).
pub fn draw_params(
    spec: &DistributionSpec,
    stats: &SummaryStats,
    rng: &mut RngStream,
) -> Result<ParamDraw> {
    Ok(match *spec {
        DistributionSpec::Normal { sigma_max } => {
            let (lo, hi) = stats.location_bounds();
            let mu = uniform_between(lo, hi, rng);
            ParamDraw::Normal {
                mu,
                sigma: positive_uniform(sigma_max, rng),
            }
        }
        DistributionSpec::Lognormal { sigma_max } => {
            if !required_positive(stats) {
                return Err(Error::NonPositiveSupport(
                    "the lognormal prior needs strictly positive summary values".into(),
                ));
            }
            let (lo, hi) = stats.location_bounds();
            let mu = uniform_between(lo.ln(), hi.ln(), rng);
            ParamDraw::Lognormal {
                mu,
                sigma: positive_uniform(sigma_max, rng),
            }
        }
        DistributionSpec::Exponential { lambda_max } => ParamDraw::Exponential {
            mean: positive_uniform(lambda_max, rng),
        },
        DistributionSpec::Weibull {
            shape_max,
            scale_max,
        } => {
            let shape = positive_uniform(shape_max, rng);
            let scale = positive_uniform(scale_max, rng);
            ParamDraw::Weibull { shape, scale }
        }
        DistributionSpec::Beta {
            alpha_max,
            beta_max,
            ..
        } => {
            let alpha = positive_uniform(alpha_max, rng);
            let beta = positive_uniform(beta_max, rng);
            ParamDraw::Beta { alpha, beta }
        }
    })
}

/// `n` independent variates from the family and parameters in `params`.
pub fn sample_pseudo(params: &ParamDraw, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    sample_into(params, n, rng, &mut out)?;
    Ok(out)
}

/// Like [`sample_pseudo`], reusing `out`'s allocation.
pub fn sample_into(
    params: &ParamDraw,
    n: usize,
    rng: &mut RngStream,
    out: &mut Vec<f64>,
) -> Result<()> {
    params.validate()?;
    out.clear();
    match *params {
        ParamDraw::Normal { mu, sigma } => {
            out.extend((0..n).map(|_| mu + sigma * rng.standard_normal()));
        }
        ParamDraw::Lognormal { mu, sigma } => {
            out.extend((0..n).map(|_| (mu + sigma * rng.standard_normal()).exp()));
        }
        ParamDraw::Exponential { mean } => {
            out.extend((0..n).map(|_| -mean * rng.open01().ln()));
        }
        ParamDraw::Weibull { shape, scale } => {
            let inv_shape = 1.0 / shape;
            out.extend((0..n).map(|_| scale * (-rng.open01().ln()).powf(inv_shape)));
        }
        ParamDraw::Beta { alpha, beta } if alpha >= 1.0 && beta >= 1.0 => {
            let x = gamma(alpha)?;
            let y = gamma(beta)?;
            out.extend((0..n).map(|_| {
                let gx = x.sample(rng);
                gx / (gx + y.sample(rng))
            }));
        }
        ParamDraw::Beta { alpha, beta } => {
            let x = LogGamma::new(alpha)?;
            let y = LogGamma::new(beta)?;
            out.extend((0..n).map(|_| {
                let lx = x.sample(rng);
                let ly = y.sample(rng);
                // X / (X + Y) evaluated from logs; small shapes underflow
                // the gamma variates themselves.
                if lx >= ly {
                    1.0 / (1.0 + (ly - lx).exp())
                } else {
                    let r = (lx - ly).exp();
                    r / (1.0 + r)
                }
            }));
        }
    }
    Ok(())
}

fn gamma(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParam(format!("gamma shape {shape}: {e}")))
}

/// Logarithm of a Gamma(shape, 1) variate.
///
/// Shapes below one use `G(a) = G(a + 1) * U^(1/a)` in log space.
struct LogGamma {
    gamma: Gamma<f64>,
    boost: Option<f64>,
}

impl LogGamma {
    fn new(shape: f64) -> Result<Self> {
        let (base, boost) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        Ok(Self {
            gamma: gamma(base)?,
            boost,
        })
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let g = self.gamma.sample(rng).ln();
        match self.boost {
            Some(inv) => g + rng.open01().ln() * inv,
            None => g,
        }
    }
}
