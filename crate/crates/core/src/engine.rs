//! Rejection ABC over summary statistics.
//!
//! Each iteration draws parameters from the prior, simulates a pseudo-sample
//! of the study's size, and scores its five-number summary against the
//! observed one by Euclidean distance over the scenario's components. The
//! best `K` iterations are retained and their pseudo-sample means and SDs
//! averaged.
//!
//! Iterations are grouped into fixed-size chunks. Chunk `c` of arm `a`
//! always draws from substream `(a, c)` and keeps its own bounded top-K,
//! so the result depends on the seed and chunk size but not on how many
//! threads run the chunks.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{draw_params, sample_into, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::rescale::{from_unit_moments, to_unit, BoundsTransform};
use crate::rng::RngStream;
use crate::sample_stats::{moments_of, summarize_in_place};
use crate::summary::{required_positive, FiveNumber, Scenario, SummaryStats};
use crate::topk::{top_k, TopK};

pub const DEFAULT_ITERATIONS: usize = 50_000;
pub const DEFAULT_ACCEPTANCE_PCT: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 1234;
pub const DEFAULT_CHUNK_SIZE: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct AbcConfig {
    /// Iterations per simulated family.
    pub n_simul: usize,
    /// Percentage of iterations retained, in `(0, 100]`.
    pub acceptance_pct: f64,
    pub seed: u64,
    /// Iterations per RNG substream. Part of the result's identity.
    pub chunk_size: usize,
    /// Worker threads; `None` uses the ambient rayon pool. Never affects
    /// the result.
    pub threads: Option<usize>,
}

impl Default for AbcConfig {
    fn default() -> Self {
        Self {
            n_simul: DEFAULT_ITERATIONS,
            acceptance_pct: DEFAULT_ACCEPTANCE_PCT,
            seed: DEFAULT_SEED,
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: None,
        }
    }
}

impl AbcConfig {
    /// Number of retained iterations, `round(n_simul * pct / 100)`, at least 1.
    pub fn retained_count(&self) -> usize {
        let k = (self.n_simul as f64 * self.acceptance_pct / 100.0).round() as usize;
        k.clamp(1, self.n_simul.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_simul == 0 {
            return Err(Error::InvalidConfig(
                "iteration count must be positive".into(),
            ));
        }
        if !(self.acceptance_pct > 0.0 && self.acceptance_pct <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "acceptance percentage must lie in (0, 100], got {}",
                self.acceptance_pct
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        if self.n_simul.div_ceil(self.chunk_size) > u32::MAX as usize {
            return Err(Error::InvalidConfig(
                "too many chunks; raise the chunk size".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }

    fn chunk_count(&self) -> usize {
        self.n_simul.div_ceil(self.chunk_size)
    }
}

/// One scored iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub index: u64,
    pub distance: f64,
    pub pseudo_mean: f64,
    pub pseudo_sd: f64,
    pub family: Family,
}

impl Candidate {
    /// Ascending `(distance, index)`.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbcResult {
    pub est_mean: f64,
    pub est_sd: f64,
    pub retained: usize,
    pub family: Family,
    /// Share of the pooled top K won by `family`; selection mode only.
    pub selection_probability: Option<f64>,
}

/// Iterations completed so far out of the run's total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: u64,
    pub total: u64,
}

impl Progress {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.done as f64 / self.total as f64
        }
    }
}

/// Hooks observed at chunk boundaries.
#[derive(Default, Clone, Copy)]
pub struct RunControl<'a> {
    pub progress: Option<&'a (dyn Fn(Progress) + Sync)>,
    pub cancel: Option<&'a AtomicBool>,
}

impl RunControl<'_> {
    fn cancelled(&self) -> bool {
        self.cancel.is_some_and(|c| c.load(AtomicOrdering::Relaxed))
    }
}

/// A single-family run together with its retained candidates.
#[derive(Debug, Clone)]
pub struct AbcRun {
    pub result: AbcResult,
    /// Best first.
    pub retained: Vec<Candidate>,
}

/// A selection run with its diagnostics.
#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub result: AbcResult,
    /// Retained counts in the pooled ranking, in [`Family::SELECTION`] order.
    pub counts: [usize; 4],
    /// Pooled top K; indices are `arm_position * n_simul + iteration`.
    pub pooled: Vec<Candidate>,
    /// The winning family's own top K.
    pub retained: Vec<Candidate>,
}

/// Euclidean distance over the components the observed scenario reports.
pub fn distance(obs: &SummaryStats, sim: &FiveNumber) -> f64 {
    let sq = |a: f64, b: f64| (a - b) * (a - b);
    let median = sq(obs.median(), sim.median);
    let total = match obs.scenario() {
        Scenario::S1 => {
            sq(obs.min().unwrap_or_default(), sim.min)
                + median
                + sq(obs.max().unwrap_or_default(), sim.max)
        }
        Scenario::S2 => {
            sq(obs.q1().unwrap_or_default(), sim.q1)
                + median
                + sq(obs.q3().unwrap_or_default(), sim.q3)
        }
        Scenario::S3 => {
            sq(obs.min().unwrap_or_default(), sim.min)
                + sq(obs.q1().unwrap_or_default(), sim.q1)
                + median
                + sq(obs.q3().unwrap_or_default(), sim.q3)
                + sq(obs.max().unwrap_or_default(), sim.max)
        }
    };
    let d = total.sqrt();
    if d.is_nan() {
        f64::INFINITY
    } else {
        d
    }
}

/// Estimate mean and SD under one family.
pub fn run_abc(
    stats: &SummaryStats,
    spec: &DistributionSpec,
    cfg: &AbcConfig,
) -> Result<AbcResult> {
    run_abc_with(stats, spec, cfg, RunControl::default()).map(|run| run.result)
}

pub fn run_abc_with(
    stats: &SummaryStats,
    spec: &DistributionSpec,
    cfg: &AbcConfig,
    control: RunControl<'_>,
) -> Result<AbcRun> {
    cfg.validate()?;
    let arm = Arm::prepare(stats, spec)?;
    let k = cfg.retained_count();
    let tracker = Tracker::new(cfg.n_simul as u64, control);
    let retained = in_pool(cfg.threads, || arm.simulate(cfg, k, &tracker))?;
    let (est_mean, est_sd) = average(&retained);
    Ok(AbcRun {
        result: AbcResult {
            est_mean,
            est_sd,
            retained: k,
            family: spec.family(),
            selection_probability: None,
        },
        retained,
    })
}

/// Pick among normal, lognormal, exponential and Weibull by their share of
/// the pooled best K, then estimate under the winner.
///
/// `overrides` replaces the default prior of any family it names.
pub fn run_selection(
    stats: &SummaryStats,
    cfg: &AbcConfig,
    overrides: &[DistributionSpec],
) -> Result<AbcResult> {
    run_selection_with(stats, cfg, overrides, RunControl::default()).map(|run| run.result)
}

pub fn run_selection_with(
    stats: &SummaryStats,
    cfg: &AbcConfig,
    overrides: &[DistributionSpec],
    control: RunControl<'_>,
) -> Result<SelectionRun> {
    cfg.validate()?;
    if !required_positive(stats) {
        return Err(Error::NonPositiveSupport(
            "distribution selection includes the lognormal arm, which needs strictly positive summary values".into(),
        ));
    }
    let mut specs = Family::SELECTION.map(DistributionSpec::default_for);
    for o in overrides {
        let slot = Family::SELECTION
            .iter()
            .position(|&f| f == o.family())
            .ok_or_else(|| {
                Error::InvalidConfig(format!("{} does not take part in selection", o.family()))
            })?;
        specs[slot] = *o;
    }
    let arms = specs
        .iter()
        .map(|spec| Arm::prepare(stats, spec))
        .collect::<Result<Vec<_>>>()?;

    let k = cfg.retained_count();
    let tracker = Tracker::new((cfg.n_simul * arms.len()) as u64, control);
    let per_arm = in_pool(cfg.threads, || {
        arms.iter()
            .map(|arm| arm.simulate(cfg, k, &tracker))
            .collect::<Result<Vec<_>>>()
    })?;

    let offset = cfg.n_simul as u64;
    let pooled = top_k(
        per_arm.iter().enumerate().flat_map(|(pos, cands)| {
            cands.iter().map(move |c| Candidate {
                index: pos as u64 * offset + c.index,
                ..c.clone()
            })
        }),
        k,
    )?;

    let mut counts = [0usize; 4];
    for c in &pooled {
        let pos = Family::SELECTION
            .iter()
            .position(|&f| f == c.family)
            .expect("pooled candidates come from selection arms");
        counts[pos] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    let winner = counts.iter().position(|&c| c == best).unwrap_or(0);

    let retained = per_arm.into_iter().nth(winner).expect("one list per arm");
    let (est_mean, est_sd) = average(&retained);
    Ok(SelectionRun {
        result: AbcResult {
            est_mean,
            est_sd,
            retained: k,
            family: Family::SELECTION[winner],
            selection_probability: Some(counts[winner] as f64 / k as f64),
        },
        counts,
        pooled,
        retained,
    })
}

/// Mean of the retained pseudo-means and pseudo-SDs, summed best first.
fn average(retained: &[Candidate]) -> (f64, f64) {
    let k = retained.len() as f64;
    let mean = retained.iter().map(|c| c.pseudo_mean).sum::<f64>() / k;
    let sd = retained.iter().map(|c| c.pseudo_sd).sum::<f64>() / k;
    (mean, sd)
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {t} worker threads: {e}")))?
            .install(f),
    }
}

struct Tracker<'a> {
    done: AtomicU64,
    total: u64,
    control: RunControl<'a>,
}

impl<'a> Tracker<'a> {
    fn new(total: u64, control: RunControl<'a>) -> Self {
        Self {
            done: AtomicU64::new(0),
            total,
            control,
        }
    }

    fn advance(&self, iterations: u64) {
        let done = self.done.fetch_add(iterations, AtomicOrdering::Relaxed) + iterations;
        if let Some(report) = self.control.progress {
            report(Progress {
                done,
                total: self.total,
            });
        }
    }
}

/// One family ready to simulate: its prior plus the observed statistics on
/// the scale its sampler produces.
struct Arm {
    spec: DistributionSpec,
    obs: SummaryStats,
    bounds: Option<BoundsTransform>,
}

impl Arm {
    fn prepare(stats: &SummaryStats, spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let (obs, bounds) = match spec {
            DistributionSpec::Lognormal { .. } if !required_positive(stats) => {
                return Err(Error::NonPositiveSupport(
                    "the lognormal family needs strictly positive summary values".into(),
                ));
            }
            DistributionSpec::Beta { bounds, .. } => (to_unit(stats, bounds)?, Some(*bounds)),
            _ => (stats.clone(), None),
        };
        Ok(Self {
            spec: *spec,
            obs,
            bounds,
        })
    }

    fn simulate(&self, cfg: &AbcConfig, k: usize, tracker: &Tracker<'_>) -> Result<Vec<Candidate>> {
        let chunks = cfg.chunk_count();
        let selection = if cfg.threads == Some(1) {
            (0..chunks).try_fold(TopK::new(k), |acc, c| {
                Ok(acc.merge(self.run_chunk(c, cfg, k, tracker)?))
            })?
        } else {
            (0..chunks)
                .into_par_iter()
                .map(|c| self.run_chunk(c, cfg, k, tracker))
                .try_reduce(|| TopK::new(k), |a, b| Ok(a.merge(b)))?
        };
        if selection.len() < k {
            return Err(Error::InsufficientCandidates {
                wanted: k,
                available: selection.len(),
            });
        }
        Ok(selection.into_sorted_vec())
    }

    fn run_chunk(
        &self,
        chunk: usize,
        cfg: &AbcConfig,
        k: usize,
        tracker: &Tracker<'_>,
    ) -> Result<TopK> {
        if tracker.control.cancelled() {
            return Err(Error::Cancelled);
        }
        let family = self.spec.family();
        let n = self.obs.n();
        let start = chunk * cfg.chunk_size;
        let end = (start + cfg.chunk_size).min(cfg.n_simul);

        let mut rng = RngStream::substream(cfg.seed, family.arm(), chunk as u32);
        let mut sample = Vec::with_capacity(n);
        let mut best = TopK::new(k);
        for i in start..end {
            let params = draw_params(&self.spec, &self.obs, &mut rng)?;
            sample_into(&params, n, &mut rng, &mut sample)?;
            let (mean, sd) = moments_of(&sample)?;
            let summary = summarize_in_place(&mut sample)?;
            let d = distance(&self.obs, &summary);
            let (pseudo_mean, pseudo_sd) = match &self.bounds {
                Some(t) => from_unit_moments(mean, sd, t),
                None => (mean, sd),
            };
            best.push(Candidate {
                index: i as u64,
                distance: d,
                pseudo_mean,
                pseudo_sd,
                family,
            });
        }
        tracker.advance((end - start) as u64);
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::parse_summary;
    use std::sync::Mutex;

    fn five(min: f64, q1: f64, median: f64, q3: f64, max: f64) -> FiveNumber {
        FiveNumber {
            min,
            q1,
            median,
            q3,
            max,
        }
    }

    fn small_cfg() -> AbcConfig {
        AbcConfig {
            n_simul: 2_000,
            acceptance_pct: 1.0,
            chunk_size: 100,
            ..AbcConfig::default()
        }
    }

    #[test]
    fn distance_uses_scenario_components() {
        let s1 = parse_summary(10, Some(1.0), None, 3.0, None, Some(9.0)).unwrap();
        assert_eq!(distance(&s1, &five(1.0, 2.0, 3.0, 4.0, 9.0)), 0.0);

        let zero = parse_summary(10, Some(0.0), None, 0.0, None, Some(0.0)).unwrap();
        assert_eq!(distance(&zero, &five(1.0, 100.0, 2.0, 100.0, 2.0)), 3.0);

        let s2 = parse_summary(10, None, Some(1.0), 2.0, Some(3.0), None).unwrap();
        assert_eq!(distance(&s2, &five(-50.0, 1.0, 2.0, 3.0, 50.0)), 0.0);

        let s3 = parse_summary(10, Some(0.0), Some(1.0), 2.0, Some(3.0), Some(4.0)).unwrap();
        assert_eq!(distance(&s3, &five(0.0, 1.0, 2.0, 3.0, 4.0)), 0.0);
        assert_eq!(distance(&s3, &five(1.0, 2.0, 3.0, 4.0, 5.0)), 5f64.sqrt());
    }

    #[test]
    fn nan_distance_ranks_last() {
        let s1 = parse_summary(10, Some(1.0), None, 3.0, None, Some(9.0)).unwrap();
        let d = distance(
            &s1,
            &five(f64::INFINITY, 0.0, f64::INFINITY, 0.0, f64::INFINITY),
        );
        assert_eq!(d, f64::INFINITY);
        let d = distance(&s1, &five(f64::NAN, 0.0, 1.0, 0.0, 2.0));
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn retained_count_rounds() {
        let cfg = AbcConfig::default();
        assert_eq!(cfg.retained_count(), 50);
        let cfg = AbcConfig {
            n_simul: 100_000,
            ..cfg
        };
        assert_eq!(cfg.retained_count(), 100);
        let cfg = AbcConfig { n_simul: 10, ..cfg };
        assert_eq!(cfg.retained_count(), 1);
        let cfg = AbcConfig {
            n_simul: 10,
            acceptance_pct: 100.0,
            ..cfg
        };
        assert_eq!(cfg.retained_count(), 10);
    }

    #[test]
    fn config_validation() {
        let bad = [
            AbcConfig {
                n_simul: 0,
                ..AbcConfig::default()
            },
            AbcConfig {
                acceptance_pct: 0.0,
                ..AbcConfig::default()
            },
            AbcConfig {
                acceptance_pct: 100.5,
                ..AbcConfig::default()
            },
            AbcConfig {
                acceptance_pct: f64::NAN,
                ..AbcConfig::default()
            },
            AbcConfig {
                chunk_size: 0,
                ..AbcConfig::default()
            },
            AbcConfig {
                threads: Some(0),
                ..AbcConfig::default()
            },
        ];
        for cfg in bad {
            assert_eq!(
                cfg.validate().unwrap_err().kind(),
                "InvalidConfig",
                "{cfg:?}"
            );
        }
        assert!(AbcConfig::default().validate().is_ok());
    }

    #[test]
    fn retained_set_is_the_k_smallest() {
        let stats = parse_summary(100, None, Some(-1.0), 0.0, Some(1.0), None).unwrap();
        let spec = DistributionSpec::default_for(Family::Normal);
        let run = run_abc_with(&stats, &spec, &small_cfg(), RunControl::default()).unwrap();
        assert_eq!(run.retained.len(), 20);
        assert!(run
            .retained
            .windows(2)
            .all(|w| w[0].rank_cmp(&w[1]).is_lt()));
        let means: Vec<f64> = run.retained.iter().map(|c| c.pseudo_mean).collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(run.result.est_mean >= lo && run.result.est_mean <= hi);
        assert!(run.result.est_sd >= 0.0);
        assert_eq!(run.result.selection_probability, None);
    }

    #[test]
    fn lognormal_requires_positive_stats() {
        let stats = parse_summary(100, None, Some(-1.0), 0.0, Some(1.0), None).unwrap();
        let spec = DistributionSpec::default_for(Family::Lognormal);
        assert_eq!(
            run_abc(&stats, &spec, &small_cfg()).unwrap_err().kind(),
            "NonPositiveSupport"
        );
        assert_eq!(
            run_selection(&stats, &small_cfg(), &[]).unwrap_err().kind(),
            "NonPositiveSupport"
        );
    }

    #[test]
    fn beta_requires_stats_inside_bounds() {
        let stats = parse_summary(100, Some(-1.0), None, 50.0, None, Some(99.0)).unwrap();
        let spec = DistributionSpec::default_for(Family::Beta);
        assert_eq!(
            run_abc(&stats, &spec, &small_cfg()).unwrap_err().kind(),
            "OutOfBounds"
        );
    }

    #[test]
    fn selection_rejects_beta_override() {
        let stats = parse_summary(100, Some(1.0), None, 5.0, None, Some(20.0)).unwrap();
        let beta = DistributionSpec::default_for(Family::Beta);
        assert_eq!(
            run_selection(&stats, &small_cfg(), &[beta])
                .unwrap_err()
                .kind(),
            "InvalidConfig"
        );
    }

    #[test]
    fn selection_counts_sum_to_k() {
        let stats = parse_summary(200, Some(0.82), None, 4.44, None, Some(22.15)).unwrap();
        let run = run_selection_with(&stats, &small_cfg(), &[], RunControl::default()).unwrap();
        let k = small_cfg().retained_count();
        assert_eq!(run.counts.iter().sum::<usize>(), k);
        assert_eq!(run.pooled.len(), k);
        let p = run.result.selection_probability.unwrap();
        let winner = Family::SELECTION
            .iter()
            .position(|&f| f == run.result.family)
            .unwrap();
        assert_eq!(p, run.counts[winner] as f64 / k as f64);
        assert!(p > 0.0 && p <= 1.0);
        assert!(run.counts.iter().all(|&c| c <= run.counts[winner]));
        assert!(run.retained.iter().all(|c| c.family == run.result.family));
    }

    #[test]
    fn selection_winner_matches_single_family_run() {
        let stats = parse_summary(200, Some(0.82), None, 4.44, None, Some(22.15)).unwrap();
        let sel = run_selection(&stats, &small_cfg(), &[]).unwrap();
        let single = run_abc(
            &stats,
            &DistributionSpec::default_for(sel.family),
            &small_cfg(),
        )
        .unwrap();
        assert_eq!(sel.est_mean, single.est_mean);
        assert_eq!(sel.est_sd, single.est_sd);
    }

    #[test]
    fn progress_reaches_total() {
        let stats = parse_summary(50, Some(1.0), None, 3.0, None, Some(9.0)).unwrap();
        let seen = Mutex::new(Vec::new());
        let report = |p: Progress| seen.lock().unwrap().push(p);
        let control = RunControl {
            progress: Some(&report),
            cancel: None,
        };
        let cfg = AbcConfig {
            threads: Some(1),
            ..small_cfg()
        };
        run_abc_with(
            &stats,
            &DistributionSpec::default_for(Family::Normal),
            &cfg,
            control,
        )
        .unwrap();
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 20);
        assert!(seen.windows(2).all(|w| w[0].done < w[1].done));
        assert_eq!(seen.last().unwrap().done, 2_000);
        assert_eq!(seen.last().unwrap().fraction(), 1.0);
    }

    #[test]
    fn cancellation_stops_the_run() {
        let stats = parse_summary(50, Some(1.0), None, 3.0, None, Some(9.0)).unwrap();
        let cancel = AtomicBool::new(true);
        let control = RunControl {
            progress: None,
            cancel: Some(&cancel),
        };
        let err = run_abc_with(
            &stats,
            &DistributionSpec::default_for(Family::Normal),
            &small_cfg(),
            control,
        )
        .unwrap_err();
        assert_eq!(err, Error::Cancelled);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let stats = parse_summary(60, Some(1.0), None, 3.0, None, Some(9.0)).unwrap();
        for family in Family::ALL {
            let spec = match family {
                Family::Beta => DistributionSpec::Beta {
                    alpha_max: 40.0,
                    beta_max: 40.0,
                    bounds: BoundsTransform::new(0.0, 10.0).unwrap(),
                },
                f => DistributionSpec::default_for(f),
            };
            let results: Vec<AbcResult> = [Some(1), Some(3), None]
                .into_iter()
                .map(|threads| {
                    run_abc(
                        &stats,
                        &spec,
                        &AbcConfig {
                            threads,
                            ..small_cfg()
                        },
                    )
                    .unwrap()
                })
                .collect();
            assert_eq!(results[0], results[1], "{family}");
            assert_eq!(results[0], results[2], "{family}");
        }
    }
}
