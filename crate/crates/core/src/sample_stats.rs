//! Five-number summaries and moments of simulated samples.
//!
//! Quartiles use linear interpolation between order statistics at
//! position `h = (n - 1) p` (0-based), the "type 7" convention.

use crate::error::{Error, Result};
use crate::summary::FiveNumber;

const QUARTILES: [f64; 3] = [0.25, 0.5, 0.75];

/// Five-number summary of `sample`. The input is left untouched.
pub fn summary_of(sample: &[f64]) -> Result<FiveNumber> {
    let mut scratch = sample.to_vec();
    summarize_in_place(&mut scratch)
}

/// Five-number summary of `sample`, permuting it in the process.
///
/// Only the eight order statistics the summary needs are placed, via
/// successive partial selection, so this runs in linear time.
pub fn summarize_in_place(sample: &mut [f64]) -> Result<FiveNumber> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }

    let (mut min, mut max) = (sample[0], sample[0]);
    for &x in sample.iter() {
        if x.total_cmp(&min).is_lt() {
            min = x;
        }
        if x.total_cmp(&max).is_gt() {
            max = x;
        }
    }

    let positions = QUARTILES.map(|p| (n - 1) as f64 * p);
    let mut wanted = [0usize; 6];
    for (i, h) in positions.iter().enumerate() {
        let lo = h.floor() as usize;
        wanted[2 * i] = lo;
        wanted[2 * i + 1] = (lo + 1).min(n - 1);
    }

    let mut start = 0;
    for &idx in &wanted {
        if idx < start {
            continue;
        }
        sample[start..].select_nth_unstable_by(idx - start, f64::total_cmp);
        start = idx + 1;
    }

    let [q1, median, q3] = positions.map(|h| interpolate(sample, h));
    Ok(FiveNumber {
        min,
        q1,
        median,
        q3,
        max,
    })
}

/// `x[lo] + frac * (x[lo + 1] - x[lo])` where `x[lo]` and `x[lo + 1]` are
/// already in their sorted positions.
fn interpolate(placed: &[f64], h: f64) -> f64 {
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= placed.len() {
        placed[lo]
    } else {
        placed[lo] + frac * (placed[lo + 1] - placed[lo])
    }
}

/// Arithmetic mean and sample standard deviation (denominator `n - 1`).
pub fn moments_of(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let ss: f64 = sample.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}
