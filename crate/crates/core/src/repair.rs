//! Repair operators: fraction normalization and the duration bisection that
//! puts a parcel's concentrate inside its target band.

use crate::error::{Error, Result};
use crate::model::Grades;
use crate::process::{self, ProcessParams};

/// Half-width of the concentrate band around the target, tonnes.
pub const BAND_HALF_WIDTH: f64 = 1.0;
/// Hard cap on bisection steps.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Weight vectors whose sum is this close to one are returned untouched,
/// which makes normalization idempotent bit for bit.
const NORMALIZED_SUM_TOLERANCE: f64 = 1e-13;

/// Rescales nonnegative weights so they sum to one.
///
/// Negative and non-finite entries are clamped to zero first. An all-zero
/// vector becomes the uniform distribution.
pub fn normalize_fractions(raw: &[f64]) -> Vec<f64> {
    let mut out = raw.to_vec();
    normalize_in_place(&mut out);
    out
}

pub fn normalize_in_place(weights: &mut [f64]) {
    if weights.is_empty() {
        return;
    }
    for x in weights.iter_mut() {
        if !(x.is_finite() && *x > 0.0) {
            *x = 0.0;
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        let uniform = 1.0 / weights.len() as f64;
        weights.fill(uniform);
    } else if (sum - 1.0).abs() > NORMALIZED_SUM_TOLERANCE {
        for x in weights.iter_mut() {
            *x /= sum;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationRepair {
    pub duration: f64,
    /// Concentrate produced at `duration`.
    pub concentrate: f64,
    pub iterations: usize,
    /// Whether `concentrate` lies in the target band.
    pub in_band: bool,
}

/// Bisection on a nondecreasing concentrate curve `k(t)` over `[0, available]`
/// for a duration whose output lands in `[target - 1, target + 1]`.
///
/// When the band is out of reach the nearest end of the interval is returned.
pub fn repair_duration_with<K>(concentrate: K, target: f64, available: f64) -> Result<DurationRepair>
where
    K: Fn(f64) -> f64,
{
    if target.is_nan() || target <= 0.0 || available.is_nan() || available <= 0.0 {
        return Err(Error::contract(format!(
            "duration repair needs positive target and duration, got K={target}, D={available}"
        )));
    }
    let lower = target - BAND_HALF_WIDTH;
    let upper = target + BAND_HALF_WIDTH;
    let eval = |t: f64| -> Result<f64> {
        let k = concentrate(t);
        if k.is_finite() {
            Ok(k)
        } else {
            Err(Error::contract(format!("concentrate is not finite at t={t}")))
        }
    };
    let done = |duration, k, iterations| DurationRepair {
        duration,
        concentrate: k,
        iterations,
        in_band: (lower..=upper).contains(&k),
    };

    let k_full = eval(available)?;
    if k_full < lower {
        return Ok(done(available, k_full, 0));
    }
    let k_zero = eval(0.0)?;
    if k_zero > upper {
        return Ok(done(0.0, k_zero, 0));
    }

    let (mut lo, mut hi) = (0.0, available);
    let mut best = if (k_full - target).abs() <= (k_zero - target).abs() {
        (available, k_full)
    } else {
        (0.0, k_zero)
    };
    for iteration in 1..=MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let k = eval(mid)?;
        if (lower..=upper).contains(&k) {
            return Ok(done(mid, k, iteration));
        }
        if (k - target).abs() < (best.1 - target).abs() {
            best = (mid, k);
        }
        if k > upper {
            hi = mid;
        } else {
            lo = mid;
        }
        if !(lo < mid || mid < hi) {
            break;
        }
    }
    // Only reachable for curves that jump over the band.
    Ok(done(best.0, best.1, MAX_BISECTION_ITERATIONS))
}

/// Duration repair for a parcel with fixed blend grades.
pub fn repair_duration(
    grades: &Grades,
    target: f64,
    available: f64,
    params: &ProcessParams,
) -> Result<DurationRepair> {
    repair_duration_with(|t| process::concentrate(t, grades, params), target, available)
}
