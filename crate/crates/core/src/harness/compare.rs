//! Position-error metrics between two sets of trajectories.

use crate::model::Vec2;
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyMetrics {
    pub body: usize,
    pub rms_position_error: f64,
    pub max_position_error: f64,
    /// First compared time with error above the threshold.
    pub divergence_time: Option<f64>,
    pub final_error: f64,
    pub samples_compared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub threshold: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples_compared: usize,
    pub bodies: Vec<BodyMetrics>,
}

/// First time whose error exceeds `threshold`.
pub fn divergence_time(times: &[f64], errors: &[f64], threshold: f64) -> Option<f64> {
    times.iter().zip(errors).find(|(_, &e)| e > threshold).map(|(&t, _)| t)
}

/// Cubic Hermite interpolation of `traj`'s position for `body` at `t`,
/// using the stored velocities as end slopes.
fn position_at(traj: &Trajectory, body: usize, t: f64) -> Option<Vec2> {
    let times = &traj.times;
    let n = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(n) => return traj.cartesian(n, body).map(|(p, _)| p),
        Err(n) => n,
    };
    if n == 0 || n >= times.len() {
        return None;
    }
    let (t0, t1) = (times[n - 1], times[n]);
    let (p0, v0) = traj.cartesian(n - 1, body)?;
    let (p1, v1) = traj.cartesian(n, body)?;
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    Some(h00 * p0 + (h10 * h) * v0 + h01 * p1 + (h11 * h) * v1)
}

fn holder(set: &[Trajectory], body: usize) -> Option<&Trajectory> {
    set.iter().find(|t| t.column(body).is_some())
}

/// Errors of `a` against the reference `b`, evaluated at `a`'s sample
/// times inside `b`'s interval. Bodies absent from either set are skipped.
pub fn compare(a: &[Trajectory], b: &[Trajectory], threshold: f64) -> Result<ErrorMetrics, HarnessError> {
    let mut bodies = Vec::new();
    let (mut t_start, mut t_end) = (f64::INFINITY, f64::NEG_INFINITY);
    for body in 1..=3 {
        let (Some(ta), Some(tb)) = (holder(a, body), holder(b, body)) else {
            continue;
        };
        if tb.is_empty() {
            continue;
        }
        let (lo, hi) = (tb.t_start(), tb.t_end());
        let mut times = Vec::new();
        let mut errors = Vec::new();
        for (n, &t) in ta.times.iter().enumerate() {
            if t < lo || t > hi {
                continue;
            }
            let (Some((pa, _)), Some(pb)) = (ta.cartesian(n, body), position_at(tb, body, t)) else {
                continue;
            };
            times.push(t);
            errors.push((pa - pb).norm());
        }
        if times.is_empty() {
            continue;
        }
        t_start = t_start.min(times[0]);
        t_end = t_end.max(*times.last().unwrap());
        let sum_sq: f64 = errors.iter().map(|e| e * e).sum();
        bodies.push(BodyMetrics {
            body,
            rms_position_error: (sum_sq / errors.len() as f64).sqrt(),
            max_position_error: errors.iter().copied().fold(0.0, f64::max),
            divergence_time: divergence_time(&times, &errors, threshold),
            final_error: *errors.last().unwrap(),
            samples_compared: times.len(),
        });
    }
    if bodies.is_empty() {
        return Err(HarnessError::DisjointIntervals);
    }
    let samples_compared = bodies.iter().map(|b| b.samples_compared).sum();
    Ok(ErrorMetrics { threshold, t_start, t_end, samples_compared, bodies })
}
