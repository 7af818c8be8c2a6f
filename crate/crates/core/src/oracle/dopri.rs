//! Dormand-Prince 5(4) with PI step control and the method's own
//! fourth-order continuous extension.

use super::OracleError;
use crate::trajectory::IntegratorStats;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(OracleError::InvalidInput(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(OracleError::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns `y` at each of
/// `samples` (ascending, all `>= t0`). Samples inside a step are filled from
/// the continuous extension, so they never shorten a step.
pub fn integrate<const N: usize, E, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    samples: &[f64],
    ctl: &StepControl,
) -> Result<(Vec<[f64; N]>, IntegratorStats), E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    E: From<OracleError>,
{
    ctl.validate()?;
    if samples.windows(2).any(|w| !(w[1] >= w[0])) || samples.first().is_some_and(|&s| !(s >= t0)) {
        return Err(OracleError::InvalidInput("sample times must be ascending and not before t0".into()).into());
    }
    let mut stats = IntegratorStats { rel_tol: ctl.rel_tol, abs_tol: ctl.abs_tol, ..Default::default() };
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && samples[next] == t0 {
        out.push(y0);
        next += 1;
    }
    let Some(&t_end) = samples.last() else {
        return Ok((out, stats));
    };
    if next == samples.len() {
        return Ok((out, stats));
    }

    let scale = |a: f64, b: f64| ctl.abs_tol + ctl.rel_tol * a.abs().max(b.abs());
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    stats.rhs_evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, t_end - t0, ctl, &mut stats)?;
    let mut err_old: f64 = 1e-4;
    let mut reject = false;

    while next < samples.len() {
        if stats.steps + stats.rejected_steps >= ctl.max_steps {
            return Err(OracleError::MaxSteps { t, max_steps: ctl.max_steps }.into());
        }
        let last = t + h * 1.01 >= t_end;
        if last {
            h = t_end - t;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OracleError::StepFailure { t, h }.into());
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t_end } else { t + h };
        let k7 = f(t_new, &y_new)?;
        stats.rhs_evaluations += 6;

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = scale(y[i], y_new[i]);
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();

        if !err.is_finite() {
            stats.rejected_steps += 1;
            h *= FAC_MIN;
            reject = true;
            continue;
        }

        let fac = (err.powf(EXPO) / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        if err <= 1.0 {
            stats.steps += 1;
            // dense output on [t, t_new]
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next < samples.len() && samples[next] <= t_new {
                let s = samples[next];
                out.push(if s == t_new {
                    y_new
                } else {
                    let th = (s - t) / h;
                    let th1 = 1.0 - th;
                    let mut v = [0.0; N];
                    for i in 0..N {
                        v[i] = rcont[0][i]
                            + th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
                    }
                    v
                });
                next += 1;
            }
            err_old = err.max(1e-4);
            let mut h_new = h / fac;
            if reject {
                h_new = h_new.min(h);
            }
            reject = false;
            t = t_new;
            y = y_new;
            k1 = k7;
            h = h_new;
        } else {
            stats.rejected_steps += 1;
            h /= (err.powf(EXPO) / SAFETY).min(1.0 / FAC_MIN);
            reject = true;
        }
    }
    Ok((out, stats))
}

/// Starting step from the usual two-evaluation estimate.
fn initial_step<const N: usize, E, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    span: f64,
    ctl: &StepControl,
    stats: &mut IntegratorStats,
) -> Result<f64, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    E: From<OracleError>,
{
    let sc: Vec<f64> = y.iter().map(|v| ctl.abs_tol + ctl.rel_tol * v.abs()).collect();
    let norm = |v: &[f64; N]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, k1)]);
    let k2 = f(t + h0, &y1)?;
    stats.rhs_evaluations += 1;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(tol: f64) -> StepControl {
        StepControl { rel_tol: tol, abs_tol: tol, max_steps: 100_000 }
    }

    #[test]
    fn exponential_decay() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let (ys, stats) = integrate::<1, OracleError, _>(|_, y| Ok([-y[0]]), 0.0, [1.0], &times, &ctl(1e-12)).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11, "{t}");
        }
        assert!(stats.steps > 0 && stats.rhs_evaluations > 6 * stats.steps);
    }

    #[test]
    fn dense_output_between_steps() {
        // harmonic oscillator sampled far more finely than the steps taken
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let (ys, stats) =
            integrate::<2, OracleError, _>(|_, y| Ok([y[1], -y[0]]), 0.0, [1.0, 0.0], &times, &ctl(1e-10)).unwrap();
        assert!(stats.steps < 500);
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "{t}: {}", y[0] - t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn max_steps_is_reported() {
        let c = StepControl { max_steps: 3, ..ctl(1e-12) };
        let r = integrate::<2, OracleError, _>(|_, y| Ok([y[1], -y[0]]), 0.0, [1.0, 0.0], &[100.0], &c);
        assert!(matches!(r, Err(OracleError::MaxSteps { .. })));
    }

    #[test]
    fn singular_rhs_fails_cleanly() {
        // y' = y^2 blows up at t = 1
        let r = integrate::<1, OracleError, _>(|_, y| Ok([y[0] * y[0]]), 0.0, [1.0], &[2.0], &ctl(1e-10));
        assert!(r.is_err());
    }

    #[test]
    fn bad_samples_rejected() {
        let r = integrate::<1, OracleError, _>(|_, y| Ok([y[0]]), 1.0, [1.0], &[0.5], &ctl(1e-8));
        assert!(matches!(r, Err(OracleError::InvalidInput(_))));
    }
}
