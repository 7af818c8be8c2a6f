//! Solvability conditions of the closed forms: bounded angular rates and
//! finite positions for every body, plus an escaping surrogate (`B > 0`) whose
//! separation stays outside the binomial margin `|r_a| > |A/B|`.

use crate::closed_form::SurrogateParams;
use crate::model::{self, Body, Convention, SystemState};
use crate::oracle;
use crate::trajectory::{Mode, Trajectory};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ANGULAR_RATE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    AngularRate,
    FinitePosition,
    BPositive,
    Margin,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::AngularRate => "angular_rate",
            Condition::FinitePosition => "finite_position",
            Condition::BPositive => "b_positive",
            Condition::Margin => "margin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based body label.
    pub body: usize,
    pub time: f64,
    pub condition: Condition,
}

/// Thresholds shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub angular_rate_threshold: f64,
    /// Optional cap on `r`; positions only need to be finite without it.
    pub r_max: Option<f64>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { angular_rate_threshold: DEFAULT_ANGULAR_RATE_THRESHOLD, r_max: None }
    }
}

impl Limits {
    fn rate_ok(&self, theta_dot: f64) -> bool {
        theta_dot.abs() < self.angular_rate_threshold
    }

    fn radius_ok(&self, r: f64) -> bool {
        r.is_finite() && self.r_max.is_none_or(|m| r.abs() <= m)
    }
}

/// Per-body outcome of every condition. `horizon` entries of `None` mean no
/// limit was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub angular_rate_ok: [bool; 3],
    pub finite_positions_ok: [bool; 3],
    pub b_positive: [bool; 3],
    pub margin_ok: [bool; 3],
    pub margin_ratio: [f64; 3],
    pub horizon: [Option<f64>; 3],
    pub first_violation: Option<Violation>,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.first_violation.is_none()
            && [self.angular_rate_ok, self.finite_positions_ok, self.b_positive, self.margin_ok]
                .iter()
                .all(|flags| flags.iter().all(|&f| f))
    }

    fn note(&mut self, v: Violation) {
        let earlier = match self.first_violation {
            None => true,
            Some(cur) => (v.time, v.body) < (cur.time, cur.body),
        };
        if earlier {
            self.first_violation = Some(v);
        }
    }

    fn clamp_horizon(&mut self, body: usize, t: f64) {
        let h = &mut self.horizon[body - 1];
        *h = Some(h.map_or(t, |cur| cur.min(t)));
    }
}

/// Result of the surrogate gate for one body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCheck {
    pub b_positive: bool,
    pub margin_ok: bool,
    /// `r_a0 B / A`; the margin holds when this exceeds 1.
    pub margin_ratio: f64,
}

/// Angular-rate and finiteness conditions on the initial state. Surrogate
/// fields are left passing; [`check_surrogate`] fills them in.
pub fn check_preconditions(sys: &SystemState, limits: &Limits) -> ValidityReport {
    let mut report = ValidityReport {
        angular_rate_ok: [true; 3],
        finite_positions_ok: [true; 3],
        b_positive: [true; 3],
        margin_ok: [true; 3],
        margin_ratio: [f64::INFINITY; 3],
        horizon: [None; 3],
        first_violation: None,
    };
    for (i, Body { state, .. }) in sys.bodies.iter().enumerate() {
        let finite = limits.radius_ok(state.r) && state.theta.is_finite();
        report.finite_positions_ok[i] = finite;
        report.angular_rate_ok[i] = limits.rate_ok(state.theta_dot);
        if !finite {
            report.note(Violation { body: i + 1, time: sys.t, condition: Condition::FinitePosition });
            report.clamp_horizon(i + 1, sys.t);
        } else if !report.angular_rate_ok[i] {
            report.note(Violation { body: i + 1, time: sys.t, condition: Condition::AngularRate });
            report.clamp_horizon(i + 1, sys.t);
        }
    }
    report
}

pub fn check_surrogate(p: &SurrogateParams) -> SurrogateCheck {
    let margin_ratio = p.r_a0 * p.b_const / p.a_const;
    SurrogateCheck { b_positive: p.b_const > 0.0, margin_ok: margin_ratio > 1.0, margin_ratio }
}

/// Folds the surrogate gate of each body into `report`. `None` params mean
/// the surrogate could not be formed at all.
pub fn apply_surrogates(report: &mut ValidityReport, params: &[Option<SurrogateParams>; 3], t0: f64) {
    for (i, p) in params.iter().enumerate() {
        let body = i + 1;
        let Some(p) = p else {
            report.b_positive[i] = false;
            report.margin_ok[i] = false;
            report.margin_ratio[i] = f64::NAN;
            report.note(Violation { body, time: t0, condition: Condition::BPositive });
            report.clamp_horizon(body, t0);
            continue;
        };
        let c = check_surrogate(p);
        report.b_positive[i] = c.b_positive;
        report.margin_ok[i] = c.margin_ok;
        report.margin_ratio[i] = c.margin_ratio;
        if !c.b_positive {
            report.note(Violation { body, time: t0, condition: Condition::BPositive });
            report.clamp_horizon(body, t0);
        } else if !c.margin_ok {
            report.note(Violation { body, time: t0, condition: Condition::Margin });
            report.clamp_horizon(body, t0);
        } else if let Ok(Some(h)) = p.validity_horizon() {
            report.clamp_horizon(body, h);
        }
    }
}

/// Everything the monitor needs beyond the trajectories.
#[derive(Debug, Clone)]
pub struct MonitorContext<'a> {
    pub initial: &'a SystemState,
    pub params: &'a [Option<SurrogateParams>; 3],
    pub convention: Convention,
    pub limits: Limits,
}

/// Full report for a set of trajectories: the initial-state gates, then a
/// time-ordered scan of every sample. The horizon of each body is the earlier
/// of its analytic horizon and its first sampled violation.
pub fn monitor(trajectories: &[Trajectory], ctx: &MonitorContext<'_>) -> ValidityReport {
    let mut report = check_preconditions(ctx.initial, &ctx.limits);
    apply_surrogates(&mut report, ctx.params, ctx.initial.t);
    let mut seen = [false; 3];
    for traj in trajectories {
        for (n, &t) in traj.times.iter().enumerate() {
            for (col, &body) in traj.bodies.iter().enumerate() {
                if seen[body - 1] {
                    continue;
                }
                if let Some(cond) = sample_violation(traj, n, col, t, ctx) {
                    seen[body - 1] = true;
                    report.note(Violation { body, time: t, condition: cond });
                    report.clamp_horizon(body, t);
                }
            }
        }
    }
    report
}

fn sample_violation(traj: &Trajectory, n: usize, col: usize, t: f64, ctx: &MonitorContext<'_>) -> Option<Condition> {
    let s = &traj.states[n][col];
    let body = traj.bodies[col];
    if !(ctx.limits.radius_ok(s.r) && s.theta.is_finite()) {
        return Some(Condition::FinitePosition);
    }
    // the printed angle formula does not reproduce theta'_0 even at t0; the
    // initial rate is already covered by the preconditions
    if traj.mode != Mode::PaperClosedForm && !ctx.limits.rate_ok(s.theta_dot) {
        return Some(Condition::AngularRate);
    }
    let p = ctx.params[body - 1].as_ref()?;
    let two_k = 2.0 * p.k_const;
    let separation = match traj.mode {
        Mode::PaperClosedForm | Mode::SemiAnalytic => {
            if p.validity_horizon().ok().flatten().is_some_and(|h| t >= h) {
                return Some(Condition::Margin);
            }
            p.r_a_closed(t).ok()?
        }
        Mode::SurrogateFull | Mode::SurrogateRadial => s.r,
        Mode::OracleNewton | Mode::OraclePaper => {
            let sys = oracle::state_at(traj, n, ctx.initial)?;
            model::surrogate_separation(&sys, body - 1, ctx.convention).ok()?
        }
    };
    (separation.abs() <= two_k).then_some(Condition::Margin)
}
