//! Scenario runs, comparisons and their file outputs.

pub mod compare;
pub mod scenario;

use crate::closed_form::{self, ClosedFormError, SolveOptions, SurrogateParams};
use crate::model::{self, Convention, ModelError, SystemState};
use crate::oracle::{self, Field, OracleError};
use crate::trajectory::{uniform_times, IntegratorStats, Mode, Trajectory};
use crate::validity::{self, MonitorContext, ValidityReport};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

pub use compare::{compare, divergence_time, BodyMetrics, ErrorMetrics};
pub use scenario::{BodySpec, Scenario, SolverConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("bad input: {0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("trajectories share no common time interval")]
    DisjointIntervals,
    #[error("validity violation: {0}")]
    Validity(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validity(_) => 2,
            HarnessError::Numeric(_) | HarnessError::DisjointIntervals => 3,
            HarnessError::Input(_) => 4,
        }
    }
}

impl From<OracleError> for HarnessError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidInput(m) => HarnessError::Input(m),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

/// Why one body produced no trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodyFailure {
    pub body: usize,
    /// A validity gate (rather than the numerics) refused the body.
    pub validity: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub mode: Mode,
    /// Initial state after the shift to the COM frame.
    pub system: SystemState,
    pub trajectories: Vec<Trajectory>,
    /// Surrogate constants per body; unchecked for bodies that failed a gate.
    pub params: [Option<SurrogateParams>; 3],
    pub failures: Vec<BodyFailure>,
    pub validity: ValidityReport,
}

impl RunOutput {
    pub fn has_numeric_failure(&self) -> bool {
        self.failures.iter().any(|f| !f.validity)
    }

    /// Exit status under the CLI contract.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if self.has_numeric_failure() {
            3
        } else if strict && !self.validity.all_ok() {
            2
        } else {
            0
        }
    }
}

fn solve_options(sc: &Scenario, mode: Mode) -> SolveOptions {
    let s = &sc.solver;
    SolveOptions {
        sign_mode: s.sign_mode,
        branch: s.branch,
        convention: s.convention,
        mode,
        horizon: s.horizon,
        samples: s.samples,
        quad_tol: s.quad_tol,
    }
}

/// Surrogate constants for the validity gate. Bodies refused by a gate get
/// unchecked constants so that the report can still show `B` and the margin.
fn gate_params(sys: &SystemState, opts: &SolveOptions) -> ([Option<SurrogateParams>; 3], Vec<BodyFailure>) {
    let mut failures = Vec::new();
    let params = [0, 1, 2].map(|i| match closed_form::params_for_body(sys, i, opts) {
        Ok(p) => Some(p),
        Err(e) => {
            let validity = e.is_validity();
            failures.push(BodyFailure { body: i + 1, validity, message: e.to_string() });
            if !validity {
                return None;
            }
            let s = model::surrogate_initials(sys, i, opts.convention).ok()?;
            let sign = if s.rdot_a0 < 0.0 { -1 } else { 1 };
            Some(closed_form::derive_params(sys.g_const, sys.masses(), i, &s, &sys.bodies[i].state, sign, opts.branch, sys.t))
        }
    });
    (params, failures)
}

fn push_failure(failures: &mut Vec<BodyFailure>, f: BodyFailure) {
    if !failures.iter().any(|g| g.body == f.body && g.message == f.message) {
        failures.push(f);
    }
}

/// Runs `sc` in its configured mode.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput, HarnessError> {
    run_mode(sc, sc.solver.mode)
}

/// Runs `sc` with the mode overridden.
pub fn run_mode(sc: &Scenario, mode: Mode) -> Result<RunOutput, HarnessError> {
    sc.validate()?;
    let sys = model::to_com_frame(&sc.system())?;
    let opts = solve_options(sc, mode);
    let (params, mut failures) = gate_params(&sys, &opts);
    let t_end = sys.t + sc.solver.horizon;
    let times = uniform_times(sys.t, t_end, sc.solver.samples);
    let ctl = sc.solver.step_control();
    let mut trajectories = Vec::new();
    match mode {
        Mode::PaperClosedForm | Mode::SemiAnalytic => {
            let results = closed_form::solve_system(&sys, &opts).map_err(|e| HarnessError::Input(e.to_string()))?;
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(sol) => {
                        if let Some(e) = sol.stopped {
                            push_failure(&mut failures, BodyFailure { body: i + 1, validity: e.is_validity(), message: e.to_string() });
                        }
                        trajectories.push(sol.trajectory);
                    }
                    Err(e) => push_failure(&mut failures, BodyFailure { body: i + 1, validity: e.is_validity(), message: e.to_string() }),
                }
            }
        }
        Mode::OracleNewton | Mode::OraclePaper => {
            let field = if mode == Mode::OracleNewton { Field::Newton } else { Field::Paper };
            trajectories.push(oracle::integrate_at(field, &sys, &times, &ctl)?);
        }
        Mode::SurrogateFull | Mode::SurrogateRadial => {
            for i in 0..3 {
                let run = model::surrogate_initials(&sys, i, opts.convention)
                    .map_err(OracleError::from)
                    .and_then(|s| {
                        let m = sys.total_mass();
                        if mode == Mode::SurrogateFull {
                            oracle::integrate_surrogate_full(sys.g_const, m, &s, i + 1, sys.t, &times, &ctl)
                        } else {
                            oracle::integrate_surrogate_radial(sys.g_const, m, &s, i + 1, sys.t, &times, &ctl)
                        }
                    });
                match run {
                    Ok(t) => trajectories.push(t),
                    Err(e) => push_failure(&mut failures, BodyFailure { body: i + 1, validity: false, message: e.to_string() }),
                }
            }
        }
    }
    failures.sort_by_key(|f| f.body);
    let ctx = MonitorContext { initial: &sys, params: &params, convention: opts.convention, limits: sc.solver.limits() };
    let validity = validity::monitor(&trajectories, &ctx);
    Ok(RunOutput { mode, system: sys, trajectories, params, failures, validity })
}

/// COM-frame state, gate params, gate failures and the initial report.
pub type Validation = (SystemState, [Option<SurrogateParams>; 3], Vec<BodyFailure>, ValidityReport);

/// Initial-state validity only: gates at `t0`, nothing is integrated.
pub fn validate_scenario(sc: &Scenario) -> Result<Validation, HarnessError> {
    sc.validate()?;
    let sys = model::to_com_frame(&sc.system())?;
    let opts = solve_options(sc, sc.solver.mode);
    let (params, failures) = gate_params(&sys, &opts);
    let ctx = MonitorContext { initial: &sys, params: &params, convention: opts.convention, limits: sc.solver.limits() };
    let report = validity::monitor(&[], &ctx);
    Ok((sys, params, failures, report))
}

/// Angle folded into `(-pi, pi]` for output.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

/// Trajectory CSV: one row per (sample, body), samples in time order and
/// bodies ascending within a sample.
pub fn trajectory_csv(trajectories: &[Trajectory]) -> String {
    let mut rows: Vec<(usize, usize, f64, crate::model::PolarState)> = Vec::new();
    for tr in trajectories {
        for (n, &t) in tr.times.iter().enumerate() {
            for (k, &body) in tr.bodies.iter().enumerate() {
                rows.push((n, body, t, tr.states[n][k]));
            }
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::from("t,body,r,theta,r_dot,theta_dot,x,y\n");
    for (_, body, t, s) in rows {
        let p = s.position();
        let _ = writeln!(
            out,
            "{:?},{},{:?},{:?},{:?},{:?},{:?},{:?}",
            t,
            body,
            s.r,
            normalize_angle(s.theta),
            s.r_dot,
            s.theta_dot,
            p.x,
            p.y
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub mode: Mode,
    pub convention: Convention,
    pub validity: &'a ValidityReport,
    pub params: &'a [Option<SurrogateParams>; 3],
    pub failures: &'a [BodyFailure],
    pub integrator_stats: Vec<Option<IntegratorStats>>,
    pub t_end: Vec<f64>,
}

impl RunOutput {
    pub fn report<'a>(&'a self, sc: &Scenario) -> RunReport<'a> {
        RunReport {
            mode: self.mode,
            convention: sc.solver.convention,
            validity: &self.validity,
            params: &self.params,
            failures: &self.failures,
            integrator_stats: self.trajectories.iter().map(|t| t.stats).collect(),
            t_end: self.trajectories.iter().map(|t| t.t_end()).collect(),
        }
    }

    pub fn report_json(&self, sc: &Scenario) -> String {
        to_json(&self.report(sc))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport<'a> {
    pub modes: [Mode; 2],
    pub metrics: &'a ErrorMetrics,
    pub runs: [RunReport<'a>; 2],
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Runs `sc` in both modes and measures `a` against the reference `b`.
pub fn compare_modes(sc: &Scenario, a: Mode, b: Mode, threshold: f64) -> Result<(RunOutput, RunOutput, ErrorMetrics), HarnessError> {
    if !(threshold >= 0.0) {
        return Err(HarnessError::Input(format!("threshold must be non-negative, got {threshold}")));
    }
    let ra = run_mode(sc, a)?;
    let rb = run_mode(sc, b)?;
    let metrics = compare(&ra.trajectories, &rb.trajectories, threshold)?;
    Ok((ra, rb, metrics))
}

impl From<ClosedFormError> for HarnessError {
    fn from(e: ClosedFormError) -> Self {
        if e.is_validity() {
            HarnessError::Validity(e.to_string())
        } else {
            match e {
                ClosedFormError::InvalidInput(m) => HarnessError::Input(m),
                other => HarnessError::Numeric(other.to_string()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_closed_form_starts_exactly() {
        let sc = Scenario::demo();
        let out = run_scenario(&sc).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert!(out.validity.all_ok(), "{:?}", out.validity);
        assert_eq!(out.trajectories.len(), 3);
        for (i, tr) in out.trajectories.iter().enumerate() {
            let s0 = tr.states[0][0];
            let b = out.system.bodies[i].state;
            assert_eq!((s0.r, s0.theta), (b.r, b.theta));
        }
        assert_eq!(out.exit_code(true), 0);
    }

    #[test]
    fn symmetric_triple_gives_identical_radii() {
        let out = run_scenario(&Scenario::demo()).unwrap();
        let r = |k: usize| out.trajectories[k].states.iter().map(|s| s[0].r).collect::<Vec<_>>();
        let (a, b, c) = (r(0), r(1), r(2));
        for n in 0..a.len() {
            assert!((a[n] - b[n]).abs() <= 1e-9 * a[n].abs().max(1.0));
            assert!((a[n] - c[n]).abs() <= 1e-9 * a[n].abs().max(1.0));
        }
    }

    #[test]
    fn non_escaping_scenario() {
        let mut sc = Scenario::demo();
        for b in &mut sc.bodies {
            b.r_dot = 0.1;
        }
        let out = run_scenario(&sc).unwrap();
        assert_eq!(out.failures.len(), 3);
        assert!(out.failures.iter().all(|f| f.validity && f.message.contains("not escaping")));
        assert_eq!(out.validity.b_positive, [false; 3]);
        assert_eq!(out.exit_code(false), 0);
        assert_eq!(out.exit_code(true), 2);
    }

    #[test]
    fn csv_layout() {
        let mut sc = Scenario::demo();
        sc.solver.samples = 3;
        let out = run_scenario(&sc).unwrap();
        let csv = trajectory_csv(&out.trajectories);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,body,r,theta,r_dot,theta_dot,x,y");
        assert_eq!(lines.len(), 1 + 9);
        let bodies: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(bodies, ["1", "2", "3", "1", "2", "3", "1", "2", "3"]);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn input_is_not_mutated() {
        let sc = Scenario::demo();
        let copy = sc.clone();
        run_scenario(&sc).unwrap();
        assert_eq!(sc, copy);
    }
}
