//! Scenario files.

use crate::closed_form::SignMode;
use crate::lambert_w::Branch;
use crate::model::{Body, Convention, PolarState, SystemState};
use crate::oracle::StepControl;
use crate::trajectory::Mode;
use crate::validity::{Limits, DEFAULT_ANGULAR_RATE_THRESHOLD};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub mass: f64,
    pub r: f64,
    pub theta: f64,
    pub r_dot: f64,
    pub theta_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mode: Mode,
    pub sign_mode: SignMode,
    pub branch: Branch,
    pub convention: Convention,
    /// Duration past `t0`.
    pub horizon: f64,
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub quad_tol: f64,
    pub angular_rate_threshold: f64,
    pub strict: bool,
    pub allow_zero_mass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::PaperClosedForm,
            sign_mode: SignMode::Auto,
            branch: Branch::Lower,
            convention: Convention::Vector,
            horizon: 10.0,
            samples: 101,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            quad_tol: 1e-10,
            angular_rate_threshold: DEFAULT_ANGULAR_RATE_THRESHOLD,
            strict: false,
            allow_zero_mass: false,
            r_max: None,
            max_steps: None,
        }
    }
}

impl SolverConfig {
    pub fn step_control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps.unwrap_or(StepControl::default().max_steps),
        }
    }

    pub fn limits(&self) -> Limits {
        Limits { angular_rate_threshold: self.angular_rate_threshold, r_max: self.r_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub g_const: f64,
    #[serde(default)]
    pub t0: f64,
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Input(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::Input(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        positive("g_const", self.g_const)?;
        if !self.t0.is_finite() {
            return Err(HarnessError::Input(format!("t0 must be finite, got {}", self.t0)));
        }
        if self.bodies.len() != 3 {
            return Err(HarnessError::Input(format!("exactly three bodies required, got {}", self.bodies.len())));
        }
        let s = &self.solver;
        positive("horizon", s.horizon)?;
        positive("rel_tol", s.rel_tol)?;
        positive("abs_tol", s.abs_tol)?;
        positive("quad_tol", s.quad_tol)?;
        positive("angular_rate_threshold", s.angular_rate_threshold)?;
        if let Some(r) = s.r_max {
            positive("r_max", r)?;
        }
        if s.samples < 2 {
            return Err(HarnessError::Input(format!("samples must be at least 2, got {}", s.samples)));
        }
        if s.max_steps == Some(0) {
            return Err(HarnessError::Input("max_steps must be positive".into()));
        }
        self.system().validate(s.allow_zero_mass).map_err(|e| HarnessError::Input(e.to_string()))
    }

    /// Initial state as given (not yet shifted to the COM frame).
    pub fn system(&self) -> SystemState {
        let body = |b: &BodySpec| Body { mass: b.mass, state: PolarState::new(b.r, b.theta, b.r_dot, b.theta_dot) };
        let mut bodies = [Body { mass: 0.0, state: PolarState::default() }; 3];
        for (slot, b) in bodies.iter_mut().zip(&self.bodies) {
            *slot = body(b);
        }
        SystemState { g_const: self.g_const, bodies, t: self.t0 }
    }

    /// Three equal unit masses at radius 20/3 on a symmetric triangle, each
    /// moving outward at 4/3 with a slow spin. Every surrogate then starts at
    /// `r_a0 = 10`, `r_a0' = 2` with `G = 1`, so `A = 6` and `B = 3.4`.
    pub fn demo() -> Self {
        let bodies = (0..3)
            .map(|i| BodySpec {
                mass: 1.0,
                r: 20.0 / 3.0,
                theta: 2.0 * PI * i as f64 / 3.0,
                r_dot: 4.0 / 3.0,
                theta_dot: 1e-3,
            })
            .collect();
        Scenario { g_const: 1.0, t0: 0.0, bodies, solver: SolverConfig::default() }
    }
}
