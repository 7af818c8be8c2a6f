//! Sampled trajectories shared by every solver.

use crate::model::{polar_to_cartesian, PolarState, Vec2};
use serde::{Deserialize, Serialize};

/// Which solver produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PaperClosedForm,
    SemiAnalytic,
    OracleNewton,
    OraclePaper,
    SurrogateFull,
    SurrogateRadial,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::PaperClosedForm,
        Mode::SemiAnalytic,
        Mode::OracleNewton,
        Mode::OraclePaper,
        Mode::SurrogateFull,
        Mode::SurrogateRadial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PaperClosedForm => "paper_closed_form",
            Mode::SemiAnalytic => "semi_analytic",
            Mode::OracleNewton => "oracle_newton",
            Mode::OraclePaper => "oracle_paper",
            Mode::SurrogateFull => "surrogate_full",
            Mode::SurrogateRadial => "surrogate_radial",
        }
    }

    /// Closed-form family (the `solve` subcommand).
    pub fn is_closed_form(self) -> bool {
        matches!(self, Mode::PaperClosedForm | Mode::SemiAnalytic)
    }

    /// Surrogate runs track the separation coordinate `r_a`, not the body.
    pub fn is_separation(self) -> bool {
        matches!(self, Mode::SurrogateFull | Mode::SurrogateRadial)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

/// Time-ordered samples for one or more bodies. `states[n][k]` is body
/// `bodies[k]` (1-based label) at `times[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub bodies: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<PolarState>>,
    pub stats: Option<IntegratorStats>,
}

impl Trajectory {
    pub fn new(mode: Mode, bodies: Vec<usize>) -> Self {
        Trajectory { mode, bodies, times: Vec::new(), states: Vec::new(), stats: None }
    }

    pub fn push(&mut self, t: f64, states: Vec<PolarState>) {
        debug_assert_eq!(states.len(), self.bodies.len());
        self.times.push(t);
        self.states.push(states);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Column of `body` (1-based label), if tracked.
    pub fn column(&self, body: usize) -> Option<usize> {
        self.bodies.iter().position(|&b| b == body)
    }

    pub fn state(&self, n: usize, body: usize) -> Option<&PolarState> {
        self.column(body).map(|k| &self.states[n][k])
    }

    /// Cartesian `(position, velocity)` of `body` at sample `n`.
    pub fn cartesian(&self, n: usize, body: usize) -> Option<(Vec2, Vec2)> {
        self.state(n, body).map(polar_to_cartesian)
    }

    pub fn t_start(&self) -> f64 {
        self.times.first().copied().unwrap_or(f64::NAN)
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(f64::NAN)
    }

    /// Times strictly increasing and every state finite.
    pub fn is_well_formed(&self) -> bool {
        self.times.len() == self.states.len()
            && self.times.windows(2).all(|w| w[0] < w[1])
            && self.states.iter().all(|row| row.len() == self.bodies.len() && row.iter().all(PolarState::is_finite))
    }
}

/// `samples` uniformly spaced times over `[t0, t1]`, ending exactly at `t1`.
pub fn uniform_times(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|i| if i + 1 == n { t1 } else { t0 + (t1 - t0) * (i as f64) / ((n - 1) as f64) })
        .collect()
}
