//! Numerical ground truth: adaptive integration of the full planar
//! three-body problem under Newtonian gravity or the unit-vector-difference
//! force law, and of the one-dimensional surrogate systems.

pub mod dopri;

use crate::closed_form::{ClosedFormError, SemiAnalyticState, SurrogateParams};
use crate::model::{self, ModelError, PolarState, SurrogateInitials, SystemState, Vec2};
use crate::trajectory::{uniform_times, Mode, Trajectory};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dopri::StepControl;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("bodies {i} and {j} collide (zero separation)")]
    CollisionSingularity { i: usize, j: usize },
    #[error("bodies {i} and {j} share a polar angle; the unit-vector force direction is undefined")]
    CollinearSingularity { i: usize, j: usize },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

/// Which force law drives the three-body integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    /// `G m_j (pos_j - pos_i) / |pos_j - pos_i|^3`.
    Newton,
    /// Inverse-square magnitude along `(e_j - e_i) / |e_j - e_i|`, where `e`
    /// are the radial unit vectors about the origin.
    Paper,
}

impl Field {
    pub fn mode(self) -> Mode {
        match self {
            Field::Newton => Mode::OracleNewton,
            Field::Paper => Mode::OraclePaper,
        }
    }
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000 }
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn accel_cartesian(field: Field, g: f64, m: &[f64; 3], pos: &[Vec2; 3]) -> Result<[Vec2; 3], OracleError> {
    let mut acc = [Vec2::ZERO; 3];
    let units = match field {
        Field::Newton => None,
        Field::Paper => {
            let mut u = [Vec2::ZERO; 3];
            for (i, p) in pos.iter().enumerate() {
                let n = p.norm();
                if n == 0.0 {
                    return Err(ModelError::DegenerateRadius { body: i + 1 }.into());
                }
                u[i] = (1.0 / n) * *p;
            }
            Some(u)
        }
    };
    for (i, j) in PAIRS {
        let d = pos[j] - pos[i];
        let dist_sq = d.norm_sq();
        if dist_sq == 0.0 {
            return Err(OracleError::CollisionSingularity { i: i + 1, j: j + 1 });
        }
        // direction from i toward j
        let dir = match &units {
            None => (1.0 / dist_sq.sqrt()) * d,
            Some(u) => {
                let du = u[j] - u[i];
                let n = du.norm();
                if n == 0.0 {
                    return Err(OracleError::CollinearSingularity { i: i + 1, j: j + 1 });
                }
                (1.0 / n) * du
            }
        };
        let s = g / dist_sq;
        acc[i] = acc[i] + (s * m[j]) * dir;
        acc[j] = acc[j] - (s * m[i]) * dir;
    }
    Ok(acc)
}

fn positions(sys: &SystemState) -> [Vec2; 3] {
    sys.cartesian().map(|(p, _)| p)
}

pub fn accel_newton(sys: &SystemState) -> Result<[Vec2; 3], OracleError> {
    accel_cartesian(Field::Newton, sys.g_const, &sys.masses(), &positions(sys))
}

pub fn accel_paper(sys: &SystemState) -> Result<[Vec2; 3], OracleError> {
    accel_cartesian(Field::Paper, sys.g_const, &sys.masses(), &positions(sys))
}

fn pack(sys: &SystemState) -> [f64; 12] {
    let mut y = [0.0; 12];
    for (i, (p, v)) in sys.cartesian().iter().enumerate() {
        y[2 * i] = p.x;
        y[2 * i + 1] = p.y;
        y[6 + 2 * i] = v.x;
        y[6 + 2 * i + 1] = v.y;
    }
    y
}

fn unpack(y: &[f64; 12]) -> ([Vec2; 3], [Vec2; 3]) {
    let p = [0, 1, 2].map(|i| Vec2::new(y[2 * i], y[2 * i + 1]));
    let v = [0, 1, 2].map(|i| Vec2::new(y[6 + 2 * i], y[6 + 2 * i + 1]));
    (p, v)
}

/// Integrates the three-body system and samples it at `times` (ascending,
/// starting at or after `sys.t`). Angles in the output are unwrapped.
pub fn integrate_at(field: Field, sys: &SystemState, times: &[f64], ctl: &StepControl) -> Result<Trajectory, OracleError> {
    let g = sys.g_const;
    let m = sys.masses();
    let rhs = |_t: f64, y: &[f64; 12]| -> Result<[f64; 12], OracleError> {
        let (p, v) = unpack(y);
        let a = accel_cartesian(field, g, &m, &p)?;
        let mut d = [0.0; 12];
        for i in 0..3 {
            d[2 * i] = v[i].x;
            d[2 * i + 1] = v[i].y;
            d[6 + 2 * i] = a[i].x;
            d[6 + 2 * i + 1] = a[i].y;
        }
        Ok(d)
    };
    let (ys, stats) = dopri::integrate(rhs, sys.t, pack(sys), times, ctl)?;
    let mut traj = Trajectory::new(field.mode(), vec![1, 2, 3]);
    let mut prev: Vec<f64> = sys.bodies.iter().map(|b| b.state.theta).collect();
    for (&t, y) in times.iter().zip(&ys) {
        let (p, v) = unpack(y);
        if t == sys.t {
            // the start needs no round trip through Cartesian coordinates
            traj.push(t, sys.bodies.iter().map(|b| b.state).collect());
            continue;
        }
        let mut row = Vec::with_capacity(3);
        for i in 0..3 {
            let s = model::cartesian_to_polar_near(p[i], v[i], prev[i]).map_err(|_| ModelError::DegenerateRadius { body: i + 1 })?;
            prev[i] = s.theta;
            row.push(s);
        }
        traj.push(t, row);
    }
    traj.stats = Some(stats);
    Ok(traj)
}

/// [`integrate_at`] on `samples` uniform times over `[sys.t, t_end]`.
pub fn integrate(field: Field, sys: &SystemState, t_end: f64, samples: usize, ctl: &StepControl) -> Result<Trajectory, OracleError> {
    if !(t_end > sys.t) {
        return Err(OracleError::InvalidInput(format!("t_end = {t_end} must exceed t0 = {}", sys.t)));
    }
    integrate_at(field, sys, &uniform_times(sys.t, t_end, samples), ctl)
}

/// Full surrogate `r'' = r theta'^2 - G M / r^2` with conserved `r^2 theta'`,
/// integrated as the planar Kepler problem of the separation vector.
/// `body` is the 1-based label the trajectory is filed under.
pub fn integrate_surrogate_full(
    g: f64,
    m_total: f64,
    initials: &SurrogateInitials,
    body: usize,
    t0: f64,
    times: &[f64],
    ctl: &StepControl,
) -> Result<Trajectory, OracleError> {
    check_surrogate_input(initials)?;
    let gm = g * m_total;
    let (p0, v0) = model::polar_to_cartesian(&PolarState::new(initials.r_a0, initials.theta0, initials.rdot_a0, initials.thetadot0));
    let rhs = |t: f64, y: &[f64; 4]| -> Result<[f64; 4], OracleError> {
        let r2 = y[0] * y[0] + y[1] * y[1];
        if r2 == 0.0 {
            return Err(OracleError::StepFailure { t, h: 0.0 });
        }
        let s = -gm / (r2 * r2.sqrt());
        Ok([y[2], y[3], s * y[0], s * y[1]])
    };
    let (ys, stats) = dopri::integrate(rhs, t0, [p0.x, p0.y, v0.x, v0.y], times, ctl)?;
    let mut traj = Trajectory::new(Mode::SurrogateFull, vec![body]);
    let mut prev = initials.theta0;
    for (&t, y) in times.iter().zip(&ys) {
        let s = if t == t0 {
            PolarState::new(initials.r_a0, initials.theta0, initials.rdot_a0, initials.thetadot0)
        } else {
            model::cartesian_to_polar_near(Vec2::new(y[0], y[1]), Vec2::new(y[2], y[3]), prev)?
        };
        prev = s.theta;
        traj.push(t, vec![s]);
    }
    traj.stats = Some(stats);
    Ok(traj)
}

/// Radial surrogate `r'' = -G M / r^2` (centrifugal term dropped), with the
/// angle carried by `theta' = r_a0^2 theta'_0 / r^2`.
pub fn integrate_surrogate_radial(
    g: f64,
    m_total: f64,
    initials: &SurrogateInitials,
    body: usize,
    t0: f64,
    times: &[f64],
    ctl: &StepControl,
) -> Result<Trajectory, OracleError> {
    check_surrogate_input(initials)?;
    let gm = g * m_total;
    let l = initials.r_a0 * initials.r_a0 * initials.thetadot0;
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3], OracleError> {
        if !(y[0] > 0.0) {
            return Err(OracleError::StepFailure { t, h: 0.0 });
        }
        let inv = 1.0 / (y[0] * y[0]);
        Ok([y[1], -gm * inv, l * inv])
    };
    let y0 = [initials.r_a0, initials.rdot_a0, initials.theta0];
    let (ys, stats) = dopri::integrate(rhs, t0, y0, times, ctl)?;
    let mut traj = Trajectory::new(Mode::SurrogateRadial, vec![body]);
    for (&t, y) in times.iter().zip(&ys) {
        traj.push(t, vec![PolarState::new(y[0], y[2], y[1], l / (y[0] * y[0]))]);
    }
    traj.stats = Some(stats);
    Ok(traj)
}

fn check_surrogate_input(s: &SurrogateInitials) -> Result<(), OracleError> {
    if !(s.r_a0 > 0.0 && s.r_a0.is_finite()) {
        return Err(OracleError::InvalidInput(format!("r_a0 must be positive, got {}", s.r_a0)));
    }
    Ok(())
}

/// Body motion driven by the closed-form surrogate: `r'' = -G mu / r_a(t)^2`
/// and `theta' = r_i0^2 theta'_i0 / r^2`, integrated as an ODE.
pub fn integrate_driven(p: &SurrogateParams, times: &[f64], ctl: &StepControl) -> Result<Vec<SemiAnalyticState>, OracleError> {
    let l = p.r_i0 * p.r_i0 * p.thetadot_i0;
    let gmu = p.g_const * p.mu;
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3], OracleError> {
        let ra = p.r_a_closed(t)?;
        Ok([y[1], -gmu / (ra * ra), l / (y[0] * y[0])])
    };
    let (ys, _) = dopri::integrate(rhs, p.t0, [p.r_i0, p.rdot_i0, p.theta_i0], times, ctl)?;
    Ok(times
        .iter()
        .zip(&ys)
        .map(|(&t, y)| SemiAnalyticState { t, r: y[0], r_dot: y[1], theta: y[2], theta_dot: l / (y[0] * y[0]) })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub angular_momentum: f64,
    pub linear_momentum: Vec2,
    /// Mass-weighted mean position.
    pub com: Vec2,
}

pub fn conserved(sys: &SystemState) -> Result<ConservedQuantities, OracleError> {
    let cart = sys.cartesian();
    let m = sys.masses();
    let mut kinetic = 0.0;
    let mut angular_momentum = 0.0;
    let mut linear_momentum = Vec2::ZERO;
    let mut moment = Vec2::ZERO;
    for (i, (p, v)) in cart.iter().enumerate() {
        kinetic += 0.5 * m[i] * v.norm_sq();
        angular_momentum += m[i] * p.cross(*v);
        linear_momentum = linear_momentum + m[i] * *v;
        moment = moment + m[i] * *p;
    }
    let mut potential = 0.0;
    for (i, j) in PAIRS {
        let d = (cart[j].0 - cart[i].0).norm();
        if d == 0.0 {
            return Err(OracleError::CollisionSingularity { i: i + 1, j: j + 1 });
        }
        potential -= sys.g_const * m[i] * m[j] / d;
    }
    Ok(ConservedQuantities {
        energy: kinetic + potential,
        angular_momentum,
        linear_momentum,
        com: (1.0 / sys.total_mass()) * moment,
    })
}

/// System state at sample `n` of a three-body trajectory, with masses and
/// `G` taken from `template`.
pub fn state_at(traj: &Trajectory, n: usize, template: &SystemState) -> Option<SystemState> {
    if traj.bodies != [1, 2, 3] || n >= traj.len() {
        return None;
    }
    let mut sys = template.clone();
    sys.t = traj.times[n];
    for (b, s) in sys.bodies.iter_mut().zip(&traj.states[n]) {
        b.state = *s;
    }
    Some(sys)
}
