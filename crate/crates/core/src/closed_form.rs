//! Lambert-W closed forms for the two-body surrogate of each body.
//!
//! Each body is paired with a point mass equal to its two companions'
//! total mass, placed at their barycenter. Dropping the centrifugal term and
//! truncating the binomial expansion of the energy integral gives the
//! implicit relation `r_a - k ln r_a = f(t)`, which inverts exactly through
//! the lower Lambert branch. The body radius and angle then follow from the
//! printed double-integration formulas (`paper_closed_form`) or from direct
//! quadrature of `r'' = -G mu / r_a(t)^2` with conserved `r^2 theta'`
//! (`semi_analytic`).

use crate::lambert_w::{self, Branch, LambertError};
use crate::model::{self, Convention, ModelError, PolarState, SurrogateInitials, SystemState};
use crate::quadrature::{self, QuadratureError};
use crate::trajectory::{uniform_times, Mode, Trajectory};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("body {body}: surrogate is not escaping (B = {b_const} <= 0)")]
    NonEscaping { body: usize, b_const: f64 },
    #[error("body {body}: zero surrogate radial rate selects no sign; also non-escaping (B = {b_const} <= 0)")]
    ZeroRadialRate { body: usize, b_const: f64 },
    #[error("body {body}: r_a0 = {r_a0} is already inside the binomial margin 2k = {two_k}")]
    AlreadyInvalid { body: usize, r_a0: f64, two_k: f64 },
    #[error("body {body}: semi-analytic radius reaches zero before t = {t}")]
    BodyCollapse { body: usize, t: f64 },
    #[error("Lambert argument {z} at t = {t} is outside the {branch} branch domain")]
    BranchDomain { t: f64, z: f64, branch: &'static str },
    #[error(transparent)]
    Lambert(#[from] LambertError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl ClosedFormError {
    /// Failure of a validity gate rather than of the numerics.
    pub fn is_validity(&self) -> bool {
        matches!(
            self,
            ClosedFormError::NonEscaping { .. } | ClosedFormError::ZeroRadialRate { .. } | ClosedFormError::AlreadyInvalid { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// Sign of the initial surrogate range rate.
    #[default]
    Auto,
    Plus,
    Minus,
}

/// Every derived constant of one body's surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    /// 1-based body label.
    pub body_index: usize,
    pub g_const: f64,
    /// Companion mass sum.
    pub mu: f64,
    pub m_total: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub k_const: f64,
    pub sign: i8,
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    pub c5: f64,
    /// `ln(-c4)`; carries `c4` when it underflows.
    pub ln_neg_c4: f64,
    pub k1: f64,
    pub k_lin: f64,
    pub k_w: f64,
    pub theta_coeff: f64,
    pub r_a0: f64,
    pub rdot_a0: f64,
    pub r_i0: f64,
    pub rdot_i0: f64,
    pub theta_i0: f64,
    pub thetadot_i0: f64,
    pub t0: f64,
    pub branch: Branch,
}

/// Derives all constants without any validity gate. With `B <= 0` several
/// fields come out NaN; [`crate::validity::check_surrogate`] still works on
/// the result.
#[allow(clippy::too_many_arguments)]
pub fn derive_params(
    g: f64,
    masses: [f64; 3],
    body: usize,
    surrogate: &SurrogateInitials,
    body_state: &PolarState,
    sign: i8,
    branch: Branch,
    t0: f64,
) -> SurrogateParams {
    let (j, k) = model::companions(body);
    let mu = masses[j] + masses[k];
    let m_total = masses.iter().sum::<f64>();
    let r_a0 = surrogate.r_a0;
    let rdot_a0 = surrogate.rdot_a0;
    let a_const = 2.0 * g * m_total;
    let b_const = rdot_a0 * rdot_a0 - a_const / r_a0;
    let k_const = a_const / (2.0 * b_const);
    let s = f64::from(sign);
    let sqrt_b = b_const.sqrt();
    let c2 = s * 2.0 * b_const * sqrt_b / a_const;
    let c5 = -c2;
    // c1 = -(1/k) exp(-(r_a0 - k ln r_a0)/k)
    let ln_neg_c1 = -k_const.ln() - (r_a0 - k_const * r_a0.ln()) / k_const;
    let ln_neg_c4 = ln_neg_c1 + c2 * t0;
    let c1 = -ln_neg_c1.exp();
    let c4 = -ln_neg_c4.exp();
    let k1 = -4.0 * b_const * b_const * g * mu / (a_const * a_const);
    let k_w = k1 / (2.0 * c5);
    let mut p = SurrogateParams {
        body_index: body + 1,
        g_const: g,
        mu,
        m_total,
        a_const,
        b_const,
        k_const,
        sign,
        c1,
        c2,
        c4,
        c5,
        ln_neg_c4,
        k1,
        k_lin: f64::NAN,
        k_w,
        theta_coeff: 4.0 * r_a0 * r_a0 * body_state.theta_dot * b_const * b_const / (c5 * a_const * a_const),
        r_a0,
        rdot_a0,
        r_i0: body_state.r,
        rdot_i0: body_state.r_dot,
        theta_i0: body_state.theta,
        thetadot_i0: body_state.theta_dot,
        t0,
        branch,
    };
    let w_t0 = p.lambert(t0).unwrap_or(f64::NAN);
    p.k_lin = p.rdot_i0 - k_w * (1.0 + 2.0 * w_t0);
    p
}

/// Builds the surrogate constants for `body` (0-based), refusing
/// non-escaping surrogates.
#[allow(clippy::too_many_arguments)]
pub fn build_params(
    g: f64,
    masses: [f64; 3],
    body: usize,
    surrogate: &SurrogateInitials,
    body_state: &PolarState,
    sign_mode: SignMode,
    branch: Branch,
    t0: f64,
) -> Result<SurrogateParams, ClosedFormError> {
    if !(surrogate.r_a0 > 0.0 && surrogate.r_a0.is_finite()) {
        return Err(ModelError::DegenerateRadius { body: body + 1 }.into());
    }
    if !(g > 0.0) || masses.iter().any(|m| !(*m >= 0.0)) || masses.iter().sum::<f64>() <= 0.0 {
        return Err(ClosedFormError::InvalidInput(format!("g = {g}, masses = {masses:?}")));
    }
    let sign = match sign_mode {
        SignMode::Plus => 1,
        SignMode::Minus => -1,
        SignMode::Auto if surrogate.rdot_a0 > 0.0 => 1,
        SignMode::Auto if surrogate.rdot_a0 < 0.0 => -1,
        SignMode::Auto => {
            let b_const = -2.0 * g * masses.iter().sum::<f64>() / surrogate.r_a0;
            return Err(ClosedFormError::ZeroRadialRate { body: body + 1, b_const });
        }
    };
    let p = derive_params(g, masses, body, surrogate, body_state, sign, branch, t0);
    if !(p.b_const > 0.0) {
        return Err(ClosedFormError::NonEscaping { body: body + 1, b_const: p.b_const });
    }
    Ok(p)
}

impl SurrogateParams {
    fn lambert(&self, t: f64) -> Result<f64, ClosedFormError> {
        let log_neg_z = self.log_neg_w_arg(t);
        let out = match self.branch {
            Branch::Lower => lambert_w::wm1_from_log(log_neg_z),
            Branch::Principal => lambert_w::w0(-log_neg_z.exp()),
        };
        out.map_err(|e| match e {
            LambertError::Domain { .. } => ClosedFormError::BranchDomain {
                t,
                z: self.w_arg(t),
                branch: self.branch.as_str(),
            },
            other => other.into(),
        })
    }

    /// `sign sqrt(B) (t - t0) + r_a0 - k ln r_a0`.
    pub fn f_of_t(&self, t: f64) -> f64 {
        f64::from(self.sign) * self.b_const.sqrt() * (t - self.t0) + self.r_a0 - self.k_const * self.r_a0.ln()
    }

    /// Lambert argument `c4 e^{c5 t}`.
    pub fn w_arg(&self, t: f64) -> f64 {
        -self.log_neg_w_arg(t).exp()
    }

    /// `ln(-w_arg(t))`, finite even where `w_arg` underflows.
    pub fn log_neg_w_arg(&self, t: f64) -> f64 {
        self.ln_neg_c4 + self.c5 * t
    }

    /// Lambert value `W(c4 e^{c5 t})` on the configured branch.
    pub fn lambert_at(&self, t: f64) -> Result<f64, ClosedFormError> {
        self.lambert(t)
    }

    /// Surrogate separation `r_a(t) = -k W(c4 e^{c5 t})`.
    pub fn r_a_closed(&self, t: f64) -> Result<f64, ClosedFormError> {
        Ok(-self.k_const * self.lambert(t)?)
    }

    /// `r_a - k ln r_a - f(t)`; zero up to rounding on the lower branch.
    pub fn implicit_residual(&self, t: f64) -> Result<f64, ClosedFormError> {
        let r = self.r_a_closed(t)?;
        Ok(r - self.k_const * r.ln() - self.f_of_t(t))
    }

    /// Latest time at which `r_a_closed > 2k` still holds. `None` means
    /// unbounded (outward motion).
    pub fn validity_horizon(&self) -> Result<Option<f64>, ClosedFormError> {
        let two_k = 2.0 * self.k_const;
        if !(self.r_a0 > two_k) {
            return Err(ClosedFormError::AlreadyInvalid { body: self.body_index, r_a0: self.r_a0, two_k });
        }
        if self.sign > 0 {
            return Ok(None);
        }
        // W = -2  <=>  w_arg = -2 e^{-2}
        let ln_target = std::f64::consts::LN_2 - 2.0;
        Ok(Some((ln_target - self.ln_neg_c4) / self.c5))
    }

    /// Body radius from the printed double-integration formula.
    pub fn radius_closed(&self, t: f64) -> Result<f64, ClosedFormError> {
        let w_t = self.lambert(t)?;
        let w_0 = self.lambert(self.t0)?;
        let bracket = |w: f64| 0.5 * w.powi(4) + w.powi(3) + 0.5 * w * w;
        let linear = self.k_lin * t - self.k_lin * self.t0;
        let lambert = (self.k_w / self.c5) * bracket(w_t) - (self.k_w / self.c5) * bracket(w_0);
        Ok(linear + lambert + self.r_i0)
    }

    /// Time derivative of [`Self::radius_closed`].
    pub fn radius_rate_closed(&self, t: f64) -> Result<f64, ClosedFormError> {
        let w = self.lambert(t)?;
        Ok(self.k_lin + self.k_w * w * w * (2.0 * w + 1.0))
    }

    /// Body angle from the printed angular formula.
    pub fn theta_closed(&self, t: f64) -> Result<f64, ClosedFormError> {
        let w_t = self.lambert(t)?;
        let w_0 = self.lambert(self.t0)?;
        let g = |w: f64| (1.0 + 2.0 * w) * w * w;
        Ok(self.theta_i0 + (self.theta_coeff * g(w_0) - self.theta_coeff * g(w_t)))
    }

    /// Time derivative of [`Self::theta_closed`].
    pub fn theta_rate_closed(&self, t: f64) -> Result<f64, ClosedFormError> {
        let w = self.lambert(t)?;
        Ok(-self.theta_coeff * self.c5 * 2.0 * w * w * (1.0 + 3.0 * w) / (1.0 + w))
    }

    /// Companion-driven acceleration magnitude `G mu / r_a(t)^2`.
    fn forcing(&self, t: f64) -> Result<f64, ClosedFormError> {
        let ra = self.r_a_closed(t)?;
        Ok(self.g_const * self.mu / (ra * ra))
    }

    /// Initial body state of the semi-analytic path.
    pub fn initial_semi_state(&self) -> SemiAnalyticState {
        SemiAnalyticState {
            t: self.t0,
            r: self.r_i0,
            r_dot: self.rdot_i0,
            theta: self.theta_i0,
            theta_dot: self.thetadot_i0,
        }
    }

    /// Advances the semi-analytic body state from `s.t` to `t`.
    ///
    /// `r' = r'(a) - int_a^t F`, `r = r(a) + r'(a)(t - a) - int_a^t (t - s) F(s) ds`,
    /// `theta = theta(a) + L int_a^t r(s)^-2 ds` with `L = r_i0^2 theta'_i0`.
    pub fn advance_semi(&self, s: &SemiAnalyticState, t: f64, quad_tol: f64) -> Result<SemiAnalyticState, ClosedFormError> {
        if !(quad_tol > 0.0) {
            return Err(ClosedFormError::InvalidInput(format!("quad_tol must be positive, got {quad_tol}")));
        }
        let a = s.t;
        if t == a {
            return Ok(*s);
        }
        let inner_tol = 0.1 * quad_tol;
        let radius_at = |tau: f64, tol: f64| -> Result<f64, ClosedFormError> {
            let drift = quadrature::integrate(|u| Ok::<_, ClosedFormError>((tau - u) * self.forcing(u)?), a, tau, tol, 0.0)?;
            Ok(s.r + s.r_dot * (tau - a) - drift)
        };
        let impulse = quadrature::integrate(|u| self.forcing(u), a, t, quad_tol, 0.0)?;
        let r_dot = s.r_dot - impulse;
        let r = radius_at(t, quad_tol)?;
        // the forcing is positive, so r is concave and cannot come back
        if !(r > 0.0) {
            return Err(ClosedFormError::BodyCollapse { body: self.body_index, t });
        }
        let l = self.r_i0 * self.r_i0 * self.thetadot_i0;
        let theta = if l == 0.0 {
            s.theta
        } else {
            let sweep = quadrature::integrate(
                |tau| {
                    let rho = radius_at(tau, inner_tol)?;
                    Ok::<_, ClosedFormError>(1.0 / (rho * rho))
                },
                a,
                t,
                quad_tol,
                0.0,
            )?;
            s.theta + l * sweep
        };
        let theta_dot = if l == 0.0 { 0.0 } else { l / (r * r) };
        Ok(SemiAnalyticState { t, r, r_dot, theta, theta_dot })
    }

    /// Walks the semi-analytic path through `times` (ascending, starting at
    /// or after `t0`), subdividing long gaps.
    pub fn semi_analytic_path(&self, times: &[f64], quad_tol: f64) -> Result<Vec<SemiAnalyticState>, ClosedFormError> {
        match self.semi_analytic_prefix(times, quad_tol) {
            (out, None) => Ok(out),
            (_, Some(e)) => Err(e),
        }
    }

    /// Like [`Self::semi_analytic_path`], but keeps the states reached before
    /// a failure and returns the failure alongside them.
    pub fn semi_analytic_prefix(&self, times: &[f64], quad_tol: f64) -> (Vec<SemiAnalyticState>, Option<ClosedFormError>) {
        let max_gap = self.semi_segment();
        let mut s = self.initial_semi_state();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let gap = t - s.t;
            let pieces = (gap.abs() / max_gap).ceil().max(1.0) as usize;
            let start = s.t;
            for i in 1..=pieces {
                let target = if i == pieces { t } else { start + gap * i as f64 / pieces as f64 };
                match self.advance_semi(&s, target, quad_tol) {
                    Ok(next) => s = next,
                    Err(e) => return (out, Some(e)),
                }
            }
            out.push(s);
        }
        (out, None)
    }

    /// Segment length for the semi-analytic walk: the e-folding time of the
    /// Lambert argument.
    fn semi_segment(&self) -> f64 {
        let c = self.c5.abs();
        if c.is_finite() && c > 0.0 {
            (1.0 / c).min(10.0)
        } else {
            1.0
        }
    }

    /// Body `(r, r')` at `t` by direct quadrature of the companion forcing.
    pub fn radius_semi_analytic(&self, t: f64, quad_tol: f64) -> Result<(f64, f64), ClosedFormError> {
        let s = self.advance_semi(&self.initial_semi_state(), t, quad_tol)?;
        Ok((s.r, s.r_dot))
    }

    /// Body angle at `t` from the conserved `r^2 theta'`.
    pub fn theta_semi_analytic(&self, t: f64, quad_tol: f64) -> Result<f64, ClosedFormError> {
        self.semi_analytic_path(&[t], quad_tol).map(|v| v[0].theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiAnalyticState {
    pub t: f64,
    pub r: f64,
    pub r_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl SemiAnalyticState {
    pub fn polar(&self) -> PolarState {
        PolarState::new(self.r, self.theta, self.r_dot, self.theta_dot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub sign_mode: SignMode,
    pub branch: Branch,
    pub convention: Convention,
    pub mode: Mode,
    /// Duration past `t0` to sample.
    pub horizon: f64,
    pub samples: usize,
    pub quad_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            sign_mode: SignMode::Auto,
            branch: Branch::Lower,
            convention: Convention::Vector,
            mode: Mode::PaperClosedForm,
            horizon: 10.0,
            samples: 101,
            quad_tol: 1e-10,
        }
    }
}

/// One body's closed-form result.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySolution {
    pub params: SurrogateParams,
    /// End of the requested interval after clamping to the validity horizon.
    pub t_end: f64,
    pub trajectory: Trajectory,
    /// Evaluation failure that cut the trajectory short of `t_end`.
    pub stopped: Option<ClosedFormError>,
}

/// Params for `body` (0-based) straight from a system state.
pub fn params_for_body(sys: &SystemState, body: usize, opts: &SolveOptions) -> Result<SurrogateParams, ClosedFormError> {
    let surrogate = model::surrogate_initials(sys, body, opts.convention)?;
    build_params(
        sys.g_const,
        sys.masses(),
        body,
        &surrogate,
        &sys.bodies[body].state,
        opts.sign_mode,
        opts.branch,
        sys.t,
    )
}

fn solve_body(sys: &SystemState, body: usize, opts: &SolveOptions) -> Result<BodySolution, ClosedFormError> {
    let params = params_for_body(sys, body, opts)?;
    let t0 = sys.t;
    let t_end = match params.validity_horizon()? {
        Some(h) => (t0 + opts.horizon).min(h),
        None => t0 + opts.horizon,
    };
    let times = uniform_times(t0, t_end, opts.samples);
    let mut trajectory = Trajectory::new(opts.mode, vec![body + 1]);
    let mut stopped = None;
    match opts.mode {
        Mode::PaperClosedForm => {
            let state = |t: f64| -> Result<PolarState, ClosedFormError> {
                Ok(PolarState::new(
                    params.radius_closed(t)?,
                    params.theta_closed(t)?,
                    params.radius_rate_closed(t)?,
                    params.theta_rate_closed(t)?,
                ))
            };
            for &t in &times {
                match state(t) {
                    Ok(s) => trajectory.push(t, vec![s]),
                    Err(e) => {
                        stopped = Some(e);
                        break;
                    }
                }
            }
        }
        Mode::SemiAnalytic => {
            let (mut path, err) = params.semi_analytic_prefix(&times, opts.quad_tol);
            stopped = err;
            if let Some(first) = path.first_mut() {
                // the walk is exact at t0; keep the initial sample verbatim
                *first = params.initial_semi_state();
            }
            for s in path {
                trajectory.push(s.t, vec![s.polar()]);
            }
        }
        other => return Err(ClosedFormError::InvalidInput(format!("mode {other} is not a closed-form mode"))),
    }
    if trajectory.is_empty() {
        return Err(stopped.unwrap_or_else(|| ClosedFormError::InvalidInput("no samples".into())));
    }
    Ok(BodySolution { params, t_end, trajectory, stopped })
}

/// Closed-form solution of all three bodies. Each body succeeds or fails on
/// its own.
pub fn solve_system(sys: &SystemState, opts: &SolveOptions) -> Result<[Result<BodySolution, ClosedFormError>; 3], ClosedFormError> {
    if opts.samples < 2 {
        return Err(ClosedFormError::InvalidInput("samples must be at least 2".into()));
    }
    if !(opts.horizon > 0.0) {
        return Err(ClosedFormError::InvalidInput("horizon must be positive".into()));
    }
    if !opts.mode.is_closed_form() {
        return Err(ClosedFormError::InvalidInput(format!("mode {} is not a closed-form mode", opts.mode)));
    }
    Ok([0, 1, 2].map(|i| solve_body(sys, i, opts)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden(sign_mode: SignMode, rdot_a0: f64) -> SurrogateParams {
        let surrogate = SurrogateInitials { r_a0: 10.0, rdot_a0, theta0: 0.0, thetadot0: 1e-3 };
        let body = PolarState::new(20.0 / 3.0, 0.0, 4.0 / 3.0, 1e-3);
        build_params(1.0, [1.0; 3], 0, &surrogate, &body, sign_mode, Branch::Lower, 0.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Independent oracle: solve `r - k ln r = f` for `r > k` by bisection.
    fn implicit_root(k: f64, f: f64) -> f64 {
        let g = |r: f64| r - k * r.ln() - f;
        let (mut lo, mut hi) = (k, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Independent lower-branch W by bisection on `w e^w = z` over `[-800, -1]`.
    fn wm1_bisect(z: f64) -> f64 {
        let (mut lo, mut hi) = (-800.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            // w e^w is decreasing on (-inf, -1]
            if mid * mid.exp() > z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn golden_constants() {
        let p = golden(SignMode::Auto, 2.0);
        assert_eq!(p.a_const, 6.0);
        assert!(rel(p.b_const, 3.4) < 1e-15);
        assert!(rel(p.k_const, 6.0 / 6.8) < 1e-15);
        assert!(rel(p.a_const / p.b_const, 1.764_705_882_352_941) < 1e-14);
        assert!(rel(p.c2, 2.089_763_410_319_721) < 1e-14);
        assert_eq!(p.sign, 1);
        assert_eq!(p.c5, -p.c2);
        assert!(rel(p.c1, -1.356_293_043_018_548_2e-4) < 1e-12);
        assert!(rel(p.k1, -2.568_888_888_888_889) < 1e-14);
        assert!(rel(p.k_w, 0.614_636_297_152_859_2) < 1e-13);
        assert!(rel(p.k_lin, 14.650_453_104_978_615) < 1e-13);
        assert!(rel(p.theta_coeff, -0.061_463_629_715_285_92) < 1e-13);
    }

    #[test]
    fn param_invariants() {
        let p = golden(SignMode::Auto, 2.0);
        assert!(rel(p.k_const, p.a_const / (2.0 * p.b_const)) < 1e-14);
        assert!(rel(p.c2, 2.0 * p.b_const * p.b_const.sqrt() / p.a_const) < 1e-14);
        let u = p.r_a0 / p.k_const;
        assert!(rel(p.w_arg(p.t0), -u * (-u).exp()) < 1e-12);
        assert!(rel(p.rdot_a0.abs(), (p.a_const / p.r_a0 + p.b_const).sqrt()) < 1e-12);
    }

    #[test]
    fn non_escaping_and_zero_rate() {
        let s = SurrogateInitials { r_a0: 10.0, rdot_a0: 0.5, theta0: 0.0, thetadot0: 0.0 };
        let body = PolarState::new(5.0, 0.0, 0.5, 0.0);
        let e = build_params(1.0, [1.0; 3], 0, &s, &body, SignMode::Auto, Branch::Lower, 0.0).unwrap_err();
        match e {
            ClosedFormError::NonEscaping { b_const, .. } => assert!((b_const + 0.35).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let s0 = SurrogateInitials { rdot_a0: 0.0, ..s };
        let e = build_params(1.0, [1.0; 3], 0, &s0, &body, SignMode::Auto, Branch::Lower, 0.0).unwrap_err();
        assert!(matches!(e, ClosedFormError::ZeroRadialRate { .. }));
        assert!(e.to_string().contains("non-escaping"));
        let e = build_params(1.0, [1.0; 3], 0, &s0, &body, SignMode::Plus, Branch::Lower, 0.0).unwrap_err();
        assert!(matches!(e, ClosedFormError::NonEscaping { .. }));
    }

    #[test]
    fn f_of_t_examples() {
        let p = golden(SignMode::Auto, 2.0);
        assert_eq!(p.f_of_t(0.0), p.r_a0 - p.k_const * p.r_a0.ln());
        assert!((p.f_of_t(1.0) - p.f_of_t(0.0) - 3.4f64.sqrt()).abs() < 1e-14);
        assert!((p.f_of_t(1.0) - 9.812_216_162_346_184).abs() < 1e-13);
    }

    #[test]
    fn w_arg_examples() {
        let p = golden(SignMode::Auto, 2.0);
        assert!(rel(p.w_arg(0.0), -1.356_293_043_018_548_2e-4) < 1e-12);
        let mut prev = p.w_arg(0.0);
        for i in 1..50 {
            let z = p.w_arg(i as f64 * 0.2);
            assert!(z > prev && z < 0.0);
            prev = z;
        }
    }

    #[test]
    fn r_a_closed_examples() {
        let p = golden(SignMode::Auto, 2.0);
        assert!(rel(p.r_a_closed(0.0).unwrap(), 10.0) < 1e-10);
        let oracle = implicit_root(p.k_const, p.f_of_t(1.0));
        assert!(rel(oracle, 12.005_160_198_110_864) < 1e-12);
        assert!(rel(p.r_a_closed(1.0).unwrap(), oracle) < 1e-12);
        let q = golden(SignMode::Auto, -2.0);
        let h = q.validity_horizon().unwrap().unwrap();
        assert!(rel(q.r_a_closed(h).unwrap(), 2.0 * q.k_const) < 1e-9);
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(golden(SignMode::Auto, 2.0).validity_horizon().unwrap(), None);
        let q = golden(SignMode::Auto, -2.0);
        assert_eq!(q.sign, -1);
        let h = q.validity_horizon().unwrap().unwrap();
        // root-bracketing oracle on r_a_closed - 2k
        let g = |t: f64| q.r_a_closed(t).unwrap() - 2.0 * q.k_const;
        let (mut lo, mut hi) = (0.0, h);
        assert!(g(lo) > 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((h - lo).abs() < 1e-9, "{h} vs {lo}");
        assert!((h - 3.636_168_688_006_011).abs() < 1e-9);
        for i in 0..100 {
            let t = h * i as f64 / 100.0;
            assert!(q.r_a_closed(t).unwrap() > 2.0 * q.k_const);
        }
        let mut edge = q.clone();
        edge.r_a0 = 2.0 * edge.k_const;
        assert!(matches!(edge.validity_horizon(), Err(ClosedFormError::AlreadyInvalid { .. })));
    }

    #[test]
    fn radius_closed_examples() {
        let p = golden(SignMode::Auto, 2.0);
        assert_eq!(p.radius_closed(0.0).unwrap(), p.r_i0);
        // term-by-term evaluation with a bisection W, independent of Halley
        let w = |t: f64| wm1_bisect(-(p.ln_neg_c4 + p.c5 * t).exp());
        let h = |w: f64| 0.5 * w.powi(4) + w.powi(3) + 0.5 * w * w;
        let k1 = -4.0 * 3.4f64.powi(2) * 2.0 / 36.0;
        let kw = k1 / (2.0 * p.c5);
        let klin = p.rdot_i0 - kw * (1.0 + 2.0 * w(0.0));
        let oracle = klin * 1.0 + (kw / p.c5) * (h(w(1.0)) - h(w(0.0))) + p.r_i0;
        let got = p.radius_closed(1.0).unwrap();
        assert!(rel(got, oracle) < 1e-9, "{got} vs {oracle}");
        assert!(rel(got, -2_287.768_941_375_821) < 1e-9);
    }

    #[test]
    fn radius_closed_massless_companions() {
        let s = SurrogateInitials { r_a0: 10.0, rdot_a0: 2.0, theta0: 0.0, thetadot0: 0.0 };
        let body = PolarState::new(4.0, 0.0, 0.7, 0.0);
        let p = build_params(1.0, [3.0, 0.0, 0.0], 0, &s, &body, SignMode::Auto, Branch::Lower, 0.0).unwrap();
        assert_eq!(p.k_w, 0.0);
        for t in [0.5, 1.0, 3.0] {
            assert!(rel(p.radius_closed(t).unwrap(), 4.0 + 0.7 * t) < 1e-14);
            let (r, rd) = p.radius_semi_analytic(t, 1e-10).unwrap();
            assert!(rel(r, 4.0 + 0.7 * t) < 1e-14);
            assert_eq!(rd, 0.7);
        }
    }

    #[test]
    fn theta_closed_examples() {
        let p = golden(SignMode::Auto, 2.0);
        assert_eq!(p.theta_closed(0.0).unwrap(), p.theta_i0);
        let w = |t: f64| wm1_bisect(-(p.ln_neg_c4 + p.c5 * t).exp());
        let g = |w: f64| (1.0 + 2.0 * w) * w * w;
        let coeff = 4.0 * 100.0 * 1e-3 * 3.4f64.powi(2) / (p.c5 * 36.0);
        let oracle = coeff * g(w(0.0)) - coeff * g(w(1.0));
        let got = p.theta_closed(1.0).unwrap();
        assert!(rel(got, oracle) < 1e-9);
        assert!(rel(got, -127.188_093_293_250_26) < 1e-9);

        let still = SurrogateInitials { r_a0: 10.0, rdot_a0: 2.0, theta0: 0.3, thetadot0: 0.0 };
        let body = PolarState::new(6.0, 0.3, 1.0, 0.0);
        let q = build_params(1.0, [1.0; 3], 0, &still, &body, SignMode::Auto, Branch::Lower, 0.0).unwrap();
        for t in [0.0, 1.0, 7.0] {
            assert_eq!(q.theta_closed(t).unwrap(), 0.3);
            assert_eq!(q.theta_semi_analytic(t, 1e-8).unwrap(), 0.3);
        }
    }

    #[test]
    fn closed_form_rates_match_finite_differences() {
        let p = golden(SignMode::Auto, 2.0);
        let h = 1e-5;
        for t in [0.3, 1.0, 2.5] {
            let fd = (p.radius_closed(t + h).unwrap() - p.radius_closed(t - h).unwrap()) / (2.0 * h);
            assert!(rel(p.radius_rate_closed(t).unwrap(), fd) < 1e-6);
            let fd = (p.theta_closed(t + h).unwrap() - p.theta_closed(t - h).unwrap()) / (2.0 * h);
            assert!(rel(p.theta_rate_closed(t).unwrap(), fd) < 1e-6);
        }
    }

    #[test]
    fn implicit_residual_lower_vs_principal() {
        let p = golden(SignMode::Auto, 2.0);
        assert!(p.implicit_residual(0.0).unwrap().abs() < 1e-10);
        for t in [1.0, 5.0, 20.0] {
            let r = p.implicit_residual(t).unwrap();
            assert!(r.abs() <= 1e-9 * p.f_of_t(t).max(1.0));
        }
        // the principal branch is the other root (r < k) of the same implicit
        // equation: small residual, wrong initial radius
        let mut q = p.clone();
        q.branch = Branch::Principal;
        assert!(q.implicit_residual(1.0).unwrap().abs() <= 1e-9 * q.f_of_t(1.0));
        let r0 = q.r_a_closed(0.0).unwrap();
        assert!(r0 < q.k_const);
        assert!((r0 - q.r_a0).abs() > 0.9 * q.r_a0);
    }

    #[test]
    fn monotone_in_sign() {
        let p = golden(SignMode::Auto, 2.0);
        let q = golden(SignMode::Auto, -2.0);
        let h = q.validity_horizon().unwrap().unwrap();
        let mut last = (p.r_a_closed(0.0).unwrap(), q.r_a_closed(0.0).unwrap());
        for i in 1..=200 {
            let a = p.r_a_closed(0.1 * i as f64).unwrap();
            let b = q.r_a_closed(h * i as f64 / 200.0).unwrap();
            assert!(a > last.0 && b < last.1);
            last = (a, b);
        }
    }

    #[test]
    fn long_horizon_uses_log_form() {
        let p = golden(SignMode::Auto, 2.0);
        // the Lambert argument underflows long before t = 1000
        assert_eq!(p.w_arg(1000.0), 0.0);
        let r = p.r_a_closed(1000.0).unwrap();
        assert!(p.implicit_residual(1000.0).unwrap().abs() < 1e-9 * r);
    }

    #[test]
    fn semi_analytic_initial_values() {
        let p = golden(SignMode::Auto, 2.0);
        assert_eq!(p.radius_semi_analytic(0.0, 1e-8).unwrap(), (p.r_i0, p.rdot_i0));
        assert_eq!(p.theta_semi_analytic(0.0, 1e-8).unwrap(), p.theta_i0);
    }

    #[test]
    fn semi_analytic_rejects_bad_tolerance() {
        let p = golden(SignMode::Auto, 2.0);
        assert!(matches!(p.radius_semi_analytic(1.0, 0.0), Err(ClosedFormError::InvalidInput(_))));
    }

    #[test]
    fn semi_analytic_converges_under_tolerance_halving() {
        let p = golden(SignMode::Auto, 2.0);
        let (reference, _) = p.radius_semi_analytic(5.0, 1e-14).unwrap();
        let mut tol = 1e-6;
        for _ in 0..4 {
            let (r, _) = p.radius_semi_analytic(5.0, tol).unwrap();
            assert!(rel(r, reference) <= tol, "tol {tol}: {r} vs {reference}");
            tol *= 0.5;
        }
    }

    #[test]
    fn principal_branch_collapse_keeps_the_prefix() {
        let mut p = golden(SignMode::Auto, 2.0);
        p.branch = Branch::Principal;
        // r_a sits below k on this branch, so the forcing crushes the body
        let (path, err) = p.semi_analytic_prefix(&[0.0, 0.1, 0.2], 1e-8);
        assert_eq!(path.len(), 1);
        assert_eq!(path[0], p.initial_semi_state());
        assert!(matches!(err, Some(ClosedFormError::BodyCollapse { body: 1, .. })), "{err:?}");
        assert!(p.semi_analytic_path(&[0.0, 0.1], 1e-8).is_err());
    }
}
