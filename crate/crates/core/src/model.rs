//! Planar kinematic state, polar/Cartesian conversion and the pairwise
//! geometry used by every solver.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("body {body} sits at zero radius; its polar angle is undefined")]
    DegenerateRadius { body: usize },
    #[error("pair mass is zero; barycenter undefined")]
    ZeroMassPair,
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// One body's planar polar state. `theta` is kept unnormalized so that
/// angle histories stay continuous.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
    pub r_dot: f64,
    pub theta_dot: f64,
}

impl PolarState {
    pub const fn new(r: f64, theta: f64, r_dot: f64, theta_dot: f64) -> Self {
        PolarState { r, theta, r_dot, theta_dot }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.theta.is_finite() && self.r_dot.is_finite() && self.theta_dot.is_finite()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.is_finite() {
            return Err(ModelError::InvalidState(format!("non-finite polar state {self:?}")));
        }
        if self.r < 0.0 {
            return Err(ModelError::InvalidState(format!("negative radius {}", self.r)));
        }
        Ok(())
    }

    pub fn position(&self) -> Vec2 {
        polar_to_cartesian(self).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub mass: f64,
    pub state: PolarState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub g_const: f64,
    pub bodies: [Body; 3],
    pub t: f64,
}

impl SystemState {
    pub fn masses(&self) -> [f64; 3] {
        [self.bodies[0].mass, self.bodies[1].mass, self.bodies[2].mass]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    pub fn cartesian(&self) -> [(Vec2, Vec2); 3] {
        [0, 1, 2].map(|i| polar_to_cartesian(&self.bodies[i].state))
    }

    /// Checks `g_const > 0`, finite states and masses. Zero masses pass only
    /// when `allow_zero_mass` is set.
    pub fn validate(&self, allow_zero_mass: bool) -> Result<(), ModelError> {
        if !(self.g_const > 0.0 && self.g_const.is_finite()) {
            return Err(ModelError::InvalidState(format!("g_const must be positive, got {}", self.g_const)));
        }
        for (i, b) in self.bodies.iter().enumerate() {
            let mass_ok = b.mass.is_finite() && (b.mass > 0.0 || (allow_zero_mass && b.mass == 0.0));
            if !mass_ok {
                return Err(ModelError::InvalidState(format!("body {} has invalid mass {}", i + 1, b.mass)));
            }
            b.state.validate()?;
        }
        if self.total_mass() <= 0.0 {
            return Err(ModelError::InvalidState("total mass is zero".into()));
        }
        Ok(())
    }
}

/// Returns `(position, velocity)` in Cartesian coordinates.
pub fn polar_to_cartesian(s: &PolarState) -> (Vec2, Vec2) {
    let (sin, cos) = s.theta.sin_cos();
    let pos = Vec2::new(s.r * cos, s.r * sin);
    let vel = Vec2::new(
        s.r_dot * cos - s.r * s.theta_dot * sin,
        s.r_dot * sin + s.r * s.theta_dot * cos,
    );
    (pos, vel)
}

/// Inverse of [`polar_to_cartesian`] with `theta` in `(-pi, pi]`.
pub fn cartesian_to_polar(position: Vec2, velocity: Vec2) -> Result<PolarState, ModelError> {
    let r = position.norm();
    if r == 0.0 {
        return Err(ModelError::DegenerateRadius { body: 0 });
    }
    Ok(PolarState {
        r,
        theta: position.y.atan2(position.x),
        r_dot: position.dot(velocity) / r,
        theta_dot: position.cross(velocity) / (r * r),
    })
}

/// Like [`cartesian_to_polar`] but picks the angle nearest to `theta_ref`,
/// so that successive samples do not jump by `2 pi`.
pub fn cartesian_to_polar_near(position: Vec2, velocity: Vec2, theta_ref: f64) -> Result<PolarState, ModelError> {
    let mut s = cartesian_to_polar(position, velocity)?;
    s.theta = unwrap_angle(s.theta, theta_ref);
    Ok(s)
}

/// Shifts `theta` by a multiple of `2 pi` to lie within `pi` of `reference`.
pub fn unwrap_angle(theta: f64, reference: f64) -> f64 {
    if !reference.is_finite() {
        return theta;
    }
    let turns = ((reference - theta) / (2.0 * PI)).round();
    theta + turns * 2.0 * PI
}

/// `|pos_b - pos_a|^2` via the law of cosines.
pub fn separation_sq(a: &PolarState, b: &PolarState) -> f64 {
    a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * (b.theta - a.theta).cos()
}

/// `|e_r(theta + delta) - e_r(theta)|`, the distance between two radial unit
/// vectors separated by `delta_theta`.
pub fn unit_diff_norm(delta_theta: f64) -> f64 {
    std::f64::consts::SQRT_2 * (1.0 - delta_theta.cos()).max(0.0).sqrt()
}

/// Components of `e_r(theta_src)` along `e_r(theta_dst)` and `e_theta(theta_dst)`.
pub fn resolve_unit(theta_src: f64, theta_dst: f64) -> (f64, f64) {
    let d = theta_src - theta_dst;
    (d.cos(), d.sin())
}

/// Mass-weighted mean position and velocity of two bodies.
pub fn pair_barycenter(m_j: f64, s_j: &PolarState, m_k: f64, s_k: &PolarState) -> Result<(Vec2, Vec2), ModelError> {
    let m = m_j + m_k;
    if m == 0.0 {
        return Err(ModelError::ZeroMassPair);
    }
    let (pj, vj) = polar_to_cartesian(s_j);
    let (pk, vk) = polar_to_cartesian(s_k);
    Ok(((m_j / m) * pj + (m_k / m) * pk, (m_j / m) * vj + (m_k / m) * vk))
}

/// Translates and boosts the system so the center of mass is at rest at the
/// origin. Angles are unwrapped towards the input angles.
pub fn to_com_frame(sys: &SystemState) -> Result<SystemState, ModelError> {
    let m = sys.total_mass();
    let cart = sys.cartesian();
    let mut com = Vec2::ZERO;
    let mut vcom = Vec2::ZERO;
    for (b, (p, v)) in sys.bodies.iter().zip(cart.iter()) {
        com = com + (b.mass / m) * *p;
        vcom = vcom + (b.mass / m) * *v;
    }
    let mut out = sys.clone();
    for (i, (p, v)) in cart.iter().enumerate() {
        let old = sys.bodies[i].state.theta;
        out.bodies[i].state = cartesian_to_polar_near(*p - com, *v - vcom, old)
            .map_err(|_| ModelError::DegenerateRadius { body: i + 1 })?;
    }
    Ok(out)
}

/// How the surrogate separation's initial radius and rate are read off the
/// three-body state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Magnitude and range rate of `pos_i - barycenter(j, k)`.
    #[default]
    Vector,
    /// The body's own radius and radial rate about the origin.
    Paper,
}

/// Initial data of one body's two-body surrogate separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateInitials {
    pub r_a0: f64,
    pub rdot_a0: f64,
    pub theta0: f64,
    pub thetadot0: f64,
}

/// Indices of the two companions of `body` (0-based).
pub fn companions(body: usize) -> (usize, usize) {
    match body {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("body index {body} out of range"),
    }
}

/// Surrogate initial conditions for `body` (0-based).
pub fn surrogate_initials(sys: &SystemState, body: usize, convention: Convention) -> Result<SurrogateInitials, ModelError> {
    let own = sys.bodies[body].state;
    let (r_a0, rdot_a0) = match convention {
        Convention::Paper => (own.r, own.r_dot),
        Convention::Vector => {
            let (j, k) = companions(body);
            let (bj, bk) = (&sys.bodies[j], &sys.bodies[k]);
            let (bpos, bvel) = pair_barycenter(bj.mass, &bj.state, bk.mass, &bk.state)?;
            let (pos, vel) = polar_to_cartesian(&own);
            let dp = pos - bpos;
            let dv = vel - bvel;
            let r = dp.norm();
            if r == 0.0 {
                return Err(ModelError::DegenerateRadius { body: body + 1 });
            }
            (r, dp.dot(dv) / r)
        }
    };
    Ok(SurrogateInitials { r_a0, rdot_a0, theta0: own.theta, thetadot0: own.theta_dot })
}

/// Separation `|pos_i - barycenter(j, k)|` for a state (used when monitoring
/// trajectories).
pub fn surrogate_separation(sys: &SystemState, body: usize, convention: Convention) -> Result<f64, ModelError> {
    surrogate_initials(sys, body, convention).map(|s| s.r_a0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn body(mass: f64, x: f64, y: f64, vx: f64, vy: f64) -> Body {
        Body { mass, state: cartesian_to_polar(Vec2::new(x, y), Vec2::new(vx, vy)).unwrap() }
    }

    #[test]
    fn polar_to_cartesian_examples() {
        let (p, v) = polar_to_cartesian(&PolarState::new(1.0, 0.0, 0.0, 1.0));
        assert_eq!((p, v), (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)));
        let (p, v) = polar_to_cartesian(&PolarState::new(2.0, FRAC_PI_2, 1.0, 0.0));
        assert!(p.x.abs() < 1e-15 && close(p.y, 2.0, 1e-15));
        assert!(v.x.abs() < 1e-15 && close(v.y, 1.0, 1e-15));
        let (p, v) = polar_to_cartesian(&PolarState::new(0.0, 1.234, 0.0, 0.0));
        assert_eq!(p.norm(), 0.0);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn cartesian_to_polar_examples() {
        let s = cartesian_to_polar(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert_eq!(s, PolarState::new(1.0, 0.0, 0.0, 1.0));
        let s = cartesian_to_polar(Vec2::new(0.0, -3.0), Vec2::ZERO).unwrap();
        assert_eq!(s, PolarState::new(3.0, -FRAC_PI_2, 0.0, 0.0));
        assert!(matches!(
            cartesian_to_polar(Vec2::ZERO, Vec2::new(1.0, 1.0)),
            Err(ModelError::DegenerateRadius { .. })
        ));
    }

    #[test]
    fn separation_examples() {
        let a = PolarState::new(1.0, 0.0, 0.0, 0.0);
        let b = PolarState::new(1.0, PI, 0.0, 0.0);
        assert!(close(separation_sq(&a, &b), 4.0, 1e-15));
        let c = PolarState::new(5.0, 0.7, 0.0, 0.0);
        assert_eq!(separation_sq(&c, &c), 0.0);
        let d = PolarState::new(3.0, 0.0, 0.0, 0.0);
        let e = PolarState::new(4.0, FRAC_PI_2, 0.0, 0.0);
        assert!(close(separation_sq(&d, &e), 25.0, 1e-15));
    }

    #[test]
    fn unit_diff_examples() {
        assert_eq!(unit_diff_norm(0.0), 0.0);
        assert!(close(unit_diff_norm(PI), 2.0, 1e-15));
        assert!(close(unit_diff_norm(FRAC_PI_2), 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn resolve_unit_examples() {
        let phi = 0.3;
        assert_eq!(resolve_unit(phi, phi), (1.0, 0.0));
        let (a, b) = resolve_unit(phi + FRAC_PI_2, phi);
        assert!(a.abs() < 1e-15 && close(b, 1.0, 1e-15));
        let (a, b) = resolve_unit(phi + PI, phi);
        assert!(close(a, -1.0, 1e-15) && b.abs() < 1e-15);
    }

    #[test]
    fn barycenter_examples() {
        let l = PolarState::new(1.0, 0.0, 0.0, 0.0);
        let r = PolarState::new(1.0, PI, 0.0, 0.0);
        let (p, _) = pair_barycenter(1.0, &l, 1.0, &r).unwrap();
        assert!(p.norm() < 1e-15);
        let s = PolarState::new(2.5, 0.4, 0.1, 0.2);
        let (p, v) = pair_barycenter(3.0, &s, 0.0, &l).unwrap();
        let (ps, vs) = polar_to_cartesian(&s);
        assert_eq!((p, v), (ps, vs));
        let four = PolarState::new(4.0, 0.0, 0.0, 0.0);
        let origin = PolarState::new(0.0, 0.0, 0.0, 0.0);
        let (p, _) = pair_barycenter(1.0, &four, 3.0, &origin).unwrap();
        assert_eq!(p, Vec2::new(1.0, 0.0));
        assert_eq!(pair_barycenter(0.0, &l, 0.0, &r), Err(ModelError::ZeroMassPair));
    }

    #[test]
    fn com_frame_removes_offset() {
        let sys = SystemState {
            g_const: 1.0,
            bodies: [
                body(1.0, 1.0 + 5.0, 0.0 - 2.0, 0.3, 0.0),
                body(2.0, -1.0 + 5.0, 1.0 - 2.0, 0.3, 0.5),
                body(1.5, 0.0 + 5.0, -3.0 - 2.0, 0.3, -0.2),
            ],
            t: 0.0,
        };
        let out = to_com_frame(&sys).unwrap();
        let mut mp = Vec2::ZERO;
        let mut mv = Vec2::ZERO;
        for (b, (p, v)) in out.bodies.iter().zip(out.cartesian()) {
            mp = mp + b.mass * p;
            mv = mv + b.mass * v;
        }
        assert!(mp.norm() < 1e-12 * 10.0);
        assert!(mv.norm() < 1e-12 * 10.0);
        let again = to_com_frame(&out).unwrap();
        for (a, b) in out.bodies.iter().zip(again.bodies.iter()) {
            assert!(close(a.state.r, b.state.r, 1e-12));
            assert!(close(a.state.theta, b.state.theta, 1e-12));
            assert!(close(a.state.r_dot, b.state.r_dot, 1e-12));
            assert!(close(a.state.theta_dot, b.state.theta_dot, 1e-12));
        }
    }

    #[test]
    fn com_frame_fixed_point_for_centered_triple() {
        let bodies = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|th| Body {
            mass: 1.0,
            state: PolarState::new(2.0, th, 0.1, 0.05),
        });
        let sys = SystemState { g_const: 1.0, bodies, t: 0.0 };
        let out = to_com_frame(&sys).unwrap();
        for (a, b) in sys.bodies.iter().zip(out.bodies.iter()) {
            assert!(close(a.state.r, b.state.r, 1e-12));
            assert!(close(a.state.theta, b.state.theta, 1e-12), "{} {}", a.state.theta, b.state.theta);
            assert!(close(a.state.r_dot, b.state.r_dot, 1e-12));
            assert!(close(a.state.theta_dot, b.state.theta_dot, 1e-12));
        }
    }

    #[test]
    fn com_frame_rejects_body_at_origin() {
        let sys = SystemState {
            g_const: 1.0,
            bodies: [
                body(1.0, 4.0, 0.0, 0.0, 0.0),
                body(1.0, 1.0, 0.0, 0.0, 0.0),
                body(1.0, 2.5, 0.0, 0.0, 0.0),
            ],
            t: 0.0,
        };
        // body 3 is exactly at the COM
        assert!(matches!(to_com_frame(&sys), Err(ModelError::DegenerateRadius { body: 3 })));
    }

    #[test]
    fn surrogate_initials_anticollinear() {
        let sys = SystemState {
            g_const: 1.0,
            bodies: [body(1.0, 10.0, 0.0, 1.0, 0.0), body(1.0, -2.0, 1.0, -0.5, 0.0), body(1.0, -2.0, -1.0, -0.5, 0.0)],
            t: 0.0,
        };
        let s = surrogate_initials(&sys, 0, Convention::Vector).unwrap();
        assert!(close(s.r_a0, 12.0, 1e-15));
        assert!(close(s.rdot_a0, 1.5, 1e-15));
        // 9d: r_a = r_1 + r_23 for the anti-collinear arrangement
        assert!(close(s.r_a0, sys.bodies[0].state.r + 2.0, 1e-15));
        let p = surrogate_initials(&sys, 0, Convention::Paper).unwrap();
        assert_eq!(p.r_a0, sys.bodies[0].state.r);
        assert_eq!(p.rdot_a0, sys.bodies[0].state.r_dot);
        assert_eq!(p.theta0, sys.bodies[0].state.theta);
        assert_eq!(p.thetadot0, sys.bodies[0].state.theta_dot);
    }

    #[test]
    fn surrogate_initials_zero_companion_mass() {
        let sys = SystemState {
            g_const: 1.0,
            bodies: [body(1.0, 3.0, 1.0, 0.0, 0.2), body(2.0, -1.0, 4.0, 0.0, 0.0), body(0.0, 7.0, 7.0, 0.0, 0.0)],
            t: 0.0,
        };
        let s = surrogate_initials(&sys, 0, Convention::Vector).unwrap();
        assert!(close(s.r_a0, 5.0, 1e-15));
    }

    proptest! {
        #[test]
        fn law_of_cosines_matches_cartesian(
            r1 in 0.0f64..100.0, t1 in -10.0f64..10.0,
            r2 in 0.0f64..100.0, t2 in -10.0f64..10.0,
        ) {
            let a = PolarState::new(r1, t1, 0.0, 0.0);
            let b = PolarState::new(r2, t2, 0.0, 0.0);
            let d = (b.position() - a.position()).norm_sq();
            let scale = (r1 + r2).powi(2).max(1e-300);
            prop_assert!((separation_sq(&a, &b) - d).abs() <= 1e-12 * scale);
        }

        #[test]
        fn unit_diff_is_unit_separation(t1 in -10.0f64..10.0, t2 in -10.0f64..10.0) {
            let a = PolarState::new(1.0, t1, 0.0, 0.0);
            let b = PolarState::new(1.0, t2, 0.0, 0.0);
            prop_assert!((unit_diff_norm(t2 - t1).powi(2) - separation_sq(&a, &b)).abs() <= 1e-12);
        }

        #[test]
        fn resolve_unit_is_unit(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (p, q) = resolve_unit(a, b);
            prop_assert!((p * p + q * q - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn polar_roundtrip(r in 1e-3f64..1e3, th in -3.1f64..3.1, rd in -10.0f64..10.0, td in -10.0f64..10.0) {
            let s = PolarState::new(r, th, rd, td);
            let (p, v) = polar_to_cartesian(&s);
            let back = cartesian_to_polar(p, v).unwrap();
            prop_assert!(close(back.r, r, 1e-12));
            prop_assert!((back.r_dot - rd).abs() <= 1e-12 * (rd.abs() + r * td.abs() + 1e-300));
            prop_assert!((back.theta_dot - td).abs() <= 1e-12 * (td.abs() + rd.abs() / r + 1e-300));
            prop_assert!(unwrap_angle(back.theta, th) - th < 1e-12);
        }
    }
}
