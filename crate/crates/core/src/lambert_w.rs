//! Real branches of the Lambert W function.
//!
//! `W(z)` is the inverse of `w -> w * exp(w)`. Over the reals it has two
//! branches meeting at the branch point `z = -1/e, w = -1`:
//!
//! * the principal branch `W0`, defined on `[-1/e, inf)` with `W0 >= -1`;
//! * the lower branch `W-1`, defined on `[-1/e, 0)` with `W-1 <= -1`.
//!
//! Both are evaluated with Halley iteration on `f(w) = w e^w - z`, started
//! from branch-specific asymptotic guesses.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use thiserror::Error;

/// High part of `1/e` (correctly rounded).
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
/// `1/e - INV_E_HI`.
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// Absolute slack accepted below the branch point `-1/e`.
pub const DOMAIN_SLACK: f64 = 1e-12;

const MAX_ITERATIONS: usize = 50;

/// Which real branch of W to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `W0`, the branch with `W >= -1`.
    Principal,
    /// `W-1`, the branch with `W <= -1`.
    #[default]
    Lower,
}

impl Branch {
    pub fn eval(self, z: f64) -> Result<f64, LambertError> {
        match self {
            Branch::Principal => w0(z),
            Branch::Lower => wm1(z),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Principal => "principal",
            Branch::Lower => "lower",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = LambertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "principal" | "w0" | "0" => Ok(Branch::Principal),
            "lower" | "wm1" | "-1" => Ok(Branch::Lower),
            other => Err(LambertError::UnknownBranch(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LambertError {
    #[error("argument {z} outside the domain of the {branch} branch")]
    Domain { z: f64, branch: &'static str },
    #[error("Halley iteration did not converge for z = {z} after {MAX_ITERATIONS} iterations")]
    Iteration { z: f64 },
    #[error("unknown Lambert W branch '{0}' (expected 'principal' or 'lower')")]
    UnknownBranch(String),
}

/// `w e^w - z`, as evaluated in working precision.
pub fn w_residual(w: f64, z: f64) -> f64 {
    w * w.exp() - z
}

/// `1 + e z`, the scaled distance from the branch point, with the rounding
/// of `1/e` compensated so that arguments computed as `-exp(-1)` land on 0.
fn branch_distance(z: f64) -> f64 {
    E * ((z + INV_E_HI) + INV_E_LO)
}

/// Series of W about the branch point in `p = ±sqrt(2(1 + e z))`.
fn branch_series(p: f64) -> f64 {
    const COEFFS: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    COEFFS.iter().rev().fold(0.0, |acc, c| acc * p + c)
}

/// Principal branch `W0(z)` for `z >= -1/e`.
pub fn w0(z: f64) -> Result<f64, LambertError> {
    if z.is_nan() {
        return Err(LambertError::Domain { z, branch: "principal" });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let d = branch_distance(z);
    if d < 0.0 {
        return if z >= -INV_E_HI - DOMAIN_SLACK {
            Ok(-1.0)
        } else {
            Err(LambertError::Domain { z, branch: "principal" })
        };
    }
    let guess = if z < -INV_E_HI + 1e-2 {
        branch_series((2.0 * d).sqrt())
    } else if z > E {
        let lz = z.ln();
        lz - lz.ln()
    } else {
        // Winitzki's approximation
        let l = z.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    };
    halley(z, guess, Branch::Principal).map(|w| w.max(-1.0))
}

/// Lower branch `W-1(z)` for `-1/e <= z < 0`.
pub fn wm1(z: f64) -> Result<f64, LambertError> {
    if !(z < 0.0) {
        return Err(LambertError::Domain { z, branch: "lower" });
    }
    let d = branch_distance(z);
    if d < 0.0 {
        return if z >= -INV_E_HI - DOMAIN_SLACK {
            Ok(-1.0)
        } else {
            Err(LambertError::Domain { z, branch: "lower" })
        };
    }
    let guess = if z < -INV_E_HI + 1e-2 {
        branch_series(-(2.0 * d).sqrt())
    } else {
        let l = (-z).ln();
        (l - (-l).ln()).min(-1.0 - 1e-3)
    };
    halley(z, guess, Branch::Lower).map(|w| w.min(-1.0))
}

/// Lower branch evaluated from `ln(-z)` instead of `z`.
///
/// Equivalent to `wm1(-exp(log_neg_z))` but keeps working when `-z` is too
/// small to represent. Solves `w + ln(-w) = log_neg_z` for `w <= -1`.
pub fn wm1_from_log(log_neg_z: f64) -> Result<f64, LambertError> {
    if log_neg_z.is_nan() {
        return Err(LambertError::Domain { z: f64::NAN, branch: "lower" });
    }
    if log_neg_z >= -1.0 {
        // ln(1/e) = -1 is the branch point
        return if log_neg_z <= -1.0 + E * DOMAIN_SLACK {
            Ok(-1.0)
        } else {
            Err(LambertError::Domain { z: -log_neg_z.exp(), branch: "lower" })
        };
    }
    if log_neg_z > -700.0 {
        return wm1(-log_neg_z.exp());
    }
    if log_neg_z == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut w = log_neg_z - (-log_neg_z).ln();
    for _ in 0..MAX_ITERATIONS {
        let g = w + (-w).ln() - log_neg_z;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Err(LambertError::Iteration { z: -log_neg_z.exp() })
}

fn halley(z: f64, mut w: f64, branch: Branch) -> Result<f64, LambertError> {
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        // residual already at the rounding floor of the product
        if f.abs() <= 4.0 * f64::EPSILON * z.abs().max((w * ew).abs()) {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            return Ok(w);
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let mut next = w - step;
        // keep the iterate on its own side of the branch point
        match branch {
            Branch::Principal if next < -1.0 => next = 0.5 * (w - 1.0),
            Branch::Lower if next > -1.0 => next = 0.5 * (w - 1.0),
            _ => {}
        }
        let moved = (next - w).abs();
        w = next;
        // relative below |w| = 1 so tiny W0 values keep full precision
        let scale = if w.abs() < 1.0 { w.abs() } else { 1.0 + w.abs() };
        if moved < 1e-15 * scale {
            return Ok(w);
        }
    }
    Err(LambertError::Iteration { z })
}
