//! Adaptive Gauss-Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not reach relative tolerance {tol} within {max_intervals} subintervals (estimate {estimate}, error {error})")]
    Budget { tol: f64, max_intervals: usize, estimate: f64, error: f64 },
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the center.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_MAX_INTERVALS: usize = 4000;

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<E, F>(f: &mut F, a: f64, b: f64) -> Result<Piece, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (x1, x2) = (c - dx, c + dx);
        let (f1, f2) = (f(x1)?, f(x2)?);
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite { at: x1 }.into());
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite { at: x2 }.into());
        }
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite { at: c }.into());
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    Ok(Piece { a, b, value, error })
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `rel_tol * |I|` (or `abs_floor`, whichever is larger).
pub fn integrate<E, F>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    if a == b {
        return Ok(0.0);
    }
    let mut pieces = vec![gk15(&mut f, a, b)?];
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= (rel_tol * value.abs()).max(abs_floor) {
            return Ok(value);
        }
        if pieces.len() >= DEFAULT_MAX_INTERVALS {
            return Err(QuadratureError::Budget { tol: rel_tol, max_intervals: DEFAULT_MAX_INTERVALS, estimate: value, error }.into());
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(QuadratureError::Budget { tol: rel_tol, max_intervals: pieces.len(), estimate: value, error }.into());
        }
        pieces.push(gk15(&mut f, p.a, mid)?);
        pieces.push(gk15(&mut f, mid, p.b)?);
    }
}
