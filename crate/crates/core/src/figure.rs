//! Raw curve data for the lightness cubic and the phi residual.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inverse::{cubic_f, phi, prepare, tentative_sum};
use crate::model::{LgjColor, SolveOptions};

/// One grid point. `y` is `None` where the curve is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: Option<f64>,
}

fn grid(min: f64, max: f64, n: usize) -> Result<impl Iterator<Item = f64>> {
    if n < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::DegenerateInput(
            "grid needs n >= 2 and finite min < max",
        ));
    }
    let step = (max - min) / (n - 1) as f64;
    Ok((0..n).map(move |i| {
        if i == n - 1 {
            max
        } else {
            min + step * i as f64
        }
    }))
}

/// `f(t)` of the lightness cubic on a uniform grid.
pub fn sample_f_curve(l_prime: f64, t_min: f64, t_max: f64, n: usize) -> Result<Vec<CurvePoint>> {
    Ok(grid(t_min, t_max, n)?
        .map(|t| CurvePoint {
            x: t,
            y: Some(cubic_f(t, l_prime)),
        })
        .collect())
}

/// `phi(w)` for the color `c` on a uniform grid; points at the pole are gaps.
pub fn sample_phi_curve(c: &LgjColor, w_min: f64, w_max: f64, n: usize) -> Result<Vec<CurvePoint>> {
    let problem = prepare(c, &SolveOptions::default())?;
    Ok(grid(w_min, w_max, n)?
        .map(|w| CurvePoint {
            x: w,
            y: phi(w, problem.a, problem.b, problem.y0)
                .ok()
                .map(|(v, _)| v),
        })
        .collect())
}

/// Pole of phi for `c` inside `[w_lo, w_hi]`, found by bisecting the
/// tentative X + Y + Z. `None` if the sum has no sign change there.
pub fn locate_singularity(c: &LgjColor, w_lo: f64, w_hi: f64) -> Result<Option<f64>> {
    let p = prepare(c, &SolveOptions::default())?;
    let s = |w| tentative_sum(w, p.a, p.b);
    let (mut lo, mut hi) = (w_lo, w_hi);
    let s_lo = s(lo);
    if s_lo == 0.0 {
        return Ok(Some(lo));
    }
    if (s_lo > 0.0) == (s(hi) > 0.0) {
        return Ok(None);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(Some(mid));
        }
        let s_mid = s(mid);
        if s_mid == 0.0 {
            return Ok(Some(mid));
        }
        if (s_mid > 0.0) == (s_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Sign changes along a sampled curve, skipping gaps.
pub fn sign_changes(points: &[CurvePoint]) -> usize {
    let signs: Vec<bool> = points
        .iter()
        .filter_map(|p| p.y)
        .filter(|y| *y != 0.0)
        .map(|y| y > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
