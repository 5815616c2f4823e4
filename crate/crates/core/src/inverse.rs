//! Lgj → XYZ for a single color.
//!
//! The lightness equation is a cubic in `t = cbrt(Y0)` with exactly one real
//! root, solved in closed form (or by Newton for cross-checking). With `Y0`,
//! `C`, `a` and `b` known, the cube-root RGB vector has one free coordinate
//! `w = cbrt(R)`. `phi(w)` compares the luminance implied by `w` against the
//! target `Y0`; Newton from the right, started at the largest reachable
//! `cbrt(R)`, finds its largest root.
//!
//! `phi` has a pole where the tentative X + Y + Z vanishes and up to three
//! roots. Steps that land at or left of the pole, or that increase `|phi|`,
//! are halved.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    initial_w, k_factor, k_factor_gradient, signed_cbrt, LgjColor, SolveOptions, XyzColor,
    AUGMENTED_AB_INV, LIGHTNESS_DIVISOR, LIGHTNESS_SHIFT, L_OFFSET, L_SCALE, RGB_TO_XYZ,
    SMALL_TERM_CUBED,
};

/// Relative size of `|X + Y + Z|` below which phi is treated as singular.
pub const SINGULAR_SUM_TOL: f64 = 1e-13;
/// Step halvings allowed per Newton update.
pub const MAX_HALVINGS: usize = 30;
/// Newton stops once a step is this small relative to the iterate.
pub const STEP_FLOOR: f64 = 1e-15;
/// Relative disagreement that makes `fd_check` fall back to differences.
pub const FD_MISMATCH_TOL: f64 = 1e-5;

const DEGENERATE_TOL: f64 = 1e-14;

/// Coefficients of `f(t) = a3 t^3 + b2 t^2 + c1 t + d0` and of its
/// depressed form `x^3 + p x + q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub u: f64,
    pub v: f64,
    pub a3: f64,
    pub b2: f64,
    pub c1: f64,
    pub d0: f64,
    pub p: f64,
    pub q: f64,
}

impl CubicCoeffs {
    #[inline(always)]
    pub fn new(l_prime: f64) -> Self {
        let u = l_prime / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT;
        let v = SMALL_TERM_CUBED;
        let a3 = -(v + 1.0);
        let b2 = 3.0 * u;
        let c1 = -3.0 * u * u;
        let d0 = u * u * u + 30.0 * v;
        let p = (3.0 * a3 * c1 - b2 * b2) / (3.0 * a3 * a3);
        let q =
            (2.0 * b2 * b2 * b2 - 9.0 * a3 * b2 * c1 + 27.0 * a3 * a3 * d0) / (27.0 * a3 * a3 * a3);
        Self {
            u,
            v,
            a3,
            b2,
            c1,
            d0,
            p,
            q,
        }
    }

    /// `(q/2)^2 + (p/3)^3`; positive whenever the cubic has a single real root.
    #[inline(always)]
    pub fn discriminant(&self) -> f64 {
        let hq = self.q / 2.0;
        let tp = self.p / 3.0;
        hq * hq + tp * tp * tp
    }
}

/// Diagnostics of one inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct InverseTrace {
    /// Accepted Newton updates on phi.
    pub iterations: usize,
    pub final_phi: f64,
    pub w_root: f64,
    /// Step halvings forced by the pole or by a growing residual.
    pub singularity_guard_hits: usize,
    /// Steps where `fd_check` replaced the analytic derivative.
    pub fd_corrections: usize,
}

#[inline(always)]
pub fn lprime_from_l(l: f64) -> f64 {
    l * L_SCALE + L_OFFSET
}

/// The lightness cubic `(L'/5.9 + 2/3 - t)^3 - 0.042^3 (t^3 - 30)`.
#[inline(always)]
pub fn cubic_f(t: f64, l_prime: f64) -> f64 {
    let d = l_prime / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT - t;
    d * d * d - SMALL_TERM_CUBED * (t * t * t - 30.0)
}

#[inline(always)]
pub fn cubic_f_derivative(t: f64, l_prime: f64) -> f64 {
    let d = l_prime / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT - t;
    -3.0 * d * d - 3.0 * SMALL_TERM_CUBED * t * t
}

/// Leading coefficient of the lightness cubic, `-(1 + 0.042^3)`.
const CUBIC_A3: f64 = -(SMALL_TERM_CUBED + 1.0);
const INV_3A3: f64 = 1.0 / (3.0 * CUBIC_A3);
const INV_3A3_SQ: f64 = 1.0 / (3.0 * CUBIC_A3 * CUBIC_A3);
const INV_27A3_CUBED: f64 = 1.0 / (27.0 * CUBIC_A3 * CUBIC_A3 * CUBIC_A3);

/// The single real root of [`cubic_f`] by Cardano's formula.
#[inline(always)]
pub fn solve_t_cardano(l_prime: f64) -> Result<f64> {
    if !l_prime.is_finite() {
        return Err(Error::DegenerateInput("L' must be finite"));
    }
    let u = l_prime / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT;
    let (a3, b2, c1, d0) = (
        CUBIC_A3,
        3.0 * u,
        -3.0 * u * u,
        u * u * u + 30.0 * SMALL_TERM_CUBED,
    );
    let p = (3.0 * a3 * c1 - b2 * b2) * INV_3A3_SQ;
    let q = (2.0 * b2 * b2 * b2 - 9.0 * a3 * b2 * c1 + 27.0 * a3 * a3 * d0) * INV_27A3_CUBED;
    let hq = 0.5 * q;
    let tp = p * (1.0 / 3.0);
    let disc = hq * hq + tp * tp * tp;
    if !(disc > 0.0) {
        return Err(Error::NumericalFailure(
            "cubic discriminant is not positive",
        ));
    }
    let sq = disc.sqrt();
    let t = -b2 * INV_3A3 + signed_cbrt(-hq + sq) + signed_cbrt(-hq - sq);
    // q comes out of heavy cancellation near Y0 = 30 (a few 1e-12 relative
    // in t); one Newton step restores full precision.
    let d = u - t;
    let f = d * d * d - SMALL_TERM_CUBED * (t * t * t - 30.0);
    let fp = -3.0 * d * d - 3.0 * SMALL_TERM_CUBED * t * t;
    Ok(t - f / fp)
}

/// Newton on [`cubic_f`] from `t0 = L'/5.9 + 2/3`. Returns the root and the
/// number of updates taken.
pub fn solve_t_newton(l_prime: f64, opts: &SolveOptions) -> Result<(f64, usize)> {
    if !l_prime.is_finite() {
        return Err(Error::DegenerateInput("L' must be finite"));
    }
    let u = l_prime / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT;
    let mut t = u;
    let mut f = 0.0;
    for it in 0..opts.max_iter {
        let d = u - t;
        let t3 = t * t * t;
        f = d * d * d - SMALL_TERM_CUBED * (t3 - 30.0);
        let fp = -3.0 * d * d - 3.0 * SMALL_TERM_CUBED * t * t;
        let step = f / fp;
        t -= step;
        // The residual test alone leaves ~1e-8 in t where f' is small; the
        // step that follows it is quadratic and lands at machine precision.
        if f.abs() <= opts.newton_tol * t3.abs().max(1.0) || step.abs() < STEP_FLOOR * t.abs() {
            return Ok((t, it + 1));
        }
    }
    Err(Error::ConvergenceFailure {
        trace: InverseTrace {
            iterations: opts.max_iter,
            final_phi: f,
            w_root: t,
            ..Default::default()
        },
    })
}

/// Quantities recovered once `t = cbrt(Y0)` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gathered {
    pub y0: f64,
    pub chroma: f64,
    pub a: f64,
    pub b: f64,
}

#[inline(always)]
pub fn gather_from_t(t: f64, l_prime: f64, g: f64, j: f64) -> Result<Gathered> {
    let shifted = t - LIGHTNESS_SHIFT;
    if !(shifted.abs() >= DEGENERATE_TOL) {
        return Err(Error::DegenerateInput(
            "cbrt(Y0) = 2/3, chroma normalizer undefined",
        ));
    }
    let chroma = l_prime / (LIGHTNESS_DIVISOR * shifted);
    if chroma == 0.0 || !chroma.is_finite() {
        return Err(Error::DegenerateInput("chroma normalizer is zero"));
    }
    Ok(Gathered {
        y0: t * t * t,
        chroma,
        a: g / chroma,
        b: j / chroma,
    })
}

/// phi and its derivative at one `w`, plus the tentative color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PhiEval {
    pub value: f64,
    pub derivative: f64,
    pub xyz: [f64; 3],
    pub sum: f64,
    pub singular: bool,
}

#[inline(always)]
fn cbrt_rgb(w: f64, a: f64, b: f64) -> [f64; 3] {
    let m = &AUGMENTED_AB_INV;
    [
        m[0][0] * a + m[0][1] * b + m[0][2] * w,
        m[1][0] * a + m[1][1] * b + m[1][2] * w,
        m[2][0] * a + m[2][1] * b + m[2][2] * w,
    ]
}

#[inline(always)]
fn mul_rgb_to_xyz(v: [f64; 3]) -> [f64; 3] {
    let m = &RGB_TO_XYZ;
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline(always)]
fn is_singular(xyz: &[f64; 3], sum: f64) -> bool {
    let scale = xyz[0].abs().max(xyz[1].abs()).max(xyz[2].abs());
    !(sum.abs() >= SINGULAR_SUM_TOL * scale) || scale == 0.0
}

#[inline(always)]
pub(crate) fn eval_phi(w: f64, a: f64, b: f64, y0_target: f64) -> PhiEval {
    let s = cbrt_rgb(w, a, b);
    let xyz = mul_rgb_to_xyz([s[0] * s[0] * s[0], s[1] * s[1] * s[1], s[2] * s[2] * s[2]]);
    let sum = xyz[0] + xyz[1] + xyz[2];

    let m = &AUGMENTED_AB_INV;
    let ds = [m[0][2], m[1][2], m[2][2]];
    let dxyz = mul_rgb_to_xyz([
        3.0 * s[0] * s[0] * ds[0],
        3.0 * s[1] * s[1] * ds[1],
        3.0 * s[2] * s[2] * ds[2],
    ]);
    let dsum = dxyz[0] + dxyz[1] + dxyz[2];

    let x = xyz[0] / sum;
    let y = xyz[1] / sum;
    let k = k_factor(x, y);
    let sum2 = sum * sum;
    let dx = (dxyz[0] * sum - xyz[0] * dsum) / sum2;
    let dy = (dxyz[1] * sum - xyz[1] * dsum) / sum2;
    let (kx, ky) = k_factor_gradient(x, y);

    PhiEval {
        value: xyz[1] * k - y0_target,
        derivative: dxyz[1] * k + xyz[1] * (kx * dx + ky * dy),
        xyz,
        sum,
        singular: is_singular(&xyz, sum),
    }
}

/// Tentative X + Y + Z at `w`; phi has its pole where this vanishes.
pub fn tentative_sum(w: f64, a: f64, b: f64) -> f64 {
    let s = cbrt_rgb(w, a, b);
    let xyz = mul_rgb_to_xyz([s[0] * s[0] * s[0], s[1] * s[1] * s[1], s[2] * s[2] * s[2]]);
    xyz[0] + xyz[1] + xyz[2]
}

/// `phi(w) = Y0(w) - y0_target` together with the tentative color at `w`.
pub fn phi(w: f64, a: f64, b: f64, y0_target: f64) -> Result<(f64, XyzColor)> {
    let e = eval_phi(w, a, b, y0_target);
    if e.singular {
        return Err(Error::SingularityHit { w, trace: None });
    }
    Ok((e.value, XyzColor::from(e.xyz)))
}

/// Analytic `dphi/dw`. Independent of the target `Y0`.
pub fn phi_derivative(w: f64, a: f64, b: f64) -> Result<f64> {
    let e = eval_phi(w, a, b, 0.0);
    if e.singular {
        return Err(Error::SingularityHit { w, trace: None });
    }
    Ok(e.derivative)
}

/// Central difference of phi with `h = 1e-6 * max(1, |w|)`.
pub fn phi_derivative_fd(w: f64, a: f64, b: f64) -> Result<f64> {
    let h = 1e-6 * w.abs().max(1.0);
    let (hi, _) = phi(w + h, a, b, 0.0)?;
    let (lo, _) = phi(w - h, a, b, 0.0)?;
    Ok((hi - lo) / (2.0 * h))
}

/// Target of one Newton solve on phi.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhiProblem {
    pub a: f64,
    pub b: f64,
    pub y0: f64,
    pub tol_abs: f64,
}

impl PhiProblem {
    pub fn new(g: &Gathered, opts: &SolveOptions) -> Self {
        Self {
            a: g.a,
            b: g.b,
            y0: g.y0,
            tol_abs: opts.newton_tol * g.y0.max(1.0),
        }
    }

    #[inline(always)]
    pub fn eval(&self, w: f64) -> PhiEval {
        eval_phi(w, self.a, self.b, self.y0)
    }

    #[inline(always)]
    pub fn converged(&self, e: &PhiEval) -> bool {
        e.value.abs() <= self.tol_abs
    }

    /// Full Newton step at `w`, optionally cross-checked by differences.
    #[inline(always)]
    pub fn step(&self, w: f64, e: &PhiEval, fd_check: bool, fd_corrections: &mut usize) -> f64 {
        let mut derivative = e.derivative;
        if fd_check {
            if let Ok(fd) = phi_derivative_fd(w, self.a, self.b) {
                if (derivative - fd).abs() > FD_MISMATCH_TOL * fd.abs() {
                    derivative = fd;
                    *fd_corrections += 1;
                }
            }
        }
        e.value / derivative
    }
}

/// Whether a candidate may replace the current iterate.
#[inline(always)]
pub(crate) fn acceptable(candidate: &PhiEval, current: &PhiEval) -> bool {
    !candidate.singular
        && candidate.sum > 0.0
        && candidate.value.is_finite()
        && candidate.value.abs() <= current.value.abs()
}

fn trace_at(w: f64, e: &PhiEval, iterations: usize, guards: usize, fd: usize) -> InverseTrace {
    InverseTrace {
        iterations,
        final_phi: e.value,
        w_root: w,
        singularity_guard_hits: guards,
        fd_corrections: fd,
    }
}

/// Safeguarded Newton on phi from the default start. Returns the root and
/// the tentative color there.
pub(crate) fn newton_on_phi(
    problem: &PhiProblem,
    opts: &SolveOptions,
) -> Result<(f64, PhiEval, InverseTrace)> {
    let mut w = initial_w();
    let mut e = problem.eval(w);
    let (mut guards, mut fd) = (0, 0);
    if e.singular || !(e.sum > 0.0) {
        return Err(Error::SingularityHit {
            w,
            trace: Some(trace_at(w, &e, 0, guards, fd)),
        });
    }
    for it in 0..opts.max_iter {
        if problem.converged(&e) {
            return Ok((w, e, trace_at(w, &e, it, guards, fd)));
        }
        let mut step = problem.step(w, &e, opts.fd_check, &mut fd);
        if !step.is_finite() {
            return Err(Error::ConvergenceFailure {
                trace: trace_at(w, &e, it, guards, fd),
            });
        }
        let mut halvings = 0;
        let (cand_w, cand) = loop {
            let cw = w - step;
            let c = problem.eval(cw);
            if acceptable(&c, &e) {
                break (cw, c);
            }
            if halvings == MAX_HALVINGS {
                let trace = trace_at(w, &e, it, guards, fd);
                return Err(if c.singular {
                    Error::SingularityHit {
                        w: cw,
                        trace: Some(trace),
                    }
                } else {
                    Error::ConvergenceFailure { trace }
                });
            }
            halvings += 1;
            guards += 1;
            step *= 0.5;
        };
        w = cand_w;
        e = cand;
        if step.abs() < STEP_FLOOR * w.abs() {
            return Ok((w, e, trace_at(w, &e, it + 1, guards, fd)));
        }
    }
    if problem.converged(&e) {
        return Ok((w, e, trace_at(w, &e, opts.max_iter, guards, fd)));
    }
    Err(Error::ConvergenceFailure {
        trace: trace_at(w, &e, opts.max_iter, guards, fd),
    })
}

/// Solves the lightness cubic with the configured solver.
#[inline(always)]
pub(crate) fn solve_t(l_prime: f64, opts: &SolveOptions) -> Result<f64> {
    match opts.cubic_solver {
        crate::model::CubicSolver::Cardano => solve_t_cardano(l_prime),
        crate::model::CubicSolver::Newton => solve_t_newton(l_prime, opts).map(|(t, _)| t),
    }
}

/// Everything up to the phi iteration.
#[inline(always)]
pub(crate) fn prepare(c: &LgjColor, opts: &SolveOptions) -> Result<PhiProblem> {
    if !c.is_finite() {
        return Err(Error::DegenerateInput("L, g, j must be finite"));
    }
    let l_prime = lprime_from_l(c.l);
    let t = solve_t(l_prime, opts)?;
    let gathered = gather_from_t(t, l_prime, c.g, c.j)?;
    if !(gathered.y0 > DEGENERATE_TOL) {
        return Err(Error::DegenerateInput("recovered Y0 is not positive"));
    }
    Ok(PhiProblem::new(&gathered, opts))
}

/// OSA-UCS Lgj → XYZ (0–100 scale).
pub fn lgj_to_xyz(c: &LgjColor, opts: &SolveOptions) -> Result<(XyzColor, InverseTrace)> {
    opts.validate()?;
    let problem = prepare(c, opts)?;
    let (_, e, trace) = newton_on_phi(&problem, opts)?;
    Ok((XyzColor::from(e.xyz), trace))
}
