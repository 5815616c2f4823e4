//! Structure-of-arrays batch conversion.
//!
//! Every pipeline step runs as a pass over whole arrays. The inverse runs
//! one masked Newton loop over all lanes: converged lanes keep their values
//! frozen while the rest iterate, until the last lane finishes or
//! `max_iter` is hit. Lanes share the per-element kernels of the scalar
//! modules, so batch and scalar results agree bit for bit.
//!
//! Large batches are split into chunks converted on the rayon pool. Each
//! lane's arithmetic is independent of its neighbours, so the output does
//! not depend on the chunking.

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{ab_from_cbrt_rgb, lgj_from_parts};
use crate::inverse::{
    acceptable, gather_from_t, lprime_from_l, phi_derivative_fd, solve_t_cardano, InverseTrace,
    PhiEval, PhiProblem, FD_MISMATCH_TOL, MAX_HALVINGS, STEP_FLOOR,
};
use crate::model::{
    initial_w, k_factor, signed_cbrt, CubicSolver, LgjColor, SolveOptions, XyzColor,
    LIGHTNESS_DIVISOR, LIGHTNESS_SHIFT, SMALL_TERM, SMALL_TERM_CUBED, XYZ_TO_RGB,
};

const DEGENERATE_TOL: f64 = 1e-14;
const FORWARD_BLOCK: usize = 1024;
const INVERSE_BLOCK: usize = 256;

/// Three aligned channels: X, Y, Z or L, g, j.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColorBatch {
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl ColorBatch {
    pub fn new(c0: Vec<f64>, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        if c0.len() != c1.len() || c0.len() != c2.len() {
            return Err(Error::LengthMismatch(c0.len(), c1.len(), c2.len()));
        }
        Ok(Self { c0, c1, c2 })
    }

    fn filled(len: usize, value: f64) -> Self {
        Self {
            c0: vec![value; len],
            c1: vec![value; len],
            c2: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c0.is_empty()
    }

    pub fn channels(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.c0, &self.c1, &self.c2)
    }

    pub fn get(&self, i: usize) -> [f64; 3] {
        [self.c0[i], self.c1[i], self.c2[i]]
    }

    pub fn iter(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn push(&mut self, v: [f64; 3]) {
        self.c0.push(v[0]);
        self.c1.push(v[1]);
        self.c2.push(v[2]);
    }

    fn slice(&self, start: usize, end: usize) -> ColorBatch {
        ColorBatch {
            c0: self.c0[start..end].to_vec(),
            c1: self.c1[start..end].to_vec(),
            c2: self.c2[start..end].to_vec(),
        }
    }

    fn extend(&mut self, other: ColorBatch) {
        self.c0.extend(other.c0);
        self.c1.extend(other.c1);
        self.c2.extend(other.c2);
    }

    pub fn from_xyz(colors: &[XyzColor]) -> Self {
        colors.iter().map(|c| c.to_array()).collect()
    }

    pub fn from_lgj(colors: &[LgjColor]) -> Self {
        colors.iter().map(|c| c.to_array()).collect()
    }
}

impl FromIterator<[f64; 3]> for ColorBatch {
    fn from_iter<I: IntoIterator<Item = [f64; 3]>>(iter: I) -> Self {
        let mut batch = ColorBatch::default();
        for v in iter {
            batch.push(v);
        }
        batch
    }
}

/// Outcome of a batch inversion.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BatchReport {
    pub converged: usize,
    pub failed_indices: Vec<usize>,
    /// Error class per entry of `failed_indices`.
    pub failure_kinds: Vec<&'static str>,
    pub max_iterations_used: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl BatchReport {
    pub fn len(&self) -> usize {
        self.converged + self.failed_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn merge(&mut self, other: BatchReport, offset: usize) {
        self.converged += other.converged;
        self.failed_indices
            .extend(other.failed_indices.into_iter().map(|i| i + offset));
        self.failure_kinds.extend(other.failure_kinds);
        self.max_iterations_used = self.max_iterations_used.max(other.max_iterations_used);
    }
}

/// Chunking of large batches across the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parallelism {
    /// Batches shorter than this run as one chunk on the calling thread.
    pub threshold: usize,
    pub chunk_len: usize,
}

impl Default for Parallelism {
    fn default() -> Self {
        Self {
            threshold: 1 << 20,
            chunk_len: 1 << 16,
        }
    }
}

impl Parallelism {
    pub const SEQUENTIAL: Parallelism = Parallelism {
        threshold: usize::MAX,
        chunk_len: usize::MAX,
    };

    fn chunks(&self, len: usize) -> Vec<(usize, usize)> {
        if len < self.threshold || self.chunk_len == 0 || len <= self.chunk_len {
            return vec![(0, len)];
        }
        (0..len)
            .step_by(self.chunk_len)
            .map(|s| (s, (s + self.chunk_len).min(len)))
            .collect()
    }
}

/// XYZ → Lgj over a batch. The mask is `false` for elements the scalar
/// conversion rejects; their output lanes hold NaN.
pub fn batch_xyz_to_lgj(batch: &ColorBatch) -> (ColorBatch, Vec<bool>) {
    let n = batch.len();
    let mut out = ColorBatch::filled(n, 0.0);
    let mut valid = vec![false; n];
    let mut start = 0;
    while start < n {
        let end = (start + FORWARD_BLOCK).min(n);
        forward_block(batch, start, end, &mut out, &mut valid);
        start = end;
    }
    (out, valid)
}

fn forward_block(
    batch: &ColorBatch,
    start: usize,
    end: usize,
    out: &mut ColorBatch,
    valid: &mut [bool],
) {
    let (xs, ys, zs) = (
        &batch.c0[start..end],
        &batch.c1[start..end],
        &batch.c2[start..end],
    );
    let n = end - start;
    let mut y0 = [0.0; FORWARD_BLOCK];
    let mut ok = [false; FORWARD_BLOCK];
    let (y0, ok) = (&mut y0[..n], &mut ok[..n]);

    // chromaticity and K
    for i in 0..n {
        let sum = xs[i] + ys[i] + zs[i];
        ok[i] = sum > 0.0
            && sum.is_finite()
            && xs[i].is_finite()
            && ys[i].is_finite()
            && zs[i].is_finite();
        y0[i] = ys[i] * k_factor(xs[i] / sum, ys[i] / sum);
    }

    // lightness
    let mut lp = [0.0; FORWARD_BLOCK];
    let mut chroma = [0.0; FORWARD_BLOCK];
    let (lp, chroma) = (&mut lp[..n], &mut chroma[..n]);
    for i in 0..n {
        let shifted = signed_cbrt(y0[i]) - LIGHTNESS_SHIFT;
        ok[i] &= y0[i] > DEGENERATE_TOL && y0[i].is_finite() && shifted.abs() >= DEGENERATE_TOL;
        lp[i] = LIGHTNESS_DIVISOR * (shifted + SMALL_TERM * signed_cbrt(y0[i] - 30.0));
        chroma[i] = lp[i] / (LIGHTNESS_DIVISOR * shifted);
    }

    // cube-root RGB, then a, b and the final coordinates
    let m = &XYZ_TO_RGB;
    let (ls, gs, js) = (
        &mut out.c0[start..end],
        &mut out.c1[start..end],
        &mut out.c2[start..end],
    );
    for i in 0..n {
        let (x, y, z) = (xs[i], ys[i], zs[i]);
        let cr = signed_cbrt(m[0][0] * x + m[0][1] * y + m[0][2] * z);
        let cg = signed_cbrt(m[1][0] * x + m[1][1] * y + m[1][2] * z);
        let cb = signed_cbrt(m[2][0] * x + m[2][1] * y + m[2][2] * z);
        let (a, b) = ab_from_cbrt_rgb(cr, cg, cb);
        let lgj = lgj_from_parts(lp[i], chroma[i], a, b);
        let nan = f64::NAN;
        ls[i] = if ok[i] { lgj.l } else { nan };
        gs[i] = if ok[i] { lgj.g } else { nan };
        js[i] = if ok[i] { lgj.j } else { nan };
    }
    valid[start..end].copy_from_slice(ok);
}

/// Per-lane state of the masked iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Lane {
    Active,
    Converged(usize),
    Failed(&'static str),
}

/// Solves the lightness cubic for every `L'`. Newton runs masked over the
/// whole array until its last lane converges. Failed lanes hold NaN and are
/// listed with their error.
pub fn batch_solve_t(l_primes: &[f64], opts: &SolveOptions) -> (Vec<f64>, Vec<(usize, Error)>) {
    match opts.cubic_solver {
        CubicSolver::Cardano => {
            let mut failures = Vec::new();
            let ts = l_primes
                .iter()
                .enumerate()
                .map(|(i, &lp)| {
                    solve_t_cardano(lp).unwrap_or_else(|e| {
                        failures.push((i, e));
                        f64::NAN
                    })
                })
                .collect();
            (ts, failures)
        }
        CubicSolver::Newton => masked_newton_t(l_primes, opts),
    }
}

fn masked_newton_t(l_primes: &[f64], opts: &SolveOptions) -> (Vec<f64>, Vec<(usize, Error)>) {
    let n = l_primes.len();
    let u: Vec<f64> = l_primes
        .iter()
        .map(|&lp| lp / LIGHTNESS_DIVISOR + LIGHTNESS_SHIFT)
        .collect();
    let mut t = u.clone();
    let mut f = vec![0.0; n];
    let mut lanes: Vec<Lane> = l_primes
        .iter()
        .map(|lp| {
            if lp.is_finite() {
                Lane::Active
            } else {
                Lane::Failed("degenerate_input")
            }
        })
        .collect();
    let mut active = lanes.iter().filter(|l| **l == Lane::Active).count();
    let mut it = 0;
    while active > 0 && it < opts.max_iter {
        for i in 0..n {
            let d = u[i] - t[i];
            let t3 = t[i] * t[i] * t[i];
            let fi = d * d * d - SMALL_TERM_CUBED * (t3 - 30.0);
            let fp = -3.0 * d * d - 3.0 * SMALL_TERM_CUBED * t[i] * t[i];
            let step = fi / fp;
            if lanes[i] == Lane::Active {
                f[i] = fi;
                t[i] -= step;
                if fi.abs() <= opts.newton_tol * t3.abs().max(1.0)
                    || step.abs() < STEP_FLOOR * t[i].abs()
                {
                    lanes[i] = Lane::Converged(it + 1);
                    active -= 1;
                }
            }
        }
        it += 1;
    }
    let mut failures = Vec::new();
    for (i, lane) in lanes.iter().enumerate() {
        let err = match lane {
            Lane::Converged(_) => continue,
            Lane::Failed(_) => Error::DegenerateInput("L' must be finite"),
            Lane::Active => Error::ConvergenceFailure {
                trace: InverseTrace {
                    iterations: opts.max_iter,
                    final_phi: f[i],
                    w_root: t[i],
                    ..Default::default()
                },
            },
        };
        t[i] = f64::NAN;
        failures.push((i, err));
    }
    (t, failures)
}

/// Lgj → XYZ over a batch with the default chunking.
pub fn batch_lgj_to_xyz(
    batch: &ColorBatch,
    opts: &SolveOptions,
) -> Result<(ColorBatch, BatchReport)> {
    batch_lgj_to_xyz_with(batch, opts, Parallelism::default())
}

pub fn batch_lgj_to_xyz_with(
    batch: &ColorBatch,
    opts: &SolveOptions,
    parallelism: Parallelism,
) -> Result<(ColorBatch, BatchReport)> {
    opts.validate()?;
    let started = Instant::now();
    let chunks = parallelism.chunks(batch.len());
    let results: Vec<(ColorBatch, BatchReport)> = if chunks.len() == 1 {
        vec![inverse_chunk(batch, opts)]
    } else {
        chunks
            .par_iter()
            .map(|&(s, e)| inverse_chunk(&batch.slice(s, e), opts))
            .collect()
    };
    let mut out = ColorBatch::default();
    let mut report = BatchReport::default();
    for ((s, _), (colors, r)) in chunks.into_iter().zip(results) {
        out.extend(colors);
        report.merge(r, s);
    }
    report.wall_time = started.elapsed().as_secs_f64();
    Ok((out, report))
}

/// SoA storage for phi evaluations.
struct PhiLanes {
    value: Vec<f64>,
    derivative: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    sum: Vec<f64>,
    singular: Vec<bool>,
}

impl PhiLanes {
    fn new(n: usize) -> Self {
        Self {
            value: vec![0.0; n],
            derivative: vec![0.0; n],
            x: vec![0.0; n],
            y: vec![0.0; n],
            z: vec![0.0; n],
            sum: vec![0.0; n],
            singular: vec![false; n],
        }
    }

    #[inline(always)]
    fn set(&mut self, i: usize, e: &PhiEval) {
        self.value[i] = e.value;
        self.derivative[i] = e.derivative;
        self.x[i] = e.xyz[0];
        self.y[i] = e.xyz[1];
        self.z[i] = e.xyz[2];
        self.sum[i] = e.sum;
        self.singular[i] = e.singular;
    }

    #[inline(always)]
    fn get(&self, i: usize) -> PhiEval {
        PhiEval {
            value: self.value[i],
            derivative: self.derivative[i],
            xyz: [self.x[i], self.y[i], self.z[i]],
            sum: self.sum[i],
            singular: self.singular[i],
        }
    }

    fn eval_all(&mut self, problems: &[PhiProblem], w: &[f64]) {
        for (i, (p, &wi)) in problems.iter().zip(w).enumerate() {
            let e = p.eval(wi);
            self.set(i, &e);
        }
    }
}

fn inverse_chunk(batch: &ColorBatch, opts: &SolveOptions) -> (ColorBatch, BatchReport) {
    let n = batch.len();
    if n <= INVERSE_BLOCK {
        return inverse_block(batch, opts);
    }
    let mut out = ColorBatch::default();
    let mut report = BatchReport::default();
    for s in (0..n).step_by(INVERSE_BLOCK) {
        let (colors, r) = inverse_block(&batch.slice(s, (s + INVERSE_BLOCK).min(n)), opts);
        out.extend(colors);
        report.merge(r, s);
    }
    (out, report)
}

fn inverse_block(batch: &ColorBatch, opts: &SolveOptions) -> (ColorBatch, BatchReport) {
    let n = batch.len();
    let mut lanes = vec![Lane::Active; n];

    // L' and t
    let finite: Vec<bool> = batch
        .iter()
        .map(|v| v.iter().all(|c| c.is_finite()))
        .collect();
    let l_primes: Vec<f64> = batch.c0.iter().map(|&l| lprime_from_l(l)).collect();
    let (ts, t_failures) = batch_solve_t(&l_primes, opts);
    let mut t_errors: Vec<Option<Error>> = vec![None; n];
    for (i, e) in t_failures {
        t_errors[i] = Some(e);
    }

    // Y0, C, a, b
    let mut problems = Vec::with_capacity(n);
    for i in 0..n {
        let gathered = match (t_errors[i].take(), finite[i]) {
            (_, false) => Err(Error::DegenerateInput("L, g, j must be finite")),
            (Some(e), _) => Err(e),
            (None, _) => {
                gather_from_t(ts[i], l_primes[i], batch.c1[i], batch.c2[i]).and_then(|g| {
                    if g.y0 > DEGENERATE_TOL {
                        Ok(g)
                    } else {
                        Err(Error::DegenerateInput("recovered Y0 is not positive"))
                    }
                })
            }
        };
        match gathered {
            Ok(g) => problems.push(PhiProblem::new(&g, opts)),
            Err(e) => {
                lanes[i] = Lane::Failed(e.kind());
                // Placeholder target; the lane never becomes active.
                problems.push(PhiProblem {
                    a: 0.0,
                    b: 0.0,
                    y0: 1.0,
                    tol_abs: 1.0,
                });
            }
        }
    }

    // masked Newton on phi
    let mut w = vec![initial_w(); n];
    let mut cur = PhiLanes::new(n);
    cur.eval_all(&problems, &w);
    for i in 0..n {
        if lanes[i] == Lane::Active && (cur.singular[i] || !(cur.sum[i] > 0.0)) {
            lanes[i] = Lane::Failed("singularity_hit");
        }
    }

    let mut step = vec![0.0; n];
    let mut cand_w = w.clone();
    let mut cand = PhiLanes::new(n);
    let mut fd_corrections = vec![0usize; n];
    let mut active = lanes.iter().filter(|l| **l == Lane::Active).count();
    let mut it = 0;
    while active > 0 && it < opts.max_iter {
        // convergence test and full steps
        for i in 0..n {
            if lanes[i] != Lane::Active {
                cand_w[i] = w[i];
                continue;
            }
            let e = cur.get(i);
            if problems[i].converged(&e) {
                lanes[i] = Lane::Converged(it);
                active -= 1;
                cand_w[i] = w[i];
                continue;
            }
            let mut derivative = e.derivative;
            if opts.fd_check {
                if let Ok(fd) = phi_derivative_fd(w[i], problems[i].a, problems[i].b) {
                    if (derivative - fd).abs() > FD_MISMATCH_TOL * fd.abs() {
                        derivative = fd;
                        fd_corrections[i] += 1;
                    }
                }
            }
            step[i] = e.value / derivative;
            if !step[i].is_finite() {
                lanes[i] = Lane::Failed("convergence_failure");
                active -= 1;
                cand_w[i] = w[i];
                continue;
            }
            cand_w[i] = w[i] - step[i];
        }

        // candidates for every lane; frozen lanes recompute their own point
        cand.eval_all(&problems, &cand_w);

        // halve rejected steps, then commit
        for i in 0..n {
            if lanes[i] != Lane::Active {
                continue;
            }
            let current = cur.get(i);
            let mut c = cand.get(i);
            let mut halvings = 0;
            while !acceptable(&c, &current) {
                if halvings == MAX_HALVINGS {
                    lanes[i] = Lane::Failed(if c.singular {
                        "singularity_hit"
                    } else {
                        "convergence_failure"
                    });
                    active -= 1;
                    break;
                }
                halvings += 1;
                step[i] *= 0.5;
                cand_w[i] = w[i] - step[i];
                c = problems[i].eval(cand_w[i]);
            }
            if lanes[i] != Lane::Active {
                continue;
            }
            w[i] = cand_w[i];
            cur.set(i, &c);
            if step[i].abs() < STEP_FLOOR * w[i].abs() {
                lanes[i] = Lane::Converged(it + 1);
                active -= 1;
            }
        }
        it += 1;
    }
    for i in 0..n {
        if lanes[i] == Lane::Active {
            lanes[i] = if problems[i].converged(&cur.get(i)) {
                Lane::Converged(opts.max_iter)
            } else {
                Lane::Failed("convergence_failure")
            };
        }
    }

    let mut out = ColorBatch::filled(n, f64::NAN);
    let mut report = BatchReport::default();
    for (i, lane) in lanes.iter().enumerate() {
        match *lane {
            Lane::Converged(iters) => {
                out.c0[i] = cur.x[i];
                out.c1[i] = cur.y[i];
                out.c2[i] = cur.z[i];
                report.converged += 1;
                report.max_iterations_used = report.max_iterations_used.max(iters);
            }
            Lane::Failed(kind) => {
                report.failed_indices.push(i);
                report.failure_kinds.push(kind);
            }
            Lane::Active => unreachable!("all lanes resolved above"),
        }
    }
    (out, report)
}
