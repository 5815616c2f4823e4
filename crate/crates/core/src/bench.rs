//! Timing harness: batch inversion against a cube-root baseline, and the
//! two cubic solvers against each other.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch::{batch_lgj_to_xyz_with, batch_xyz_to_lgj, ColorBatch, Parallelism};
use crate::inverse::{lprime_from_l, solve_t_cardano, solve_t_newton};
use crate::model::{signed_cbrt, CubicSolver, SolveOptions, XyzColor};

/// XYZ triples with components uniform in `[1, 100]`.
pub fn random_xyz(n: usize, seed: u64) -> Vec<XyzColor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            XyzColor::new(
                rng.random_range(1.0..=100.0),
                rng.random_range(1.0..=100.0),
                rng.random_range(1.0..=100.0),
            )
        })
        .collect()
}

/// Forward images of [`random_xyz`].
pub fn random_lgj(n: usize, seed: u64) -> ColorBatch {
    batch_xyz_to_lgj(&ColorBatch::from_xyz(&random_xyz(n, seed))).0
}

/// Fastest of `repeats` runs, in seconds.
pub fn best_of<T>(repeats: usize, mut f: impl FnMut() -> T) -> f64 {
    (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            black_box(f());
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Seconds to take one cube root of every value.
pub fn time_cbrt(values: &[f64], repeats: usize) -> f64 {
    let mut out = vec![0.0; values.len()];
    best_of(repeats, || {
        for (o, &v) in out.iter_mut().zip(black_box(values)) {
            *o = signed_cbrt(v);
        }
        black_box(&out);
    })
}

/// Seconds for Cardano and for Newton to solve the cubic once per `L'`.
pub fn time_cubic_solvers(l_primes: &[f64], repeats: usize) -> (f64, f64) {
    let opts = SolveOptions {
        cubic_solver: CubicSolver::Newton,
        ..Default::default()
    };
    let mut out = vec![0.0; l_primes.len()];
    let cardano = best_of(repeats, || {
        for (o, &lp) in out.iter_mut().zip(black_box(l_primes)) {
            *o = solve_t_cardano(lp).unwrap_or(f64::NAN);
        }
        black_box(&out);
    });
    let newton = best_of(repeats, || {
        for (o, &lp) in out.iter_mut().zip(black_box(l_primes)) {
            *o = solve_t_newton(lp, &opts).map_or(f64::NAN, |(t, _)| t);
        }
        black_box(&out);
    });
    (cardano, newton)
}

/// One benchmark record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub kind: &'static str,
    pub size: usize,
    /// Batch inversion wall time.
    pub seconds: f64,
    pub cbrt_seconds: f64,
    /// Per-element inversion cost in cube roots.
    pub ratio_to_cbrt: f64,
    pub cubic_cardano_seconds: f64,
    pub cubic_newton_seconds: f64,
    pub cubic_ratio: f64,
    pub failures: usize,
}

/// Times `batch_lgj_to_xyz` on `size` random in-gamut colors.
pub fn run_bench(size: usize, repeats: usize, seed: u64, parallelism: Parallelism) -> BenchReport {
    let lgj = random_lgj(size, seed);
    let opts = SolveOptions::default();
    let mut failures = 0;
    let seconds = best_of(repeats, || {
        let (out, report) = batch_lgj_to_xyz_with(&lgj, &opts, parallelism).expect("valid options");
        failures = report.failed_indices.len();
        out
    });
    let (ls, _, _) = lgj.channels();
    let l_primes: Vec<f64> = ls.iter().map(|&l| lprime_from_l(l)).collect();
    let cbrt_seconds = time_cbrt(&l_primes, repeats);
    let (cardano, newton) = time_cubic_solvers(&l_primes, repeats);
    BenchReport {
        kind: "batch_lgj_to_xyz",
        size,
        seconds,
        cbrt_seconds,
        ratio_to_cbrt: seconds / cbrt_seconds,
        cubic_cardano_seconds: cardano,
        cubic_newton_seconds: newton,
        cubic_ratio: newton / cardano,
        failures,
    }
}

/// Powers of two `2^0 ..= 2^max_exp`.
pub fn default_sizes(max_exp: u32) -> Vec<usize> {
    (0..=max_exp).map(|e| 1usize << e).collect()
}
