use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use osa_ucs::batch::{batch_lgj_to_xyz, batch_xyz_to_lgj, ColorBatch, Parallelism};
use osa_ucs::bench::{default_sizes, run_bench};
use osa_ucs::figure::{sample_f_curve, sample_phi_curve, CurvePoint};
use osa_ucs::{xyz_to_lgj, CubicSolver, LgjColor, SolveOptions, XyzColor};
use serde_json::json;

use crate::error::CliError;
use crate::io::{json_number, open_input, open_output, read_rows, write_rows, Format, Num, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    XyzToLgj,
    LgjToXyz,
}

impl Direction {
    fn spaces(self) -> (Space, Space) {
        match self {
            Direction::XyzToLgj => (Space::Xyz, Space::Lgj),
            Direction::LgjToXyz => (Space::Lgj, Space::Xyz),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Cardano,
    Newton,
}

/// Conversion job settings shared by `convert` and `roundtrip`.
#[derive(Debug, Clone, Args)]
pub struct JobConfig {
    #[arg(long, value_enum, default_value_t = Direction::XyzToLgj)]
    pub direction: Direction,
    /// Input file, `-` for stdin.
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    /// Output file, `-` for stdout.
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Newton tolerance on phi, relative to max(1, Y0).
    #[arg(long, default_value_t = 1e-12, allow_hyphen_values = true)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = Solver::Cardano)]
    pub cubic_solver: Solver,
}

impl JobConfig {
    fn solve_options(&self) -> Result<SolveOptions, CliError> {
        if self.input.as_os_str().is_empty() || self.output.as_os_str().is_empty() {
            return Err(CliError::Config("paths must be nonempty".into()));
        }
        let opts = SolveOptions {
            cubic_solver: match self.cubic_solver {
                Solver::Cardano => CubicSolver::Cardano,
                Solver::Newton => CubicSolver::Newton,
            },
            newton_tol: self.tol,
            max_iter: self.max_iter,
            ..Default::default()
        };
        opts.validate()?;
        Ok(opts)
    }

    fn read_input(&self, space: Space) -> Result<Vec<[f64; 3]>, CliError> {
        read_rows(open_input(&self.input)?, self.format, space)
    }
}

/// Whether the command finished with every row converted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    PartialFailure,
}

struct Converted {
    rows: Vec<[f64; 3]>,
    /// Error kind per row, `None` where the row converted.
    failures: Vec<Option<&'static str>>,
}

impl Converted {
    fn failed(&self) -> impl Iterator<Item = usize> + '_ {
        self.failures
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.map(|_| i))
    }
}

fn convert_rows(
    rows: &[[f64; 3]],
    direction: Direction,
    opts: &SolveOptions,
) -> Result<Converted, CliError> {
    let batch: ColorBatch = rows.iter().copied().collect();
    match direction {
        Direction::XyzToLgj => {
            let (out, valid) = batch_xyz_to_lgj(&batch);
            let failures = valid
                .iter()
                .zip(rows)
                .map(|(ok, r)| match ok {
                    true => None,
                    false => xyz_to_lgj(&XyzColor::from(*r)).err().map(|e| e.kind()),
                })
                .collect();
            Ok(Converted {
                rows: out.iter().collect(),
                failures,
            })
        }
        Direction::LgjToXyz => {
            let (out, report) = batch_lgj_to_xyz(&batch, opts)?;
            let mut failures = vec![None; rows.len()];
            for (&i, &kind) in report.failed_indices.iter().zip(&report.failure_kinds) {
                failures[i] = Some(kind);
            }
            Ok(Converted {
                rows: out.iter().collect(),
                failures,
            })
        }
    }
}

pub fn cmd_convert(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let opts = cfg.solve_options()?;
    let (from, to) = cfg.direction.spaces();
    let rows = cfg.read_input(from)?;
    let converted = convert_rows(&rows, cfg.direction, &opts)?;
    let any_failed = converted.failed().next().is_some();
    let status: Vec<&str> = converted
        .failures
        .iter()
        .map(|f| f.unwrap_or("ok"))
        .collect();
    let out = open_output(&cfg.output)?;
    write_rows(
        out,
        cfg.format,
        to,
        &converted.rows,
        any_failed.then_some(&status[..]),
    )
    .map_err(|e| CliError::io(&cfg.output, e))?;
    Ok(if any_failed {
        Outcome::PartialFailure
    } else {
        Outcome::Success
    })
}

#[derive(Debug, Clone, Args)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub job: JobConfig,
    /// Largest componentwise error still counted as a pass.
    #[arg(long, default_value_t = 1e-8)]
    pub max_error: f64,
}

/// Converts there and back, then writes a one-line summary.
pub fn cmd_roundtrip(args: &RoundtripArgs) -> Result<Outcome, CliError> {
    let cfg = &args.job;
    let opts = cfg.solve_options()?;
    let back_direction = match cfg.direction {
        Direction::XyzToLgj => Direction::LgjToXyz,
        Direction::LgjToXyz => Direction::XyzToLgj,
    };
    let rows = cfg.read_input(cfg.direction.spaces().0)?;
    let there = convert_rows(&rows, cfg.direction, &opts)?;
    let back = convert_rows(&there.rows, back_direction, &opts)?;

    let mut failed: Vec<usize> = there.failed().chain(back.failed()).collect();
    failed.sort_unstable();
    failed.dedup();
    let mut max_error = 0.0f64;
    let mut worst = None;
    for (i, (a, b)) in rows.iter().zip(&back.rows).enumerate() {
        if failed.binary_search(&i).is_ok() {
            continue;
        }
        let err = a
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        if err > max_error || err.is_nan() {
            max_error = err;
            worst = Some(i);
        }
    }
    // Distance between the image of what came back and the first
    // conversion. Small even where the map is not injective.
    let image = convert_rows(&back.rows, cfg.direction, &opts)?;
    let max_image_error = there
        .rows
        .iter()
        .zip(&image.rows)
        .enumerate()
        .filter(|(i, _)| failed.binary_search(i).is_err())
        .flat_map(|(_, (a, b))| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    let pass = failed.is_empty() && max_error < args.max_error;

    let mut out = open_output(&cfg.output)?;
    let summary = json!({
        "rows": rows.len(),
        "max_abs_error": json_number(max_error),
        "worst_index": worst,
        "max_image_error": json_number(max_image_error),
        "failures": failed.len(),
        "failed_indices": failed,
        "pass": pass,
    });
    writeln!(out, "{summary}")
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&cfg.output, e))?;
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::PartialFailure
    })
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Batch sizes; defaults to 1, 2, 4, ..., 2^22.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
}

/// One JSON line per size.
pub fn cmd_bench(args: &BenchArgs) -> Result<Outcome, CliError> {
    let sizes = args.sizes.clone().unwrap_or_else(|| default_sizes(22));
    if sizes.contains(&0) || args.repeats == 0 {
        return Err(CliError::Config(
            "sizes and repeats must be at least 1".into(),
        ));
    }
    let mut out = open_output(&args.output)?;
    for size in sizes {
        let report = run_bench(size, args.repeats, args.seed, Parallelism::default());
        let line = serde_json::to_string(&report).expect("report serializes");
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(&args.output, e))?;
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, Subcommand)]
pub enum Curve {
    /// The lightness cubic f(t).
    Cubic {
        #[arg(long, default_value_t = 25.0)]
        l_prime: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        max: f64,
    },
    /// phi(w) for the color with the given XYZ.
    Phi {
        #[arg(long, value_delimiter = ',', default_values_t = [12.0, 67.0, 20.0])]
        xyz: Vec<f64>,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        max: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[command(subcommand)]
    pub curve: Curve,
    /// Grid points.
    #[arg(long, short, default_value_t = 601, global = true)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    #[arg(long, short, default_value = "-", global = true)]
    pub output: PathBuf,
}

/// Curve samples as `x,y` rows; gaps are empty cells or `null`.
pub fn cmd_figure(args: &FigureArgs) -> Result<Outcome, CliError> {
    let (names, points): ([&str; 2], Vec<CurvePoint>) = match &args.curve {
        Curve::Cubic { l_prime, min, max } => {
            (["t", "f"], sample_f_curve(*l_prime, *min, *max, args.n)?)
        }
        Curve::Phi { xyz, min, max } => {
            if xyz.len() != 3 {
                return Err(CliError::Config("--xyz takes three values".into()));
            }
            let lgj: LgjColor = xyz_to_lgj(&XyzColor::new(xyz[0], xyz[1], xyz[2]))?;
            (["w", "phi"], sample_phi_curve(&lgj, *min, *max, args.n)?)
        }
    };
    let mut out = open_output(&args.output)?;
    let write = |out: &mut Box<dyn Write>| -> std::io::Result<()> {
        match args.format {
            Format::Csv => {
                writeln!(out, "{},{}", names[0], names[1])?;
                for p in &points {
                    match p.y {
                        Some(y) => writeln!(out, "{},{}", Num(p.x), Num(y))?,
                        None => writeln!(out, "{},", Num(p.x))?,
                    }
                }
            }
            Format::Jsonl => {
                for p in &points {
                    let y = p.y.map_or(serde_json::Value::Null, json_number);
                    writeln!(
                        out,
                        "{}",
                        json!({ names[0]: json_number(p.x), names[1]: y })
                    )?;
                }
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| CliError::io(&args.output, e))?;
    Ok(Outcome::Success)
}
