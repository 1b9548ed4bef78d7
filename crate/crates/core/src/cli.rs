//! Command-line front end: `generate`, `solve`, `verify`, `bench`, `kalman`.
//!
//! Exit codes: 0 on success, 1 when a solver or file operation fails, 2 on
//! usage errors. `BLOCKTRI_THREADS` caps the worker pool used for batches.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bench::{bench_shape, write_report, BenchConfig, ReportFormat, Sweep};
use crate::block_cholesky::{serial_factorize, serial_solve};
use crate::error::Error;
use crate::io::{read_btd, write_btd, write_kalman_system, KalmanHeader};
use crate::kalman::{build_normal_equations, simulate_rotation_model, RotationModelSpec};
use crate::kernels::BatchPolicy;
use crate::oracle::{self, MAX_ORACLE_DIM};
use crate::report::residual_report;
use crate::schur::{recursive_factorize, RecursionConfig};
use crate::synth::generate_spd_btd;
use crate::types::{BlockRhs, BlockTridiagonalMatrix};

/// Matrices above this many bytes trigger a memory warning in `bench`.
const LARGE_INSTANCE_BYTES: u64 = 1 << 30;

#[derive(Debug, Parser)]
#[command(name = "blocktri", version, about = "SPD block-tridiagonal solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded random SPD system with right-hand side.
    Generate(GenerateArgs),
    /// Solve the system stored in a file.
    Solve(SolveArgs),
    /// Cross-check the recursive, serial and dense solvers on a file.
    Verify(VerifyArgs),
    /// Time the recursive and serial solvers over a sweep of shapes.
    Bench(BenchArgs),
    /// Build and solve Kalman smoothing normal equations.
    Kalman(KalmanArgs),
}

#[derive(Debug, Args, Clone, Copy)]
struct RecursionArgs {
    /// Recurse while the system has more than this many block rows.
    #[arg(long = "n-star", default_value_t = RecursionConfig::DEFAULT_N_STAR)]
    n_star: usize,
    /// Interior blocks per segment.
    #[arg(long, default_value_t = RecursionConfig::DEFAULT_REDUCTION_FACTOR)]
    rho: usize,
    /// Process batches on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl RecursionArgs {
    fn config(&self) -> RecursionConfig {
        let policy = if self.sequential {
            BatchPolicy::Sequential
        } else {
            BatchPolicy::Parallel
        };
        RecursionConfig::new(self.n_star, self.rho).with_policy(policy)
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of diagonal blocks.
    #[arg(long = "N")]
    num_blocks: usize,
    /// Block order.
    #[arg(long = "n")]
    block_dim: usize,
    /// Right-hand side columns.
    #[arg(long = "d", default_value_t = 1)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Write the matrix with the solution as its right-hand side.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    recursion: RecursionArgs,
    /// Use the serial block Cholesky instead of the recursive solver.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    recursion: RecursionArgs,
    /// Tolerance for the recursive solution against the dense one.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// `nn262144`, `nn65536`, or a list such as `512:16,256:32`.
    #[arg(long, default_value = "nn65536")]
    sweep: Sweep,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// `csv` or `md`.
    #[arg(long, default_value = "md")]
    format: ReportFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    recursion: RecursionArgs,
    /// Skip shapes with blocks larger than this.
    #[arg(long)]
    max_n: Option<usize>,
    /// List the shapes and memory estimates without running them.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct KalmanArgs {
    /// State dimension (even).
    #[arg(long = "n", default_value_t = 32)]
    state_dim: usize,
    /// Observation dimension.
    #[arg(long = "m", default_value_t = 128)]
    obs_dim: usize,
    /// Horizon.
    #[arg(long = "N", default_value_t = 100)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step length scaling the rotation angles.
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    /// Use n = 256, m = 1024, N = 100.
    #[arg(long)]
    paper_shape: bool,
    /// Save the normal equations with the model parameters.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    recursion: RecursionArgs,
}

enum Failure {
    Usage(String),
    Solver { stage: &'static str, source: Error },
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Solver { .. } => 1,
        }
    }
}

fn at(stage: &'static str) -> impl FnOnce(Error) -> Failure {
    move |source| match source {
        Error::InvalidConfig(msg) => Failure::Usage(msg),
        source => Failure::Solver { stage, source },
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command, writing
/// reports to `out` and diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    configure_threads(err);
    let result = match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Bench(a) => bench(a, out, err),
        Command::Kalman(a) => kalman(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = match &f {
                Failure::Usage(msg) => writeln!(err, "error: {msg}"),
                Failure::Solver { stage, source } => writeln!(err, "error during {stage}: {source}"),
            };
            f.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn configure_threads(err: &mut dyn Write) {
    let Ok(raw) = std::env::var("BLOCKTRI_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(k) if k > 0 => {
            // a pool may already exist when embedded; that is not an error here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
        _ => {
            let _ = writeln!(err, "warning: ignoring BLOCKTRI_THREADS={raw:?}");
        }
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Solver {
        stage: "writing output",
        source: Error::Io(e),
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Outcome {
    if a.num_blocks == 0 || a.block_dim == 0 || a.cols == 0 {
        return Err(Failure::Usage("--N, --n and --d must be positive".into()));
    }
    let (m, b) = generate_spd_btd(a.num_blocks, a.block_dim, a.cols, a.seed);
    write_btd(&a.out, &m, Some(&b)).map_err(at("write"))?;
    writeln!(
        out,
        "wrote N={} n={} d={} seed={} to {}",
        a.num_blocks,
        a.block_dim,
        a.cols,
        a.seed,
        a.out.display()
    )
    .map_err(io_err)
}

fn load_system(path: &PathBuf) -> std::result::Result<(BlockTridiagonalMatrix, BlockRhs), Failure> {
    let (a, b) = read_btd(path).map_err(at("read"))?;
    let b = b.ok_or_else(|| Failure::Solver {
        stage: "read",
        source: Error::InvalidDimensions(format!("{} has no right-hand side", path.display())),
    })?;
    Ok((a, b))
}

fn solve(args: SolveArgs, out: &mut dyn Write) -> Outcome {
    let cfg = args.recursion.config();
    cfg.validate().map_err(at("configuration"))?;
    let (a, b) = load_system(&args.input)?;

    let (x, factor_ms, solve_ms) = if args.serial {
        let t0 = Instant::now();
        let mut l = a.clone();
        serial_factorize(&mut l).map_err(at("factorization"))?;
        let factor_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let mut x = b.clone();
        serial_solve(&l, &mut x).map_err(at("solve"))?;
        (x, factor_ms, t1.elapsed().as_secs_f64() * 1e3)
    } else {
        let t0 = Instant::now();
        let h = recursive_factorize(&a, &cfg).map_err(at("factorization"))?;
        let factor_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let x = h.solve(&b).map_err(at("solve"))?;
        (x, factor_ms, t1.elapsed().as_secs_f64() * 1e3)
    };
    let r = residual_report(&a, &x, &b).map_err(at("residual"))?;

    writeln!(out, "solver: {}", if args.serial { "serial" } else { "recursive" }).map_err(io_err)?;
    writeln!(out, "factor_ms: {factor_ms:.3}").map_err(io_err)?;
    writeln!(out, "solve_ms: {solve_ms:.3}").map_err(io_err)?;
    writeln!(out, "residual: {:.3e}", r.absolute).map_err(io_err)?;
    writeln!(out, "relative_residual: {:.3e}", r.relative).map_err(io_err)?;
    if let Some(path) = &args.out {
        write_btd(path, &a, Some(&x)).map_err(at("write"))?;
    }
    Ok(())
}

fn relative_max_diff(x: &BlockRhs, reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let diff = x
        .as_slice()
        .iter()
        .zip(reference)
        .fold(0.0f64, |s, (p, q)| s.max((p - q).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let cfg = args.recursion.config();
    cfg.validate().map_err(at("configuration"))?;
    let (a, b) = load_system(&args.input)?;

    let x_rec = recursive_factorize(&a, &cfg)
        .and_then(|h| h.solve(&b))
        .map_err(at("recursive solve"))?;
    let mut l = a.clone();
    let mut x_ser = b.clone();
    serial_factorize(&mut l)
        .and_then(|_| serial_solve(&l, &mut x_ser))
        .map_err(at("serial solve"))?;

    let vs_serial = relative_max_diff(&x_rec, x_ser.as_slice());
    let res = residual_report(&a, &x_rec, &b).map_err(at("residual"))?;
    writeln!(out, "recursive_vs_serial: {vs_serial:.3e}").map_err(io_err)?;
    writeln!(out, "relative_residual: {:.3e}", res.relative).map_err(io_err)?;

    let mut ok = vs_serial <= args.tol && res.relative <= args.tol;
    if a.dim() <= MAX_ORACLE_DIM {
        let xd = oracle::dense_solve(&a.assemble_dense(), &b.to_dense()).map_err(at("dense oracle"))?;
        let xd = BlockRhs::from_dense(&xd, b.block_dim()).map_err(at("dense oracle"))?;
        let vs_dense = relative_max_diff(&x_rec, xd.as_slice());
        writeln!(out, "recursive_vs_dense: {vs_dense:.3e}").map_err(io_err)?;
        ok &= vs_dense <= args.tol;
    } else {
        writeln!(
            out,
            "recursive_vs_dense: skipped (order {} > {MAX_ORACLE_DIM})",
            a.dim()
        )
        .map_err(io_err)?;
    }
    writeln!(out, "status: {}", if ok { "PASS" } else { "FAIL" }).map_err(io_err)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Solver {
            stage: "verification",
            source: Error::InvalidDimensions(format!("solutions disagree beyond tolerance {:.1e}", args.tol)),
        })
    }
}

fn bench(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if args.runs == 0 {
        return Err(Failure::Usage("--runs must be positive".into()));
    }
    let cfg = BenchConfig {
        runs: args.runs,
        rhs_cols: 1,
        seed: args.seed,
        recursion: args.recursion.config(),
    };
    cfg.recursion.validate().map_err(at("configuration"))?;
    let shapes: Vec<_> = args
        .sweep
        .shapes()
        .into_iter()
        .filter(|s| args.max_n.is_none_or(|cap| s.block_dim <= cap))
        .collect();

    for s in &shapes {
        let bytes = s.estimated_bytes();
        if bytes > LARGE_INSTANCE_BYTES {
            let _ = writeln!(
                err,
                "warning: shape {s} needs about {:.1} GiB; use --max-n to skip it",
                bytes as f64 / (1u64 << 30) as f64
            );
        }
    }
    if args.dry_run {
        writeln!(out, "N,n,estimated_bytes").map_err(io_err)?;
        for s in &shapes {
            writeln!(out, "{},{},{}", s.num_blocks, s.block_dim, s.estimated_bytes()).map_err(io_err)?;
        }
        return Ok(());
    }

    let mut rows = Vec::with_capacity(shapes.len());
    for s in shapes {
        rows.push(bench_shape(s, &cfg).map_err(at("benchmark"))?);
    }
    write_report(&rows, args.format, out).map_err(io_err)
}

fn kalman(args: KalmanArgs, out: &mut dyn Write) -> Outcome {
    let mut spec = RotationModelSpec {
        state_dim: args.state_dim,
        obs_dim: args.obs_dim,
        horizon: args.horizon,
        dt: args.dt,
        seed: args.seed,
    };
    if args.paper_shape {
        spec = RotationModelSpec {
            dt: args.dt,
            ..RotationModelSpec::large(args.seed)
        };
    }
    let cfg = args.recursion.config();
    cfg.validate().map_err(at("configuration"))?;

    let (model, truth) = simulate_rotation_model(&spec).map_err(|e| match e {
        Error::InvalidDimensions(msg) => Failure::Usage(msg),
        e => at("model generation")(e),
    })?;
    let t0 = Instant::now();
    let (a, b) = build_normal_equations(&model).map_err(at("normal equations"))?;
    let build_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let h = recursive_factorize(&a, &cfg).map_err(at("factorization"))?;
    let factor_ms = t1.elapsed().as_secs_f64() * 1e3;
    let t2 = Instant::now();
    let x = h.solve(&b).map_err(at("solve"))?;
    let solve_ms = t2.elapsed().as_secs_f64() * 1e3;
    let r = residual_report(&a, &x, &b).map_err(at("residual"))?;

    let sq: f64 = x
        .as_slice()
        .iter()
        .zip(truth.iter().flatten())
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    let rmse = (sq / x.as_slice().len() as f64).sqrt();

    writeln!(
        out,
        "model: n={} m={} N={} dt={} seed={}",
        spec.state_dim, spec.obs_dim, spec.horizon, spec.dt, spec.seed
    )
    .map_err(io_err)?;
    writeln!(out, "build_ms: {build_ms:.3}").map_err(io_err)?;
    writeln!(out, "factor_ms: {factor_ms:.3}").map_err(io_err)?;
    writeln!(out, "solve_ms: {solve_ms:.3}").map_err(io_err)?;
    writeln!(out, "residual: {:.3e}", r.absolute).map_err(io_err)?;
    writeln!(out, "relative_residual: {:.3e}", r.relative).map_err(io_err)?;
    writeln!(out, "state_rmse: {rmse:.3e}").map_err(io_err)?;

    if let Some(path) = &args.out {
        let header = KalmanHeader {
            horizon: spec.horizon as u64,
            state_dim: spec.state_dim as u32,
            obs_dim: spec.obs_dim as u32,
            dt: spec.dt,
            seed: spec.seed,
        };
        write_kalman_system(path, &header, &a, &b).map_err(at("write"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("blocktri").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&[]).0, 2);
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["bench", "--format", "xml"]).0, 2);
        assert_eq!(run_capture(&["bench", "--sweep", "12"]).0, 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        for cmd in ["generate", "solve", "verify", "bench", "kalman"] {
            assert!(out.contains(cmd), "{cmd} missing from help");
        }
    }

    #[test]
    fn missing_file_exits_one() {
        let (code, _, err) = run_capture(&["solve", "--in", "/nonexistent/blocktri.btd"]);
        assert_eq!(code, 1);
        assert!(err.contains("read"), "{err}");
    }

    #[test]
    fn dry_run_lists_shapes() {
        let (code, out, err) = run_capture(&["bench", "--sweep", "nn262144", "--dry-run"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 7);
        assert!(err.contains("warning"), "1024-wide blocks should warn: {err}");
        let (_, out, _) = run_capture(&["bench", "--sweep", "nn262144", "--dry-run", "--max-n", "128"]);
        assert_eq!(out.lines().count(), 4);
    }

    #[test]
    fn kalman_small_runs() {
        let (code, out, err) = run_capture(&[
            "kalman", "--n", "4", "--m", "8", "--N", "20", "--n-star", "4", "--rho", "2",
        ]);
        assert_eq!(code, 0, "{err}");
        let rel: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("relative_residual: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!(rel <= 1e-12);
    }

    #[test]
    fn kalman_bad_shape_is_usage_error() {
        assert_eq!(run_capture(&["kalman", "--n", "3", "--m", "8", "--N", "5"]).0, 2);
    }
}
