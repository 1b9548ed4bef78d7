//! Wall-clock comparison of the recursive and serial solvers.
//!
//! Each measurement runs once untimed as a warm-up, then `runs` times; the
//! report carries the mean. Input copies are made outside the timed region.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::block_cholesky::{serial_factorize, serial_solve};
use crate::error::Result;
use crate::report::residual_report;
use crate::schur::{recursive_factorize, RecursionConfig};
use crate::synth::generate_spd_btd;

/// One `(N, n)` problem shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchShape {
    pub num_blocks: usize,
    pub block_dim: usize,
}

impl BenchShape {
    pub fn new(num_blocks: usize, block_dim: usize) -> Self {
        BenchShape { num_blocks, block_dim }
    }

    /// Bytes held by the matrix and one factored copy.
    pub fn estimated_bytes(&self) -> u64 {
        let (nb, n) = (self.num_blocks as u64, self.block_dim as u64);
        2 * 8 * (2 * nb).saturating_sub(1) * n * n
    }
}

impl fmt::Display for BenchShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.num_blocks, self.block_dim)
    }
}

/// A named list of shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweep {
    /// `N n = 262144` with `n` in 32..=1024.
    Nn262144,
    /// `N n = 65536` with `n` in 32..=256.
    Nn65536,
    Custom(Vec<BenchShape>),
}

impl Sweep {
    pub fn shapes(&self) -> Vec<BenchShape> {
        let fixed_product =
            |total: usize, dims: &[usize]| dims.iter().map(|&n| BenchShape::new(total / n, n)).collect();
        match self {
            Sweep::Nn262144 => fixed_product(262_144, &[32, 64, 128, 256, 512, 1024]),
            Sweep::Nn65536 => fixed_product(65_536, &[32, 64, 128, 256]),
            Sweep::Custom(shapes) => shapes.clone(),
        }
    }
}

impl FromStr for Sweep {
    type Err = String;

    /// `nn262144`, `nn65536`, or a comma-separated list of `N:n` pairs.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nn262144" => Ok(Sweep::Nn262144),
            "nn65536" => Ok(Sweep::Nn65536),
            _ => {
                let shapes = s
                    .split(',')
                    .map(|pair| {
                        let (nb, n) = pair
                            .split_once(':')
                            .ok_or_else(|| format!("expected N:n, got {pair:?}"))?;
                        let parse = |v: &str| {
                            v.trim()
                                .parse::<usize>()
                                .ok()
                                .filter(|&v| v > 0)
                                .ok_or_else(|| format!("bad size {v:?} in {pair:?}"))
                        };
                        Ok(BenchShape::new(parse(nb)?, parse(n)?))
                    })
                    .collect::<std::result::Result<Vec<_>, String>>()?;
                Ok(Sweep::Custom(shapes))
            }
        }
    }
}

/// Mean and extremes of repeated timings, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub runs: usize,
}

/// Runs `setup` then `op` once as warm-up and `runs` more times, timing only
/// `op`. Returns the timing and the result of the last run.
pub fn time_runs<S, T>(
    runs: usize,
    mut setup: impl FnMut() -> S,
    mut op: impl FnMut(S) -> Result<T>,
) -> Result<(Timing, T)> {
    let runs = runs.max(1);
    let mut last = op(setup())?;
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let input = setup();
        let t0 = Instant::now();
        last = op(input)?;
        samples.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let mean_ms = samples.iter().sum::<f64>() / runs as f64;
    let min_ms = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ms = samples.iter().copied().fold(0.0, f64::max);
    Ok((
        Timing {
            mean_ms,
            min_ms,
            max_ms,
            runs,
        },
        last,
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub runs: usize,
    pub rhs_cols: usize,
    pub seed: u64,
    pub recursion: RecursionConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 10,
            rhs_cols: 1,
            seed: 0,
            recursion: RecursionConfig::default(),
        }
    }
}

/// Timings and residuals of both solvers on one shape.
#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub shape: BenchShape,
    pub recursive_factor: Timing,
    pub recursive_solve: Timing,
    pub serial_factor: Timing,
    pub serial_solve: Timing,
    pub recursive_residual: f64,
    pub serial_residual: f64,
}

impl BenchRow {
    /// Serial over recursive factorization time.
    pub fn factor_speedup(&self) -> f64 {
        self.serial_factor.mean_ms / self.recursive_factor.mean_ms
    }
}

/// Generates a seeded instance of `shape` and times both solvers on it.
pub fn bench_shape(shape: BenchShape, cfg: &BenchConfig) -> Result<BenchRow> {
    let (a, b) = generate_spd_btd(shape.num_blocks, shape.block_dim, cfg.rhs_cols, cfg.seed);

    let (recursive_factor, h) = time_runs(cfg.runs, || (), |_| recursive_factorize(&a, &cfg.recursion))?;
    let (recursive_solve, x_rec) = time_runs(cfg.runs, || (), |_| h.solve(&b))?;
    drop(h);

    let (serial_factor, l) = time_runs(
        cfg.runs,
        || a.clone(),
        |mut work| {
            serial_factorize(&mut work)?;
            Ok(work)
        },
    )?;
    let (serial_solve, x_ser) = time_runs(
        cfg.runs,
        || b.clone(),
        |mut x| {
            serial_solve(&l, &mut x)?;
            Ok(x)
        },
    )?;

    Ok(BenchRow {
        shape,
        recursive_factor,
        recursive_solve,
        serial_factor,
        serial_solve,
        recursive_residual: residual_report(&a, &x_rec, &b)?.relative,
        serial_residual: residual_report(&a, &x_ser, &b)?.relative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown format {other:?} (expected csv or md)")),
        }
    }
}

fn report_lines(row: &BenchRow) -> [(&'static str, String, String); 3] {
    [
        (
            "Fact.",
            format!("{:.3}", row.recursive_factor.mean_ms),
            format!("{:.3}", row.serial_factor.mean_ms),
        ),
        (
            "Solve",
            format!("{:.3}", row.recursive_solve.mean_ms),
            format!("{:.3}", row.serial_solve.mean_ms),
        ),
        (
            "Residual",
            format!("{:.3e}", row.recursive_residual),
            format!("{:.3e}", row.serial_residual),
        ),
    ]
}

/// One line per shape and metric: `N,n,metric,recursive,serial`.
/// Times are milliseconds.
pub fn write_csv(rows: &[BenchRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "N,n,metric,recursive,serial")?;
    for row in rows {
        for (metric, rec, ser) in report_lines(row) {
            writeln!(
                w,
                "{},{},{metric},{rec},{ser}",
                row.shape.num_blocks, row.shape.block_dim
            )?;
        }
    }
    Ok(())
}

/// Markdown table with `Fact.`, `Solve` and `Residual` rows per shape.
pub fn write_markdown(rows: &[BenchRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "| N | n | metric | recursive | serial |")?;
    writeln!(w, "|---:|---:|:---|---:|---:|")?;
    for row in rows {
        for (i, (metric, rec, ser)) in report_lines(row).into_iter().enumerate() {
            let (nb, n) = if i == 0 {
                (row.shape.num_blocks.to_string(), row.shape.block_dim.to_string())
            } else {
                (String::new(), String::new())
            };
            writeln!(w, "| {nb} | {n} | {metric} | {rec} | {ser} |")?;
        }
    }
    if let Some(first) = rows.first() {
        writeln!(w)?;
        writeln!(
            w,
            "Times in ms, mean of {} runs after one warm-up.",
            first.recursive_factor.runs
        )?;
    }
    Ok(())
}

pub fn write_report(rows: &[BenchRow], format: ReportFormat, w: &mut dyn Write) -> io::Result<()> {
    match format {
        ReportFormat::Csv => write_csv(rows, w),
        ReportFormat::Markdown => write_markdown(rows, w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_sweeps() {
        let s: Sweep = "nn262144".parse().unwrap();
        let shapes = s.shapes();
        assert_eq!(shapes.len(), 6);
        assert!(shapes.iter().all(|s| s.num_blocks * s.block_dim == 262_144));
        assert_eq!(shapes[0], BenchShape::new(8192, 32));
        let s: Sweep = "nn65536".parse().unwrap();
        assert_eq!(
            s.shapes(),
            vec![
                BenchShape::new(2048, 32),
                BenchShape::new(1024, 64),
                BenchShape::new(512, 128),
                BenchShape::new(256, 256)
            ]
        );
    }

    #[test]
    fn custom_sweep_parsing() {
        let s: Sweep = "10:2, 40:3".parse().unwrap();
        assert_eq!(s.shapes(), vec![BenchShape::new(10, 2), BenchShape::new(40, 3)]);
        assert!("10x2".parse::<Sweep>().is_err());
        assert!("0:2".parse::<Sweep>().is_err());
    }

    #[test]
    fn time_runs_counts_calls() {
        let mut setups = 0;
        let mut ops = 0;
        let (t, v) = time_runs(
            3,
            || {
                setups += 1;
                setups
            },
            |s| {
                ops += 1;
                Ok(s * 10)
            },
        )
        .unwrap();
        assert_eq!((setups, ops, t.runs, v), (4, 4, 3, 40));
        assert!(t.min_ms <= t.mean_ms && t.mean_ms <= t.max_ms);
    }

    #[test]
    fn report_structure_is_fixed() {
        let cfg = BenchConfig {
            runs: 1,
            recursion: RecursionConfig::new(4, 2),
            ..BenchConfig::default()
        };
        let rows: Vec<_> = [BenchShape::new(20, 2), BenchShape::new(9, 3)]
            .iter()
            .map(|&s| bench_shape(s, &cfg).unwrap())
            .collect();
        assert!(rows
            .iter()
            .all(|r| r.recursive_residual < 1e-12 && r.serial_residual < 1e-12));

        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        let keys: Vec<_> = csv
            .lines()
            .map(|l| l.splitn(4, ',').take(3).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(
            keys,
            [
                "N,n,metric",
                "20,2,Fact.",
                "20,2,Solve",
                "20,2,Residual",
                "9,3,Fact.",
                "9,3,Solve",
                "9,3,Residual"
            ]
        );

        let mut md = Vec::new();
        write_markdown(&rows, &mut md).unwrap();
        let md = String::from_utf8(md).unwrap();
        assert!(md.starts_with("| N | n | metric | recursive | serial |"));
        assert_eq!(md.lines().filter(|l| l.contains("| Fact. |")).count(), 2);
    }
}
