//! The `partprune` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::blockexec::{compare_outputs, decompose, masked_matvec, partitioned_matvec};
use crate::error::{Error, Result};
use crate::gen::{generate, Distribution};
use crate::io::{read_matrix, write_json, write_matrix, ResultFile};
use crate::layer::{connectedness_full, validate_assignment, PruneResult};
use crate::partitioner::{brute_force_partition, multi_restart, refine_swaps, DEFAULT_BUDGET, DEFAULT_RESTARTS};
use crate::perfmodel::{
    calibrate, scaling_speedup, simulate, CalibrationTarget, JobShape, SimConfig, SimReport, Workload,
    REFERENCE_SHAPE,
};
use crate::rng::SplitMix64;

const ABS_FLOOR: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "partprune",
    version,
    about = "Partition pruning of fully connected layers and multi-accelerator estimates",
    after_help = "Row, column and partition indices in every file and report are 0-based; \
                  add 1 to compare with 1-based figures.\n\
                  Exit codes: 0 success, 1 I/O error, 2 validation or parse failure, \
                  3 oracle budget exceeded."
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Print the report as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic weight matrix (`.csv` paths get CSV, others BPWM).
    Gen {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// uniform, gauss or blockdiag:P
        #[arg(long, default_value = "uniform")]
        dist: Distribution,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition a matrix into `p` balanced groups and write the result JSON.
    Prune {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        p: usize,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Improve the best restart with pairwise swaps.
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = 1000)]
        max_passes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum for small matrices.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        p: usize,
        /// A prune result to compare against the optimum.
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a result: balance rules, then partitioned vs masked products.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a layer on `p` accelerators against one accelerator.
    Simulate {
        /// SimConfig JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = REFERENCE_SHAPE.k)]
        rows: usize,
        #[arg(long, default_value_t = REFERENCE_SHAPE.n)]
        cols: usize,
        #[arg(long, default_value_t = REFERENCE_SHAPE.m)]
        batch: usize,
        #[arg(short, long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_enum, default_value_t = Mode::Partitioned)]
        mode: Mode,
        /// Include the baseline report in the output.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit bus overheads to observed scaling and write the config JSON.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma separated `accelerators:speedup` pairs.
        #[arg(long, default_value = "2:1.8,3:2.5")]
        targets: String,
        #[arg(long, default_value_t = REFERENCE_SHAPE.k)]
        rows: usize,
        #[arg(long, default_value_t = REFERENCE_SHAPE.n)]
        cols: usize,
        #[arg(long, default_value_t = REFERENCE_SHAPE.m)]
        batch: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The `p` blocks of the pruned layer, one per accelerator, against the
    /// dense layer on one accelerator.
    Partitioned,
    /// `p` copies of the dense layer on `p` accelerators against the same
    /// copies run back to back on one.
    Identical,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BudgetExceeded { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

#[derive(Debug, Serialize)]
struct GenReport<'a> {
    rows: usize,
    cols: usize,
    dist: String,
    seed: u64,
    connectedness_full: usize,
    out: &'a Path,
}

#[derive(Debug, Serialize)]
struct PruneReport<'a> {
    #[serde(flatten)]
    result: &'a ResultFile,
    shapes: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub rows: usize,
    pub cols: usize,
    pub p: usize,
    pub optimum_loss: f64,
    pub row_partition: Vec<usize>,
    pub col_partition: Vec<usize>,
    pub enumerated: u128,
    pub greedy_loss: Option<f64>,
    pub gap: Option<f64>,
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub violation: Option<String>,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub max_rel_err: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub mode: Mode,
    pub rows: usize,
    pub cols: usize,
    pub batch: usize,
    pub p: usize,
    pub speedup: f64,
    pub energy_ratio: f64,
    pub report: SimReport,
    pub baseline: Option<SimReport>,
}

#[derive(Debug, Serialize)]
struct CalibrateReport {
    reached: bool,
    max_rel_err: f64,
    /// (accelerators, target, achieved)
    achieved: Vec<(usize, f64, f64)>,
    config: SimConfig,
}

struct Printer<'a> {
    out: &'a mut dyn Write,
    quiet: bool,
    json: bool,
}

impl Printer<'_> {
    fn emit<T: Serialize>(&mut self, report: &T, text: impl FnOnce() -> String) -> Result<()> {
        if self.quiet {
            return Ok(());
        }
        if self.json {
            writeln!(self.out, "{}", serde_json::to_string_pretty(report)?)?;
        } else {
            write!(self.out, "{}", text())?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    let mut printer = Printer { out, quiet: cli.quiet, json: cli.json };
    match cli.command {
        Command::Gen { rows, cols, dist, out } => {
            let weights = generate(rows, cols, dist, seed)?;
            write_matrix(&out, &weights)?;
            let report = GenReport {
                rows,
                cols,
                dist: dist.to_string(),
                seed,
                connectedness_full: connectedness_full(rows, cols)?,
                out: &out,
            };
            printer.emit(&report, || {
                format!(
                    "wrote {rows}x{cols} {dist} matrix to {} (seed {seed}, C_full {})\n",
                    out.display(),
                    report.connectedness_full
                )
            })
        }
        Command::Prune { input, p, restarts, refine, max_passes, out } => {
            let weights = read_matrix(&input)?;
            let mut result = multi_restart(&weights, p, restarts, seed)?;
            if refine {
                result = refine_swaps(&weights, &result, max_passes)?;
            }
            let file = ResultFile::from_result(&result, refine);
            file.write(&out)?;
            let report = PruneReport { result: &file, shapes: result.assignment.shapes() };
            printer.emit(&report, || prune_text(&file, &report.shapes))
        }
        Command::Oracle { input, p, result, budget, out } => {
            let weights = read_matrix(&input)?;
            let greedy = result.map(|path| ResultFile::read(&path)?.to_result(&weights)).transpose()?;
            let optimum = brute_force_partition(&weights, p, budget)?;
            let greedy_loss = greedy.map(|g| g.weight_loss);
            let gap = greedy_loss.map(|g| g - optimum.optimum_loss);
            let report = OracleReport {
                rows: weights.rows(),
                cols: weights.cols(),
                p,
                optimum_loss: optimum.optimum_loss,
                row_partition: optimum.optimum_assignment.row_of,
                col_partition: optimum.optimum_assignment.col_of,
                enumerated: optimum.enumerated,
                greedy_loss,
                gap,
                relative_gap: gap.map(|g| if optimum.optimum_loss > 0.0 { g / optimum.optimum_loss } else { g }),
            };
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            printer.emit(&report, || oracle_text(&report))
        }
        Command::Verify { input, result, trials, tolerance, out } => {
            let weights = read_matrix(&input)?;
            let file = ResultFile::read(&result)?;
            let report = verify(&weights, &file, trials, tolerance, seed)?;
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            printer.emit(&report, || match &report.violation {
                Some(v) => format!("FAIL: {v}\n"),
                None => format!(
                    "{}: {} trials, max relative error {:e} (tolerance {:e})\n",
                    if report.passed { "PASS" } else { "FAIL" },
                    trials,
                    report.max_rel_err,
                    tolerance
                ),
            })?;
            if report.passed {
                Ok(())
            } else {
                Err(Error::VerificationFailed(
                    report.violation.unwrap_or_else(|| format!("max relative error {:e}", report.max_rel_err)),
                ))
            }
        }
        Command::Simulate { config, rows, cols, batch, p, mode, baseline, out } => {
            let config = load_config(config.as_deref())?;
            let report = simulate_layer(&config, rows, cols, batch, p, mode, baseline)?;
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            printer.emit(&report, || {
                format!(
                    "{mode:?} p={p}: speedup {:.4}, energy ratio {:.4}, makespan {} cycles\n",
                    report.speedup, report.energy_ratio, report.report.makespan_cycles
                )
            })
        }
        Command::Calibrate { config, targets, rows, cols, batch, out } => {
            let config = load_config(config.as_deref())?;
            let targets = parse_targets(&targets)?;
            let shape = JobShape { m: batch, k: rows, n: cols };
            let (fitted, failure) = match calibrate(&config, shape, &targets) {
                Ok(fit) => (fit.config, None),
                Err(Error::CalibrationUnreached { best, max_rel_err }) => {
                    (*best, Some(Error::CalibrationUnreached { best: Box::default(), max_rel_err }))
                }
                Err(e) => return Err(e),
            };
            // The best fit is written even when it misses the targets.
            write_json(&out, &fitted)?;
            let mut achieved = Vec::new();
            let mut worst = 0.0f64;
            for t in &targets {
                let s = scaling_speedup(&fitted, shape, t.accelerators)?;
                worst = worst.max((s - t.speedup).abs() / t.speedup);
                achieved.push((t.accelerators, t.speedup, s));
            }
            let report = CalibrateReport { reached: failure.is_none(), max_rel_err: worst, achieved, config: fitted };
            printer.emit(&report, || calibrate_text(&report))?;
            failure.map_or(Ok(()), Err)
        }
    }
}

fn prune_text(file: &ResultFile, shapes: &[(usize, usize)]) -> String {
    let shapes = shapes.iter().map(|(r, c)| format!("{r}x{c}")).collect::<Vec<_>>().join(" ");
    format!(
        "p={} seed={} restarts={}{}\nweight_loss {}\nretained_abs_weight {}\nconnectedness {} / {}\nratio {}\nshapes {}\n",
        file.p,
        file.seed,
        file.restarts,
        if file.refined { " refined" } else { "" },
        file.weight_loss,
        file.retained_abs_weight,
        file.connectedness,
        file.rows * file.cols,
        file.ratio,
        shapes
    )
}

fn oracle_text(r: &OracleReport) -> String {
    let mut s = format!(
        "optimum_loss {}\nrow_partition {:?}\ncol_partition {:?}\nenumerated {}\n",
        r.optimum_loss, r.row_partition, r.col_partition, r.enumerated
    );
    if let (Some(g), Some(gap), Some(rel)) = (r.greedy_loss, r.gap, r.relative_gap) {
        s += &format!("greedy_loss {g}\ngap {gap}\nrelative_gap {rel}\n");
    }
    s
}

fn calibrate_text(r: &CalibrateReport) -> String {
    let mut s = format!(
        "contention_overhead {}\ndma_fixed_overhead_cycles {}\n",
        r.config.contention_overhead, r.config.dma_fixed_overhead_cycles
    );
    for (k, target, got) in &r.achieved {
        s += &format!("{k} accelerators: target {target}, simulated {got:.4}\n");
    }
    s += &format!("max relative error {:.4}{}\n", r.max_rel_err, if r.reached { "" } else { " (targets missed)" });
    s
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    let config = match path {
        Some(p) => serde_json::from_slice(&std::fs::read(p)?)?,
        None => SimConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

/// Parses `"2:1.8,3:2.5"`.
pub fn parse_targets(text: &str) -> Result<Vec<CalibrationTarget>> {
    text.split(',')
        .map(|pair| {
            let bad = || Error::Format(format!("bad target {pair:?}, expected ACCELERATORS:SPEEDUP"));
            let (k, s) = pair.trim().split_once(':').ok_or_else(bad)?;
            Ok(CalibrationTarget {
                accelerators: k.trim().parse().map_err(|_| bad())?,
                speedup: s.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Checks balance, then compares partitioned and masked products on
/// `trials` Gaussian input vectors drawn from `seed`.
pub fn verify(
    weights: &crate::layer::WeightMatrix,
    file: &ResultFile,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<VerifyReport> {
    let mut report = VerifyReport { passed: false, violation: None, trials, tolerance, seed, max_rel_err: 0.0 };
    if (file.rows, file.cols) != (weights.rows(), weights.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "result is {}x{}, weights are {}x{}",
            file.rows,
            file.cols,
            weights.rows(),
            weights.cols()
        )));
    }
    if let Err(v) = validate_assignment(&file.assignment(), weights.rows(), weights.cols()) {
        report.violation = Some(v.to_string());
        return Ok(report);
    }
    let result = PruneResult::from_assignment(weights, file.assignment(), file.seed, file.restarts)?;
    let decomp = decompose(weights, &result)?;
    let mut rng = SplitMix64::new(seed);
    let mut passed = true;
    for _ in 0..trials {
        let x: Vec<f64> = (0..weights.rows()).map(|_| rng.next_gauss()).collect();
        let reference = masked_matvec(weights, &result.mask, &x)?;
        let fast = partitioned_matvec(&decomp, &x)?;
        let (err, ok) = compare_outputs(&fast, &reference, tolerance, ABS_FLOOR);
        report.max_rel_err = report.max_rel_err.max(err);
        passed &= ok;
    }
    report.passed = passed;
    Ok(report)
}

/// Runs one `simulate` command. In partitioned mode the workload is the `p`
/// balanced blocks of a `rows x cols` layer on `p` accelerators, and the
/// baseline is the dense layer on one accelerator.
pub fn simulate_layer(
    config: &SimConfig,
    rows: usize,
    cols: usize,
    batch: usize,
    p: usize,
    mode: Mode,
    include_baseline: bool,
) -> Result<SimulateReport> {
    if p == 0 {
        return Err(Error::ZeroPartitions);
    }
    let shape = JobShape { m: batch, k: rows, n: cols };
    let parallel = config.with_accelerators(p);
    let (report, baseline) = match mode {
        Mode::Partitioned => {
            if p > rows.min(cols) {
                return Err(Error::TooManyPartitions { p, n: rows.min(cols) });
            }
            let ours = simulate(&parallel, &Workload::partitioned(batch, rows, cols, p)?)?;
            let base = simulate(&config.with_accelerators(1), &Workload::dense(batch, rows, cols))?;
            (ours, base)
        }
        Mode::Identical => {
            let ours = simulate(&parallel, &Workload::identical(shape, p))?;
            let base = simulate(&config.with_accelerators(1), &Workload::serial(shape, p))?;
            (ours, base)
        }
    };
    let report = report.against(&baseline);
    Ok(SimulateReport {
        mode,
        rows,
        cols,
        batch,
        p,
        speedup: report.speedup.unwrap_or(f64::NAN),
        energy_ratio: report.energy_ratio.unwrap_or(f64::NAN),
        report,
        baseline: include_baseline.then_some(baseline),
    })
}
