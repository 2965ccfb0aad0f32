//! Command-line surface.
//!
//! Exit codes: 0 when the run converged (or the check passed), 2 when it hit
//! the iteration budget or diverged, 1 on usage and IO errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipt_core::explorer::{Grid, ScanSpec};
use ipt_core::refine::{make_low_precision_seed, refine_low_precision, refine_spectrum};
use ipt_core::rspt::{containment_check, log_grid};
use ipt_core::{
    certify, partition, solve_full, solve_single, solve_single_accelerated, solve_single_continuation, ComplexMatrix,
    InverseGaps, IterationConfig, Partition, RefineConfig, Status, CERTIFICATE_BOUND,
};

use crate::bench::{self, BenchConfig, BenchMode};
use crate::error::{Error, Result};
use crate::family::{parse_family, ParsedFamily};
use crate::mm::{self, Layout, WriteOptions};
use crate::report::*;
use crate::scan::{scan_parallel, thread_count, write_csv, write_pgm};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ipt", version, about = "Fixed-point eigensolvers for near-diagonal matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All eigenpairs by the matrix iteration.
    Solve(SolveArgs),
    /// One eigenpair by the vector iteration, optionally accelerated or continued.
    SolveOne(SolveOneArgs),
    /// Refine a 32-bit eigenbasis in double precision.
    Refine(RefineArgs),
    /// Classify the dynamics over a grid of complex couplings.
    Scan(ScanArgs),
    /// Compare iterates with Rayleigh–Schrödinger partial sums.
    RsCheck(RsCheckArgs),
    /// Write a family instance as a Matrix Market file.
    Gen(GenArgs),
    /// Time a solve relative to one product with the perturbation.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Matrix Market file.
    #[arg(long, conflicts_with = "family")]
    pub matrix: Option<PathBuf>,
    /// Family spec, e.g. `near-diagonal:N=256,eps=0.01` or `2x2:eps=0.1`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Iteration {
    /// Relative step tolerance.
    #[arg(long, default_value_t = 100.0 * f64::EPSILON)]
    pub tol: f64,
    #[arg(long = "max-iters", default_value_t = 1000)]
    pub max_iters: usize,
    /// Iterate norm treated as divergence.
    #[arg(long, default_value_t = 1e8)]
    pub divergence: f64,
    /// Record step and residual per iteration.
    #[arg(long)]
    pub trace: bool,
}

impl Iteration {
    fn config(&self) -> IterationConfig {
        IterationConfig {
            tolerance: self.tol,
            max_iterations: self.max_iters,
            divergence_threshold: self.divergence,
            record_trace: self.trace,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub out: OutFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub iteration: Iteration,
    #[command(flatten)]
    pub output: Output,
    /// Skip the norm-based convergence precheck.
    #[arg(long)]
    pub skip_certificate: bool,
    /// Skip the smallest-singular-value estimate of the eigenvector matrix.
    #[arg(long)]
    pub skip_rank_check: bool,
    /// Include eigenvectors in the report.
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Args)]
pub struct SolveOneArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub iteration: Iteration,
    #[command(flatten)]
    pub output: Output,
    /// Zero-based index of the anchor coordinate.
    #[arg(long, default_value_t = 0)]
    pub anchor: usize,
    /// Anderson memory; acceleration is off unless given.
    #[arg(long = "anderson-m")]
    pub anderson_m: Option<usize>,
    /// Absolute residual at which the accelerated solve stops.
    #[arg(long = "residual-tol", default_value_t = 1e-8)]
    pub residual_tol: f64,
    /// Ramp the perturbation as (1 − αᵏ).
    #[arg(long = "continuation-alpha", conflicts_with = "anderson_m")]
    pub continuation_alpha: Option<f64>,
    #[arg(long)]
    pub skip_certificate: bool,
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub iteration: Iteration,
    #[command(flatten)]
    pub output: Output,
    /// Seed basis as a Matrix Market file; computed in 32-bit arithmetic if absent.
    #[arg(long = "seed-basis")]
    pub seed_basis: Option<PathBuf>,
    /// Largest accepted condition estimate of the seed.
    #[arg(long, default_value_t = 1e6)]
    pub condition_guard: f64,
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    /// `re_min,re_max,im_min,im_max,nx,ny`.
    #[arg(long, allow_hyphen_values = true, default_value = "-1,1,-1,1,201,201")]
    pub grid: String,
    #[arg(long, default_value_t = 0)]
    pub anchor: usize,
    #[arg(long = "max-iters", default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e8)]
    pub divergence: f64,
    #[arg(long = "period-window", default_value_t = 64)]
    pub period_window: usize,
    #[arg(long = "period-tol", default_value_t = 1e-9)]
    pub period_tol: f64,
    #[arg(long = "continuation-alpha")]
    pub continuation_alpha: Option<f64>,
    /// Also write a PGM raster here.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Worker threads; defaults to IPT_THREADS or the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RsCheckArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// `lo,hi,count` of a logarithmic coupling grid. Defaults to eight points
    /// spanning a factor of eight below 90% of the certified radius.
    #[arg(long = "eps-grid")]
    pub eps_grid: Option<String>,
    /// Required slope at order k is k + 1 − margin.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: Source,
    /// Destination Matrix Market file.
    #[arg(long)]
    pub output: PathBuf,
    /// `coordinate` or `array`; defaults to the storage of the family.
    #[arg(long)]
    pub layout: Option<String>,
    /// Store the lower triangle only.
    #[arg(long)]
    pub symmetric: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub iteration: Iteration,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Time one eigenpair against matrix-vector products instead of the full spectrum.
    #[arg(long)]
    pub single: bool,
    #[arg(long, default_value_t = 0)]
    pub anchor: usize,
    /// Sleep this many microseconds after every product.
    #[arg(long = "inject-delay-us")]
    pub inject_delay_us: Option<u64>,
    /// Run with the injected delay and with twice that delay, and compare ratios.
    #[arg(long)]
    pub self_test: bool,
}

struct Loaded {
    partition: Partition,
    matrix: Option<ComplexMatrix>,
    label: String,
    seed: u64,
}

fn load(source: &Source) -> Result<Loaded> {
    match (&source.matrix, &source.family) {
        (Some(path), None) => {
            let m = mm::read_matrix_market(path)?;
            Ok(Loaded {
                partition: partition(&m)?,
                matrix: Some(m),
                label: path.display().to_string(),
                seed: source.seed,
            })
        }
        (None, Some(spec)) => {
            let f = parse_family(spec, source.seed)?;
            let matrix = if f.is_explicit() { None } else { Some(f.spec.generate()?) };
            let partition = match &matrix {
                Some(m) => partition(m)?,
                None => f.partition()?,
            };
            Ok(Loaded { partition, matrix, label: f.text.clone(), seed: f.spec.seed })
        }
        _ => Err(Error::Usage("exactly one of --matrix and --family is required".into())),
    }
}

fn load_family(source: &Source) -> Result<ParsedFamily> {
    match &source.family {
        Some(spec) if source.matrix.is_none() => parse_family(spec, source.seed),
        _ => Err(Error::Usage("this command needs --family".into())),
    }
}

fn run_config(label: &str, cfg: &IterationConfig, seed: u64) -> RunConfig {
    RunConfig {
        source: label.to_string(),
        tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
        divergence_threshold: cfg.divergence_threshold,
        residual_tolerance: cfg.residual_tolerance,
        anchor: None,
        anderson_m: None,
        continuation_alpha: None,
        seed,
    }
}

struct Clock {
    timings: Vec<PhaseTiming>,
}

impl Clock {
    fn new() -> Self {
        Self { timings: Vec::new() }
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(PhaseTiming {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

fn emit(text: &str, dest: &Option<PathBuf>) -> Result<()> {
    match dest {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn emit_report(report: &RunReport, output: &Output) -> Result<()> {
    if output.out == OutFormat::Csv {
        return Err(Error::Usage("csv output is only available for scan".into()));
    }
    let mut text = report.to_json()?;
    text.push('\n');
    emit(&text, &output.output)
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Converged => EXIT_OK,
        _ => EXIT_NOT_CONVERGED,
    }
}

fn cmd_solve(argv: &[String], a: &SolveArgs) -> Result<i32> {
    let mut clock = Clock::new();
    let src = clock.time("load", || load(&a.source))?;
    let p = &src.partition;
    let mut cfg = a.iteration.config();
    cfg.estimate_min_singular_value = !a.skip_rank_check;
    let g = clock.time("gaps", || InverseGaps::new(p))?;
    let cert = if a.skip_certificate { None } else { Some(clock.time("certificate", || certify(p, &g))) };
    let r = clock.time("solve", || solve_full(p, &g, &cfg))?;
    let report = RunReport {
        command: argv.to_vec(),
        config: run_config(&src.label, &cfg, src.seed),
        timings: clock.timings,
        counters: Counters { iterations: r.iterations, matvecs: 0, matmuls: r.matmuls },
        payload: Payload::Spectrum(SpectrumPayload::new(&r, cert.as_ref(), a.vectors)),
    };
    emit_report(&report, &a.output)?;
    Ok(status_code(r.status))
}

fn cmd_solve_one(argv: &[String], a: &SolveOneArgs) -> Result<i32> {
    let mut clock = Clock::new();
    let src = clock.time("load", || load(&a.source))?;
    let p = &src.partition;
    let mut cfg = a.iteration.config();
    cfg.residual_tolerance = a.residual_tol;
    let g = clock.time("gaps", || InverseGaps::new(p))?;
    let cert = if a.skip_certificate { None } else { Some(clock.time("certificate", || certify(p, &g))) };
    let (r, method) = clock.time("solve", || -> Result<_> {
        Ok(match (a.anderson_m, a.continuation_alpha) {
            (Some(m), _) => (solve_single_accelerated(p, &g, a.anchor, &cfg, m)?, "anderson"),
            (None, Some(alpha)) => (solve_single_continuation(p, &g, a.anchor, &cfg, alpha)?, "continuation"),
            (None, None) => (solve_single(p, &g, a.anchor, &cfg)?, "plain"),
        })
    })?;
    let mut config = run_config(&src.label, &cfg, src.seed);
    config.anchor = Some(a.anchor);
    config.anderson_m = a.anderson_m;
    config.continuation_alpha = a.continuation_alpha;
    let report = RunReport {
        command: argv.to_vec(),
        config,
        timings: clock.timings,
        counters: Counters { iterations: r.iterations, matvecs: r.matvecs, matmuls: 0 },
        payload: Payload::Eigenpair(EigenpairPayload::new(&r, method, cert.as_ref(), a.vectors)),
    };
    emit_report(&report, &a.output)?;
    Ok(status_code(r.status))
}

fn cmd_refine(argv: &[String], a: &RefineArgs) -> Result<i32> {
    let mut clock = Clock::new();
    let src = clock.time("load", || load(&a.source))?;
    let m = src.matrix.clone().unwrap_or_else(|| src.partition.reconstruct());
    let cfg = RefineConfig { iteration: a.iteration.config(), condition_guard: a.condition_guard };
    let r = match &a.seed_basis {
        Some(path) => {
            let seed = clock.time("load-seed", || mm::read_matrix_market(path))?.to_dense();
            clock.time("refine", || refine_spectrum(&m, &seed, &cfg))?
        }
        None => {
            let seed = clock.time("seed", || make_low_precision_seed(&m))?;
            clock.time("refine", || refine_low_precision(&m, &seed, &cfg))?
        }
    };
    let report = RunReport {
        command: argv.to_vec(),
        config: run_config(&src.label, &cfg.iteration, src.seed),
        timings: clock.timings,
        counters: Counters { iterations: r.iterations, matvecs: 0, matmuls: r.iterations },
        payload: Payload::Refinement(RefinementPayload::new(&r, a.vectors)),
    };
    emit_report(&report, &a.output)?;
    Ok(status_code(r.status))
}

pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Usage(format!("--grid expects re_min,re_max,im_min,im_max,nx,ny, found `{s}`"));
    if parts.len() != 6 {
        return Err(bad());
    }
    let f = |k: usize| parts[k].parse::<f64>().map_err(|_| bad());
    let u = |k: usize| parts[k].parse::<usize>().map_err(|_| bad());
    let grid = Grid { re_min: f(0)?, re_max: f(1)?, im_min: f(2)?, im_max: f(3)?, nx: u(4)?, ny: u(5)? };
    grid.validate()?;
    Ok(grid)
}

fn cmd_scan(argv: &[String], a: &ScanArgs) -> Result<i32> {
    let mut clock = Clock::new();
    let src = clock.time("load", || load(&a.source))?;
    let grid = parse_grid(&a.grid)?;
    let mut spec = ScanSpec::new(src.partition.clone(), a.anchor, grid)?;
    spec.max_iterations = a.max_iters;
    spec.divergence_threshold = a.divergence;
    spec.period_window = a.period_window;
    spec.period_tolerance = a.period_tol;
    spec.continuation = a.continuation_alpha;
    let threads = a.threads.unwrap_or_else(thread_count);
    let scan = clock.time("scan", || scan_parallel(&spec, threads))?;

    if let Some(path) = &a.pgm {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_pgm(&scan, spec.max_iterations, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    }
    match a.output.out {
        OutFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&scan, &mut buf)?;
            emit(&String::from_utf8(buf).expect("csv is utf-8"), &a.output.output)?;
        }
        OutFormat::Json => {
            let cfg = IterationConfig {
                max_iterations: spec.max_iterations,
                divergence_threshold: spec.divergence_threshold,
                tolerance: spec.tolerance,
                ..Default::default()
            };
            let mut config = run_config(&src.label, &cfg, src.seed);
            config.anchor = Some(a.anchor);
            config.continuation_alpha = a.continuation_alpha;
            let report = RunReport {
                command: argv.to_vec(),
                config,
                timings: clock.timings,
                counters: Counters::default(),
                payload: Payload::Scan(ScanSummary::new(&scan, a.anchor, a.continuation_alpha)),
            };
            emit_report(&report, &a.output)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_rs_check(argv: &[String], a: &RsCheckArgs) -> Result<i32> {
    let mut clock = Clock::new();
    let src = clock.time("load", || load(&a.source))?;
    let p = &src.partition;
    let g = InverseGaps::new(p)?;
    let eps = match &a.eps_grid {
        Some(s) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            let bad = || Error::Usage(format!("--eps-grid expects lo,hi,count, found `{s}`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            if !(lo > 0.0 && hi > lo && count >= 2) {
                return Err(bad());
            }
            log_grid(lo, hi, count)
        }
        None => {
            let product = certify(p, &g).product;
            if product == 0.0 {
                log_grid(0.01, 0.1, 8)
            } else {
                let top = 0.9 * CERTIFICATE_BOUND / product;
                log_grid(top / 8.0, top, 8)
            }
        }
    };
    let r = clock.time("containment", || containment_check(p, &g, a.order, &eps))?;
    let payload = RsCheckPayload::new(&r, a.margin);
    let passed = payload.passed;
    let report = RunReport {
        command: argv.to_vec(),
        config: run_config(&src.label, &IterationConfig::default(), src.seed),
        timings: clock.timings,
        counters: Counters { iterations: a.order, matvecs: 0, matmuls: a.order * eps.len() },
        payload: Payload::RsCheck(payload),
    };
    emit_report(&report, &a.output)?;
    Ok(if passed { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_gen(argv: &[String], a: &GenArgs) -> Result<i32> {
    let f = load_family(&a.source)?;
    let m = if f.is_explicit() { f.partition()?.reconstruct() } else { f.spec.generate()? };
    let layout = match a.layout.as_deref() {
        None => None,
        Some("coordinate") => Some(Layout::Coordinate),
        Some("array") => Some(Layout::Array),
        Some(other) => return Err(Error::Usage(format!("unknown layout `{other}`"))),
    };
    mm::write_matrix_market(&m, &a.output, WriteOptions { layout, field: None, symmetric: a.symmetric })?;
    let stored = match &m {
        ComplexMatrix::Sparse(s) => s.nnz(),
        ComplexMatrix::Dense(d) => d.rows() * d.cols(),
    };
    let report = RunReport {
        command: argv.to_vec(),
        config: run_config(&f.text, &IterationConfig::default(), f.spec.seed),
        timings: Vec::new(),
        counters: Counters::default(),
        payload: Payload::Generated(GeneratedPayload {
            path: a.output.display().to_string(),
            rows: m.rows(),
            cols: m.cols(),
            stored_entries: stored,
        }),
    };
    emit_report(&report, &Output { out: OutFormat::Json, output: None })?;
    Ok(EXIT_OK)
}

fn cmd_bench(argv: &[String], a: &BenchArgs) -> Result<i32> {
    let src = load(&a.source)?;
    let mut iteration = a.iteration.config();
    iteration.estimate_min_singular_value = false;
    let cfg = BenchConfig {
        mode: if a.single { BenchMode::Single } else { BenchMode::Full },
        repetitions: a.repetitions,
        anchor: a.anchor,
        iteration: iteration.clone(),
        injected_delay: a.inject_delay_us.map(Duration::from_micros),
        ..Default::default()
    };
    if a.self_test {
        let delay = cfg.injected_delay.unwrap_or(Duration::from_millis(2));
        let t = bench::self_test(&src.partition, &cfg, delay)?;
        let mut text = serde_json::to_string_pretty(&t)?;
        text.push('\n');
        emit(&text, &a.output.output)?;
        return Ok(if t.relative_change <= 0.2 { EXIT_OK } else { EXIT_NOT_CONVERGED });
    }
    let r = bench::bench(&src.partition, &cfg)?;
    let status = r.status;
    let (matvecs, matmuls) = match cfg.mode {
        BenchMode::Full => (0, r.products),
        BenchMode::Single => (r.products, 0),
    };
    let report = RunReport {
        command: argv.to_vec(),
        config: run_config(&src.label, &iteration, src.seed),
        timings: vec![PhaseTiming { phase: "median-solve".into(), seconds: r.median_solve_seconds }],
        counters: Counters { iterations: r.iterations, matvecs, matmuls },
        payload: Payload::Bench(r),
    };
    emit_report(&report, &a.output)?;
    Ok(status_code(status))
}

/// Runs the command line and returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(argv, a),
        Command::SolveOne(a) => cmd_solve_one(argv, a),
        Command::Refine(a) => cmd_refine(argv, a),
        Command::Scan(a) => cmd_scan(argv, a),
        Command::RsCheck(a) => cmd_rs_check(argv, a),
        Command::Gen(a) => cmd_gen(argv, a),
        Command::Bench(a) => cmd_bench(argv, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

