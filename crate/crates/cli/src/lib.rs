//! Command-line driver: argument and config handling, input resolution and
//! the six subcommands.

pub mod config;
pub mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdl_core::circle::{CircleMap, DEFAULT_SAMPLES};
use hdl_core::continuation::{
    run_boundary_continuation, run_metric_continuation, ContinuationOptions, ContinuationReport, Verdict,
};
use hdl_core::diagnostics::{hopf_fields, MapReport, ReportOptions};
use hdl_core::douady_earle::extend_on_grid;
use hdl_core::grid::{ComplexField, DiskGrid, ScalarField};
use hdl_core::harmonic::{solve_harmonic, Initializer};
use hdl_core::io;
use hdl_core::metric::{solve_prescribed_curvature, MetricField};
use hdl_core::specs::{builtin_circle_map, builtin_curvature};

pub use config::{parse_config, ConfigError, GridSpec, RunConfig};
pub use plot::{emit_plot_data, PlotData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hdl", version, about = "Harmonic maps between pinched negatively curved disks")]
pub struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Worker threads (falls back to HDL_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the conformal factor of a prescribed curvature.
    SolveMetric(SolveMetricArgs),
    /// Solve for the harmonic map with given boundary values.
    SolveMap(SolveMapArgs),
    /// Douady-Earle extension of a circle map over the grid.
    Extend(ExtendArgs),
    /// Diagnostics of a stored map.
    Diagnose(DiagnoseArgs),
    /// Continuity method in the target metric.
    Sweep(SweepArgs),
    /// Continuity method in the boundary map, hyperbolic target.
    SweepBoundary(SweepBoundaryArgs),
}

#[derive(Debug, Args)]
pub struct SolveMetricArgs {
    #[arg(long)]
    pub curvature: Option<String>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of u over the grid.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    DouadyEarle,
    Identity,
}

#[derive(Debug, Args)]
pub struct SolveMapArgs {
    /// Metric file, `hyperbolic`, or a curvature spec solved on the fly.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// `douady-earle`, `identity`, or a stored complex field.
    #[arg(long, default_value = "douady-earle")]
    pub init: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub bochner: bool,
    #[arg(long, default_value_t = 256)]
    pub qi_pairs: usize,
    #[arg(long, default_value_t = 0.9)]
    pub trace_ring: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV of the Jacobian over the grid.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub curvature: Option<String>,
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-step CSV.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepBoundaryArgs {
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// A failed command, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Config(String),
    Solver(String),
    Degenerated(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Degenerated(_) => EXIT_DEGENERATE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Degenerated(m) | Failure::Io(m) => m,
        }
    }
}

impl From<hdl_core::Error> for Failure {
    fn from(e: hdl_core::Error) -> Self {
        use hdl_core::Error as E;
        match e {
            E::NoConvergence { .. } | E::EscapedDisk { .. } | E::LinearSolve(_) | E::OutsideDomain { .. } => {
                Failure::Solver(e.to_string())
            }
            E::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    verbose: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("hdl: {}", msg.as_ref());
        }
    }
}

fn missing(key: &str) -> Failure {
    Failure::Config(format!("missing required key {key:?}"))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_plot(data: PlotData<'_>, path: Option<&Path>) -> Outcome {
    match path {
        Some(p) => emit_plot_data(data, p).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => Ok(()),
    }
}

/// Writes to `path`, or to stdout when no path is given.
fn emit_text(text: &str, path: Option<&Path>) -> Outcome {
    match path {
        Some(p) => write_output(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn make_grid(spec: GridSpec) -> Result<Arc<DiskGrid>, Failure> {
    Ok(DiskGrid::new(spec.n_r, spec.n_theta, spec.r_max)?)
}

/// Checks that a grid read from a file agrees with an explicitly requested one.
fn reconcile(file_grid: &Arc<DiskGrid>, requested: Option<GridSpec>, what: &Path) -> Outcome {
    if let Some(g) = requested {
        if !file_grid.same_as(&*make_grid(g)?) {
            return Err(Failure::Config(format!(
                "{} is stored on {}x{}@{}, but grid={g} was requested",
                what.display(),
                file_grid.n_r(),
                file_grid.n_theta(),
                file_grid.r_max()
            )));
        }
    }
    Ok(())
}

/// Built-in curvature spec, or a stored scalar field.
pub fn load_curvature(spec: &str, grid: Option<GridSpec>) -> Result<ScalarField, Failure> {
    let g = make_grid(grid.unwrap_or_default())?;
    if let Some(k) = builtin_curvature(spec, &g)? {
        return Ok(k);
    }
    let path = Path::new(spec);
    let k: ScalarField = io::decode_field(&read_input(path)?)?;
    reconcile(k.grid(), grid, path)?;
    Ok(k)
}

/// Built-in circle map spec, or a text file of lift samples.
pub fn load_boundary(spec: &str) -> Result<CircleMap, Failure> {
    if let Some(phi) = builtin_circle_map(spec, DEFAULT_SAMPLES)? {
        return Ok(phi);
    }
    let path = Path::new(spec);
    let text = String::from_utf8(read_input(path)?)
        .map_err(|_| Failure::Config(format!("{} is not a text file", path.display())))?;
    Ok(io::circle_from_text(&text)?)
}

fn load_target(spec: &str, grid: Option<GridSpec>, tol: f64, ctx: &Ctx) -> Result<MetricField, Failure> {
    if spec == "hyperbolic" {
        return Ok(MetricField::hyperbolic(&make_grid(grid.unwrap_or_default())?));
    }
    let g = make_grid(grid.unwrap_or_default())?;
    if let Some(k) = builtin_curvature(spec, &g)? {
        ctx.note(format!("solving target metric for {spec}"));
        return Ok(solve_prescribed_curvature(&k, tol)?);
    }
    let path = Path::new(spec);
    let m = io::decode_metric(&read_input(path)?)?;
    reconcile(m.grid(), grid, path)?;
    Ok(m)
}

fn solve_metric(args: SolveMetricArgs, ctx: &mut Ctx) -> Outcome {
    let cfg = &mut ctx.cfg;
    cfg.curvature = args.curvature.or(cfg.curvature.take());
    cfg.grid = args.grid.or(cfg.grid);
    cfg.metric_tol = args.tol.unwrap_or(cfg.metric_tol);
    cfg.out = args.out.or(cfg.out.take());
    cfg.plot = args.plot.or(cfg.plot.take());
    check_tol(cfg.metric_tol)?;
    let spec = cfg.curvature.clone().ok_or_else(|| missing("curvature"))?;
    let out = cfg.out.clone().ok_or_else(|| missing("out"))?;

    let k = load_curvature(&spec, cfg.grid)?;
    ctx.note(format!("solving {spec} on {}x{}@{}", k.grid().n_r(), k.grid().n_theta(), k.grid().r_max()));
    let m = solve_prescribed_curvature(&k, ctx.cfg.metric_tol)?;
    write_output(&out, &io::encode_metric(&m))?;
    write_plot(PlotData::Scalar(m.u()), ctx.cfg.plot.as_deref())?;

    let u = m.u().values();
    let mut s = String::new();
    let _ = writeln!(s, "residual_norm={:.17e}", m.residual_norm());
    let _ = writeln!(s, "iterations={}", m.iterations());
    let _ = writeln!(s, "u_min={:.17e}", u.iter().copied().fold(f64::INFINITY, f64::min));
    let _ = writeln!(s, "u_max={:.17e}", u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    emit_text(&s, ctx.cfg.report.as_deref())
}

fn check_tol(tol: f64) -> Outcome {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Config(format!("tolerance must be positive, got {tol}")))
    }
}

fn solve_map(args: SolveMapArgs, ctx: &mut Ctx) -> Outcome {
    let cfg = &mut ctx.cfg;
    cfg.boundary = args.boundary.or(cfg.boundary.take());
    cfg.grid = args.grid.or(cfg.grid);
    cfg.map_tol = args.tol.unwrap_or(cfg.map_tol);
    cfg.out = args.out.or(cfg.out.take());
    cfg.plot = args.plot.or(cfg.plot.take());
    check_tol(cfg.map_tol)?;
    let target_spec = args.target.or(cfg.curvature.clone()).unwrap_or_else(|| "hyperbolic".into());
    let boundary = cfg.boundary.clone().ok_or_else(|| missing("boundary"))?;
    let out = cfg.out.clone().ok_or_else(|| missing("out"))?;

    let phi = load_boundary(&boundary)?;
    let target = load_target(&target_spec, ctx.cfg.grid, ctx.cfg.metric_tol, ctx)?;
    let grid = target.grid().clone();
    let init = match args.init.as_str() {
        "douady-earle" => Initializer::DouadyEarle,
        "identity" => Initializer::Identity,
        file => {
            let path = Path::new(file);
            let f: ComplexField = io::decode_field(&read_input(path)?)?;
            reconcile(f.grid(), Some(GridSpec { n_r: grid.n_r(), n_theta: grid.n_theta(), r_max: grid.r_max() }), path)?;
            Initializer::Map(f)
        }
    };
    ctx.note(format!("solving harmonic map on {}x{}@{}", grid.n_r(), grid.n_theta(), grid.r_max()));
    let h = solve_harmonic(&target, &phi, &grid, &init, ctx.cfg.map_tol)?;
    write_output(&out, &io::encode_map(&h)?)?;
    write_plot(PlotData::Complex(h.values()), ctx.cfg.plot.as_deref())?;

    let mut s = String::new();
    let _ = writeln!(s, "residual_norm={:.17e}", h.residual_norm());
    let _ = writeln!(s, "iterations={}", h.iterations());
    let _ = writeln!(s, "energy={:.17e}", h.energy());
    let _ = writeln!(s, "projections={}", h.projections());
    emit_text(&s, ctx.cfg.report.as_deref())
}

fn extend(args: ExtendArgs, ctx: &mut Ctx) -> Outcome {
    let cfg = &mut ctx.cfg;
    let spec = args.map.or(cfg.boundary.take()).ok_or_else(|| missing("boundary"))?;
    let out = args.out.or(cfg.out.take()).ok_or_else(|| missing("out"))?;
    let grid = make_grid(args.grid.or(cfg.grid).unwrap_or_default())?;
    let phi = load_boundary(&spec)?;
    ctx.note(format!("extending {spec}"));
    let f = extend_on_grid(&phi, &grid)?;
    write_output(&out, &io::encode_field(&f))?;
    write_plot(PlotData::Complex(&f), args.plot.or(ctx.cfg.plot.take()).as_deref())
}

fn diagnose(args: DiagnoseArgs, ctx: &mut Ctx) -> Outcome {
    let h = io::decode_map(&read_input(&args.map)?)?;
    let opts = ReportOptions {
        bochner: args.bochner,
        qi_pairs: args.qi_pairs,
        trace_ring: args.trace_ring,
        seed: args.seed.unwrap_or(ctx.cfg.seed),
        ..Default::default()
    };
    ctx.note(format!("diagnosing {}", args.map.display()));
    let report = MapReport::compute(&h, &opts)?;
    let report_path = args.report.or(ctx.cfg.report.take());
    emit_text(&report.to_text(), report_path.as_deref())?;
    if let Some(p) = args.plot.or(ctx.cfg.plot.take()) {
        write_plot(PlotData::Scalar(&hopf_fields(&h).j), Some(&p))?;
    }
    if report.jacobian_inf > 0.0 {
        Ok(())
    } else {
        Err(Failure::Degenerated(format!("jacobian_inf={:e}", report.jacobian_inf)))
    }
}

fn continuation_options(cfg: &RunConfig) -> ContinuationOptions {
    ContinuationOptions {
        n_steps: cfg.steps,
        metric_tol: cfg.metric_tol,
        map_tol: cfg.map_tol,
        ..Default::default()
    }
}

fn finish_sweep(report: &ContinuationReport, cfg: &RunConfig) -> Outcome {
    emit_text(&report.to_text(), cfg.report.as_deref())?;
    write_plot(PlotData::Sweep(report), cfg.plot.as_deref())?;
    match &report.verdict {
        Verdict::CertifiedPositive => Ok(()),
        v @ Verdict::Degenerated { .. } => Err(Failure::Degenerated(v.label())),
        v @ Verdict::SolverFailed { message, .. } => Err(Failure::Solver(format!("{}: {message}", v.label()))),
    }
}

fn sweep(args: SweepArgs, ctx: &mut Ctx) -> Outcome {
    let cfg = &mut ctx.cfg;
    cfg.curvature = args.curvature.or(cfg.curvature.take());
    cfg.boundary = args.boundary.or(cfg.boundary.take());
    cfg.steps = args.steps.unwrap_or(cfg.steps);
    cfg.grid = args.grid.or(cfg.grid);
    cfg.report = args.report.or(cfg.report.take());
    cfg.plot = args.plot.or(cfg.plot.take());
    let k = load_curvature(&cfg.curvature.clone().ok_or_else(|| missing("curvature"))?, cfg.grid)?;
    let phi = load_boundary(&cfg.boundary.clone().ok_or_else(|| missing("boundary"))?)?;
    ctx.note(format!("metric sweep with {} steps", ctx.cfg.steps));
    let report = run_metric_continuation(&k, &phi, k.grid(), &continuation_options(&ctx.cfg))?;
    ctx.note(format!("verdict {}", report.verdict.label()));
    finish_sweep(&report, &ctx.cfg)
}

fn sweep_boundary(args: SweepBoundaryArgs, ctx: &mut Ctx) -> Outcome {
    let cfg = &mut ctx.cfg;
    cfg.boundary = args.boundary.or(cfg.boundary.take());
    cfg.steps = args.steps.unwrap_or(cfg.steps);
    cfg.grid = args.grid.or(cfg.grid);
    cfg.report = args.report.or(cfg.report.take());
    cfg.plot = args.plot.or(cfg.plot.take());
    let phi = load_boundary(&cfg.boundary.clone().ok_or_else(|| missing("boundary"))?)?;
    let grid = make_grid(cfg.grid_or_default())?;
    ctx.note(format!("boundary sweep with {} steps", ctx.cfg.steps));
    let report = run_boundary_continuation(&phi, &grid, &continuation_options(&ctx.cfg))?;
    ctx.note(format!("verdict {}", report.verdict.label()));
    finish_sweep(&report, &ctx.cfg)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HDL_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("HDL_THREADS must be a thread count, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: Cli) -> Outcome {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(Failure::Config("thread count must be positive".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match &cli.config {
        Some(path) => {
            let bytes = read_input(path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| Failure::Config(format!("{} is not a text file", path.display())))?;
            parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let mut ctx = Ctx { cfg, verbose: cli.verbose };
    match cli.command {
        Command::SolveMetric(a) => solve_metric(a, &mut ctx),
        Command::SolveMap(a) => solve_map(a, &mut ctx),
        Command::Extend(a) => extend(a, &mut ctx),
        Command::Diagnose(a) => diagnose(a, &mut ctx),
        Command::Sweep(a) => sweep(a, &mut ctx),
        Command::SweepBoundary(a) => sweep_boundary(a, &mut ctx),
    }
}
