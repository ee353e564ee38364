//! `contact-geom` command-line front end.
//!
//! Exit codes: 0 success, 1 other runtime failure, 2 argument error or
//! unknown surface, 3 unreadable or off-sphere input, 4 identity order
//! check or theorem probe failed, 5 flow did not converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use contact_geom_core::calculus::{refinement_study, Identity, SurfaceAnalysis, DEFAULT_BAND};
use contact_geom_core::catalog::{self, CatalogEntry, EntryInfo};
use contact_geom_core::error::GeomError;
use contact_geom_core::flow::{descend, FlowConfig, Mode, Variant, Verdict};
use contact_geom_core::report::{fields_csv, AnalysisReport};
use contact_geom_core::samples::{load_samples, write_samples};
use contact_geom_core::surface::SurfaceGrid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_CHECK: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "contact-geom", version, about = "Contact angle and curvature identities for surfaces in S3")]
pub struct Cli {
    /// Worker threads for per-node computations.
    #[arg(long, global = true, env = "CONTACT_GEOM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze one sampled surface and write report.json, fields.csv and samples.txt.
    Analyze(AnalyzeArgs),
    /// Run an identity check across a refinement sequence.
    Verify(VerifyArgs),
    /// Descend the squared-mean-curvature energy and probe the result.
    Flow(FlowArgs),
    /// Inspect the built-in surfaces.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// List entries with their parameters and closed-form values.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Catalog name; `analyze` also accepts a path to a sample file.
    #[arg(long)]
    pub surface: String,
    /// Surface parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Grid resolution NUxNV (catalog surfaces only).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Half-width of the excluded band around beta = pi/2.
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long)]
    pub identity: Identity,
    /// Comma-separated square resolutions, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub refine: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_parser = parse_grid, default_value = "32x32")]
    pub grid: (usize, usize),
    /// Maximum accepted steps.
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Stop once max|H| falls below this.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value = "full")]
    pub mode: Mode,
    #[arg(long, default_value = "backtracking")]
    pub variant: Variant,
    /// Initial (or fixed) step length.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Control grid resolution per axis (full mode).
    #[arg(long, default_value_t = 8)]
    pub control: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NUxNV, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("{t:?} is not a node count"));
    Ok((n(a)?, n(b)?))
}

struct Failure {
    code: i32,
    message: String,
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        let code = match e {
            GeomError::UnknownSurface(_)
            | GeomError::UnknownParameter { .. }
            | GeomError::InvalidParameter { .. }
            | GeomError::RangeError { .. }
            | GeomError::AmplitudeTooLarge { .. }
            | GeomError::InvalidGrid(_)
            | GeomError::NotPeriodic(_)
            | GeomError::UnsupportedMode(_)
            | GeomError::InsufficientResolution { .. } => EXIT_USAGE,
            GeomError::OffSphere { .. } | GeomError::Parse { .. } | GeomError::Io(_) => EXIT_INPUT,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_FAILURE, message: format!("{}: {e}", path.display()) }
}

/// Parses arguments and runs one command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // a second configuration in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Flow(a) => flow(a, out),
        Command::Catalog { command: CatalogCommand::List { json } } => catalog_list(*json, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn parse_params(args: &SurfaceArgs) -> Result<Vec<(String, f64)>, Failure> {
    args.params.iter().map(|p| catalog::parse_param(p).map_err(Failure::from)).collect()
}

fn is_catalog_name(name: &str) -> bool {
    catalog::by_name(name, &[]).is_ok()
}

/// Catalog entry (with grid) or a loaded sample file.
fn resolve(args: &SurfaceArgs, grid: Option<(usize, usize)>) -> Result<(SurfaceGrid, Option<CatalogEntry>), Failure> {
    let params = parse_params(args)?;
    if !is_catalog_name(&args.surface) && Path::new(&args.surface).is_file() {
        if !params.is_empty() {
            return Err(usage("--param applies to catalog surfaces only"));
        }
        if grid.is_some() {
            return Err(usage("--grid applies to catalog surfaces only"));
        }
        return Ok((load_samples(&args.surface)?, None));
    }
    let entry = catalog::by_name(&args.surface, &params)?;
    let (nu, nv) = grid.unwrap_or((entry.grid.u.n, entry.grid.v.n));
    Ok((entry.sample(nu, nv)?, Some(entry)))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (grid, entry) = resolve(&args.surface, args.grid)?;
    let analysis = SurfaceAnalysis::new(&grid)?;
    let report = AnalysisReport::build(&grid, &analysis, entry.as_ref(), args.band);
    write_file(&args.out, "report.json", &to_json(&report))?;
    write_file(&args.out, "fields.csv", &fields_csv(&grid, &analysis, args.band))?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let samples = args.out.join("samples.txt");
    write_samples(&grid, &samples)?;
    let _ = writeln!(
        out,
        "{}: {}x{} beta [{:.6e}, {:.6e}] max|H| {:.3e} K [{:.6e}, {:.6e}] masked {}",
        report.surface,
        grid.spec.u.n,
        grid.spec.v.n,
        report.beta.min,
        report.beta.max,
        report.mean_curvature.max_abs,
        report.k_intrinsic.min,
        report.k_intrinsic.max,
        report.masked
    );
    for id in &report.identities {
        let n = &id.norms;
        let _ = writeln!(
            out,
            "  {:<10} Linf {:.3e}  L2 {:.3e}  excluded {} (band) {} (non-finite)",
            id.identity.to_string(),
            n.linf,
            n.l2,
            n.excluded_band,
            n.excluded_nonfinite
        );
    }
    Ok(EXIT_OK)
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if args.refine.len() < 3 {
        return Err(usage(format!("--refine needs at least 3 levels for an order estimate, got {}", args.refine.len())));
    }
    let params = parse_params(&args.surface)?;
    let entry = match catalog::by_name(&args.surface.surface, &params) {
        Ok(e) => e,
        Err(GeomError::UnknownSurface(name)) if Path::new(&name).is_file() => {
            return Err(usage("verify resamples the surface at every level; sample files are not supported"));
        }
        Err(e) => return Err(e.into()),
    };
    let grids = args.refine.iter().map(|&n| entry.sample(n, n)).collect::<Result<Vec<_>, _>>()?;
    let (report, _) = refinement_study(&entry.label(), args.identity, args.band, grids)?;
    write_file(&args.out, "identity_report.json", &to_json(&report))?;
    for l in &report.levels {
        let _ = writeln!(
            out,
            "{}x{}  h {:.4e}  Linf {:.3e}  L2 {:.3e}  excluded {}",
            l.nu,
            l.nv,
            l.h,
            l.linf,
            l.l2,
            l.excluded_band + l.excluded_nonfinite + l.masked
        );
    }
    let order = report.observed_order.map_or("n/a".to_string(), |p| format!("{p:.3}"));
    let _ = writeln!(
        out,
        "{} identity on {}: order {order}, finest Linf {:.3e} (bound {:.1e}){} -> {}",
        report.identity,
        report.surface,
        report.levels.last().map_or(f64::NAN, |l| l.linf),
        report.bound,
        if report.resolved_to_roundoff { ", resolved to round-off" } else { "" },
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECK })
}

fn flow(args: &FlowArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let params = parse_params(&args.surface)?;
    let config = FlowConfig {
        surface: args.surface.surface.clone(),
        params,
        nu: args.grid.0,
        nv: args.grid.1,
        step: args.step,
        max_iterations: args.steps,
        tol: args.tol,
        variant: args.variant,
        mode: args.mode,
        control: args.control,
        ..FlowConfig::default()
    };
    let outcome = descend(&config)?;
    let report = &outcome.report;
    write_file(&args.out, "flow_report.json", &to_json(report))?;
    write_file(&args.out, "flow_trace.csv", &report.trace_csv())?;
    let _ = writeln!(
        out,
        "{}: {} after {} steps ({}), E {:.3e} -> {:.3e}, max|H| {:.3e}",
        report.surface,
        if report.converged { "converged" } else { "not converged" },
        report.iterations,
        report.stop_reason,
        report.energy_initial,
        report.energy_final,
        report.max_h_final
    );
    if let Some(r) = report.r_final {
        let _ = writeln!(out, "  r = {r:.12} (pi/4 = {:.12})", std::f64::consts::FRAC_PI_4);
    }
    let _ = writeln!(out, "  probe: {} ({})", report.probe.verdict, report.probe.message);
    Ok(match (report.converged, report.probe.verdict) {
        (false, _) => EXIT_NOT_CONVERGED,
        (true, Verdict::Pass | Verdict::NotApplicable) => EXIT_OK,
        (true, _) => EXIT_CHECK,
    })
}

fn catalog_list(json: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let entries = catalog::list();
    if json {
        let infos: Vec<EntryInfo> = entries.iter().map(EntryInfo::from).collect();
        let _ = write!(out, "{}", to_json(&infos));
        return Ok(EXIT_OK);
    }
    for e in &entries {
        let _ = writeln!(out, "{}", e.name);
        let _ = writeln!(out, "  {}", e.description);
        let g = &e.grid;
        let _ = writeln!(
            out,
            "  grid: u {} [{:.4}, {:.4}] {}, v {} [{:.4}, {:.4}] {}",
            g.u.n, g.u.start, g.u.end, g.u.topology, g.v.n, g.v.start, g.v.end, g.v.topology
        );
        for p in &e.schema {
            let _ = writeln!(out, "  --param {}=<{}> default {} in [{}, {}]: {}", p.name, if p.integer { "int" } else { "real" }, p.default, p.min, p.max, p.description);
        }
        let t = &e.truth;
        let mut notes = Vec::new();
        if let Some(b) = &t.beta {
            notes.push(format!("beta = {b}"));
        }
        if let Some(k) = t.gaussian_curvature {
            notes.push(format!("K = {k}"));
        }
        if let Some(h) = t.mean_curvature_abs {
            notes.push(format!("|H| = {h}"));
        }
        let _ = writeln!(out, "  ground truth: {}", notes.join(", "));
    }
    Ok(EXIT_OK)
}
