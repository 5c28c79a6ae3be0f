//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{check_assumptions, Side};
use crate::config::{ComplexLit, Settings, Window};
use crate::geometry::one_sided_hausdorff;
use crate::model::{Assumption, ConfigError, Diagnostics, OperatorFile, OperatorMatrix, Status};
use crate::oracle::{det_scan, discretize_and_eig, truncation_study, Boundary, DetRoots, FrozenSymbol, TruncationReport};
use crate::plot::render_svg;
use crate::schur::SchurSymbol;
use crate::spectrum::{essential_spectrum_with, Report, SpectrumSet};

pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const IO: i32 = 3;
    pub const D_FAILS: i32 = 4;
    pub const REFUSED: i32 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "spectra", version, about = "Essential spectra of 2x2 matrix differential operators on the real line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Validate structure and assumptions at the probe points.
    Check,
    /// Compute the essential spectrum (CSV, JSON report, optional SVG).
    Spectrum,
    /// Compare against the frozen-symbol determinant and, optionally, a discretization.
    Oracle,
    /// Print the Schur symbol coefficients p_0..p_m and Δ.
    PrintSchur,
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Operator file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Plot window re_min,re_max,im_min,im_max.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Comma-separated probe values of λ, e.g. "2*i,-3+i".
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub probes: Option<Vec<ComplexLit>>,
    /// Compute the spectrum even when assumptions fail.
    #[arg(long, global = true)]
    pub force: bool,
    /// Run the finite-difference oracle as well.
    #[arg(long, global = true)]
    pub discretize: bool,
    /// Write an SVG plot next to the CSV.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Half-length L of the truncated interval for --discretize.
    #[arg(long, global = true, default_value_t = 10.0)]
    pub length: f64,
    /// Number of grid nodes N for --discretize.
    #[arg(long, global = true, default_value_t = 200)]
    pub nodes: usize,
    #[arg(long, global = true, value_enum, default_value_t = Boundary::DirichletTruncate)]
    pub bc: Boundary,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        let code = if matches!(e, ConfigError::Io { .. }) { exit::IO } else { exit::INVALID };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(exit::IO, format!("cannot write {}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
    write_file(dir, name, &(text + "\n"))
}

/// Operator, settings with command-line overrides applied, and the Schur symbol.
pub struct Loaded {
    pub op: OperatorMatrix,
    pub settings: Settings,
    pub symbol: SchurSymbol,
}

pub fn load(opts: &Options) -> Result<Loaded, Failure> {
    let path = opts.config.as_ref().ok_or_else(|| Failure::new(exit::INVALID, "--config is required"))?;
    let OperatorFile { op, mut settings } = OperatorFile::load(path)?;
    if let Some(w) = opts.window {
        settings.window = w;
    }
    if let Some(p) = &opts.probes {
        settings.probes = p.clone();
    }
    settings.check().map_err(|e| Failure::new(exit::INVALID, e))?;
    let symbol = SchurSymbol::build_with_limit(&op, settings.node_limit).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
    Ok(Loaded { op, settings, symbol })
}

pub fn diagnose(l: &Loaded) -> Result<Diagnostics, Failure> {
    let grid = l.settings.x_grid();
    let mut diag = l.op.validate(&grid).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
    let probes: Vec<Complex64> = l.settings.probes.iter().map(|p| p.0).collect();
    diag.extend(check_assumptions(&l.op, &l.symbol, &probes, &grid, &l.settings));
    Ok(diag)
}

fn summary(diag: &Diagnostics) -> String {
    let mut s = String::new();
    for r in &diag.records {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inconclusive => "inconclusive",
        };
        let probe = r.probe.map(|p| format!(" at λ = {}", ComplexLit(p))).unwrap_or_default();
        let _ = write!(s, "{:?}{probe}: {status}", r.assumption);
        if !r.note.is_empty() {
            let _ = write!(s, " ({})", r.note);
        }
        s.push('\n');
    }
    for w in &diag.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn cmd_check(opts: &Options) -> Result<i32, Failure> {
    let l = load(opts)?;
    let diag = diagnose(&l)?;
    print!("{}", summary(&diag));
    write_json(&opts.out, "check.json", &diag)?;
    Ok(if diag.has_failures() { exit::CHECK_FAILED } else { exit::OK })
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    diagnostics: &'a Diagnostics,
    forced: bool,
    report: &'a Report,
    exceptional: &'a crate::asymptotics::ExceptionalSet,
}

/// Runs the gate of `spectrum`: Some(code) when the command must stop.
fn gate(diag: &Diagnostics, force: bool) -> Option<i32> {
    if !diag.has_failures() || force {
        return None;
    }
    let d = diag.status_of(Assumption::D);
    if !d.is_empty() && d.iter().all(|s| *s == Status::Fail) {
        Some(exit::D_FAILS)
    } else {
        Some(exit::CHECK_FAILED)
    }
}

fn cmd_spectrum(opts: &Options) -> Result<i32, Failure> {
    let l = load(opts)?;
    let diag = diagnose(&l)?;
    if let Some(code) = gate(&diag, opts.force) {
        eprint!("{}", summary(&diag));
        eprintln!("assumptions fail; rerun with --force to compute anyway");
        write_json(&opts.out, "check.json", &diag)?;
        return Ok(code);
    }
    let (set, mut report) = essential_spectrum_with(&l.op, &l.symbol, &l.settings);
    if diag.has_failures() {
        report.warnings.push("assumption checks failed; results computed under --force".into());
        for w in &report.warnings {
            log::warn!("{w}");
        }
    }
    write_file(&opts.out, "spectrum.csv", &set.to_csv())?;
    write_json(
        &opts.out,
        "spectrum.json",
        &SpectrumJson { diagnostics: &diag, forced: opts.force && diag.has_failures(), report: &report, exceptional: &set.exceptional },
    )?;
    if opts.svg {
        write_file(&opts.out, "spectrum.svg", &render_svg(&set, &l.settings.window))?;
    }
    println!(
        "regular points: {}, singular points: {}, branches: {}, skipped: {}",
        report.regular_points, report.singular_points, report.branches, report.skipped_total
    );
    Ok(exit::OK)
}

#[derive(Serialize, Default)]
struct DeterminantComparison {
    sides: Vec<Side>,
    /// Determinant roots inside the window, excluding λ = d.
    roots_in_window: usize,
    singular_points: usize,
    /// sup over singular points of the distance to the determinant roots.
    singular_to_det: f64,
    /// sup over determinant roots of the distance to the singular points.
    det_to_singular: f64,
}

#[derive(Serialize)]
struct DiscretizationComparison {
    l: f64,
    n: usize,
    bc: Boundary,
    eigenvalues: usize,
    eigenvalues_in_window: usize,
    /// sup over eigenvalues in the window of the distance to the computed spectrum.
    cloud_to_spectrum: f64,
    /// sup over regular points of the distance to the eigenvalues.
    regular_to_cloud: f64,
    /// sup over singular points of the distance to the eigenvalues.
    singular_to_cloud: f64,
    truncation: Option<TruncationReport>,
}

#[derive(Serialize, Default)]
struct OracleJson {
    refused: Vec<String>,
    determinant: Option<DeterminantComparison>,
    discretization: Option<DiscretizationComparison>,
}

/// Determinant roots of both frozen sides on the base ξ grid together with every ξ used by the sweep.
pub fn compare_determinant(frozen: &[FrozenSymbol], set: &SpectrumSet, cfg: &Settings) -> (Vec<(Side, DetRoots)>, f64, f64, usize) {
    let mut xis = cfg.xi_grid();
    xis.extend(set.singular.iter().map(|p| p.xi));
    xis.sort_by(f64::total_cmp);
    xis.dedup();
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for fs in frozen {
        for r in det_scan(fs, &xis) {
            pts.extend(r.roots.iter().filter(|z| !z.at_d && cfg.window.contains(z.lambda)).map(|z| z.lambda));
            rows.push((fs.side, r));
        }
    }
    let sing = set.singular_lambdas();
    (rows, one_sided_hausdorff(&sing, &pts), one_sided_hausdorff(&pts, &sing), pts.len())
}

fn cmd_oracle(opts: &Options) -> Result<i32, Failure> {
    let l = load(opts)?;
    let cfg = &l.settings;
    let mut report = OracleJson::default();
    let mut frozen = Vec::new();
    for side in Side::BOTH {
        match FrozenSymbol::estimate(&l.op, side, cfg) {
            Ok(fs) => frozen.push(fs),
            Err(e) => {
                log::warn!("{e}");
                report.refused.push(e.to_string());
            }
        }
    }
    if !report.refused.is_empty() && !opts.discretize {
        eprintln!("frozen symbol refused; pass --discretize for the finite-difference oracle");
        for r in &report.refused {
            eprintln!("  {r}");
        }
        write_json(&opts.out, "oracle.json", &report)?;
        return Ok(exit::REFUSED);
    }

    let (set, _) = essential_spectrum_with(&l.op, &l.symbol, cfg);
    if report.refused.is_empty() {
        let (rows, s2d, d2s, count) = compare_determinant(&frozen, &set, cfg);
        let mut csv = String::from("side,xi,re_lambda,im_lambda,at_d\n");
        for (side, r) in &rows {
            for z in &r.roots {
                let _ = writeln!(csv, "{side},{},{},{},{}", r.xi, z.lambda.re, z.lambda.im, z.at_d);
            }
        }
        write_file(&opts.out, "oracle_det.csv", &csv)?;
        println!("determinant oracle: singular→det {s2d:e}, det→singular {d2s:e}");
        report.determinant = Some(DeterminantComparison {
            sides: frozen.iter().map(|f| f.side).collect(),
            roots_in_window: count,
            singular_points: set.singular.len(),
            singular_to_det: s2d,
            det_to_singular: d2s,
        });
    }

    if opts.discretize {
        let eig = discretize_and_eig(&l.op, opts.length, opts.nodes, opts.bc).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
        let mut csv = String::from("re,im\n");
        for z in &eig {
            let _ = writeln!(csv, "{},{}", z.re, z.im);
        }
        write_file(&opts.out, "eigenvalues.csv", &csv)?;
        let inside: Vec<Complex64> = eig.iter().copied().filter(|z| cfg.window.contains(*z)).collect();
        let h_times_l = 2.0 * opts.length * opts.length / opts.nodes as f64;
        let lengths = [opts.length / 2.0, opts.length, 2.0 * opts.length];
        let singular = set.singular_lambdas();
        let truncation = if singular.is_empty() {
            None
        } else {
            Some(truncation_study(&l.op, &lengths, h_times_l, &singular).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?)
        };
        let cmp = DiscretizationComparison {
            l: opts.length,
            n: opts.nodes,
            bc: opts.bc,
            eigenvalues: eig.len(),
            eigenvalues_in_window: inside.len(),
            cloud_to_spectrum: one_sided_hausdorff(&inside, &set.all_lambdas()),
            regular_to_cloud: one_sided_hausdorff(&set.regular_lambdas(), &eig),
            singular_to_cloud: one_sided_hausdorff(&singular, &eig),
            truncation,
        };
        println!(
            "discretization: {} eigenvalues, cloud→spectrum {:e}, regular→cloud {:e}, singular→cloud {:e}",
            cmp.eigenvalues, cmp.cloud_to_spectrum, cmp.regular_to_cloud, cmp.singular_to_cloud
        );
        report.discretization = Some(cmp);
    }
    write_json(&opts.out, "oracle.json", &report)?;
    Ok(exit::OK)
}

fn cmd_print_schur(opts: &Options) -> Result<i32, Failure> {
    let l = load(opts)?;
    for (j, p) in l.symbol.coefficients().iter().enumerate() {
        println!("p{j} = {p}");
    }
    println!("delta = {}", l.op.delta());
    Ok(exit::OK)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match cli.command {
        Command::Check => cmd_check(&cli.opts),
        Command::Spectrum => cmd_spectrum(&cli.opts),
        Command::Oracle => cmd_oracle(&cli.opts),
        Command::PrintSchur => cmd_print_schur(&cli.opts),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
