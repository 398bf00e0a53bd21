//! Command-line front end: `solve`, `verify`, `morph` and `streamlines`.
//!
//! Exit codes: 0 on success, 1 on a usage or validation error, 2 when a
//! solver or extraction fails. `verify` exits 0 exactly when the overall
//! report passes. Every flag may also come from a TOML file given with
//! `--config` (same keys, with `-` spelled `_`); flags win.

pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::geometry::{RingSpec, Vec2};
use crate::grid::build_grid;
use crate::morph::{stacked_surface, uniform_levels, validate_levels, MorphFamily};
use crate::report::CheckReport;
use crate::streamline::{streamline_properties, TerminalStatus, TraceConfig, Tracer};
use crate::{Error, Result, SolverChoice};

pub use verify::{verify, Outcome, VerificationReport, VerifyConfig, CHECKS};

pub const DEFAULT_H: f64 = 1.0 / 128.0;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_LEVEL_COUNT: usize = 3;
pub const DEFAULT_START_COUNT: usize = 50;

#[derive(Debug, Parser)]
#[command(name = "ringpot", version, about = "Infinity- and p-harmonic potentials on planar convex rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the potential and write the field CSV and solver statistics.
    Solve(SolveArgs),
    /// Run the regularity checks and write a verification report.
    Verify(VerifyArgs),
    /// Extract level sets and write SVG, CSV and a lofted OBJ surface.
    Morph(MorphArgs),
    /// Trace gradient streamlines and write one CSV per streamline.
    Streamlines(StreamlineArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Ring description (JSON).
    #[arg(long)]
    ring: Vec<PathBuf>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// A real `p > 2` or `inf`.
    #[arg(long)]
    p: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list of checks, or `all`.
    #[arg(long)]
    checks: Option<String>,
    /// Comma list of `check` or `ring:check` entries expected to fail.
    #[arg(long = "expected-fail")]
    expected_fail: Option<String>,
}

#[derive(Debug, Args)]
struct MorphArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<String>,
    /// Comma list of levels in (0, 1).
    #[arg(long)]
    levels: Option<String>,
    /// Number of uniform levels `k/(n+1)` when `--levels` is absent.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Args)]
struct StreamlineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<String>,
    /// CSV of start points `x,y`.
    #[arg(long)]
    starts: Option<PathBuf>,
    /// Number of lattice starts when `--starts` is absent.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Number(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ring: Option<OneOrMany<PathBuf>>,
    p: Option<Scalar>,
    h: Option<f64>,
    levels: Option<OneOrMany<Scalar>>,
    checks: Option<OneOrMany<String>>,
    expected_fail: Option<OneOrMany<String>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    starts: Option<PathBuf>,
    count: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        cfg.ring = cfg.ring.map(|r| OneOrMany::Many(r.to_vec().iter().map(rebase).collect()));
        cfg.out = cfg.out.as_ref().map(rebase);
        cfg.starts = cfg.starts.as_ref().map(rebase);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Solve,
    Verify,
    Morph,
    Streamlines,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub rings: Vec<PathBuf>,
    pub h: f64,
    pub p: SolverChoice,
    pub levels: Vec<f64>,
    pub checks: Vec<String>,
    pub expected_fail: Vec<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub starts: Option<PathBuf>,
    pub count: Option<usize>,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn parse_levels(items: &[String]) -> Result<Vec<f64>> {
    items
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("level '{s}' is not a number"))))
        .collect()
}

impl RunConfig {
    fn resolve(cli: Cli) -> Result<Self> {
        let (command, common, p, levels, count, checks, expected_fail, starts) = match cli.command {
            Command::Solve(a) => (CommandKind::Solve, a.common, a.p, None, None, None, None, None),
            Command::Verify(a) => (CommandKind::Verify, a.common, None, None, None, a.checks, a.expected_fail, None),
            Command::Morph(a) => (CommandKind::Morph, a.common, a.p, a.levels, a.count, None, None, None),
            Command::Streamlines(a) => (CommandKind::Streamlines, a.common, a.p, None, a.count, None, None, a.starts),
        };
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let rings = if common.ring.is_empty() {
            file.ring.map(|r| r.to_vec()).unwrap_or_default()
        } else {
            common.ring
        };
        if rings.is_empty() {
            return Err(Error::Config("--ring is required".into()));
        }
        if command != CommandKind::Verify && rings.len() > 1 {
            return Err(Error::Config("only verify accepts more than one --ring".into()));
        }
        let h = common.h.or(file.h).unwrap_or(DEFAULT_H);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("h must be positive, got {h}")));
        }
        let p = match p.or(file.p.map(|s| s.text())) {
            Some(s) => SolverChoice::parse(&s)?,
            None => SolverChoice::Inf,
        };
        let count = count.or(file.count);
        let levels = match levels {
            Some(s) => parse_levels(&split_list(&s))?,
            None => match file.levels {
                Some(l) => parse_levels(&l.to_vec().iter().map(Scalar::text).collect::<Vec<_>>())?,
                None => uniform_levels(count.unwrap_or(DEFAULT_LEVEL_COUNT)),
            },
        };
        if command == CommandKind::Morph {
            validate_levels(&levels)?;
        }
        let checks = match checks {
            Some(s) => split_list(&s),
            None => file.checks.map(|c| c.to_vec()).unwrap_or_else(|| vec!["all".into()]),
        };
        let expected_fail = match expected_fail {
            Some(s) => split_list(&s),
            None => file.expected_fail.map(|c| c.to_vec()).unwrap_or_default(),
        };
        Ok(Self {
            command,
            rings,
            h,
            p,
            levels,
            checks,
            expected_fail,
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out: common.out.or(file.out).unwrap_or_else(|| PathBuf::from("ringpot-out")),
            starts: starts.or(file.starts),
            count,
        })
    }
}

/// Exit code for an error raised after the arguments were accepted.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. }
        | Error::StencilConflict { .. }
        | Error::NonSimpleContour(_)
        | Error::Undefined { .. }
        | Error::OutsideDomain { .. } => 2,
        _ => 1,
    }
}

/// A command error with its exit code.
struct Failure {
    error: Error,
    code: i32,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = exit_code(&error);
        Self { error, code }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

/// Errors while producing results (solver, extraction, output) exit with 2;
/// configuration errors keep exit code 1.
fn runtime(error: Error) -> Failure {
    let code = if matches!(error, Error::Config(_)) { 1 } else { 2 };
    Failure { error, code }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn ring_label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ring".into())
}

/// Loads a ring file; a failed validation becomes an `InvalidRing` error
/// carrying the validation report.
pub fn load_ring(path: &Path) -> Result<RingSpec> {
    let spec = RingSpec::load(path)?;
    let report = spec.validate();
    if !report.pass {
        let failed: Vec<String> = report
            .parts
            .iter()
            .filter(|p| !p.pass)
            .map(|p| match &p.note {
                Some(n) => format!("{} ({n})", p.name),
                None => p.name.clone(),
            })
            .collect();
        return Err(Error::InvalidRing(format!("{}: failed {}", path.display(), failed.join(", "))));
    }
    Ok(spec)
}

#[derive(Debug, Serialize)]
struct SolveRecord<'a> {
    ring: &'a RingSpec,
    h: f64,
    p: SolverChoice,
    iterations: usize,
    final_update: f64,
    final_residual: f64,
}

fn cmd_solve(cfg: &RunConfig) -> CmdResult {
    let spec = load_ring(&cfg.rings[0])?;
    let grid = build_grid(&spec.build()?, cfg.h)?;
    let (u, stats) = cfg.p.solve(&grid).map_err(runtime)?;
    write_atomic(&cfg.out.join("field.csv"), u.to_csv().as_bytes()).map_err(runtime)?;
    let record = SolveRecord {
        ring: &spec,
        h: cfg.h,
        p: cfg.p,
        iterations: stats.iterations,
        final_update: stats.final_update,
        final_residual: stats.final_residual,
    };
    write_atomic(&cfg.out.join("stats.json"), (serde_json::to_string_pretty(&record)? + "\n").as_bytes()).map_err(runtime)?;
    eprintln!(
        "solved p = {} on {} nodes in {} iterations ({:.1} s)",
        cfg.p,
        grid.len(),
        stats.iterations,
        stats.wall_time_s
    );
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig) -> CmdResult {
    let rings = cfg
        .rings
        .iter()
        .map(|p| Ok((ring_label(p), load_ring(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let vc = VerifyConfig {
        rings,
        h: cfg.h,
        checks: cfg.checks.clone(),
        expected_fail: cfg.expected_fail.clone(),
        seed: cfg.seed,
    };
    let report = verify(&vc)?;
    write_atomic(&cfg.out.join("report.json"), report.to_json().as_bytes()).map_err(runtime)?;
    for ring in &report.rings {
        if let Some(e) = &ring.error {
            eprintln!("{}: error: {e}", ring.label);
        }
        for (name, entry) in &ring.entries {
            let outcome = serde_json::to_value(entry.outcome)?;
            eprintln!("{}: {name}: {}", ring.label, outcome.as_str().unwrap_or("?"));
        }
    }
    eprintln!("overall: {}", if report.pass { "pass" } else { "fail" });
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_morph(cfg: &RunConfig) -> CmdResult {
    let spec = load_ring(&cfg.rings[0])?;
    let grid = build_grid(&spec.build()?, cfg.h)?;
    let (u, _) = cfg.p.solve(&grid).map_err(runtime)?;
    let family = MorphFamily::from_field(&u, cfg.p, &cfg.levels).map_err(runtime)?;
    write_atomic(&cfg.out.join("contours.svg"), family.to_svg().as_bytes()).map_err(runtime)?;
    write_atomic(&cfg.out.join("contours.csv"), family.to_csv().as_bytes()).map_err(runtime)?;
    if family.contours.len() >= 2 {
        write_atomic(&cfg.out.join("surface.obj"), stacked_surface(&family).map_err(runtime)?.to_obj().as_bytes()).map_err(runtime)?;
    }
    let diagnostics = family.diagnostics();
    write_atomic(&cfg.out.join("morph.json"), (diagnostics.to_json() + "\n").as_bytes()).map_err(runtime)?;
    eprintln!("{} contours, diagnostics {}", family.contours.len(), if diagnostics.pass { "pass" } else { "fail" });
    Ok(0)
}

/// Reads `x,y` rows; a non-numeric first row is taken as a header.
pub fn read_starts(path: &Path) -> Result<Vec<Vec2>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [x, y] => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((x, y)) => out.push(Vec2::new(x, y)),
            None if n == 0 => continue,
            None => return Err(Error::Parse(format!("{}:{}: expected 'x,y'", path.display(), n + 1))),
        }
    }
    Ok(out)
}

/// `count` points from the smallest square lattice over the outer bounding
/// box with at least `count` unmasked cell centres, taken at evenly spaced
/// positions in row-major order.
pub fn lattice_starts(grid: &crate::Grid, count: usize) -> Vec<Vec2> {
    let ring = grid.ring();
    let mask = grid.default_mask();
    let (lo, hi) = ring.outer().bounding_box();
    let mut m = (count as f64).sqrt().ceil().max(1.0) as usize;
    loop {
        let mut pts = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let x = Vec2::new(
                    lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / m as f64,
                    lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / m as f64,
                );
                if mask.contains_point(ring, x) {
                    pts.push(x);
                }
            }
        }
        if pts.len() >= count || m > 64 * (count + 1) {
            let n = pts.len();
            return (0..count.min(n)).map(|k| pts[k * n / count.max(1)]).collect();
        }
        m += 1;
    }
}

#[derive(Debug, Serialize)]
struct StreamlineEntry {
    index: usize,
    start: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    status: Option<TerminalStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    properties: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct StreamlineBundle<'a> {
    ring: &'a RingSpec,
    h: f64,
    p: SolverChoice,
    total: usize,
    reached_inner: usize,
    properties_pass: usize,
    errors: usize,
    entries: Vec<StreamlineEntry>,
}

fn cmd_streamlines(cfg: &RunConfig) -> CmdResult {
    let spec = load_ring(&cfg.rings[0])?;
    let grid = build_grid(&spec.build()?, cfg.h)?;
    let starts = match &cfg.starts {
        Some(path) => read_starts(path)?,
        None => lattice_starts(&grid, cfg.count.unwrap_or(DEFAULT_START_COUNT)),
    };
    if starts.is_empty() {
        return Err(Error::Config("no start points".into()).into());
    }
    let (u, _) = cfg.p.solve(&grid).map_err(runtime)?;
    let tracer = Tracer::new(&u);
    let config = TraceConfig::default();
    let mut entries = Vec::with_capacity(starts.len());
    for (index, &x) in starts.iter().enumerate() {
        let mut entry = StreamlineEntry {
            index,
            start: [x.x, x.y],
            status: None,
            steps: None,
            terminal_time: None,
            file: None,
            properties: None,
            error: None,
        };
        match tracer.trace(x, &config) {
            Ok(s) => {
                let name = format!("streamline_{index:03}.csv");
                write_atomic(&cfg.out.join(&name), s.to_csv().as_bytes()).map_err(runtime)?;
                entry.status = Some(s.status);
                entry.steps = Some(s.len() - 1);
                entry.terminal_time = Some(s.terminal_time());
                entry.file = Some(name);
                entry.properties = Some(streamline_properties(&s));
            }
            Err(e) => entry.error = Some(e.to_string()),
        }
        entries.push(entry);
    }
    let bundle = StreamlineBundle {
        ring: &spec,
        h: cfg.h,
        p: cfg.p,
        total: entries.len(),
        reached_inner: entries.iter().filter(|e| e.status == Some(TerminalStatus::ReachedInner)).count(),
        properties_pass: entries.iter().filter(|e| e.properties.as_ref().is_some_and(|r| r.pass)).count(),
        errors: entries.iter().filter(|e| e.error.is_some()).count(),
        entries,
    };
    write_atomic(&cfg.out.join("streamlines.json"), (serde_json::to_string_pretty(&bundle)? + "\n").as_bytes()).map_err(runtime)?;
    eprintln!(
        "{} streamlines, {} reached the inner set, {} errors",
        bundle.total, bundle.reached_inner, bundle.errors
    );
    Ok(0)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::resolve(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let result = match cfg.command {
        CommandKind::Solve => cmd_solve(&cfg),
        CommandKind::Verify => cmd_verify(&cfg),
        CommandKind::Morph => cmd_morph(&cfg),
        CommandKind::Streamlines => cmd_streamlines(&cfg),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
