//! Command-line front end.
//!
//! Every subcommand parses and validates its flags, opens its output files,
//! and only then calls into the engines. Numbers printed here come straight
//! from engine results.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::curves::{self, CurveError, CurveTolerances, ProbeConfig, ProbeVerdict, Rational};
use crate::maps::{LiftedMap, Point};
use crate::stats::{self, Execution, IntegralEstimate, SampleMode, ScanBox, ScanConfig, ScanResult, StatsError, Window};
use crate::torsion::{self, TorsionError, VERTICAL_TOL};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot write `{path}`: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("heatmap needs a grid scan")]
    NotAGrid,
    #[error("invalid arguments: {0}")]
    Invalid(String),
}

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Torsion and conjugate points of twist maps of the annulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-step torsion of one tangent vector along an orbit.
    Trace(TraceArgs),
    /// Torsion field on a grid of cell centres.
    Field(FieldArgs),
    /// Monte-Carlo measure of the negative-torsion set.
    Measure(MeasureArgs),
    /// Flux between the characteristic curves.
    Flux(FluxArgs),
    /// Characteristic curves, or the family `psi_{p/q}` with `--rho`.
    Psi(PsiArgs),
    /// Integrability probe: conjugate points or a monotone family.
    Probe(ProbeArgs),
    /// Finite-time rotation number.
    Rotation(OrbitArgs),
    /// Horizontal monotonicity of an orbit segment.
    Classify(OrbitArgs),
    /// Finite-time linking number of two orbits.
    Linking(LinkingArgs),
    /// First-return identity on a window.
    ReturnCheck(ReturnArgs),
}

#[derive(Debug, Args)]
struct MapArg {
    /// shear | drift:c=<c> | std:k=<k> | genfun:a1=<a1>,a2=<a2>,...
    #[arg(long, value_parser = parse_map)]
    map: LiftedMap,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    point: Point,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair, default_value = "0,1")]
    vector: (f64, f64),
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[command(flatten)]
    map: MapArg,
    /// x0,x1,y0,y1
    #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box, default_value = "-0.5,0.5,-0.5,0.5")]
    bbox: ScanBox,
    /// NXxNY
    #[arg(long, value_parser = parse_grid, default_value = "64x64")]
    grid: (usize, usize),
    #[arg(long, default_value_t = stats::DEFAULT_HORIZON)]
    n: usize,
    #[arg(long, default_value_t = stats::DEFAULT_EPS)]
    eps: f64,
    /// Period of the region; torsion is still reported per step of the map.
    #[arg(long, default_value_t = 1)]
    period: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write an SVG heatmap of the field.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Colour scale bound; defaults to the largest |torsion| in the field.
    #[arg(long)]
    scale: Option<f64>,
    /// Evaluate the samples on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box, default_value = "-0.1,0.1,-0.1,0.1")]
    bbox: ScanBox,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = stats::DEFAULT_HORIZON)]
    n: usize,
    #[arg(long, default_value_t = stats::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    period: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FluxArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, default_value_t = 256)]
    res: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PsiArgs {
    #[command(flatten)]
    map: MapArg,
    /// Comma-separated rotation numbers p/q, increasing.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    rho: Vec<Rational>,
    #[arg(long, default_value_t = 256)]
    res: usize,
    #[arg(long, default_value_t = curves::ROOT_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, value_parser = parse_grid, default_value = "64x64")]
    grid: (usize, usize),
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair, default_value = "-2,2")]
    yrange: (f64, f64),
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "0/1")]
    rho: Vec<Rational>,
    /// Nodes per curve of the family.
    #[arg(long, default_value_t = 64)]
    res: usize,
    /// Family CSV, written when no obstruction is found.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OrbitArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    point: Point,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Debug, Args)]
struct LinkingArgs {
    #[command(flatten)]
    map: MapArg,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    point: Point,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    point2: Point,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Debug, Args)]
struct ReturnArgs {
    #[command(flatten)]
    map: MapArg,
    /// x0,x1,y0,y1 with x read modulo 1
    #[arg(long, allow_hyphen_values = true, value_parser = parse_box)]
    window: ScanBox,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    point: Point,
    #[arg(long, default_value_t = 10)]
    returns: usize,
    /// Step budget for collecting the returns.
    #[arg(long, default_value_t = 10_000_000)]
    cap: usize,
}

fn parse_map(s: &str) -> Result<LiftedMap, String> {
    s.parse::<LiftedMap>().map_err(|e| e.to_string())
}

fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a real number", t.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("numbers must be finite".into());
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_reals(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_point(s: &str) -> Result<Point, String> {
    parse_pair(s).map(|(x, y)| Point::new(x, y))
}

fn parse_box(s: &str) -> Result<ScanBox, String> {
    let v = parse_reals(s, 4)?;
    if !(v[0] < v[1] && v[2] < v[3]) {
        return Err("expected x0 < x1 and y0 < y1".into());
    }
    Ok(ScanBox::new(v[0], v[1], v[2], v[3]))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got `{s}`"))?;
    let nx: usize = a.trim().parse().map_err(|_| format!("bad grid width `{a}`"))?;
    let ny: usize = b.trim().parse().map_err(|_| format!("bad grid height `{b}`"))?;
    if nx == 0 || ny == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((nx, ny))
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let (sink, code): (&mut dyn Write, i32) = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (out, 0),
                _ => (err, 2),
            };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(CliError::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn create(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>, CliError> {
    path.as_ref()
        .map(|p| {
            File::create(p)
                .map(BufWriter::new)
                .map_err(|source| CliError::Output { path: p.clone(), source })
        })
        .transpose()
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn box_str(b: &ScanBox) -> String {
    format!("{},{},{},{}", b.x0, b.x1, b.y0, b.y1)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Trace(a) => trace(a, out),
        Command::Field(a) => field(a, out),
        Command::Measure(a) => measure(a, out),
        Command::Flux(a) => {
            let mut file = create(&a.out)?;
            let value = curves::flux(&a.map.map, a.res)?;
            writeln!(out, "map = {}\nres = {}\nflux = {}", a.map.map, a.res, value)?;
            if let Some(f) = file.as_mut() {
                writeln!(f, "# map={}\n# res={}\nflux\n{}", a.map.map, a.res, value)?;
                f.flush()?;
            }
            Ok(())
        }
        Command::Psi(a) => psi(a, out),
        Command::Probe(a) => probe(a, out),
        Command::Rotation(a) => {
            let r = curves::rotation_number(&a.map.map, a.point, a.n)?;
            writeln!(out, "map = {}\npoint = {}\nn = {}\nrotation = {}", a.map.map, a.point, r.n, r.value)?;
            Ok(())
        }
        Command::Classify(a) => {
            let kind = curves::classify_monotonicity(&a.map.map, a.point, a.n)?;
            writeln!(out, "map = {}\npoint = {}\nn = {}\nclass = {}", a.map.map, a.point, a.n, kind)?;
            Ok(())
        }
        Command::Linking(a) => {
            let l = torsion::linking_number(&a.map.map, a.point, a.point2, a.n)?;
            writeln!(
                out,
                "map = {}\npoint = {}\npoint2 = {}\nn = {}\nlinking = {}\nnear_half_turn = {}",
                a.map.map, a.point, a.point2, a.n, l.value, l.near_half_turn
            )?;
            Ok(())
        }
        Command::ReturnCheck(a) => {
            let w = Window::new(a.window.x0, a.window.x1, a.window.y0, a.window.y1);
            let r = stats::first_return_torsion(&a.map.map, &w, a.point, a.returns, a.cap)?;
            writeln!(out, "map = {}\npoint = {}\nwindow = {}", a.map.map, a.point, box_str(&a.window))?;
            writeln!(out, "returns = {}\nreturn_times = {:?}\ntotal_time = {}", r.times.len(), r.times, r.total_time)?;
            writeln!(out, "ratio = {}\ndirect = {}\ndiscrepancy = {:e}", r.ratio, r.direct, r.discrepancy)?;
            writeln!(out, "identity = {}", if r.identity_holds { "holds" } else { "fails" })?;
            Ok(())
        }
    }
}

fn trace(a: TraceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Invalid("--n must be at least 1".into()));
    }
    let mut file = create(&a.out)?;
    let map = &a.map.map;
    let t = torsion::torsion_trace(map, a.point, [a.vector.0, a.vector.1], a.n)?;
    let over = torsion::detect_overconjugate(map, a.point, a.n)?;
    let conj = torsion::detect_conjugate(map, a.point, a.n, VERTICAL_TOL)?;
    if let Some(f) = file.as_mut() {
        let header = [
            ("map", map.to_string()),
            ("point", format!("{},{}", a.point.x, a.point.y)),
            ("vector", format!("{},{}", a.vector.0, a.vector.1)),
            ("n", a.n.to_string()),
        ];
        for (k, v) in header {
            writeln!(f, "# {k}={v}")?;
        }
        writeln!(f, "step,x,y,delta,cumulative")?;
        for (i, p) in t.points.iter().enumerate() {
            let delta = if i == 0 { String::new() } else { t.steps[i - 1].to_string() };
            writeln!(f, "{},{},{},{},{}", i, p.x, p.y, delta, t.cumulative[i])?;
        }
        f.flush()?;
    }
    writeln!(out, "map = {map}\npoint = {}\nn = {}", a.point, a.n)?;
    writeln!(out, "torsion = {}\ncumulative = {}", t.torsion(), t.cumulative[a.n])?;
    match over {
        Some(n) => writeln!(out, "first_overconjugate = {n}")?,
        None => writeln!(out, "first_overconjugate = none")?,
    }
    match conj {
        Some(e) => writeln!(out, "first_conjugate = {} (k = {})", e.time, e.k)?,
        None => writeln!(out, "first_conjugate = none")?,
    }
    Ok(())
}

fn write_summary(out: &mut dyn Write, r: &ScanResult) -> io::Result<()> {
    let s = &r.summary;
    writeln!(out, "samples = {}\nfailed = {}", s.count, s.failed)?;
    writeln!(out, "fraction_negative = {}\nfraction_nonzero = {}", s.fraction_negative, s.fraction_nonzero)?;
    writeln!(out, "mean_torsion = {}\nstderr = {}\ntorsion_stderr = {}", s.mean_torsion, s.stderr, s.torsion_stderr)
}

fn field(a: FieldArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = ScanConfig::new(a.bbox, SampleMode::Grid { nx: a.grid.0, ny: a.grid.1 }, a.n, a.eps);
    cfg.period = a.period;
    cfg.execution = if a.serial { Execution::Serial } else { Execution::Parallel };
    cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(s) = a.scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Invalid("--scale must be positive".into()));
        }
    }
    let mut csv = create(&a.out)?;
    let mut svg = create(&a.svg)?;
    let map = &a.map.map;
    let result = stats::torsion_field(map, &cfg)?;
    if let Some(f) = csv.as_mut() {
        let header = meta(&[
            ("map", map.to_string()),
            ("mode", "grid".into()),
            ("grid", format!("{}x{}", a.grid.0, a.grid.1)),
            ("box", box_str(&a.bbox)),
            ("horizon", a.n.to_string()),
            ("period", a.period.to_string()),
        ]);
        stats::write_scan_csv(f, &header, &result)?;
        f.flush()?;
    }
    if let Some(f) = svg.as_mut() {
        f.write_all(render_heatmap(&result, a.scale)?.as_bytes())?;
        f.flush()?;
    }
    writeln!(out, "map = {map}\ngrid = {}x{}\nbox = {}\nhorizon = {}", a.grid.0, a.grid.1, box_str(&a.bbox), a.n)?;
    write_summary(out, &result)?;
    Ok(())
}

fn measure(a: MeasureArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = ScanConfig::new(a.bbox, SampleMode::MonteCarlo { samples: a.samples, seed: a.seed }, a.n, a.eps);
    cfg.period = a.period;
    cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut csv = create(&a.out)?;
    let map = &a.map.map;
    let result = stats::torsion_field(map, &cfg)?;
    let integral = IntegralEstimate::from_summary(&a.bbox, &result.summary);
    if let Some(f) = csv.as_mut() {
        let header = meta(&[
            ("map", map.to_string()),
            ("mode", "monte-carlo".into()),
            ("samples", a.samples.to_string()),
            ("seed", a.seed.to_string()),
            ("box", box_str(&a.bbox)),
            ("horizon", a.n.to_string()),
            ("period", a.period.to_string()),
        ]);
        stats::write_scan_csv(f, &header, &result)?;
        f.flush()?;
    }
    writeln!(out, "map = {map}\nbox = {}\nhorizon = {}\nseed = {}", box_str(&a.bbox), a.n, a.seed)?;
    write_summary(out, &result)?;
    writeln!(out, "torsion_integral = {}\nintegral_stderr = {}", integral.value, integral.stderr)?;
    Ok(())
}

fn psi(a: PsiArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.res == 0 || !(a.tol > 0.0) {
        return Err(CliError::Invalid("--res and --tol must be positive".into()));
    }
    if let Some(r) = a.rho.iter().find(|r| !r.is_reduced()) {
        return Err(CliError::Invalid(format!("{r} is not a reduced fraction")));
    }
    let mut file = create(&a.out)?;
    let map = &a.map.map;
    let header = meta(&[("map", map.to_string()), ("res", a.res.to_string())]);
    writeln!(out, "map = {map}\nres = {}", a.res)?;
    if a.rho.is_empty() {
        let (p1, m1) = curves::characteristic_curves(map, a.res, a.tol)?;
        writeln!(out, "psi1: max_residual = {:e}", p1.max_residual())?;
        writeln!(out, "psi-1: max_residual = {:e}", m1.max_residual())?;
        if let Some(f) = file.as_mut() {
            curves::write_curves_csv(f, &header, &[&p1, &m1])?;
            f.flush()?;
        }
        return Ok(());
    }
    let tol = CurveTolerances { root: a.tol, ..CurveTolerances::default() };
    let family = curves::psi_family(map, &a.rho, a.res, tol)?;
    for ((rho, c), lip) in family.entries.iter().zip(&family.lipschitz) {
        writeln!(
            out,
            "psi[{rho}]: max_residual = {:e}, periodicity = {:e}, lipschitz = {}",
            c.max_residual(),
            c.max_periodicity_residual().unwrap_or(0.0),
            lip
        )?;
    }
    writeln!(out, "ordered = {}\nall_fixed = {}", family.monotone_ok, family.all_fixed(tol.fixed))?;
    if let Some(f) = file.as_mut() {
        let curves: Vec<_> = family.entries.iter().map(|(_, c)| c).collect();
        curves::write_curves_csv(f, &header, &curves)?;
        f.flush()?;
    }
    Ok(())
}

fn probe(a: ProbeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.yrange.0 <= a.yrange.1) || a.horizon == 0 || a.res == 0 {
        return Err(CliError::Invalid("--yrange needs y0 <= y1; --horizon and --res must be positive".into()));
    }
    let mut rho = a.rho.clone();
    if rho.iter().any(|r| !r.is_reduced()) {
        return Err(CliError::Invalid("--rho entries must be reduced fractions".into()));
    }
    rho.sort();
    rho.dedup();
    let mut file = create(&a.out)?;
    let map = &a.map.map;
    let cfg = ProbeConfig { grid: a.grid, y_range: a.yrange, horizon: a.horizon, rationals: rho, resolution: a.res, ..ProbeConfig::default() };
    let verdict = curves::integrability_probe(map, &cfg)?;
    writeln!(out, "map = {map}\ngrid = {}x{}\nhorizon = {}", a.grid.0, a.grid.1, a.horizon)?;
    writeln!(out, "{}", verdict.tag())?;
    match &verdict {
        ProbeVerdict::NotApplicable { flux } => writeln!(out, "flux = {flux}")?,
        ProbeVerdict::ConjugatePointsFound { witness, time, hits, scanned } => {
            writeln!(out, "witness = {witness}\ntime = {time}\nhits = {hits} of {scanned}")?
        }
        ProbeVerdict::NoObstructionFound { family, scanned } => {
            writeln!(out, "scanned = {scanned}")?;
            writeln!(out, "max_root_residual = {:e}", family.max_root_residual())?;
            writeln!(out, "max_periodicity_residual = {:e}", family.max_periodicity_residual())?;
            writeln!(out, "ordered = {}", family.monotone_ok)?;
            if let Some(f) = file.as_mut() {
                let header = meta(&[("map", map.to_string()), ("res", a.res.to_string())]);
                let curves: Vec<_> = family.entries.iter().map(|(_, c)| c).collect();
                curves::write_curves_csv(f, &header, &curves)?;
                f.flush()?;
            }
        }
    }
    Ok(())
}

/// Blue for negative, white at zero, red for positive; `s` in `[-1, 1]`.
fn diverging(s: f64) -> (u8, u8, u8) {
    let s = s.clamp(-1.0, 1.0);
    let (end, t) = if s < 0.0 { ((33.0, 102.0, 172.0), -s) } else { ((178.0, 24.0, 43.0), s) };
    let mix = |e: f64| (255.0 + (e - 255.0) * t).round() as u8;
    (mix(end.0), mix(end.1), mix(end.2))
}

const CELL: usize = 8;

/// Self-contained SVG heatmap of a grid scan, one rect per cell, `y` up.
/// The colour scale is symmetric about zero with bound `scale` (or the
/// largest finite |torsion|); failed cells are grey.
pub fn render_heatmap(result: &ScanResult, scale: Option<f64>) -> Result<String, CliError> {
    let (nx, ny) = result.grid().ok_or(CliError::NotAGrid)?;
    let finite = || result.records.iter().map(|r| r.torsion).filter(|t| t.is_finite());
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    let bound = scale.unwrap_or_else(|| finite().map(f64::abs).fold(0.0, f64::max));
    let bound = if bound > 0.0 { bound } else { 1.0 };
    let (w, h) = (nx * CELL, ny * CELL);
    let legend_w = 120;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + legend_w,
        h.max(140),
        w + legend_w,
        h.max(140)
    );
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (idx, r) in result.records.iter().enumerate() {
        let (i, j) = (idx % nx, idx / nx);
        let fill = if r.torsion.is_finite() {
            let (cr, cg, cb) = diverging(r.torsion / bound);
            format!("#{cr:02x}{cg:02x}{cb:02x}")
        } else {
            "#808080".to_string()
        };
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#, i * CELL, (ny - 1 - j) * CELL);
    }
    let _ = writeln!(s, "</g>");
    let lx = w + 10;
    let _ = writeln!(s, r#"<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">"#);
    for (off, v) in [(0, -1.0), (50, 0.0), (100, 1.0)] {
        let (cr, cg, cb) = diverging(v);
        let _ = writeln!(s, "<stop offset=\"{off}%\" stop-color=\"#{cr:02x}{cg:02x}{cb:02x}\"/>");
    }
    let _ = writeln!(s, "</linearGradient></defs>");
    let _ = writeln!(s, r#"<rect x="{lx}" y="10" width="16" height="100" fill="url(#scale)" stroke="black" stroke-width="0.5"/>"#);
    let text = |s: &mut String, y: usize, label: String| {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-family="monospace" font-size="9">{label}</text>"#, lx + 20);
    };
    text(&mut s, 16, format!("+{bound:.4}"));
    text(&mut s, 63, "0".into());
    text(&mut s, 110, format!("-{bound:.4}"));
    let fmt = |v: f64| if v.is_finite() { format!("{v:.4}") } else { "n/a".into() };
    let _ = writeln!(s, r#"<text x="{lx}" y="124" font-family="monospace" font-size="9">min {}</text>"#, fmt(lo));
    let _ = writeln!(s, r#"<text x="{lx}" y="136" font-family="monospace" font-size="9">max {}</text>"#, fmt(hi));
    s.push_str("</svg>\n");
    Ok(s)
}
