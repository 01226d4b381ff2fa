//! Ensemble computations over many starting points.
//!
//! Samples are evaluated independently (in parallel unless [`Execution::Serial`]
//! is requested) and always gathered back in sample-index order before any
//! reduction, so summaries are bit-identical between serial and parallel runs.
//!
//! Monte-Carlo sample `i` is drawn from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `i`: two uniform `f64` per sample, `x` first.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::maps::{LiftedMap, Point};
use crate::torsion::{self, CocycleWalker, TangentVector, TorsionError};

/// Default threshold separating zero from non-zero torsion.
pub const DEFAULT_EPS: f64 = 0.05;
/// Default horizon of scans.
pub const DEFAULT_HORIZON: usize = 2000;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid scan configuration: {0}")]
    Config(String),
    #[error("{0} requires Monte-Carlo sampling")]
    NeedsMonteCarlo(&'static str),
    #[error("start point {0} is not in the window")]
    OutsideWindow(Point),
    #[error("only {found} of {wanted} returns to the window within the cap of {cap} steps")]
    NoReturn { cap: usize, found: usize, wanted: usize, times: Vec<usize> },
    #[error(transparent)]
    Torsion(#[from] TorsionError),
    #[error("malformed scan CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl ScanBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Cell centres of an `nx x ny` grid, row by row (`y` outer, `x` inner).
    Grid { nx: usize, ny: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub bbox: ScanBox,
    pub mode: SampleMode,
    /// Number of iterates of `f^period` per sample.
    pub horizon: usize,
    pub eps: f64,
    /// Period `M` of the region under study; the cocycle runs `horizon * period`
    /// steps of `f` and torsion is reported per step of `f`.
    pub period: usize,
    pub execution: Execution,
}

impl ScanConfig {
    pub fn new(bbox: ScanBox, mode: SampleMode, horizon: usize, eps: f64) -> Self {
        Self { bbox, mode, horizon, eps, period: 1, execution: Execution::Parallel }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let b = &self.bbox;
        let finite = [b.x0, b.x1, b.y0, b.y1, self.eps].iter().all(|v| v.is_finite());
        if !finite || !(b.x0 < b.x1) || !(b.y0 < b.y1) {
            return Err(StatsError::Config("box needs x0 < x1 and y0 < y1".into()));
        }
        if self.horizon == 0 || self.period == 0 {
            return Err(StatsError::Config("horizon and period must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(StatsError::Config("eps must be positive".into()));
        }
        match self.mode {
            SampleMode::Grid { nx, ny } if nx == 0 || ny == 0 => Err(StatsError::Config("grid must be non-empty".into())),
            SampleMode::MonteCarlo { samples: 0, .. } => Err(StatsError::Config("need at least one sample".into())),
            _ => Ok(()),
        }
    }

    pub fn steps(&self) -> usize {
        self.horizon * self.period
    }
}

/// Point `index` of the Monte-Carlo stream for `seed`.
pub fn monte_carlo_point(bbox: &ScanBox, seed: u64, index: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let u: f64 = rng.gen();
    let v: f64 = rng.gen();
    Point::new(bbox.x0 + (bbox.x1 - bbox.x0) * u, bbox.y0 + (bbox.y1 - bbox.y0) * v)
}

pub fn sample_points(cfg: &ScanConfig) -> Vec<Point> {
    let b = &cfg.bbox;
    match cfg.mode {
        SampleMode::Grid { nx, ny } => {
            let (dx, dy) = ((b.x1 - b.x0) / nx as f64, (b.y1 - b.y0) / ny as f64);
            (0..ny)
                .flat_map(|j| {
                    (0..nx).map(move |i| Point::new(b.x0 + (i as f64 + 0.5) * dx, b.y0 + (j as f64 + 0.5) * dy))
                })
                .collect()
        }
        SampleMode::MonteCarlo { samples, seed } => {
            (0..samples as u64).map(|i| monte_carlo_point(b, seed, i)).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub point: Point,
    /// Torsion per step of `f`; NaN when the sample failed.
    pub torsion: f64,
    pub overconjugate_time: Option<usize>,
    pub rotation: f64,
    pub error: Option<String>,
}

impl ScanRecord {
    pub fn is_ok(&self) -> bool {
        self.torsion.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    /// Samples with a finite torsion value.
    pub count: usize,
    pub failed: usize,
    /// Fraction with `torsion < -eps`.
    pub fraction_negative: f64,
    /// Fraction with `|torsion| > eps`.
    pub fraction_nonzero: f64,
    pub mean_torsion: f64,
    /// Standard error of `fraction_negative`: `sqrt(p (1 - p) / (n - 1))`.
    pub stderr: f64,
    /// Standard error of `mean_torsion`.
    pub torsion_stderr: f64,
}

impl MeasureEstimate {
    /// Summary of the records, reduced in index order.
    pub fn from_records(records: &[ScanRecord], eps: f64) -> Self {
        let ok: Vec<f64> = records.iter().filter(|r| r.is_ok()).map(|r| r.torsion).collect();
        let n = ok.len();
        let failed = records.len() - n;
        if n == 0 {
            return Self {
                count: 0,
                failed,
                fraction_negative: 0.0,
                fraction_nonzero: 0.0,
                mean_torsion: f64::NAN,
                stderr: f64::NAN,
                torsion_stderr: f64::NAN,
            };
        }
        let nf = n as f64;
        let negative = ok.iter().filter(|t| **t < -eps).count() as f64 / nf;
        let nonzero = ok.iter().filter(|t| t.abs() > eps).count() as f64 / nf;
        let mean = ok.iter().sum::<f64>() / nf;
        let (stderr, torsion_stderr) = if n > 1 {
            let var = ok.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (nf - 1.0);
            ((negative * (1.0 - negative) / (nf - 1.0)).sqrt(), (var / nf).sqrt())
        } else {
            (0.0, 0.0)
        };
        Self {
            count: n,
            failed,
            fraction_negative: negative,
            fraction_nonzero: nonzero,
            mean_torsion: mean,
            stderr,
            torsion_stderr,
        }
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("count", self.count.to_string()),
            ("failed", self.failed.to_string()),
            ("fraction_negative", self.fraction_negative.to_string()),
            ("fraction_nonzero", self.fraction_nonzero.to_string()),
            ("mean_torsion", self.mean_torsion.to_string()),
            ("stderr", self.stderr.to_string()),
            ("torsion_stderr", self.torsion_stderr.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub records: Vec<ScanRecord>,
    pub summary: MeasureEstimate,
    pub bbox: ScanBox,
    pub mode: SampleMode,
    pub eps: f64,
}

impl ScanResult {
    pub fn grid(&self) -> Option<(usize, usize)> {
        match self.mode {
            SampleMode::Grid { nx, ny } => Some((nx, ny)),
            SampleMode::MonteCarlo { .. } => None,
        }
    }
}

fn scan_one(map: &LiftedMap, p: Point, steps: usize) -> Result<(f64, Option<usize>, f64), TorsionError> {
    let mut walker = CocycleWalker::new(map, TangentVector::vertical(p));
    let mut first_over = None;
    for n in 1..=steps {
        walker.advance()?;
        if first_over.is_none() && walker.cumulative() < -0.5 {
            first_over = Some(n);
        }
    }
    let end = walker.state().base;
    Ok((walker.cumulative() / steps as f64, first_over, (end.x - p.x) / steps as f64))
}

/// Torsion, first over-conjugate time and rotation number at every sample.
/// A failing sample is recorded with its error and does not abort the scan.
pub fn torsion_field(map: &LiftedMap, cfg: &ScanConfig) -> Result<ScanResult, StatsError> {
    cfg.validate()?;
    let points = sample_points(cfg);
    let steps = cfg.steps();
    let eval = |p: &Point| match scan_one(map, *p, steps) {
        Ok((torsion, overconjugate_time, rotation)) => ScanRecord { point: *p, torsion, overconjugate_time, rotation, error: None },
        Err(e) => ScanRecord {
            point: *p,
            torsion: f64::NAN,
            overconjugate_time: None,
            rotation: f64::NAN,
            error: Some(e.to_string()),
        },
    };
    let records: Vec<ScanRecord> = match cfg.execution {
        Execution::Parallel => points.par_iter().map(eval).collect(),
        Execution::Serial => points.iter().map(eval).collect(),
    };
    let summary = MeasureEstimate::from_records(&records, cfg.eps);
    Ok(ScanResult { records, summary, bbox: cfg.bbox, mode: cfg.mode, eps: cfg.eps })
}

/// Monte-Carlo estimate of the fraction of the box with negative torsion.
pub fn island_measure(map: &LiftedMap, cfg: &ScanConfig) -> Result<MeasureEstimate, StatsError> {
    if !matches!(cfg.mode, SampleMode::MonteCarlo { .. }) {
        return Err(StatsError::NeedsMonteCarlo("island_measure"));
    }
    torsion_field(map, cfg).map(|r| r.summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub stderr: f64,
    pub area: f64,
}

impl IntegralEstimate {
    pub fn from_summary(bbox: &ScanBox, m: &MeasureEstimate) -> Self {
        let area = bbox.area();
        Self { value: area * m.mean_torsion, stderr: area * m.torsion_stderr, area }
    }
}

/// `area x mean torsion` over Monte-Carlo samples, with its standard error.
pub fn torsion_integral(map: &LiftedMap, cfg: &ScanConfig) -> Result<IntegralEstimate, StatsError> {
    let m = island_measure(map, cfg)?;
    Ok(IntegralEstimate::from_summary(&cfg.bbox, &m))
}

/// Return window; the `x` range is read modulo 1, `y` bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// The whole fundamental domain `[0,1) x R`.
    pub fn everything() -> Self {
        Self::new(0.0, 1.0, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, p: Point) -> bool {
        let x = if self.x1 - self.x0 >= 1.0 { self.x0 } else { self.x0 + (p.x - self.x0).rem_euclid(1.0) };
        self.x0 <= x && x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnReport {
    /// Return times `tau_1..tau_R`.
    pub times: Vec<usize>,
    /// Cumulative angle accumulated during each excursion, `phi_1..phi_R`.
    pub sums: Vec<f64>,
    /// `N_R = sum tau`.
    pub total_time: usize,
    /// `sum phi / sum tau`.
    pub ratio: f64,
    /// `Torsion_{N_R}` from an independent walk of `N_R` steps.
    pub direct: f64,
    /// `|sum phi - cumulative[N_R]|`.
    pub discrepancy: f64,
    pub identity_holds: bool,
}

/// Compares the return-time average of excursion sums with the direct
/// finite-time torsion at the total return time, starting from the vertical at `p`.
pub fn first_return_torsion(map: &LiftedMap, window: &Window, p: Point, returns: usize, cap: usize) -> Result<ReturnReport, StatsError> {
    if !window.contains(p) {
        return Err(StatsError::OutsideWindow(p));
    }
    if returns == 0 {
        return Err(StatsError::Config("need at least one return".into()));
    }
    let mut walker = CocycleWalker::new(map, TangentVector::vertical(p));
    let mut times = Vec::with_capacity(returns);
    let mut sums = Vec::with_capacity(returns);
    let (mut since, mut phi) = (0usize, 0.0);
    for _ in 0..cap {
        phi += walker.advance()?;
        since += 1;
        if window.contains(walker.state().base) {
            times.push(since);
            sums.push(phi);
            since = 0;
            phi = 0.0;
            if times.len() == returns {
                break;
            }
        }
    }
    if times.len() < returns {
        return Err(StatsError::NoReturn { cap, found: times.len(), wanted: returns, times });
    }
    let total_time: usize = times.iter().sum();
    let total_phi: f64 = sums.iter().sum();
    let trace = torsion::torsion_trace(map, p, [0.0, 1.0], total_time)?;
    let discrepancy = (total_phi - trace.cumulative[total_time]).abs();
    Ok(ReturnReport {
        ratio: total_phi / total_time as f64,
        direct: trace.torsion(),
        discrepancy,
        identity_holds: discrepancy <= 1e-12 * total_time as f64,
        times,
        sums,
        total_time,
    })
}

/// Writes `#key=value` metadata, the summary, then rows `x,y,torsion,overconj_time,rotation`.
pub fn write_scan_csv<W: Write>(out: &mut W, meta: &[(String, String)], result: &ScanResult) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "# eps={}", result.eps)?;
    for (k, v) in result.summary.entries() {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "x,y,torsion,overconj_time,rotation")?;
    for r in &result.records {
        let over = r.overconjugate_time.map(|n| n.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.point.x, r.point.y, r.torsion, over, r.rotation)?;
    }
    Ok(())
}

/// Parsed scan CSV: metadata lines and records (without error texts).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCsv {
    pub meta: BTreeMap<String, String>,
    pub records: Vec<ScanRecord>,
}

impl ScanCsv {
    /// Recomputes the summary from the records with the stored `eps`.
    pub fn summarize(&self) -> Result<MeasureEstimate, StatsError> {
        let eps: f64 = self
            .meta
            .get("eps")
            .and_then(|e| e.parse().ok())
            .ok_or_else(|| StatsError::Csv("missing eps".into()))?;
        Ok(MeasureEstimate::from_records(&self.records, eps))
    }

    /// The summary as written in the metadata block.
    pub fn stored_summary(&self) -> Result<MeasureEstimate, StatsError> {
        fn get<T: std::str::FromStr>(meta: &BTreeMap<String, String>, key: &str) -> Result<T, StatsError> {
            meta.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| StatsError::Csv(format!("missing or bad `{key}`")))
        }
        Ok(MeasureEstimate {
            count: get(&self.meta, "count")?,
            failed: get(&self.meta, "failed")?,
            fraction_negative: get(&self.meta, "fraction_negative")?,
            fraction_nonzero: get(&self.meta, "fraction_nonzero")?,
            mean_torsion: get(&self.meta, "mean_torsion")?,
            stderr: get(&self.meta, "stderr")?,
            torsion_stderr: get(&self.meta, "torsion_stderr")?,
        })
    }
}

pub fn read_scan_csv<R: BufRead>(input: R) -> Result<ScanCsv, StatsError> {
    let mut meta = BTreeMap::new();
    let mut records = Vec::new();
    let mut header_seen = false;
    for line in input.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !header_seen {
            if line.trim() != "x,y,torsion,overconj_time,rotation" {
                return Err(StatsError::Csv(format!("unexpected header `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(StatsError::Csv(format!("expected 5 columns in `{line}`")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| StatsError::Csv(format!("bad number `{s}`")));
        let over = if cols[3].is_empty() {
            None
        } else {
            Some(cols[3].parse().map_err(|_| StatsError::Csv(format!("bad time `{}`", cols[3])))?)
        };
        records.push(ScanRecord {
            point: Point::new(num(cols[0])?, num(cols[1])?),
            torsion: num(cols[2])?,
            overconjugate_time: over,
            rotation: num(cols[4])?,
            error: None,
        });
    }
    if !header_seen {
        return Err(StatsError::Csv("missing header row".into()));
    }
    Ok(ScanCsv { meta, records })
}
