//! Characteristic curves of a positive twist map and the periodic-orbit
//! curves `psi_{p/q}`.
//!
//! `Psi_1(x)` is the unique height where the first coordinate of `F` returns
//! to `x`; `Psi_-1(x)` is the height of its image. All roots are found by
//! geometric bracket expansion followed by bisection, which only needs the
//! monotonicity supplied by the twist condition.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::maps::{LiftedMap, Mat2, Point};
use crate::torsion::{self, TorsionError};

/// Default root tolerance in `y`.
pub const ROOT_TOL: f64 = 1e-10;
/// Default threshold on `|p2 o F^q(x,y) - y|` for accepting a curve as `Fix(F^q - (p,0))`.
pub const FIXED_TOL: f64 = 1e-8;
/// Bracket expansion stops at `[-2^16, 2^16]`.
pub const MAX_BRACKET: f64 = 65536.0;
/// Samples used to certify monotonicity of `y -> p1 o F^q(x,y)` on the bracket.
const MONOTONE_SAMPLES: usize = 64;
/// Orbit distance below which [`classify_monotonicity`] reports a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("no sign change of the root function above x = {x} within |y| <= {MAX_BRACKET}")]
    BracketCap { x: f64 },
    #[error("y -> p1 o F^{q}(x, y) is not increasing at x = {x} (conjugate points present)")]
    NonMonotone { x: f64, q: u64 },
    #[error("bisection stalled at x = {x} with residual {residual:e}")]
    Stalled { x: f64, residual: f64 },
    #[error("{0} is not a reduced fraction with positive denominator")]
    NotReduced(Rational),
    #[error("rotation numbers must be sorted and pairwise distinct")]
    Unsorted,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
}

/// A rational rotation number `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    pub p: i64,
    pub q: u64,
}

impl Rational {
    pub fn new(p: i64, q: u64) -> Self {
        Self { p, q }
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn is_reduced(&self) -> bool {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        self.q >= 1 && gcd(self.p.unsigned_abs(), self.q) == 1
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p, q),
            None => (s, "1"),
        };
        let p = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let q = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if q == 0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(Rational { p, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveLabel {
    Psi1,
    PsiMinus1,
    PsiRho(Rational),
}

impl fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveLabel::Psi1 => write!(f, "psi1"),
            CurveLabel::PsiMinus1 => write!(f, "psi-1"),
            CurveLabel::PsiRho(r) => write!(f, "psi[{r}]"),
        }
    }
}

/// A 1-periodic function sampled on the uniform grid `x_j = j / R`, `j < R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub label: CurveLabel,
    /// Root residuals `|p1 o F^q(x, y) - x - p|` per node.
    pub residuals: Vec<f64>,
    /// Periodicity residuals `|p2 o F^q(x, y) - y|` per node; only for `PsiRho`.
    pub periodicity: Option<Vec<f64>>,
}

impl PeriodicCurve {
    pub fn resolution(&self) -> usize {
        self.xs.len()
    }

    /// Piecewise-linear periodic interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let r = self.xs.len();
        let s = x.rem_euclid(1.0) * r as f64;
        let j = (s.floor() as usize).min(r - 1);
        let t = s - j as f64;
        self.ys[j] * (1.0 - t) + self.ys[(j + 1) % r] * t
    }

    /// Largest divided difference over adjacent nodes, including the wrap-around pair.
    pub fn lipschitz(&self) -> f64 {
        let r = self.xs.len();
        if r < 2 {
            return 0.0;
        }
        let h = 1.0 / r as f64;
        (0..r)
            .map(|j| (self.ys[(j + 1) % r] - self.ys[j]).abs() / h)
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_periodicity_residual(&self) -> Option<f64> {
        self.periodicity.as_ref().map(|r| r.iter().copied().fold(0.0, f64::max))
    }

    /// `true` when every periodicity residual is below `tol` (always true for `Psi_1`, `Psi_-1`).
    pub fn is_fixed(&self, tol: f64) -> bool {
        self.max_periodicity_residual().is_none_or(|m| m < tol)
    }

    /// The certificate written in the `residual` CSV column.
    fn certificate(&self, j: usize) -> f64 {
        match &self.periodicity {
            Some(p) => p[j],
            None => self.residuals[j],
        }
    }
}

/// Writes curves as CSV with header `x,y,residual,label`.
pub fn write_curves_csv<W: Write>(out: &mut W, header: &[(String, String)], curves: &[&PeriodicCurve]) -> io::Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "x,y,residual,label")?;
    for curve in curves {
        for j in 0..curve.resolution() {
            writeln!(out, "{},{},{},{}", curve.xs[j], curve.ys[j], curve.certificate(j), curve.label)?;
        }
    }
    Ok(())
}

fn grid(resolution: usize) -> Vec<f64> {
    (0..resolution).map(|j| j as f64 / resolution as f64).collect()
}

/// Root of the increasing function `g` by bracket expansion and bisection.
/// Returns the root and `|g(root)|`, which is below `tol` on success.
fn bracketed_root(g: impl Fn(f64) -> f64, x: f64, tol: f64) -> Result<(f64, f64), CurveError> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) > 0.0 {
        lo *= 2.0;
        if lo < -MAX_BRACKET {
            return Err(CurveError::BracketCap { x });
        }
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > MAX_BRACKET {
            return Err(CurveError::BracketCap { x });
        }
    }
    for end in [lo, hi] {
        if g(end) == 0.0 {
            return Ok((end, 0.0));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 || (hi - lo <= tol && gm.abs() < tol) {
            return Ok((mid, gm.abs()));
        }
        if mid <= lo || mid >= hi {
            return Err(CurveError::Stalled { x, residual: gm.abs() });
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn check_tol(tol: f64) -> Result<(), CurveError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CurveError::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}

/// `Psi_1(x)`: the root `y` of `p1 o F(x, y) = x`.
pub fn psi1(map: &LiftedMap, x: f64, tol: f64) -> Result<f64, CurveError> {
    check_tol(tol)?;
    bracketed_root(|y| map.eval(Point::new(x, y)).x - x, x, tol).map(|(y, _)| y)
}

/// `Psi_-1(x) = p2 o F(x, Psi_1(x))`.
pub fn psi_minus1(map: &LiftedMap, x: f64, tol: f64) -> Result<f64, CurveError> {
    let y = psi1(map, x, tol)?;
    Ok(map.eval(Point::new(x, y)).y)
}

pub fn psi1_curve(map: &LiftedMap, resolution: usize, tol: f64) -> Result<PeriodicCurve, CurveError> {
    characteristic_curves(map, resolution, tol).map(|(c, _)| c)
}

pub fn psi_minus1_curve(map: &LiftedMap, resolution: usize, tol: f64) -> Result<PeriodicCurve, CurveError> {
    characteristic_curves(map, resolution, tol).map(|(_, c)| c)
}

/// `(Psi_1, Psi_-1)` sampled on `resolution` nodes.
pub fn characteristic_curves(map: &LiftedMap, resolution: usize, tol: f64) -> Result<(PeriodicCurve, PeriodicCurve), CurveError> {
    if resolution == 0 {
        return Err(CurveError::InvalidArgument("resolution must be positive".into()));
    }
    check_tol(tol)?;
    let xs = grid(resolution);
    let nodes = xs
        .par_iter()
        .map(|&x| {
            let (y, res) = bracketed_root(|y| map.eval(Point::new(x, y)).x - x, x, tol)?;
            let image = map.eval(Point::new(x, y));
            Ok((y, res, image.y, (image.x - x).abs()))
        })
        .collect::<Result<Vec<_>, CurveError>>()?;
    let psi1 = PeriodicCurve {
        xs: xs.clone(),
        ys: nodes.iter().map(|n| n.0).collect(),
        label: CurveLabel::Psi1,
        residuals: nodes.iter().map(|n| n.1).collect(),
        periodicity: None,
    };
    let psi_m1 = PeriodicCurve {
        xs,
        ys: nodes.iter().map(|n| n.2).collect(),
        label: CurveLabel::PsiMinus1,
        residuals: nodes.iter().map(|n| n.3).collect(),
        periodicity: None,
    };
    Ok((psi1, psi_m1))
}

/// Signed area between `Psi_-1` and `Psi_1`: trapezoid rule (for a periodic
/// integrand, the node mean) of `Psi_-1 - Psi_1` on `resolution` nodes.
pub fn flux(map: &LiftedMap, resolution: usize) -> Result<f64, CurveError> {
    if resolution < 2 {
        return Err(CurveError::InvalidArgument("flux needs at least 2 nodes".into()));
    }
    let (lower, upper) = characteristic_curves(map, resolution, ROOT_TOL)?;
    let sum: f64 = upper.ys.iter().zip(&lower.ys).map(|(a, b)| a - b).sum();
    Ok(sum / resolution as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSign {
    Minus,
    Plus,
}

/// `X^-` (`Psi_1 < y < Psi_-1`) or `X^+` (`Psi_-1 < y < Psi_1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionX {
    pub sign: RegionSign,
    pub lower: PeriodicCurve,
    pub upper: PeriodicCurve,
}

impl RegionX {
    /// Membership by interpolation of the bounding curves.
    pub fn contains(&self, p: Point) -> bool {
        let lo = self.lower.eval(p.x);
        let hi = self.upper.eval(p.x);
        lo < p.y && p.y < hi
    }

    /// Membership with the bounding curves solved exactly above `p.x`.
    pub fn contains_exact(&self, map: &LiftedMap, p: Point, tol: f64) -> Result<bool, CurveError> {
        let a = psi1(map, p.x, tol)?;
        let b = map.eval(Point::new(p.x, a)).y;
        let (lo, hi) = match self.sign {
            RegionSign::Minus => (a, b),
            RegionSign::Plus => (b, a),
        };
        Ok(lo < p.y && p.y < hi)
    }
}

/// `(X^-, X^+)` for the map.
pub fn regions_x(map: &LiftedMap, resolution: usize, tol: f64) -> Result<(RegionX, RegionX), CurveError> {
    let (psi1, psi_m1) = characteristic_curves(map, resolution, tol)?;
    Ok((
        RegionX { sign: RegionSign::Minus, lower: psi1.clone(), upper: psi_m1.clone() },
        RegionX { sign: RegionSign::Plus, lower: psi_m1, upper: psi1 },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    pub n: usize,
}

/// `(p1 o F^n(p) - p1(p)) / n`; no convergence is asserted.
pub fn rotation_number(map: &LiftedMap, p: Point, n: usize) -> Result<RotationEstimate, CurveError> {
    if n == 0 {
        return Err(CurveError::InvalidArgument("n must be at least 1".into()));
    }
    let end = map.iterate_to(p, n as i64);
    Ok(RotationEstimate { value: (end.x - p.x) / n as f64, n })
}

/// `F^q(z)` together with `DF^q(z)`.
fn power_with_jacobian(map: &LiftedMap, z: Point, q: u64) -> (Point, Mat2) {
    let mut m = Mat2::IDENTITY;
    let mut w = z;
    for _ in 0..q {
        m = map.derivative(w).mul(&m);
        w = map.eval(w);
    }
    (w, m)
}

fn check_monotone(map: &LiftedMap, x: f64, rho: Rational, y: f64) -> Result<(), CurveError> {
    let q = rho.q;
    let shift = rho.p as f64;
    let g = |y: f64| map.iterate_to(Point::new(x, y), q as i64).x - x - shift;
    let (_, jac) = power_with_jacobian(map, Point::new(x, y), q);
    if !(jac.b > 0.0) {
        return Err(CurveError::NonMonotone { x, q });
    }
    // sample the window of the final bracket [y - 1, y + 1]
    let mut prev = g(y - 1.0);
    for i in 1..=MONOTONE_SAMPLES {
        let cur = g(y - 1.0 + 2.0 * i as f64 / MONOTONE_SAMPLES as f64);
        if cur <= prev {
            return Err(CurveError::NonMonotone { x, q });
        }
        prev = cur;
    }
    Ok(())
}

/// Tolerances for [`periodic_curve`]: the root tolerance in `y` and the
/// periodicity threshold for accepting the curve as a curve of fixed points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveTolerances {
    pub root: f64,
    pub fixed: f64,
}

impl Default for CurveTolerances {
    fn default() -> Self {
        Self { root: ROOT_TOL, fixed: FIXED_TOL }
    }
}

/// The curve of points of rotation number `p/q`: for each node, the root
/// `y` of `p1 o F^q(x, y) - x - p`, with `|p2 o F^q(x, y) - y|` recorded as
/// periodicity certificate. A curve whose certificate exceeds `tol.fixed`
/// is still returned; check [`PeriodicCurve::is_fixed`].
pub fn periodic_curve(map: &LiftedMap, rho: Rational, resolution: usize, tol: CurveTolerances) -> Result<PeriodicCurve, CurveError> {
    if !rho.is_reduced() {
        return Err(CurveError::NotReduced(rho));
    }
    if resolution == 0 {
        return Err(CurveError::InvalidArgument("resolution must be positive".into()));
    }
    check_tol(tol.root)?;
    let xs = grid(resolution);
    let shift = rho.p as f64;
    let nodes = xs
        .par_iter()
        .map(|&x| {
            let g = |y: f64| map.iterate_to(Point::new(x, y), rho.q as i64).x - x - shift;
            let (y, residual) = bracketed_root(g, x, tol.root)?;
            check_monotone(map, x, rho, y)?;
            let image = map.iterate_to(Point::new(x, y), rho.q as i64);
            Ok((y, residual, (image.y - y).abs()))
        })
        .collect::<Result<Vec<_>, CurveError>>()?;
    Ok(PeriodicCurve {
        xs,
        ys: nodes.iter().map(|n| n.0).collect(),
        label: CurveLabel::PsiRho(rho),
        residuals: nodes.iter().map(|n| n.1).collect(),
        periodicity: Some(nodes.iter().map(|n| n.2).collect()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiFamily {
    pub entries: Vec<(Rational, PeriodicCurve)>,
    /// Strict pointwise ordering between consecutive curves at every node.
    pub monotone_ok: bool,
    /// Lipschitz estimate per entry.
    pub lipschitz: Vec<f64>,
}

impl PsiFamily {
    pub fn max_root_residual(&self) -> f64 {
        self.entries.iter().map(|(_, c)| c.max_residual()).fold(0.0, f64::max)
    }

    pub fn max_periodicity_residual(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|(_, c)| c.max_periodicity_residual())
            .fold(0.0, f64::max)
    }

    pub fn all_fixed(&self, tol: f64) -> bool {
        self.entries.iter().all(|(_, c)| c.is_fixed(tol))
    }
}

pub fn psi_family(map: &LiftedMap, rationals: &[Rational], resolution: usize, tol: CurveTolerances) -> Result<PsiFamily, CurveError> {
    if rationals.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CurveError::Unsorted);
    }
    let entries = rationals
        .iter()
        .map(|&r| periodic_curve(map, r, resolution, tol).map(|c| (r, c)))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone_ok = entries
        .windows(2)
        .all(|w| w[0].1.ys.iter().zip(&w[1].1.ys).all(|(a, b)| a < b));
    let lipschitz = entries.iter().map(|(_, c)| c.lipschitz()).collect();
    Ok(PsiFamily { entries, monotone_ok, lipschitz })
}

/// Horizontal behaviour of an orbit over `n in [-N, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Fixed,
    /// `p1 o F^n` strictly monotone.
    Monotone,
    /// One switch of monotonicity (the orbit meets some `F^n(X^+-)`).
    SwitchInterior,
    /// A single zero increment between increments of opposite signs
    /// (the orbit meets `F^n` of `Psi_1`'s graph).
    SwitchTouching,
    Undetermined,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Monotonicity::Fixed => "fixed",
            Monotonicity::Monotone => "monotone",
            Monotonicity::SwitchInterior => "switch_interior",
            Monotonicity::SwitchTouching => "switch_touching",
            Monotonicity::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

/// Classifies the increments of `p1 o F^n(p)` for `n` in `[-N, N]`.
///
/// The classification assumes no over-conjugate point along the segment;
/// this is checked first from `F^-N(p)` over `2N` steps and a hit yields
/// [`Monotonicity::Undetermined`].
pub fn classify_monotonicity(map: &LiftedMap, p: Point, horizon: usize) -> Result<Monotonicity, CurveError> {
    if horizon == 0 {
        return Err(CurveError::InvalidArgument("horizon must be at least 1".into()));
    }
    let n = horizon as i64;
    let mut back = map.iterate(p, -n).map_err(|e| CurveError::InvalidArgument(e.to_string()))?;
    let start = *back.last().expect("orbit is non-empty");
    if torsion::detect_overconjugate(map, start, 2 * horizon)?.is_some() {
        return Ok(Monotonicity::Undetermined);
    }
    back.reverse();
    let forward = map.iterate(p, n).map_err(|e| CurveError::InvalidArgument(e.to_string()))?;
    let orbit: Vec<Point> = back.into_iter().chain(forward.into_iter().skip(1)).collect();
    if orbit.iter().all(|z| z.dist(&p) < FIXED_POINT_TOL) {
        return Ok(Monotonicity::Fixed);
    }
    let signs: Vec<i8> = orbit
        .windows(2)
        .map(|w| {
            let d = w[1].x - w[0].x;
            if d.abs() <= FIXED_POINT_TOL {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let zeros = signs.iter().filter(|s| **s == 0).count();
    let switches = signs
        .iter()
        .filter(|s| **s != 0)
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|w| w[0] != w[1])
        .count();
    let kind = match (zeros, switches) {
        (0, 0) => Monotonicity::Monotone,
        (0, 1) => Monotonicity::SwitchInterior,
        (1, 1) => {
            let z = signs.iter().position(|s| *s == 0).expect("one zero");
            if z > 0 && z + 1 < signs.len() && signs[z - 1] == -signs[z + 1] {
                Monotonicity::SwitchTouching
            } else {
                Monotonicity::Undetermined
            }
        }
        _ => Monotonicity::Undetermined,
    };
    Ok(kind)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Grid `(nx, ny)`: `x_i = i / nx`, `y_j` evenly spaced on `y_range`, both ends included.
    pub grid: (usize, usize),
    pub y_range: (f64, f64),
    pub horizon: usize,
    pub rationals: Vec<Rational>,
    /// Nodes per curve of the constructed family.
    pub resolution: usize,
    pub tol: CurveTolerances,
    pub flux_resolution: usize,
    /// Maps with `|flux|` above this are not exact and get a not-applicable verdict.
    pub flux_tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            grid: (64, 64),
            y_range: (-2.0, 2.0),
            horizon: 10_000,
            rationals: vec![Rational::new(0, 1)],
            resolution: 64,
            tol: CurveTolerances::default(),
            flux_resolution: 256,
            flux_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeVerdict {
    NotApplicable { flux: f64 },
    /// Over-conjugate witness with the smallest detection time (ties in grid order, `x` major).
    ConjugatePointsFound { witness: Point, time: usize, hits: usize, scanned: usize },
    /// No detection on the grid; one-sided evidence only.
    NoObstructionFound { family: PsiFamily, scanned: usize },
}

impl ProbeVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            ProbeVerdict::NotApplicable { .. } => "NOT_APPLICABLE",
            ProbeVerdict::ConjugatePointsFound { .. } => "CONJUGATE_POINTS_FOUND",
            ProbeVerdict::NoObstructionFound { .. } => "NO_OBSTRUCTION_FOUND",
        }
    }
}

pub fn probe_grid(cfg: &ProbeConfig) -> Vec<Point> {
    let (nx, ny) = cfg.grid;
    let (y0, y1) = cfg.y_range;
    let mut pts = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let y = if ny == 1 { y0 } else { y0 + (y1 - y0) * j as f64 / (ny - 1) as f64 };
            pts.push(Point::new(i as f64 / nx as f64, y));
        }
    }
    pts
}

/// One-sided test of C^0-integrability: scan for over-conjugate points, and
/// when none is found build the `psi_{p/q}` family with its certificates.
pub fn integrability_probe(map: &LiftedMap, cfg: &ProbeConfig) -> Result<ProbeVerdict, CurveError> {
    if cfg.grid.0 == 0 || cfg.grid.1 == 0 || cfg.horizon == 0 || !(cfg.y_range.0 <= cfg.y_range.1) {
        return Err(CurveError::InvalidArgument("probe needs a non-empty grid, y0 <= y1 and a positive horizon".into()));
    }
    let flux = flux(map, cfg.flux_resolution)?;
    if flux.abs() > cfg.flux_tol {
        return Ok(ProbeVerdict::NotApplicable { flux });
    }
    let points = probe_grid(cfg);
    let times = points
        .par_iter()
        .map(|p| torsion::detect_overconjugate(map, *p, cfg.horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let hits = times.iter().filter(|t| t.is_some()).count();
    let best = times
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (t, i)))
        .min();
    if let Some((time, i)) = best {
        return Ok(ProbeVerdict::ConjugatePointsFound { witness: points[i], time, hits, scanned: points.len() });
    }
    let family = psi_family(map, &cfg.rationals, cfg.resolution, cfg.tol)?;
    Ok(ProbeVerdict::NoObstructionFound { family, scanned: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn r(p: i64, q: u64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn psi1_examples() {
        for x in [0.0, 0.3, 0.77] {
            assert_eq!(psi1(&LiftedMap::shear(), x, ROOT_TOL).unwrap(), 0.0);
            assert_eq!(psi1(&LiftedMap::drift_shear(0.25), x, ROOT_TOL).unwrap(), 0.0);
        }
        let y = psi1(&LiftedMap::standard(1.0), 0.25, ROOT_TOL).unwrap();
        assert_abs_diff_eq!(y, 1.0 / (2.0 * PI), epsilon = 1e-10);
    }

    #[test]
    fn psi_minus1_examples() {
        assert_eq!(psi_minus1(&LiftedMap::shear(), 0.4, ROOT_TOL).unwrap(), 0.0);
        assert_eq!(psi_minus1(&LiftedMap::drift_shear(0.25), 0.4, ROOT_TOL).unwrap(), 0.25);
        for x in [0.1, 0.25, 0.6] {
            assert_abs_diff_eq!(psi_minus1(&LiftedMap::standard(1.0), x, ROOT_TOL).unwrap(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bracket_cap_is_reported() {
        // a "twist" too weak to reach the root within the search range
        let g = |y: f64| 1e-9 * y - 1.0;
        assert_eq!(bracketed_root(g, 0.5, ROOT_TOL), Err(CurveError::BracketCap { x: 0.5 }));
    }

    #[test]
    fn flux_examples() {
        assert!(flux(&LiftedMap::shear(), 64).unwrap().abs() < 1e-12);
        assert_abs_diff_eq!(flux(&LiftedMap::drift_shear(0.25), 64).unwrap(), 0.25, epsilon = 1e-12);
        assert!(flux(&LiftedMap::standard(1.0), 256).unwrap().abs() < 1e-10);
        assert!(flux(&LiftedMap::shear(), 1).is_err());
    }

    #[test]
    fn rotation_examples() {
        for n in [1, 7, 100] {
            assert_eq!(rotation_number(&LiftedMap::shear(), Point::new(0.0, 0.375), n).unwrap().value, 0.375);
            assert_eq!(rotation_number(&LiftedMap::standard(1.0), Point::new(0.0, 0.0), n).unwrap().value, 0.0);
            assert_eq!(rotation_number(&LiftedMap::standard(1.0), Point::new(0.5, 0.0), n).unwrap().value, 0.0);
        }
    }

    #[test]
    fn periodic_curve_examples() {
        let c = periodic_curve(&LiftedMap::shear(), r(1, 3), 16, CurveTolerances::default()).unwrap();
        assert!(c.ys.iter().all(|y| (y - 1.0 / 3.0).abs() < 1e-10));
        assert_eq!(c.max_periodicity_residual(), Some(0.0));
        let c = periodic_curve(&LiftedMap::shear(), r(0, 1), 16, CurveTolerances::default()).unwrap();
        assert!(c.ys.iter().all(|y| *y == 0.0));

        let c = periodic_curve(&LiftedMap::drift_shear(0.25), r(0, 1), 16, CurveTolerances::default()).unwrap();
        assert!(c.ys.iter().all(|y| *y == 0.0));
        assert_eq!(c.max_periodicity_residual(), Some(0.25));
        assert!(!c.is_fixed(FIXED_TOL));

        assert_eq!(
            periodic_curve(&LiftedMap::shear(), r(2, 4), 8, CurveTolerances::default()),
            Err(CurveError::NotReduced(r(2, 4)))
        );
    }

    #[test]
    fn family_examples() {
        let rhos = [r(0, 1), r(1, 3), r(1, 2), r(1, 1)];
        for map in [LiftedMap::shear(), LiftedMap::standard(0.0)] {
            let fam = psi_family(&map, &rhos, 32, CurveTolerances::default()).unwrap();
            assert!(fam.monotone_ok);
            for ((rho, c), lip) in fam.entries.iter().zip(&fam.lipschitz) {
                assert!(c.ys.iter().all(|y| (y - rho.value()).abs() < 1e-10));
                assert!(*lip < 1e-8);
            }
        }
        let fam = psi_family(&LiftedMap::standard(1.0), &[r(0, 1)], 32, CurveTolerances::default());
        match fam {
            Ok(f) => assert!(!f.all_fixed(FIXED_TOL)),
            Err(e) => assert!(matches!(e, CurveError::NonMonotone { .. })),
        }
        assert_eq!(
            psi_family(&LiftedMap::shear(), &[r(1, 2), r(0, 1)], 8, CurveTolerances::default()),
            Err(CurveError::Unsorted)
        );
    }

    #[test]
    fn non_monotone_iterate_is_reported() {
        // strong kick: F^2 is no longer a twist map somewhere on the circle
        let map = LiftedMap::standard(3.0);
        let res = periodic_curve(&map, r(1, 2), 64, CurveTolerances::default());
        assert!(matches!(res, Err(CurveError::NonMonotone { q: 2, .. })), "{res:?}");
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_monotonicity(&LiftedMap::shear(), Point::new(0.0, 0.375), 50).unwrap(), Monotonicity::Monotone);
        let drift = LiftedMap::drift_shear(0.25);
        assert_eq!(classify_monotonicity(&drift, Point::new(0.3, 0.1), 50).unwrap(), Monotonicity::SwitchInterior);
        assert_eq!(classify_monotonicity(&drift, Point::new(0.3, 0.0), 50).unwrap(), Monotonicity::SwitchTouching);
        assert_eq!(classify_monotonicity(&LiftedMap::shear(), Point::new(0.3, 0.0), 50).unwrap(), Monotonicity::Fixed);
        assert_eq!(
            classify_monotonicity(&LiftedMap::standard(1.0), Point::new(0.02, 0.0), 50).unwrap(),
            Monotonicity::Undetermined
        );
    }

    #[test]
    fn regions_for_the_drift_shear() {
        let drift = LiftedMap::drift_shear(0.25);
        let (minus, plus) = regions_x(&drift, 16, ROOT_TOL).unwrap();
        assert!(minus.contains(Point::new(0.3, 0.1)));
        assert!(!minus.contains(Point::new(0.3, 0.3)));
        assert!(!plus.contains(Point::new(0.3, 0.1)));
        assert!(minus.contains_exact(&drift, Point::new(0.3, 0.1), ROOT_TOL).unwrap());
    }

    #[test]
    fn probe_examples() {
        let cfg = ProbeConfig {
            grid: (8, 8),
            horizon: 200,
            rationals: vec![r(-1, 1), r(0, 1), r(1, 2)],
            resolution: 16,
            ..ProbeConfig::default()
        };
        match integrability_probe(&LiftedMap::standard(0.0), &cfg).unwrap() {
            ProbeVerdict::NoObstructionFound { family, scanned } => {
                assert_eq!(scanned, 64);
                assert!(family.monotone_ok);
            }
            other => panic!("{other:?}"),
        }
        let v = integrability_probe(&LiftedMap::drift_shear(0.25), &cfg).unwrap();
        assert!(matches!(v, ProbeVerdict::NotApplicable { flux } if (flux - 0.25).abs() < 1e-12));
        let v = integrability_probe(&LiftedMap::standard(1.5), &ProbeConfig { horizon: 100, ..cfg }).unwrap();
        assert_eq!(v.tag(), "CONJUGATE_POINTS_FOUND");
    }

    #[test]
    fn rationals_parse_and_order() {
        assert_eq!("-1/2".parse::<Rational>().unwrap(), r(-1, 2));
        assert_eq!("3".parse::<Rational>().unwrap(), r(3, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!(r(-1, 2) < r(0, 1) && r(1, 3) < r(1, 2));
        assert!(!r(2, 4).is_reduced() && r(0, 1).is_reduced() && !r(0, 2).is_reduced());
    }

    #[test]
    fn curve_csv_has_header_and_rows() {
        let c = periodic_curve(&LiftedMap::shear(), r(1, 2), 4, CurveTolerances::default()).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &[("map".into(), "shear".into())], &[&c]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# map=shear");
        assert_eq!(lines[1], "x,y,residual,label");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].ends_with(",psi[1/2]"));
    }
}
