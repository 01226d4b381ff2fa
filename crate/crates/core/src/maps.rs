//! Lifted twist maps of the annulus `T x R`.
//!
//! Every map is given by its lift `F: R^2 -> R^2`, which commutes with the
//! horizontal unit translation. The built-in families all have closed-form
//! inverses and exact Jacobians, so tangent dynamics never relies on finite
//! differences.
//!
//! Apart from [`Family::DriftShear`], the families are of "kick" form
//!
//! ```text
//! y' = y + V'(x),   x' = x + y'
//! ```
//!
//! generated by `h(x, x') = (x' - x)^2 / 2 + V(x)` with `y = -d1 h`,
//! `y' = d2 h`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Orbit segments longer than this are refused by [`LiftedMap::iterate`].
pub const DEFAULT_HORIZON_CAP: u64 = 50_000_000;

/// Half-height of the sampling band `[0,1] x [-Y, Y]` used by [`LiftedMap::twist_check`].
pub const TWIST_CHECK_HALF_HEIGHT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("orbit length {requested} exceeds the horizon cap {cap}")]
    HorizonCap { requested: u64, cap: u64 },
    #[error("malformed map spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
}

/// `sin(2 pi x)` with exact argument reduction, so that half-integers give an exact zero.
pub fn sin_turns(x: f64) -> f64 {
    let mut t = x - x.round();
    if t > 0.25 {
        t = 0.5 - t;
    } else if t < -0.25 {
        t = -0.5 - t;
    }
    (2.0 * PI * t).sin()
}

/// `cos(2 pi x)` with exact argument reduction (exact at multiples of 1/4).
pub fn cos_turns(x: f64) -> f64 {
    let t = (x - x.round()).abs();
    if t <= 0.125 {
        (2.0 * PI * t).cos()
    } else if t <= 0.375 {
        (2.0 * PI * (0.25 - t)).sin()
    } else {
        -(2.0 * PI * (0.5 - t)).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
///
/// Its columns are the images of the horizontal vector `u = (1,0)` and the
/// vertical vector `v = (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn apply(&self, w: [f64; 2]) -> [f64; 2] {
        [self.a * w[0] + self.b * w[1], self.c * w[0] + self.d * w[1]]
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }
}

/// The potential `V(x)` of a generating function `h(x,x') = (x'-x)^2/2 + V(x)`.
///
/// Stored as cosine coefficients: `V(x) = sum_i a_i cos(2 pi i x)`, `i >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// The standard-map potential `(k / 4 pi^2) cos(2 pi x)`.
    pub fn standard(k: f64) -> Self {
        Self { coeffs: vec![k / (4.0 * PI * PI)] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms()
            .map(|(i, a)| a * cos_turns(i * x))
            .sum()
    }

    pub fn first(&self, x: f64) -> f64 {
        self.terms()
            .map(|(i, a)| -a * 2.0 * PI * i * sin_turns(i * x))
            .sum()
    }

    pub fn second(&self, x: f64) -> f64 {
        self.terms()
            .map(|(i, a)| {
                let w = 2.0 * PI * i;
                -a * w * w * cos_turns(i * x)
            })
            .sum()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(i, a)| ((i + 1) as f64, *a))
    }
}

/// Generating function `h(x,x') = (x'-x)^2/2 + V(x)` and its partial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    pub potential: Potential,
}

impl GeneratingFunction {
    pub fn h(&self, x0: f64, x1: f64) -> f64 {
        0.5 * (x1 - x0) * (x1 - x0) + self.potential.value(x0)
    }

    pub fn d1(&self, x0: f64, x1: f64) -> f64 {
        -(x1 - x0) + self.potential.first(x0)
    }

    pub fn d2(&self, x0: f64, x1: f64) -> f64 {
        x1 - x0
    }

    pub fn d11(&self, x0: f64, _x1: f64) -> f64 {
        1.0 + self.potential.second(x0)
    }

    pub fn d12(&self, _x0: f64, _x1: f64) -> f64 {
        -1.0
    }

    pub fn d22(&self, _x0: f64, _x1: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `(x, y) -> (x + y, y)`.
    Shear,
    /// `(x, y) -> (x + y, y + c)`: area preserving with flux `c`.
    DriftShear { drift: f64 },
    /// Chirikov standard map with kick strength `k`.
    Standard { k: f64 },
    /// Kick map of a trigonometric-polynomial potential.
    GeneratingFunction { potential: Potential },
}

impl Family {
    fn kick_potential(&self) -> Option<Potential> {
        match self {
            Family::Shear => Some(Potential::zero()),
            Family::DriftShear { .. } => None,
            Family::Standard { k } => Some(Potential::standard(*k)),
            Family::GeneratingFunction { potential } => Some(potential.clone()),
        }
    }

    /// `V'(x)`; only called on kick-form families.
    fn kick(&self, x: f64) -> f64 {
        match self {
            Family::Shear | Family::DriftShear { .. } => 0.0,
            Family::Standard { k } => -k / (2.0 * PI) * sin_turns(x),
            Family::GeneratingFunction { potential } => potential.first(x),
        }
    }

    fn kick_slope(&self, x: f64) -> f64 {
        match self {
            Family::Shear | Family::DriftShear { .. } => 0.0,
            Family::Standard { k } => -k * cos_turns(x),
            Family::GeneratingFunction { potential } => potential.second(x),
        }
    }

    fn forward(&self, p: Point) -> Point {
        match self {
            Family::DriftShear { drift } => Point::new(p.x + p.y, p.y + drift),
            _ => {
                let y = p.y + self.kick(p.x);
                Point::new(p.x + y, y)
            }
        }
    }

    fn backward(&self, p: Point) -> Point {
        match self {
            Family::DriftShear { drift } => {
                let y = p.y - drift;
                Point::new(p.x - y, y)
            }
            _ => {
                let x = p.x - p.y;
                Point::new(x, p.y - self.kick(x))
            }
        }
    }

    fn jacobian(&self, p: Point) -> Mat2 {
        let s = self.kick_slope(p.x);
        Mat2::new(1.0 + s, 1.0, s, 1.0)
    }
}

/// Orientation of the twist: `Positive` for all built-ins, `Negative` for
/// the explicitly inverted maps produced by [`LiftedMap::inverted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwistSign {
    Positive,
    Negative,
}

impl TwistSign {
    pub fn as_i8(self) -> i8 {
        match self {
            TwistSign::Positive => 1,
            TwistSign::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMap {
    family: Family,
    twist_sign: TwistSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistReport {
    pub samples: usize,
    /// Minimum of the `(1,2)` Jacobian entry `d(p1 o F)/dy` over the samples.
    pub min_twist: f64,
    pub min_at: Point,
    /// Sample points where the entry is not positive.
    pub violations: Vec<Point>,
}

impl TwistReport {
    pub fn is_positive_twist(&self) -> bool {
        self.min_twist > 0.0
    }
}

impl LiftedMap {
    pub fn new(family: Family) -> Self {
        Self { family, twist_sign: TwistSign::Positive }
    }

    pub fn shear() -> Self {
        Self::new(Family::Shear)
    }

    pub fn drift_shear(drift: f64) -> Self {
        Self::new(Family::DriftShear { drift })
    }

    pub fn standard(k: f64) -> Self {
        Self::new(Family::Standard { k })
    }

    pub fn generating(coeffs: Vec<f64>) -> Self {
        Self::new(Family::GeneratingFunction { potential: Potential::new(coeffs) })
    }

    /// The inverse map `F^{-1}`, a negative twist map.
    pub fn inverted(&self) -> Self {
        let twist_sign = match self.twist_sign {
            TwistSign::Positive => TwistSign::Negative,
            TwistSign::Negative => TwistSign::Positive,
        };
        Self { family: self.family.clone(), twist_sign }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn twist_sign(&self) -> TwistSign {
        self.twist_sign
    }

    pub fn params_finite(&self) -> bool {
        match &self.family {
            Family::Shear => true,
            Family::DriftShear { drift } => drift.is_finite(),
            Family::Standard { k } => k.is_finite(),
            Family::GeneratingFunction { potential } => {
                potential.coeffs().iter().all(|a| a.is_finite())
            }
        }
    }

    /// Generating function of the lift, when the map is of kick form and not inverted.
    pub fn generating_function(&self) -> Option<GeneratingFunction> {
        if self.twist_sign != TwistSign::Positive {
            return None;
        }
        self.family
            .kick_potential()
            .map(|potential| GeneratingFunction { potential })
    }

    pub fn eval(&self, p: Point) -> Point {
        match self.twist_sign {
            TwistSign::Positive => self.family.forward(p),
            TwistSign::Negative => self.family.backward(p),
        }
    }

    pub fn eval_inverse(&self, p: Point) -> Point {
        match self.twist_sign {
            TwistSign::Positive => self.family.backward(p),
            TwistSign::Negative => self.family.forward(p),
        }
    }

    /// Exact Jacobian `DF(p)`.
    pub fn derivative(&self, p: Point) -> Mat2 {
        match self.twist_sign {
            TwistSign::Positive => self.family.jacobian(p),
            TwistSign::Negative => self.family.jacobian(self.family.backward(p)).inverse(),
        }
    }

    /// Orbit segment `p, F(p), ..., F^n(p)` (backwards for negative `n`).
    pub fn iterate(&self, p: Point, n: i64) -> Result<Vec<Point>, MapError> {
        self.iterate_with_cap(p, n, DEFAULT_HORIZON_CAP)
    }

    pub fn iterate_with_cap(&self, p: Point, n: i64, cap: u64) -> Result<Vec<Point>, MapError> {
        let len = n.unsigned_abs();
        if len > cap {
            return Err(MapError::HorizonCap { requested: len, cap });
        }
        let mut out = Vec::with_capacity(len as usize + 1);
        let mut z = p;
        out.push(z);
        for _ in 0..len {
            z = if n >= 0 { self.eval(z) } else { self.eval_inverse(z) };
            out.push(z);
        }
        Ok(out)
    }

    /// `F^n(p)` without storing the orbit.
    pub fn iterate_to(&self, p: Point, n: i64) -> Point {
        let mut z = p;
        for _ in 0..n.unsigned_abs() {
            z = if n >= 0 { self.eval(z) } else { self.eval_inverse(z) };
        }
        z
    }

    /// Samples the twist entry `d(p1 o F)/dy` on seeded points of `[0,1] x [-Y, Y]`.
    pub fn twist_check(&self, samples: usize, seed: u64) -> TwistReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = TwistReport {
            samples,
            min_twist: f64::INFINITY,
            min_at: Point::new(0.0, 0.0),
            violations: Vec::new(),
        };
        for _ in 0..samples {
            let p = Point::new(
                rng.gen::<f64>(),
                TWIST_CHECK_HALF_HEIGHT * (2.0 * rng.gen::<f64>() - 1.0),
            );
            let entry = self.derivative(p).b;
            if entry < report.min_twist {
                report.min_twist = entry;
                report.min_at = p;
            }
            if entry <= 0.0 {
                report.violations.push(p);
            }
        }
        report
    }
}

impl fmt::Display for LiftedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twist_sign == TwistSign::Negative {
            write!(f, "inverse of ")?;
        }
        match &self.family {
            Family::Shear => write!(f, "shear"),
            Family::DriftShear { drift } => write!(f, "drift:c={drift}"),
            Family::Standard { k } => write!(f, "std:k={k}"),
            Family::GeneratingFunction { potential } => {
                write!(f, "genfun:")?;
                for (i, a) in potential.coeffs().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "a{}={}", i + 1, a)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LiftedMap {
    type Err = MapError;

    /// Parses `shear`, `drift:c=<real>`, `std:k=<real>` or `genfun:a1=<real>,a2=<real>,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec = s.trim();
        let bad = |reason: &str| MapError::Spec { spec: spec.to_string(), reason: reason.to_string() };
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let mut pairs = Vec::new();
        if let Some(args) = args {
            for item in args.split(',').filter(|t| !t.trim().is_empty()) {
                let (key, value) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(&format!("`{}` is not a real number", value.trim())))?;
                if !value.is_finite() {
                    return Err(bad("parameters must be finite"));
                }
                pairs.push((key.trim().to_string(), value));
            }
        }
        let single = |key: &str| -> Result<f64, MapError> {
            match pairs.as_slice() {
                [(k, v)] if k == key => Ok(*v),
                _ => Err(bad(&format!("expected exactly one parameter `{key}`"))),
            }
        };
        let map = match name {
            "shear" if pairs.is_empty() => LiftedMap::shear(),
            "shear" => return Err(bad("shear takes no parameters")),
            "drift" => LiftedMap::drift_shear(single("c")?),
            "std" => {
                let k = single("k")?;
                if k < 0.0 {
                    return Err(bad("kick strength k must be non-negative"));
                }
                LiftedMap::standard(k)
            }
            "genfun" => {
                let mut coeffs: Vec<f64> = Vec::new();
                for (key, value) in &pairs {
                    let idx: usize = key
                        .strip_prefix('a')
                        .and_then(|i| i.parse().ok())
                        .filter(|i| *i >= 1)
                        .ok_or_else(|| bad(&format!("unknown coefficient `{key}`")))?;
                    if coeffs.len() < idx {
                        coeffs.resize(idx, 0.0);
                    }
                    coeffs[idx - 1] = *value;
                }
                LiftedMap::generating(coeffs)
            }
            other => return Err(bad(&format!("unknown map family `{other}`"))),
        };
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(p: Point, x: f64, y: f64, tol: f64) {
        assert!((p.x - x).abs() < tol && (p.y - y).abs() < tol, "{p} vs ({x}, {y})");
    }

    #[test]
    fn trig_reduction_is_exact_at_quarter_turns() {
        assert_eq!(sin_turns(0.5), 0.0);
        assert_eq!(sin_turns(-1.5), 0.0);
        assert_eq!(cos_turns(0.25), 0.0);
        assert_eq!(cos_turns(0.5), -1.0);
        for i in 0..200 {
            let x = -3.0 + 0.0371 * i as f64;
            assert_abs_diff_eq!(sin_turns(x), (2.0 * PI * x).sin(), epsilon = 1e-13);
            assert_abs_diff_eq!(cos_turns(x), (2.0 * PI * x).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn eval_examples() {
        close(LiftedMap::shear().eval(Point::new(0.3, 0.5)), 0.8, 0.5, 1e-15);
        let s = 1.0 / (2.0 * PI);
        close(LiftedMap::standard(1.0).eval(Point::new(0.25, 0.0)), 0.25 - s, -s, 1e-15);
        close(LiftedMap::standard(1.0).eval(Point::new(0.25, 0.0)), 0.0908451, -0.1591549, 1e-7);
        close(LiftedMap::drift_shear(0.25).eval(Point::new(0.0, 0.1)), 0.1, 0.35, 1e-15);
    }

    #[test]
    fn standard_matches_generating_function_relations() {
        // y' = d2 h(x, x'), y = -d1 h(x, x')
        let map = LiftedMap::standard(1.0);
        let h = map.generating_function().unwrap();
        for p in [Point::new(0.25, 0.0), Point::new(0.1, 0.7), Point::new(-0.4, -1.3)] {
            let q = map.eval(p);
            assert_abs_diff_eq!(q.y, h.d2(p.x, q.x), epsilon = 1e-14);
            assert_abs_diff_eq!(p.y, -h.d1(p.x, q.x), epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(LiftedMap::shear().derivative(Point::new(0.7, -2.0)), Mat2::new(1.0, 1.0, 0.0, 1.0));
        let std = LiftedMap::standard(1.0);
        assert_eq!(std.derivative(Point::new(0.0, 0.0)), Mat2::new(0.0, 1.0, -1.0, 1.0));
        assert_eq!(std.derivative(Point::new(0.5, 0.0)), Mat2::new(2.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn derivative_matches_central_differences() {
        let maps = [LiftedMap::standard(1.3), LiftedMap::generating(vec![0.02, -0.01, 0.005])];
        let h = 1e-6;
        for map in &maps {
            for p in [Point::new(0.13, 0.4), Point::new(-0.77, 1.9)] {
                let dfx = |q: Point| map.eval(q);
                let px = (dfx(Point::new(p.x + h, p.y)), dfx(Point::new(p.x - h, p.y)));
                let py = (dfx(Point::new(p.x, p.y + h)), dfx(Point::new(p.x, p.y - h)));
                let m = map.derivative(p);
                assert_abs_diff_eq!(m.a, (px.0.x - px.1.x) / (2.0 * h), epsilon = 1e-7);
                assert_abs_diff_eq!(m.c, (px.0.y - px.1.y) / (2.0 * h), epsilon = 1e-7);
                assert_abs_diff_eq!(m.b, (py.0.x - py.1.x) / (2.0 * h), epsilon = 1e-7);
                assert_abs_diff_eq!(m.d, (py.0.y - py.1.y) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        close(LiftedMap::shear().eval_inverse(Point::new(0.8, 0.5)), 0.3, 0.5, 1e-15);
        close(LiftedMap::drift_shear(0.25).eval_inverse(Point::new(0.1, 0.35)), 0.0, 0.1, 1e-15);
        let std = LiftedMap::standard(1.0);
        close(std.eval_inverse(std.eval(Point::new(0.25, 0.0))), 0.25, 0.0, 1e-15);
    }

    #[test]
    fn iterate_examples() {
        let orbit = LiftedMap::shear().iterate(Point::new(0.0, 1.0 / 3.0), 3).unwrap();
        let third = 1.0 / 3.0;
        let expect = [(0.0, third), (third, third), (2.0 * third, third), (1.0, third)];
        assert_eq!(orbit.len(), 4);
        for (p, (x, y)) in orbit.iter().zip(expect) {
            close(*p, x, y, 1e-15);
        }

        let orbit = LiftedMap::drift_shear(0.25).iterate(Point::new(0.0, 0.1), 2).unwrap();
        close(orbit[1], 0.1, 0.35, 1e-15);
        close(orbit[2], 0.45, 0.6, 1e-15);

        let orbit = LiftedMap::standard(1.0).iterate(Point::new(0.5, 0.0), 2).unwrap();
        assert!(orbit.iter().all(|p| *p == Point::new(0.5, 0.0)));
    }

    #[test]
    fn iterate_backwards_and_cap() {
        let map = LiftedMap::standard(0.8);
        let p = Point::new(0.2, 0.3);
        let back = map.iterate(p, -5).unwrap();
        assert_eq!(back.len(), 6);
        close(map.iterate_to(back[5], 5), p.x, p.y, 1e-12);
        assert_eq!(
            map.iterate_with_cap(p, -11, 10),
            Err(MapError::HorizonCap { requested: 11, cap: 10 })
        );
    }

    #[test]
    fn twist_check_examples() {
        let r = LiftedMap::shear().twist_check(1000, 1);
        assert_eq!((r.min_twist, r.violations.len()), (1.0, 0));
        let r = LiftedMap::standard(1.0).twist_check(1000, 1);
        assert_eq!((r.min_twist, r.violations.len()), (1.0, 0));
        assert!(r.is_positive_twist());
        let r = LiftedMap::shear().inverted().twist_check(1000, 1);
        assert_eq!(r.min_twist, -1.0);
        assert_eq!(r.violations.len(), 1000);
    }

    #[test]
    fn inverted_shear_is_the_inverse() {
        let inv = LiftedMap::shear().inverted();
        close(inv.eval(Point::new(0.3, 0.2)), 0.1, 0.2, 1e-15);
        assert_eq!(inv.derivative(Point::new(0.0, 0.0)), Mat2::new(1.0, -1.0, 0.0, 1.0));
        assert!(inv.generating_function().is_none());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["shear", "drift:c=0.25", "std:k=1", "genfun:a1=0.1,a2=0,a3=-0.5"] {
            let map: LiftedMap = s.parse().unwrap();
            assert_eq!(map.to_string(), s);
        }
        let map: LiftedMap = "genfun:a3=0.5".parse().unwrap();
        assert_eq!(map, LiftedMap::generating(vec![0.0, 0.0, 0.5]));
    }

    #[test]
    fn spec_strings_reject_garbage() {
        for s in ["", "henon:a=1", "std", "std:k=-1", "std:k=x", "drift:d=1", "shear:c=1", "genfun:b1=2", "std:k=inf"] {
            assert!(s.parse::<LiftedMap>().is_err(), "{s} should not parse");
        }
    }
}
