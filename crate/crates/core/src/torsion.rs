//! The angle cocycle of the derivative of a positive twist map.
//!
//! Angles are measured in turns. The one-step variation of the vertical
//! half-line is the representative of its angle class in `(-1/2, 0)`; the
//! variation of any other half-line at the same point is the representative
//! within `1/2` of the vertical one. Summing these along a tangent orbit gives
//! the cumulative angle, whose time average is the finite-time torsion.

use std::f64::consts::PI;

use thiserror::Error;

use crate::maps::{LiftedMap, Point};

/// Default threshold for "the transported vertical is vertical again".
pub const VERTICAL_TOL: f64 = 1e-9;
/// Default distance to a half turn below which the anchoring of a step is refused.
pub const ANCHOR_TOL: f64 = 1e-9;
/// Per-step classes closer than this to a half turn are flagged by [`linking_number`].
pub const LINKING_HALF_TURN_TOL: f64 = 1e-6;
/// Number of steps re-checked after an over-conjugate time is found.
pub const PERSISTENCE_STEPS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorsionError {
    #[error("direction must be a non-zero finite vector")]
    ZeroVector,
    #[error("twist violated at {at}: d(p1 o F)/dy = {entry}")]
    TwistViolation { at: Point, entry: f64 },
    #[error("anchoring of the step at {at} is ill-conditioned (distance to a half turn {gap:e})")]
    DegenerateAnchor { at: Point, gap: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("map `{0}` has no generating function")]
    NoGeneratingFunction(String),
    #[error("points coincide")]
    CoincidentPoints,
    #[error("cumulative angle returned above -1/2 at step {at} after over-conjugacy at {found}")]
    PersistenceViolated { found: usize, at: usize },
}

/// Oriented angle from `from` to `to`, in turns, in `(-1/2, 1/2]`.
fn oriented_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    let cross = from[0] * to[1] - from[1] * to[0];
    let dot = from[0] * to[0] + from[1] * to[1];
    let t = cross.atan2(dot) / (2.0 * PI);
    if t <= -0.5 {
        t + 1.0
    } else {
        t
    }
}

fn normalize(w: [f64; 2]) -> Result<[f64; 2], TorsionError> {
    let norm = w[0].hypot(w[1]);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(TorsionError::ZeroVector);
    }
    Ok([w[0] / norm, w[1] / norm])
}

/// Oriented angle from the vertical `v = (0,1)` to `w`, counterclockwise
/// positive, in turns, in `(-1/2, 1/2]`.
pub fn angle_from_vertical(w: [f64; 2]) -> Result<f64, TorsionError> {
    let w = normalize(w)?;
    Ok(oriented_angle([0.0, 1.0], w))
}

/// A point together with a unit direction (a half-line of the tangent plane).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    dir: [f64; 2],
}

impl TangentVector {
    pub fn new(base: Point, dir: [f64; 2]) -> Result<Self, TorsionError> {
        Ok(Self { base, dir: normalize(dir)? })
    }

    pub fn vertical(base: Point) -> Self {
        Self { base, dir: [0.0, 1.0] }
    }

    pub fn horizontal(base: Point) -> Self {
        Self { base, dir: [1.0, 0.0] }
    }

    pub fn dir(&self) -> [f64; 2] {
        self.dir
    }
}

/// One step of the cocycle at `p` for the unit direction `w`.
/// Returns `(variation, DF(p) w)`.
fn cocycle_step(map: &LiftedMap, p: Point, w: [f64; 2], anchor_tol: f64) -> Result<(f64, [f64; 2]), TorsionError> {
    let m = map.derivative(p);
    if !(m.b > 0.0) {
        return Err(TorsionError::TwistViolation { at: p, entry: m.b });
    }
    let vertical = (-m.b).atan2(m.d) / (2.0 * PI);
    let image = m.apply(w);
    let raw = oriented_angle(w, image);
    let gap = raw - vertical;
    let gap = gap - gap.round();
    if 0.5 - gap.abs() < anchor_tol {
        return Err(TorsionError::DegenerateAnchor { at: p, gap: 0.5 - gap.abs() });
    }
    Ok((vertical + gap, image))
}

/// Variation over one step of the vertical half-line at `p`, in `(-1/2, 0)`.
pub fn vertical_step_variation(map: &LiftedMap, p: Point) -> Result<f64, TorsionError> {
    let m = map.derivative(p);
    if !(m.b > 0.0) {
        return Err(TorsionError::TwistViolation { at: p, entry: m.b });
    }
    Ok((-m.b).atan2(m.d) / (2.0 * PI))
}

/// Variation over one step of the half-line `w` at `p`, anchored within `1/2`
/// of the vertical variation; lies in `(-1, 1/2)`.
pub fn step_variation(map: &LiftedMap, p: Point, w: [f64; 2]) -> Result<f64, TorsionError> {
    let w = normalize(w)?;
    cocycle_step(map, p, w, ANCHOR_TOL).map(|(delta, _)| delta)
}

/// Walks a tangent orbit one step at a time, renormalizing the direction.
#[derive(Debug, Clone)]
pub struct CocycleWalker<'a> {
    map: &'a LiftedMap,
    state: TangentVector,
    steps_taken: usize,
    cumulative: f64,
    anchor_tol: f64,
}

impl<'a> CocycleWalker<'a> {
    pub fn new(map: &'a LiftedMap, start: TangentVector) -> Self {
        Self { map, state: start, steps_taken: 0, cumulative: 0.0, anchor_tol: ANCHOR_TOL }
    }

    pub fn with_anchor_tol(mut self, tol: f64) -> Self {
        self.anchor_tol = tol;
        self
    }

    /// Advances one step and returns the variation of that step.
    pub fn advance(&mut self) -> Result<f64, TorsionError> {
        let (delta, image) = cocycle_step(self.map, self.state.base, self.state.dir, self.anchor_tol)?;
        self.state = TangentVector {
            base: self.map.eval(self.state.base),
            dir: normalize(image)?,
        };
        self.steps_taken += 1;
        self.cumulative += delta;
        Ok(delta)
    }

    pub fn state(&self) -> TangentVector {
        self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }
}

/// Per-step variations and their partial sums along one tangent orbit.
///
/// `cumulative[0] = 0` and `cumulative[k] = steps[0] + ... + steps[k-1]`,
/// so `cumulative` has one more entry than `steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionTrace {
    pub points: Vec<Point>,
    pub steps: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// The transported half-line after the last step.
    pub end: TangentVector,
}

impl TorsionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Finite-time torsion `cumulative[n] / n`.
    pub fn torsion_at(&self, n: usize) -> f64 {
        self.cumulative[n] / n as f64
    }

    pub fn torsion(&self) -> f64 {
        self.torsion_at(self.len())
    }
}

pub fn torsion_trace(map: &LiftedMap, p: Point, w: [f64; 2], n: usize) -> Result<TorsionTrace, TorsionError> {
    if n == 0 {
        return Err(TorsionError::InvalidArgument("trace length must be at least 1".into()));
    }
    let mut walker = CocycleWalker::new(map, TangentVector::new(p, w)?);
    let mut points = Vec::with_capacity(n + 1);
    let mut steps = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n + 1);
    points.push(p);
    cumulative.push(0.0);
    for _ in 0..n {
        let delta = walker.advance()?;
        steps.push(delta);
        cumulative.push(walker.cumulative());
        points.push(walker.state().base);
    }
    Ok(TorsionTrace { points, steps, cumulative, end: walker.state() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsionEstimate {
    pub value: f64,
    /// `|Torsion_N - Torsion_{N - window}|`; with `window == N` the earlier value is taken as 0.
    pub last_window_drift: f64,
    pub horizon: usize,
}

/// `Torsion_N` from the vertical half-line, with a drift diagnostic. Convergence is not asserted.
pub fn asymptotic_torsion(map: &LiftedMap, p: Point, horizon: usize, window: usize) -> Result<TorsionEstimate, TorsionError> {
    if window == 0 || window > horizon {
        return Err(TorsionError::InvalidArgument(format!(
            "need horizon >= window >= 1, got horizon {horizon}, window {window}"
        )));
    }
    let mut walker = CocycleWalker::new(map, TangentVector::vertical(p));
    let earlier = horizon - window;
    let mut earlier_torsion = 0.0;
    for i in 1..=horizon {
        walker.advance()?;
        if i == earlier {
            earlier_torsion = walker.cumulative() / i as f64;
        }
    }
    let value = walker.cumulative() / horizon as f64;
    Ok(TorsionEstimate { value, last_window_drift: (value - earlier_torsion).abs(), horizon })
}

/// First time `n <= horizon` with vertical-start cumulative angle `< -1/2`.
///
/// After a hit the cumulative angle is re-checked for [`PERSISTENCE_STEPS`]
/// further steps (capped by the horizon); a rise back above `-1/2` is an error.
pub fn detect_overconjugate(map: &LiftedMap, p: Point, horizon: usize) -> Result<Option<usize>, TorsionError> {
    let mut walker = CocycleWalker::new(map, TangentVector::vertical(p));
    let mut found = None;
    for n in 1..=horizon {
        walker.advance()?;
        let below = walker.cumulative() < -0.5;
        match found {
            None if below => {
                found = Some(n);
                if n >= horizon {
                    break;
                }
            }
            None => {}
            Some(first) => {
                if !below {
                    return Err(TorsionError::PersistenceViolated { found: first, at: n });
                }
                if n >= first + PERSISTENCE_STEPS {
                    break;
                }
            }
        }
    }
    Ok(found)
}

/// A return of the transported vertical to the vertical line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateEvent {
    /// First integer time past the crossing.
    pub time: usize,
    /// Number of half turns: the crossing happens at cumulative angle `-k/2`.
    pub k: u32,
    pub cumulative: f64,
    /// `|cumulative[time] - cumulative[time - 1]|`; `|cumulative + k/2|` never exceeds it
    /// (or the verticality tolerance when the hit is an exact return).
    pub bracket: f64,
}

/// First time the transported vertical `DF^n(p) v` is vertical again.
///
/// Verticality is detected by a sign change of the first component between
/// consecutive times, or by its magnitude falling below `tol`. For a sign
/// change `k` is the half turn bracketed by the two cumulative angles.
pub fn detect_conjugate(map: &LiftedMap, p: Point, horizon: usize, tol: f64) -> Result<Option<ConjugateEvent>, TorsionError> {
    if !(tol > 0.0) {
        return Err(TorsionError::InvalidArgument("verticality tolerance must be positive".into()));
    }
    let mut walker = CocycleWalker::new(map, TangentVector::vertical(p));
    let mut prev_first = 0.0;
    let mut prev_cumulative = 0.0;
    for n in 1..=horizon {
        walker.advance()?;
        let first = walker.state().dir()[0];
        let cumulative = walker.cumulative();
        let bracket = (cumulative - prev_cumulative).abs();
        if first.abs() < tol {
            let k = (-2.0 * cumulative).round();
            if k >= 1.0 {
                return Ok(Some(ConjugateEvent { time: n, k: k as u32, cumulative, bracket: tol.max((cumulative + k / 2.0).abs()) }));
            }
        } else if n >= 2 && first * prev_first < 0.0 {
            let k = (-2.0 * prev_cumulative).floor() + 1.0;
            return Ok(Some(ConjugateEvent { time: n, k: k.max(1.0) as u32, cumulative, bracket }));
        }
        prev_first = first;
        prev_cumulative = cumulative;
    }
    Ok(None)
}

/// Combined over-conjugate and conjugate diagnostics from the vertical half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateReport {
    pub first_overconjugate: Option<usize>,
    pub first_conjugate: Option<(usize, u32)>,
    /// Cumulative angle at the first conjugate time, else at the first
    /// over-conjugate time, else at the horizon.
    pub cumulative_at_detection: f64,
    /// Bound on `|cumulative + k/2|` at the conjugate time.
    pub tolerance: f64,
}

pub fn conjugate_report(map: &LiftedMap, p: Point, horizon: usize, tol: f64) -> Result<ConjugateReport, TorsionError> {
    let first_overconjugate = detect_overconjugate(map, p, horizon)?;
    let conjugate = detect_conjugate(map, p, horizon, tol)?;
    let (cumulative_at_detection, tolerance) = match (conjugate, first_overconjugate) {
        (Some(event), _) => (event.cumulative, event.bracket),
        (None, Some(n)) => (torsion_trace(map, p, [0.0, 1.0], n)?.cumulative[n], f64::NAN),
        (None, None) if horizon > 0 => (torsion_trace(map, p, [0.0, 1.0], horizon)?.cumulative[horizon], f64::NAN),
        (None, None) => (0.0, f64::NAN),
    };
    Ok(ConjugateReport {
        first_overconjugate,
        first_conjugate: conjugate.map(|e| (e.time, e.k)),
        cumulative_at_detection,
        tolerance,
    })
}

pub fn jacobi_conjugate_oracle(map: &LiftedMap, p: Point, horizon: usize) -> Result<Option<usize>, TorsionError> {
    jacobi_conjugate_oracle_with_tol(map, p, horizon, VERTICAL_TOL)
}

/// First zero (sign change or near-vanishing) of the Jacobi field with
/// `xi_0 = 0`, `xi_1 = d(p1 o F)/dy (p)` along the configuration orbit of `p`.
///
/// Runs the three-term recursion of the generating function,
/// `h12(x_{n-1},x_n) xi_{n-1} + [h11(x_n,x_{n+1}) + h22(x_{n-1},x_n)] xi_n + h12(x_n,x_{n+1}) xi_{n+1} = 0`,
/// without touching angles. Near-vanishing is measured relative to the
/// tangent vector `(xi_n, eta_n)`, `eta_n = h12(x_{n-1},x_n) xi_{n-1} + h22(x_{n-1},x_n) xi_n`.
pub fn jacobi_conjugate_oracle_with_tol(map: &LiftedMap, p: Point, horizon: usize, tol: f64) -> Result<Option<usize>, TorsionError> {
    let h = map
        .generating_function()
        .ok_or_else(|| TorsionError::NoGeneratingFunction(map.to_string()))?;
    if horizon < 2 {
        return Ok(None);
    }
    let orbit: Vec<f64> = map
        .iterate(p, horizon as i64)
        .map_err(|e| TorsionError::InvalidArgument(e.to_string()))?
        .iter()
        .map(|z| z.x)
        .collect();
    let mut prev = 0.0;
    let mut cur = map.derivative(p).b;
    for n in 1..horizon {
        let (xa, xb, xc) = (orbit[n - 1], orbit[n], orbit[n + 1]);
        let diag = h.d11(xb, xc) + h.d22(xa, xb);
        let next = -(h.d12(xa, xb) * prev + diag * cur) / h.d12(xb, xc);
        let eta = h.d12(xb, xc) * cur + h.d22(xb, xc) * next;
        if next == 0.0 || next.abs() < tol * next.hypot(eta) || next * cur < 0.0 {
            return Ok(Some(n + 1));
        }
        prev = cur;
        cur = next;
        // the recursion is linear: rescale by a power of two to stay in range
        if cur.abs() > 1e150 {
            prev *= 2f64.powi(-500);
            cur *= 2f64.powi(-500);
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkingEstimate {
    pub value: f64,
    /// Set when some per-step turning is within [`LINKING_HALF_TURN_TOL`] of a half turn.
    pub near_half_turn: bool,
}

/// Finite-time linking number of `p` and `q`: the cumulative turning of
/// `F^i(q) - F^i(p)` divided by `n`, each step taken in `(-1/2, 1/2]`.
pub fn linking_number(map: &LiftedMap, p: Point, q: Point, n: usize) -> Result<LinkingEstimate, TorsionError> {
    if n == 0 {
        return Err(TorsionError::InvalidArgument("n must be at least 1".into()));
    }
    let diff = |a: Point, b: Point| [b.x - a.x, b.y - a.y];
    let (mut a, mut b) = (p, q);
    let mut d = diff(a, b);
    if d == [0.0, 0.0] {
        return Err(TorsionError::CoincidentPoints);
    }
    let mut total = 0.0;
    let mut near_half_turn = false;
    for _ in 0..n {
        a = map.eval(a);
        b = map.eval(b);
        let next = diff(a, b);
        if next == [0.0, 0.0] {
            return Err(TorsionError::CoincidentPoints);
        }
        let turn = oriented_angle(d, next);
        near_half_turn |= 0.5 - turn.abs() < LINKING_HALF_TURN_TOL;
        total += turn;
        d = next;
    }
    Ok(LinkingEstimate { value: total / n as f64, near_half_turn })
}
