//! One-dimensional specular derivatives.

use crate::error::{Error, FailureReason, Result, Side};
use crate::numeric::{self, richardson, DIVERGENCE_BOUND};
use crate::piecewise::{jump_tolerance, limit_of, Location, OneSided, PiecewiseFunction};

/// Right and left semi-specular derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiPair {
    pub right: f64,
    pub left: f64,
}

impl SemiPair {
    pub fn new(right: f64, left: f64) -> SemiPair {
        SemiPair { right, left }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Right => self.right,
            Side::Left => self.left,
        }
    }

    /// The specular value of the pair.
    pub fn combined(&self) -> f64 {
        combine_a(self.right, self.left)
    }
}

/// Slope of the chord joining the intersections of a unit circle with two
/// rays of slopes `alpha` (right) and `beta` (left).
///
/// Evaluated as `(αβ - 1 + √((α²+1)(β²+1)))/(α+β)` when `αβ ≥ 1` and as the
/// equivalent `(α+β)/(√((α²+1)(β²+1)) + 1 - αβ)` otherwise, which avoids
/// cancellation in both regimes.
pub fn combine_a(alpha: f64, beta: f64) -> f64 {
    let s = alpha + beta;
    if s.abs() < 1e-14 * (1.0 + alpha.abs() + beta.abs()) {
        return 0.0;
    }
    let root = alpha.hypot(1.0) * beta.hypot(1.0);
    let p = alpha * beta;
    if p >= 1.0 {
        (p - 1.0 + root) / s
    } else {
        s / (root + 1.0 - p)
    }
}

/// `tan((atan α + atan β)/2)`, the angle-bisector form of [`combine_a`].
///
/// Steep slopes are handled as `±π/2 - atan(1/s)` with the quarter turns
/// summed exactly, so nearly opposite vertical rays do not cancel.
pub fn combine_a_via_angles(alpha: f64, beta: f64) -> f64 {
    let split = |s: f64| -> (i32, f64) {
        if s.abs() <= 1.0 {
            (0, s.atan())
        } else {
            (s.signum() as i32, -(1.0 / s).atan())
        }
    };
    let (q1, p1) = split(alpha);
    let (q2, p2) = split(beta);
    let half = (p1 + p2) / 2.0;
    match q1 + q2 {
        0 => half.tan(),
        2 | -2 => -1.0 / half.tan(),
        q => {
            // tan(±π/4 + x)
            let (t, sign) = (half.tan(), q as f64);
            (sign + t) / (1.0 - sign * t)
        }
    }
}

/// Semi-derivative tolerance on the Richardson error estimate.
const SEMI_TOL: f64 = 1e-6;
const SEMI_LEVELS: usize = 16;

fn one_side(f: &PiecewiseFunction, x0: f64, side: Side) -> Result<f64> {
    let limit = f.limit(x0, side)?;
    let (seg, reach) = f.adjacent_segment(x0, side)?;
    let diverges = Error::SemiDerivativeDiverges { side };
    if seg.has_derivative() {
        let d = limit_of(|x| seg.derivative(x).unwrap_or(f64::NAN), x0, side, reach)
            .ok_or(diverges.clone())?;
        return if d.value.abs() <= DIVERGENCE_BOUND { Ok(d.value) } else { Err(diverges) };
    }
    quotient_limit(|x| seg.value(x), x0, side, limit.value, numeric::H0.min(0.5 * reach), SEMI_TOL)
        .ok_or(diverges)
}

/// Richardson limit of `(g(x0 ± h) - limit)/(±h)`.
pub(crate) fn quotient_limit(
    g: impl Fn(f64) -> f64,
    x0: f64,
    side: Side,
    limit: f64,
    h0: f64,
    tol: f64,
) -> Option<f64> {
    let s = side.sign();
    let r = richardson(|h| (g(x0 + s * h) - limit) / (s * h), h0, SEMI_LEVELS)?;
    (r.error <= tol * (1.0 + r.value.abs()) && r.value.abs() <= DIVERGENCE_BOUND).then_some(r.value)
}

/// Right and left semi-specular derivatives of `f` at `x0`.
pub fn semi_specular(f: &PiecewiseFunction, x0: f64) -> Result<SemiPair> {
    Ok(SemiPair {
        right: one_side(f, x0, Side::Right)?,
        left: one_side(f, x0, Side::Left)?,
    })
}

/// Semi-specular derivatives computed from difference quotients only,
/// ignoring any supplied derivative.
pub fn semi_specular_numeric(f: &PiecewiseFunction, x0: f64) -> Result<SemiPair> {
    let side = |side: Side| -> Result<f64> {
        let limit = f.limit(x0, side)?;
        let (seg, reach) = f.adjacent_segment(x0, side)?;
        quotient_limit(|x| seg.value(x), x0, side, limit.value, numeric::H0.min(0.5 * reach), SEMI_TOL)
            .ok_or(Error::SemiDerivativeDiverges { side })
    };
    Ok(SemiPair {
        right: side(Side::Right)?,
        left: side(Side::Left)?,
    })
}

fn not_diff(x0: f64, reason: FailureReason) -> Error {
    Error::NotSpecularlyDifferentiable { x0, reason }
}

/// Checks continuity of the phototangent at `x0` and returns the semi pair.
fn checked_pair(f: &PiecewiseFunction, x0: f64, semi: fn(&PiecewiseFunction, f64) -> Result<SemiPair>) -> Result<SemiPair> {
    match f.locate(x0)? {
        Location::DomainLo => {
            let r = one_side(f, x0, Side::Right).map_err(|_| not_diff(x0, FailureReason::DivergentSide))?;
            return Ok(SemiPair::new(r, r));
        }
        Location::DomainHi => {
            let l = one_side(f, x0, Side::Left).map_err(|_| not_diff(x0, FailureReason::DivergentSide))?;
            return Ok(SemiPair::new(l, l));
        }
        _ => {}
    }
    let divergent = |_| not_diff(x0, FailureReason::DivergentSide);
    let r = f.limit(x0, Side::Right).map_err(divergent)?;
    let l = f.limit(x0, Side::Left).map_err(divergent)?;
    if (r.value - l.value).abs() > jump_tolerance(l, r) {
        return Err(not_diff(x0, FailureReason::Jump));
    }
    semi(f, x0).map_err(divergent)
}

/// True when the one-sided limits agree and both semi-derivatives exist.
pub fn is_specularly_differentiable(f: &PiecewiseFunction, x0: f64) -> bool {
    checked_pair(f, x0, semi_specular).is_ok()
}

/// Specular derivative of `f` at `x0`. At a domain end this is the one-sided
/// semi-derivative.
pub fn specular_derivative(f: &PiecewiseFunction, x0: f64) -> Result<f64> {
    checked_pair(f, x0, semi_specular).map(|p| p.combined())
}

/// Same value as [`specular_derivative`] through the angle-bisector form.
pub fn specular_derivative_via_angles(f: &PiecewiseFunction, x0: f64) -> Result<f64> {
    checked_pair(f, x0, semi_specular).map(|p| combine_a_via_angles(p.right, p.left))
}

/// Step sequence for the quotient route: `h0·2^-k` for `k < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steps {
    pub h0: f64,
    pub count: usize,
}

impl Default for Steps {
    fn default() -> Self {
        Steps { h0: 1e-2, count: 21 }
    }
}

/// Specular derivative as the two-sided limit of the symmetric quotient
/// built from `g(h) = f(x0+h) - f[x0]`.
pub fn specular_derivative_via_criterion(f: &PiecewiseFunction, x0: f64, steps: Steps) -> Result<f64> {
    checked_pair(f, x0, semi_specular)?;
    let mid = f.midgap_value(x0)?;
    let (right, reach_r) = f.adjacent_segment(x0, Side::Right)?;
    let (left, reach_l) = f.adjacent_segment(x0, Side::Left)?;
    let h0 = steps.h0.min(0.5 * reach_r).min(0.5 * reach_l);
    let sigma = |h: f64| {
        let gp = right.value(x0 + h) - mid;
        let gm = left.value(x0 - h) - mid;
        let (np, nm) = (gp.hypot(h), gm.hypot(h));
        (gp * nm - gm * np) / (h * nm + h * np)
    };
    let fail = || Error::NoConvergence {
        last: [
            sigma(h0 * 0.5f64.powi(steps.count as i32 - 2)),
            sigma(h0 * 0.5f64.powi(steps.count as i32 - 1)),
        ],
    };
    let r = richardson(sigma, h0, steps.count).ok_or_else(fail)?;
    if r.error <= 1e-6 * (1.0 + r.value.abs()) {
        Ok(r.value)
    } else {
        Err(fail())
    }
}

/// The three-branch piecewise-linear function built at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phototangent {
    pub center_x: f64,
    pub mid: f64,
    pub right_value: f64,
    pub left_value: f64,
    pub right_slope: f64,
    pub left_slope: f64,
}

impl Phototangent {
    pub fn eval(&self, y: f64) -> f64 {
        if y < self.center_x {
            self.left_slope * (y - self.center_x) + self.left_value
        } else if y > self.center_x {
            self.right_slope * (y - self.center_x) + self.right_value
        } else {
            self.mid
        }
    }
}

pub fn phototangent(f: &PiecewiseFunction, x0: f64) -> Result<Phototangent> {
    let pair = semi_specular(f, x0)?;
    let right_value = f.right_limit(x0)?;
    let left_value = f.left_limit(x0)?;
    Ok(Phototangent {
        center_x: x0,
        mid: (right_value + left_value) / 2.0,
        right_value,
        left_value,
        right_slope: pair.right,
        left_slope: pair.left,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub anchor_x: f64,
    pub anchor_y: f64,
}

impl Line {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * (x - self.anchor_x) + self.anchor_y
    }
}

/// Line through `(x0, f[x0])` with the specular derivative as slope.
pub fn specular_tangent_line(f: &PiecewiseFunction, x0: f64) -> Result<Line> {
    let slope = specular_derivative(f, x0)?;
    let anchor_y = match f.locate(x0)? {
        Location::DomainLo => f.right_limit(x0)?,
        Location::DomainHi => f.left_limit(x0)?,
        _ => f.midgap_value(x0)?,
    };
    Ok(Line {
        slope,
        anchor_x: x0,
        anchor_y,
    })
}

/// Tolerance used for jumps and quotients of numerically derived functions.
const DERIVED_JUMP_TOL: f64 = 1e-6;
const DERIVED_SEMI_TOL: f64 = 1e-3;

/// `k`-th order specular derivative, applying the one-dimensional machinery
/// recursively to `x ↦ f^{[k-1]}(x)`.
pub fn higher_specular(f: &PiecewiseFunction, x0: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if k == 1 {
        return specular_derivative(f, x0);
    }
    derived(f, x0, k)
}

fn derived(f: &PiecewiseFunction, x0: f64, level: usize) -> Result<f64> {
    if level == 1 {
        return specular_derivative(f, x0).map_err(|e| match e {
            Error::NotSpecularlyDifferentiable { reason, .. } => Error::HigherOrderFailure {
                x0,
                level: 1,
                reason,
            },
            other => other,
        });
    }
    let dom = f.domain();
    if !(x0 > dom.lo && x0 < dom.hi) {
        return Err(Error::InvalidArgument(
            "higher orders need an interior point".into(),
        ));
    }
    let h0 = (1e-2 * 10f64.powi(1 - level as i32))
        .min(0.5 * (x0 - dom.lo))
        .min(0.5 * (dom.hi - x0));
    let g = |y: f64| derived(f, y, level - 1).unwrap_or(f64::NAN);
    let fail = |reason| Error::HigherOrderFailure { x0, level, reason };
    let side_limit = |side: Side| -> Result<OneSided> {
        limit_of(g, x0, side, 2.0 * h0).ok_or(fail(FailureReason::DivergentSide))
    };
    let r = side_limit(Side::Right)?;
    let l = side_limit(Side::Left)?;
    if !numeric::close(r.value, l.value, DERIVED_JUMP_TOL) {
        return Err(fail(FailureReason::Jump));
    }
    let right = quotient_limit(g, x0, Side::Right, r.value, h0, DERIVED_SEMI_TOL)
        .ok_or(fail(FailureReason::DivergentSide))?;
    let left = quotient_limit(g, x0, Side::Left, l.value, h0, DERIVED_SEMI_TOL)
        .ok_or(fail(FailureReason::DivergentSide))?;
    Ok(combine_a(right, left))
}

/// Grid witnesses for the quasi mean value inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValueWitnesses {
    pub slope: f64,
    /// A point where the specular derivative is at least the slope.
    pub above: f64,
    /// A point where the specular derivative is at most the slope.
    pub below: f64,
}

/// Value at `x`, or the common one-sided limit when the value is missing.
pub(crate) fn value_or_limit(f: &PiecewiseFunction, x: f64) -> Result<f64> {
    match f.eval(x) {
        Ok(v) => Ok(v),
        Err(Error::UndefinedAt { .. }) => f.midgap_value(x),
        Err(e) => Err(e),
    }
}

pub fn quasi_mvt_witnesses(f: &PiecewiseFunction, a: f64, b: f64, grid_n: usize) -> Result<MeanValueWitnesses> {
    if !(a < b) || grid_n < 2 {
        return Err(Error::InvalidArgument("need a < b and grid_n >= 2".into()));
    }
    for (k, &s) in f.breakpoints().iter().enumerate() {
        if s > a && s < b && f.is_jump(k) {
            return Err(Error::Discontinuous { at: s });
        }
    }
    let slope = (value_or_limit(f, b)? - value_or_limit(f, a)?) / (b - a);
    let (mut above, mut below) = (None, None);
    for i in 1..=grid_n {
        let x = a + (b - a) * i as f64 / (grid_n + 1) as f64;
        let d = specular_derivative(f, x)?;
        if above.is_none() && d >= slope - 1e-9 {
            above = Some(x);
        }
        if below.is_none() && d <= slope + 1e-9 {
            below = Some(x);
        }
        if above.is_some() && below.is_some() {
            break;
        }
    }
    Ok(MeanValueWitnesses {
        slope,
        above: above.ok_or(Error::WitnessNotFound { side: Side::Right })?,
        below: below.ok_or(Error::WitnessNotFound { side: Side::Left })?,
    })
}
