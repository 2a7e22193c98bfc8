//! Piecewise-continuous functions of one variable.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result, Side};
use crate::expr::Expression;
use crate::numeric::{self, central_derivative, sequence_limit};

/// Absolute tolerance for deciding that exactly computed one-sided limits
/// differ.
pub const JUMP_TOL: f64 = 1e-12;
/// Relative tolerance used when a limit had to be estimated numerically.
pub const NUMERIC_JUMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Result<Interval> {
        Interval::new(lo, hi, false, false)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Interval> {
        Interval::new(lo, hi, true, true)
    }

    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Interval> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidFunction(format!(
                "degenerate interval [{lo}, {hi}]"
            )));
        }
        Ok(Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        (if self.lo_open { x > self.lo } else { x >= self.lo })
            && (if self.hi_open { x < self.hi } else { x <= self.hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Interior probe positions as fractions of a segment's width.
const PROBES: [f64; 5] = [0.11, 0.29, 0.47, 0.67, 0.89];

/// Evaluator for a segment that is not a parsed expression, such as a
/// quadrature-backed primitive.
pub trait SegmentFn: Send + Sync + fmt::Debug {
    /// Value at `x` in the closed segment.
    fn value(&self, x: f64) -> f64;
    /// Exact derivative at `x`, when known.
    fn derivative(&self, _x: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum SegmentBody {
    Expr {
        expr: Arc<Expression>,
        dexpr: Option<Arc<Expression>>,
    },
    Custom(Arc<dyn SegmentFn>),
}

impl SegmentBody {
    /// Parses `expr` (and optional derivative `dexpr`) in the variable `x`.
    pub fn parse(expr: &str, dexpr: Option<&str>) -> Result<SegmentBody> {
        Ok(SegmentBody::Expr {
            expr: Arc::new(Expression::parse_in(expr, "x")?),
            dexpr: dexpr
                .map(|d| Expression::parse_in(d, "x").map(Arc::new))
                .transpose()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Segment {
    interval: Interval,
    body: SegmentBody,
}

impl Segment {
    /// Builds a segment, checking finiteness and any supplied derivative at
    /// five interior probes.
    pub fn new(interval: Interval, body: SegmentBody) -> Result<Segment> {
        let seg = Segment { interval, body };
        let w = interval.width();
        let h = (w / 40.0).min(1e-3);
        for frac in PROBES {
            let x = interval.lo + w * frac;
            let v = seg.value(x);
            if !v.is_finite() {
                return Err(Error::InvalidFunction(format!(
                    "segment ({}, {}) is not finite at {x}",
                    interval.lo, interval.hi
                )));
            }
            if let SegmentBody::Expr { expr, dexpr: Some(d) } = &seg.body {
                let fd = central_derivative(|t| expr.eval1(t), x, h);
                let dv = d.eval1(x);
                if !(dv - fd).abs().le(&(1e-6 * (1.0 + fd.abs()))) {
                    return Err(Error::InvalidFunction(format!(
                        "derivative `{}` disagrees with `{}` at {x}: {dv} vs {fd}",
                        d.text(),
                        expr.text()
                    )));
                }
            }
        }
        Ok(seg)
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn body(&self) -> &SegmentBody {
        &self.body
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.body {
            SegmentBody::Expr { expr, .. } => expr.eval1(x),
            SegmentBody::Custom(f) => f.value(x),
        }
    }

    /// Derivative from a supplied expression or evaluator, if any.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.body {
            SegmentBody::Expr { dexpr, .. } => dexpr.as_ref().map(|d| d.eval1(x)),
            SegmentBody::Custom(f) => f.derivative(x),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match &self.body {
            SegmentBody::Expr { dexpr, .. } => dexpr.is_some(),
            SegmentBody::Custom(f) => f.derivative(0.5 * (self.interval.lo + self.interval.hi)).is_some(),
        }
    }

    pub fn expression(&self) -> Option<(&Expression, Option<&Expression>)> {
        match &self.body {
            SegmentBody::Expr { expr, dexpr } => Some((expr, dexpr.as_deref())),
            SegmentBody::Custom(_) => None,
        }
    }

    /// One-sided limit of this segment's evaluator at `x0`, approached from
    /// `side` (so `x0` is the left end for [`Side::Right`]).
    pub fn limit(&self, x0: f64, side: Side) -> Option<OneSided> {
        let reach = match side {
            Side::Right => self.interval.hi - x0,
            Side::Left => x0 - self.interval.lo,
        };
        limit_of(|x| self.value(x), x0, side, reach)
    }
}

/// A one-sided limit together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    pub value: f64,
    /// True when the value came from direct evaluation (confirmed by the
    /// numeric sequence), false when only the sequence estimate is known.
    pub exact: bool,
}

/// Analytic evaluation at `x0` confirmed against the geometric sequence,
/// falling back to the sequence estimate.
pub(crate) fn limit_of(g: impl Fn(f64) -> f64, x0: f64, side: Side, reach: f64) -> Option<OneSided> {
    let h0 = numeric::H0.min(0.5 * reach);
    let direct = g(x0);
    let seq = sequence_limit(&g, x0, side, h0);
    match (direct.is_finite(), seq) {
        (true, Ok(s)) if numeric::close(direct, s, 1e-6) => Some(OneSided {
            value: direct,
            exact: true,
        }),
        (_, Ok(s)) => Some(OneSided {
            value: s,
            exact: false,
        }),
        (true, Err(_)) => Some(OneSided {
            value: direct,
            exact: true,
        }),
        (false, Err(_)) => None,
    }
}

/// Tolerance for comparing two one-sided limits.
pub fn jump_tolerance(a: OneSided, b: OneSided) -> f64 {
    if a.exact && b.exact {
        JUMP_TOL
    } else {
        NUMERIC_JUMP_TOL * (1.0 + a.value.abs().max(b.value.abs()))
    }
}

/// Value carried by a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointValue {
    Defined(f64),
    Undefined,
    Unknown,
}

impl PointValue {
    pub fn defined(self) -> Option<f64> {
        match self {
            PointValue::Defined(v) => Some(v),
            _ => None,
        }
    }
}

/// Where a point sits relative to the breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Inside segment `k`, away from breakpoints and domain ends.
    Interior(usize),
    /// On breakpoint `k`.
    Breakpoint(usize),
    DomainLo,
    DomainHi,
}

#[derive(Debug, Clone)]
pub struct PiecewiseFunction {
    domain: Interval,
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    point_values: Vec<PointValue>,
    /// (left limit, right limit) per breakpoint.
    limits: Vec<(OneSided, OneSided)>,
    lo_limit: Option<OneSided>,
    hi_limit: Option<OneSided>,
}

impl PiecewiseFunction {
    /// Builds a function on `[lo, hi]` from one body per gap.
    ///
    /// `point_values[k]` belongs to `breakpoints[k]`.
    pub fn new(
        lo: f64,
        hi: f64,
        breakpoints: Vec<f64>,
        bodies: Vec<SegmentBody>,
        point_values: Vec<PointValue>,
    ) -> Result<PiecewiseFunction> {
        let domain = Interval::closed(lo, hi)?;
        if bodies.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                bodies.len()
            )));
        }
        if point_values.len() != breakpoints.len() {
            return Err(Error::InvalidFunction(
                "one point value per breakpoint required".into(),
            ));
        }
        let mut ends = Vec::with_capacity(breakpoints.len() + 2);
        ends.push(lo);
        for &b in &breakpoints {
            if !(b > *ends.last().expect("nonempty") && b < hi) {
                return Err(Error::InvalidFunction(format!(
                    "breakpoint {b} is not strictly increasing inside ({lo}, {hi})"
                )));
            }
            ends.push(b);
        }
        ends.push(hi);
        let segments = bodies
            .into_iter()
            .enumerate()
            .map(|(k, body)| Segment::new(Interval::open(ends[k], ends[k + 1])?, body))
            .collect::<Result<Vec<_>>>()?;
        let mut limits = Vec::with_capacity(breakpoints.len());
        for (k, &b) in breakpoints.iter().enumerate() {
            let left = segments[k]
                .limit(b, Side::Left)
                .ok_or(Error::LimitDiverges { x0: b, side: Side::Left })?;
            let right = segments[k + 1]
                .limit(b, Side::Right)
                .ok_or(Error::LimitDiverges { x0: b, side: Side::Right })?;
            limits.push((left, right));
        }
        let lo_limit = segments[0].limit(lo, Side::Right);
        let hi_limit = segments.last().expect("nonempty").limit(hi, Side::Left);
        Ok(PiecewiseFunction {
            domain,
            breakpoints,
            segments,
            point_values,
            limits,
            lo_limit,
            hi_limit,
        })
    }

    /// Parses one expression per segment; unlisted breakpoints are undefined.
    pub fn from_exprs(
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
        exprs: &[&str],
        values: &[(f64, PointValue)],
    ) -> Result<PiecewiseFunction> {
        let bodies = exprs
            .iter()
            .map(|e| SegmentBody::parse(e, None))
            .collect::<Result<Vec<_>>>()?;
        let mut pv = vec![PointValue::Undefined; breakpoints.len()];
        for &(x, v) in values {
            let k = breakpoints
                .iter()
                .position(|&b| same_point(b, x))
                .ok_or_else(|| Error::InvalidFunction(format!("{x} is not a breakpoint")))?;
            pv[k] = v;
        }
        PiecewiseFunction::new(lo, hi, breakpoints.to_vec(), bodies, pv)
    }

    /// A single expression on `[lo, hi]`.
    pub fn smooth(lo: f64, hi: f64, expr: &str) -> Result<PiecewiseFunction> {
        PiecewiseFunction::from_exprs(lo, hi, &[], &[expr], &[])
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn point_values(&self) -> &[PointValue] {
        &self.point_values
    }

    /// Same function with different breakpoint values.
    pub fn with_point_values(&self, point_values: Vec<PointValue>) -> Result<PiecewiseFunction> {
        if point_values.len() != self.breakpoints.len() {
            return Err(Error::InvalidFunction(
                "one point value per breakpoint required".into(),
            ));
        }
        Ok(PiecewiseFunction {
            point_values,
            ..self.clone()
        })
    }

    pub fn locate(&self, x: f64) -> Result<Location> {
        if !self.domain.contains(x) || x.is_nan() {
            return Err(Error::OutOfDomain { x });
        }
        if x == self.domain.lo {
            return Ok(Location::DomainLo);
        }
        if x == self.domain.hi {
            return Ok(Location::DomainHi);
        }
        let k = self.breakpoints.partition_point(|&b| b < x);
        for j in [k.wrapping_sub(1), k] {
            if let Some(&b) = self.breakpoints.get(j) {
                if same_point(b, x) {
                    return Ok(Location::Breakpoint(j));
                }
            }
        }
        Ok(Location::Interior(k))
    }

    /// Value of the function at `x`.
    ///
    /// Domain ends take the adjacent one-sided limit.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = match self.locate(x)? {
            Location::Interior(k) => self.segments[k].value(x),
            Location::Breakpoint(k) => match self.point_values[k] {
                PointValue::Defined(v) => v,
                _ => return Err(Error::UndefinedAt { x }),
            },
            Location::DomainLo => self.lo_limit.ok_or(Error::UndefinedAt { x })?.value,
            Location::DomainHi => self.hi_limit.ok_or(Error::UndefinedAt { x })?.value,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::UndefinedAt { x })
        }
    }

    /// The segment used when approaching `x0` from `side`, and how far it
    /// extends past `x0` on that side.
    pub fn adjacent_segment(&self, x0: f64, side: Side) -> Result<(&Segment, f64)> {
        let k = match (self.locate(x0)?, side) {
            (Location::Interior(k), _) => k,
            (Location::Breakpoint(k), Side::Left) => k,
            (Location::Breakpoint(k), Side::Right) => k + 1,
            (Location::DomainLo, Side::Right) => 0,
            (Location::DomainHi, Side::Left) => self.segments.len() - 1,
            (Location::DomainLo, Side::Left) | (Location::DomainHi, Side::Right) => {
                return Err(Error::OutOfDomain { x: x0 })
            }
        };
        let seg = &self.segments[k];
        let reach = match side {
            Side::Right => seg.interval.hi - x0,
            Side::Left => x0 - seg.interval.lo,
        };
        Ok((seg, reach))
    }

    /// One-sided limit with provenance.
    pub fn limit(&self, x0: f64, side: Side) -> Result<OneSided> {
        let diverges = Error::LimitDiverges { x0, side };
        match (self.locate(x0)?, side) {
            (Location::Breakpoint(k), Side::Left) => Ok(self.limits[k].0),
            (Location::Breakpoint(k), Side::Right) => Ok(self.limits[k].1),
            (Location::DomainLo, Side::Right) => self.lo_limit.ok_or(diverges),
            (Location::DomainHi, Side::Left) => self.hi_limit.ok_or(diverges),
            _ => {
                let (seg, _) = self.adjacent_segment(x0, side)?;
                seg.limit(x0, side).ok_or(diverges)
            }
        }
    }

    /// `f[x0)`.
    pub fn right_limit(&self, x0: f64) -> Result<f64> {
        self.limit(x0, Side::Right).map(|l| l.value)
    }

    /// `f(x0]`.
    pub fn left_limit(&self, x0: f64) -> Result<f64> {
        self.limit(x0, Side::Left).map(|l| l.value)
    }

    /// `f[x0]`, the mean of the one-sided limits.
    pub fn midgap_value(&self, x0: f64) -> Result<f64> {
        Ok((self.right_limit(x0)? + self.left_limit(x0)?) / 2.0)
    }

    /// True when breakpoint `k` carries a jump.
    pub fn is_jump(&self, k: usize) -> bool {
        let (l, r) = self.limits[k];
        (r.value - l.value).abs() > jump_tolerance(l, r)
    }

    /// Breakpoints where the one-sided limits differ.
    pub fn singular_points(&self) -> Vec<f64> {
        (0..self.breakpoints.len())
            .filter(|&k| self.is_jump(k))
            .map(|k| self.breakpoints[k])
            .collect()
    }

    /// Segment `i` extended continuously to its closed interval.
    pub fn extended_segment(&self, i: usize) -> Result<ExtendedSegment> {
        let seg = self
            .segments
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("no segment {i}")))?;
        let Interval { lo, hi, .. } = seg.interval;
        Ok(ExtendedSegment {
            segment: seg.clone(),
            lo_value: self.limit(lo, Side::Right)?.value,
            hi_value: self.limit(hi, Side::Left)?.value,
        })
    }
}

fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * (1.0 + a.abs())
}

/// A segment evaluator on its closed interval, using the one-sided limits at
/// the ends.
#[derive(Debug, Clone)]
pub struct ExtendedSegment {
    segment: Segment,
    lo_value: f64,
    hi_value: f64,
}

impl ExtendedSegment {
    pub fn lo(&self) -> f64 {
        self.segment.interval.lo
    }

    pub fn hi(&self) -> f64 {
        self.segment.interval.hi
    }

    pub fn segment(&self) -> &Segment {
        &self.segment
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo() {
            self.lo_value
        } else if x >= self.hi() {
            self.hi_value
        } else {
            self.segment.value(x)
        }
    }
}
