//! Indefinite integrals of piecewise continuous functions, the singular-value
//! hypothesis check, and the fundamental theorem with specular derivatives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::piecewise::{ExtendedSegment, Location, PiecewiseFunction, PointValue, SegmentBody, SegmentFn};
use crate::quadrature::CumulativeTable;
use crate::specular1d::{combine_a, semi_specular_numeric, specular_derivative};

/// Absolute quadrature tolerance per segment.
pub const QUADRATURE_TOL: f64 = 1e-10;
const H1_TOL: f64 = 1e-9;
const CONTINUITY_TOL: f64 = 1e-9;
const FTC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1Violation {
    pub point: f64,
    pub expected: f64,
    /// `None` when the function is undefined there.
    pub actual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct H1Report {
    pub checked_points: Vec<f64>,
    pub violations: Vec<H1Violation>,
    /// Expected values for singular points marked unknown.
    pub assignments: Vec<(f64, f64)>,
}

impl H1Report {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every jump value equals `A(f[s), f(s])`.
///
/// Continuity points are skipped. Unknown values are reported as assignments
/// rather than violations.
pub fn check_h1(f: &PiecewiseFunction) -> Result<H1Report> {
    let mut report = H1Report::default();
    for (k, &s) in f.breakpoints().iter().enumerate() {
        if !f.is_jump(k) {
            continue;
        }
        let expected = combine_a(f.right_limit(s)?, f.left_limit(s)?);
        report.checked_points.push(s);
        match f.point_values()[k] {
            PointValue::Unknown => report.assignments.push((s, expected)),
            PointValue::Defined(v) if (v - expected).abs() <= H1_TOL * (1.0 + expected.abs()) => {}
            PointValue::Defined(v) => report.violations.push(H1Violation {
                point: s,
                expected,
                actual: Some(v),
            }),
            PointValue::Undefined => report.violations.push(H1Violation {
                point: s,
                expected,
                actual: None,
            }),
        }
    }
    Ok(report)
}

/// The same function with each unknown jump value replaced by its expected
/// value.
pub fn assign_h1(f: &PiecewiseFunction) -> Result<PiecewiseFunction> {
    let report = check_h1(f)?;
    let mut values = f.point_values().to_vec();
    for (s, v) in report.assignments {
        let Location::Breakpoint(k) = f.locate(s)? else {
            unreachable!("assignments sit on breakpoints")
        };
        values[k] = PointValue::Defined(v);
    }
    f.with_point_values(values)
}

/// `x ↦ acc + ∫_{lo}^x f̄`, with exact derivative `f̄`.
#[derive(Debug)]
struct Primitive {
    acc: f64,
    table: CumulativeTable,
}

impl SegmentFn for Primitive {
    fn value(&self, x: f64) -> f64 {
        self.acc + self.table.at(x)
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        Some(self.table.integrand(x))
    }
}

/// Continuous primitive `F` of `f` with `F(lo) = 0`.
#[derive(Debug, Clone)]
pub struct IndefiniteIntegral {
    function: PiecewiseFunction,
    constants: Vec<f64>,
}

impl IndefiniteIntegral {
    pub fn function(&self) -> &PiecewiseFunction {
        &self.function
    }

    /// `F` at the left end of each segment.
    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.function.eval(x)
    }
}

/// Cumulative table of an extended segment of `f`.
pub(crate) fn segment_table(
    ext: ExtendedSegment,
    weight: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    segment: usize,
) -> Result<CumulativeTable> {
    let (lo, hi) = (ext.lo(), ext.hi());
    let integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match weight {
        Some(w) => Arc::new(move |x| w(x) * ext.eval(x)),
        None => Arc::new(move |x| ext.eval(x)),
    };
    CumulativeTable::new(integrand, lo, hi, QUADRATURE_TOL).map_err(|achieved| Error::QuadratureFailure {
        segment,
        achieved_tolerance: achieved,
    })
}

pub fn indefinite_integral(f: &PiecewiseFunction) -> Result<IndefiniteIntegral> {
    let mut acc = 0.0;
    let mut constants = Vec::with_capacity(f.segments().len());
    let mut bodies = Vec::with_capacity(f.segments().len());
    let mut point_values = Vec::with_capacity(f.breakpoints().len());
    for i in 0..f.segments().len() {
        let table = segment_table(f.extended_segment(i)?, None, i)?;
        let total = table.total();
        constants.push(acc);
        bodies.push(SegmentBody::Custom(Arc::new(Primitive { acc, table })));
        acc += total;
        if i < f.breakpoints().len() {
            point_values.push(PointValue::Defined(acc));
        }
    }
    let dom = f.domain();
    let function = PiecewiseFunction::new(dom.lo, dom.hi, f.breakpoints().to_vec(), bodies, point_values)?;
    Ok(IndefiniteIntegral { function, constants })
}

pub(crate) fn worst(acc: f64, deviation: f64) -> f64 {
    if deviation.is_nan() {
        f64::INFINITY
    } else {
        acc.max(deviation)
    }
}

/// One point where `F^S = f` (or continuity of `F`) fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtcViolation {
    pub point: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FtcReport {
    pub checked: usize,
    pub violations: Vec<FtcViolation>,
    /// Largest deviation over all checked points; relative at derivative
    /// checks, absolute at continuity checks. Infinite if any check was NaN.
    pub max_deviation: f64,
}

impl FtcReport {
    fn record(&mut self, deviation: f64) {
        self.max_deviation = worst(self.max_deviation, deviation);
    }

    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::FTCViolation {
                point: v.point,
                lhs: v.lhs,
                rhs: v.rhs,
            }),
        }
    }
}

/// Checks continuity of `F` at breakpoints and `F^S = f` on a grid of
/// `grid_n` interior points plus every singular point of `f`.
///
/// Unknown jump values of `f` are first assigned. Interior points are checked
/// both through the exact segment derivative and through difference
/// quotients of `F`.
pub fn verify_ftc(f: &PiecewiseFunction, big_f: &IndefiniteIntegral, grid_n: usize) -> Result<FtcReport> {
    let f = assign_h1(f)?;
    let big = big_f.function();
    let mut report = FtcReport::default();
    for &b in f.breakpoints() {
        let (r, l) = (big.right_limit(b)?, big.left_limit(b)?);
        report.checked += 1;
        report.record((r - l).abs());
        if (r - l).abs() > CONTINUITY_TOL {
            report.violations.push(FtcViolation { point: b, lhs: r, rhs: l });
        }
    }
    let dom = f.domain();
    let mut points: Vec<f64> = (0..grid_n)
        .map(|i| dom.lo + dom.width() * (i as f64 + 0.5) / grid_n as f64)
        .filter(|&x| matches!(f.locate(x), Ok(Location::Interior(_))))
        .collect();
    points.extend(f.singular_points());
    for x in points {
        report.checked += 1;
        let rhs = f.eval(x).unwrap_or(f64::NAN);
        let exact = specular_derivative(big, x).unwrap_or(f64::NAN);
        let quotient = semi_specular_numeric(big, x).map(|p| p.combined()).unwrap_or(f64::NAN);
        for lhs in [exact, quotient] {
            report.record((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }
        for lhs in [exact, quotient] {
            if !((lhs - rhs).abs() <= FTC_TOL * (1.0 + rhs.abs())) {
                report.violations.push(FtcViolation { point: x, lhs, rhs });
                break;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::tests::sgn;

    fn step_g(value: PointValue) -> PiecewiseFunction {
        PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &["-1", "1"], &[(0.0, value)]).unwrap()
    }

    pub(crate) fn periodic(k: usize, value: PointValue) -> PiecewiseFunction {
        let bps: Vec<f64> = (1..=k).map(|j| j as f64).collect();
        let exprs: Vec<String> = (0..=k).map(|j| format!("2*(x-{j})")).collect();
        let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
        let values: Vec<(f64, PointValue)> = bps.iter().map(|&b| (b, value)).collect();
        PiecewiseFunction::from_exprs(0.0, (k + 1) as f64, &bps, &refs, &values).unwrap()
    }

    #[test]
    fn h1_examples() {
        assert!(check_h1(&sgn()).unwrap().holds());
        let r = check_h1(&step_g(PointValue::Defined(-1.0))).unwrap();
        assert_eq!(
            r.violations,
            vec![H1Violation {
                point: 0.0,
                expected: 0.0,
                actual: Some(-1.0)
            }]
        );
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let p = periodic(3, PointValue::Defined(golden));
        let r = check_h1(&p).unwrap();
        assert!(r.holds() && r.checked_points == vec![1.0, 2.0, 3.0]);
        let r = check_h1(&step_g(PointValue::Undefined)).unwrap();
        assert_eq!(r.violations[0].actual, None);
    }

    #[test]
    fn assignment_is_idempotent() {
        let p = periodic(2, PointValue::Unknown);
        let r = check_h1(&p).unwrap();
        assert_eq!(r.assignments.len(), 2);
        let q = assign_h1(&p).unwrap();
        let r = check_h1(&q).unwrap();
        assert!(r.holds() && r.assignments.is_empty());
        assert!((q.eval(1.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn integral_of_sign() {
        let big = indefinite_integral(&sgn()).unwrap();
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            assert!((big.eval(x).unwrap() - (x.abs() - 1.0)).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(specular_derivative(big.function(), 0.0).unwrap(), 0.0);
        assert!(verify_ftc(&sgn(), &big, 200).unwrap().ensure().is_ok());
    }

    #[test]
    fn integral_of_periodic() {
        let p = periodic(5, PointValue::Unknown);
        let big = indefinite_integral(&p).unwrap();
        for i in 1..600 {
            let x = i as f64 / 100.0;
            let j = (x.ceil() - 1.0).max(0.0);
            assert!((big.eval(x).unwrap() - ((x - j).powi(2) + j)).abs() < 1e-9, "x = {x}");
        }
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        for j in 1..=5 {
            assert!((specular_derivative(big.function(), j as f64).unwrap() - golden).abs() < 1e-9);
        }
        let report = verify_ftc(&p, &big, 200).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn constant_one() {
        let one = PiecewiseFunction::smooth(0.0, 1.0, "1").unwrap();
        let big = indefinite_integral(&one).unwrap();
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!((big.eval(x).unwrap() - x).abs() < 1e-12);
        }
        assert_eq!(big.constants(), &[0.0]);
    }

    #[test]
    fn ftc_flags_a_wrong_jump_value() {
        let g = step_g(PointValue::Defined(-1.0));
        let big = indefinite_integral(&g).unwrap();
        let err = verify_ftc(&g, &big, 50).unwrap().ensure().unwrap_err();
        assert!(matches!(err, Error::FTCViolation { point, rhs, .. } if point == 0.0 && rhs == -1.0));
    }

    #[test]
    fn quadrature_matches_antiderivative() {
        let f = PiecewiseFunction::from_exprs(0.0, 2.0, &[1.0], &["cos(x)", "exp(x)"], &[]).unwrap();
        let big = indefinite_integral(&f).unwrap();
        let at = |x: f64| if x <= 1.0 { x.sin() } else { 1f64.sin() + x.exp() - 1f64.exp() };
        for i in 0..=200 {
            let x = i as f64 / 100.0;
            assert!((big.eval(x).unwrap() - at(x)).abs() < 1e-9);
        }
    }
}
