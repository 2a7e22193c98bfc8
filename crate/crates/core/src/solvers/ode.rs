//! First-order linear ODE `u^S + p u = f` with a piecewise continuous forcing
//! term whose jump values are unknown.
//!
//! On each segment `u = (∫ μ f̄ + C_j)/μ` with `μ = exp(∫ p)` taken from the
//! left end of the domain; consecutive constants differ by the segment
//! integral, which keeps `u` continuous.

use std::sync::Arc;

use crate::calculus::{segment_table, worst, QUADRATURE_TOL};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::piecewise::{Location, PiecewiseFunction, PointValue, SegmentBody, SegmentFn};
use crate::quadrature::CumulativeTable;
use crate::specular1d::{semi_specular, semi_specular_numeric, specular_derivative};

const CONTINUITY_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-6;
const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LinearOdeProblem {
    p: Arc<Expression>,
    f: PiecewiseFunction,
    ic: Option<(f64, f64)>,
    constant: Option<f64>,
}

impl LinearOdeProblem {
    /// `p` is an expression in `x`, continuous on the domain of `f`.
    pub fn new(p: &str, f: PiecewiseFunction, ic: Option<(f64, f64)>) -> Result<LinearOdeProblem> {
        let p = Expression::parse_in(p, "x")?;
        let dom = f.domain();
        for i in 0..=100 {
            let x = dom.lo + dom.width() * i as f64 / 100.0;
            if !p.eval1(x).is_finite() {
                return Err(Error::InvalidFunction(format!("coefficient `{p}` is not finite at {x}")));
            }
        }
        if let Some((x0, y0)) = ic {
            if !y0.is_finite() {
                return Err(Error::InvalidArgument("initial value must be finite".into()));
            }
            if let Location::Breakpoint(k) = f.locate(x0)? {
                if f.is_jump(k) {
                    return Err(Error::InitialConditionOnSingularPoint { x0 });
                }
            }
        }
        Ok(LinearOdeProblem {
            p: Arc::new(p),
            f,
            ic,
            constant: None,
        })
    }

    /// Sets `C₀` for problems without an initial condition.
    pub fn with_constant(mut self, c: f64) -> LinearOdeProblem {
        self.constant = Some(c);
        self
    }

    pub fn p(&self) -> &Expression {
        &self.p
    }

    pub fn forcing(&self) -> &PiecewiseFunction {
        &self.f
    }

    pub fn initial_condition(&self) -> Option<(f64, f64)> {
        self.ic
    }
}

#[derive(Debug)]
struct Branch {
    /// `∫_lo^x p` over the whole domain.
    exponent: Arc<CumulativeTable>,
    /// `∫_{s_j}^x μ f̄_j` over segment `j`.
    integral: Arc<CumulativeTable>,
    c: f64,
    p: Arc<Expression>,
}

impl SegmentFn for Branch {
    fn value(&self, x: f64) -> f64 {
        (self.integral.at(x) + self.c) / self.exponent.at(x).exp()
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        let forcing = self.integral.integrand(x) / self.exponent.at(x).exp();
        Some(forcing - self.p.eval1(x) * self.value(x))
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub u: PiecewiseFunction,
    /// `C_j` per segment.
    pub constants: Vec<f64>,
    /// `(s, f(s))` for every jump `s` of the forcing term, where
    /// `f(s) = u^S(s) + p(s) u(s)`.
    pub recovered: Vec<(f64, f64)>,
}

/// Quadrature tables for one problem, reusable across constants.
#[derive(Debug, Clone)]
pub struct LinearOdeSolver {
    problem: LinearOdeProblem,
    exponent: Arc<CumulativeTable>,
    integrals: Vec<Arc<CumulativeTable>>,
}

impl LinearOdeSolver {
    pub fn prepare(problem: &LinearOdeProblem) -> Result<LinearOdeSolver> {
        let f = &problem.f;
        let dom = f.domain();
        let p = problem.p.clone();
        let exponent = Arc::new(
            CumulativeTable::new(Arc::new(move |x| p.eval1(x)), dom.lo, dom.hi, QUADRATURE_TOL).map_err(
                |achieved| Error::QuadratureFailure {
                    segment: 0,
                    achieved_tolerance: achieved,
                },
            )?,
        );
        let mu = {
            let e = exponent.clone();
            Arc::new(move |x: f64| e.at(x).exp()) as Arc<dyn Fn(f64) -> f64 + Send + Sync>
        };
        let integrals = (0..f.segments().len())
            .map(|j| segment_table(f.extended_segment(j)?, Some(mu.clone()), j).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearOdeSolver {
            problem: problem.clone(),
            exponent,
            integrals,
        })
    }

    pub fn problem(&self) -> &LinearOdeProblem {
        &self.problem
    }

    fn mu(&self, x: f64) -> f64 {
        self.exponent.at(x).exp()
    }

    /// Constants from `C_j` on segment `j`, propagated both ways.
    fn propagate(&self, j: usize, c: f64) -> Vec<f64> {
        let mut cs = vec![0.0; self.integrals.len()];
        cs[j] = c;
        for k in j + 1..cs.len() {
            cs[k] = cs[k - 1] + self.integrals[k - 1].total();
        }
        for k in (0..j).rev() {
            cs[k] = cs[k + 1] - self.integrals[k].total();
        }
        cs
    }

    /// Constants of the solution with `u(x) = y`. A point on a breakpoint
    /// pins the continuous value there.
    pub fn constants_through(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        let j = match self.problem.f.locate(x)? {
            Location::Interior(k) | Location::Breakpoint(k) => k,
            Location::DomainLo => 0,
            Location::DomainHi => self.integrals.len() - 1,
        };
        Ok(self.propagate(j, y * self.mu(x) - self.integrals[j].at(x)))
    }

    pub fn default_constants(&self) -> Result<Vec<f64>> {
        match self.problem.ic {
            Some((x0, y0)) => self.constants_through(x0, y0),
            None => Ok(self.propagate(0, self.problem.constant.unwrap_or(0.0))),
        }
    }

    pub fn solve(&self) -> Result<OdeSolution> {
        self.solution_with_constants(self.default_constants()?)
    }

    /// Member of the solution family with `u(x) = y`.
    pub fn solution_through(&self, x: f64, y: f64) -> Result<OdeSolution> {
        self.solution_with_constants(self.constants_through(x, y)?)
    }

    /// Assembles `u` from arbitrary constants; continuity holds only when
    /// they obey the recurrence.
    pub fn solution_with_constants(&self, constants: Vec<f64>) -> Result<OdeSolution> {
        if constants.len() != self.integrals.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} constants, got {}",
                self.integrals.len(),
                constants.len()
            )));
        }
        let f = &self.problem.f;
        let branches: Vec<Arc<Branch>> = constants
            .iter()
            .zip(&self.integrals)
            .map(|(&c, integral)| {
                Arc::new(Branch {
                    exponent: self.exponent.clone(),
                    integral: integral.clone(),
                    c,
                    p: self.problem.p.clone(),
                })
            })
            .collect();
        let point_values = f
            .breakpoints()
            .iter()
            .enumerate()
            .map(|(k, &s)| PointValue::Defined((branches[k].value(s) + branches[k + 1].value(s)) / 2.0))
            .collect();
        let bodies = branches
            .into_iter()
            .map(|b| SegmentBody::Custom(b as Arc<dyn SegmentFn>))
            .collect();
        let dom = f.domain();
        let u = PiecewiseFunction::new(dom.lo, dom.hi, f.breakpoints().to_vec(), bodies, point_values)?;
        let recovered = f
            .singular_points()
            .into_iter()
            .map(|s| {
                let us = semi_specular(&u, s)?.combined();
                Ok((s, us + self.problem.p.eval1(s) * u.eval(s)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OdeSolution { u, constants, recovered })
    }

    /// Values `C = u(s)` in `[c_lo, c_hi]` for which the recovered jump value
    /// at `s` equals `target`.
    pub fn count_solutions_for_target(&self, s: f64, target: f64, c_lo: f64, c_hi: f64, grid_n: usize) -> Result<Vec<f64>> {
        let f = &self.problem.f;
        match f.locate(s) {
            Ok(Location::Breakpoint(k)) if f.is_jump(k) => {}
            _ => return Err(Error::NotASingularPoint { s }),
        }
        if !(c_lo < c_hi) || grid_n == 0 {
            return Err(Error::InvalidArgument("empty constant range".into()));
        }
        let phi = |c: f64| -> Result<f64> {
            let sol = self.solution_through(s, c)?;
            let (_, v) = sol.recovered.iter().find(|(x, _)| *x == s).expect("s is singular");
            Ok(v - target)
        };
        let grid: Vec<f64> = (0..=grid_n)
            .map(|i| c_lo + (c_hi - c_lo) * i as f64 / grid_n as f64)
            .collect();
        let values = grid.iter().map(|&c| phi(c)).collect::<Result<Vec<_>>>()?;
        let mut roots: Vec<f64> = Vec::new();
        for i in 0..grid_n {
            let (mut a, mut b) = (grid[i], grid[i + 1]);
            let (mut fa, fb) = (values[i], values[i + 1]);
            let root = if fa == 0.0 {
                a
            } else if fb == 0.0 || fa * fb > 0.0 || !(fa * fb).is_finite() {
                continue;
            } else {
                while b - a > BISECTION_TOL {
                    let m = 0.5 * (a + b);
                    let fm = phi(m)?;
                    if fm == 0.0 {
                        a = m;
                        b = m;
                    } else if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                0.5 * (a + b)
            };
            if !roots.iter().any(|r| (r - root).abs() < 1e-9) {
                roots.push(root);
            }
        }
        if values[grid_n] == 0.0 && !roots.iter().any(|r| (r - c_hi).abs() < 1e-9) {
            roots.push(c_hi);
        }
        Ok(roots)
    }
}

/// Solves with the problem's initial condition, or `C₀` (default 0).
pub fn solve_linear_ode(problem: &LinearOdeProblem) -> Result<OdeSolution> {
    LinearOdeSolver::prepare(problem)?.solve()
}

/// `u^S(s)` for `u` continuous at `s`.
pub fn recover_singular_value(u: &PiecewiseFunction, s: f64) -> Result<f64> {
    specular_derivative(u, s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub point: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub checked: usize,
    pub violations: Vec<Residual>,
    /// Largest |residual| over all checked points, infinite on NaN.
    pub max_residual: f64,
}

impl ResidualReport {
    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::ResidualViolation {
                point: vec![v.point],
                residual: v.residual,
            }),
        }
    }
}

/// Checks continuity of `u` and `u^S + p u - f = 0` at `grid_n` points per
/// segment and at each jump, with derivatives from difference quotients.
pub fn verify_ode_solution(problem: &LinearOdeProblem, sol: &OdeSolution, grid_n: usize) -> Result<ResidualReport> {
    let (u, f) = (&sol.u, &problem.f);
    let mut report = ResidualReport::default();
    for &b in u.breakpoints() {
        report.checked += 1;
        let jump = u.right_limit(b)? - u.left_limit(b)?;
        report.max_residual = worst(report.max_residual, jump.abs());
        if jump.abs() > CONTINUITY_TOL {
            report.violations.push(Residual { point: b, residual: jump });
        }
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    for seg in f.segments() {
        let iv = seg.interval();
        for i in 0..grid_n {
            let x = iv.lo + iv.width() * (i as f64 + 0.5) / grid_n as f64;
            points.push((x, f.eval(x).unwrap_or(f64::NAN)));
        }
    }
    points.extend(sol.recovered.iter().copied());
    for (x, rhs) in points {
        report.checked += 1;
        let residual = match (semi_specular_numeric(u, x), u.eval(x)) {
            (Ok(pair), Ok(ux)) => pair.combined() + problem.p.eval1(x) * ux - rhs,
            _ => f64::NAN,
        };
        report.max_residual = worst(report.max_residual, residual.abs());
        if !(residual.abs() <= RESIDUAL_TOL) {
            report.violations.push(Residual { point: x, residual });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specular1d::combine_a;

    fn relu_forcing() -> PiecewiseFunction {
        PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &["0", "3*x+1"], &[(0.0, PointValue::Unknown)]).unwrap()
    }

    fn relu_problem() -> LinearOdeProblem {
        LinearOdeProblem::new("3", relu_forcing(), None).unwrap()
    }

    fn closed_form(c: f64) -> f64 {
        if (6.0 * c - 1.0).abs() < 1e-15 {
            return 0.5;
        }
        let q = 9.0 * c * c;
        (q + 1.0 - ((q + 1.0) * (q - 6.0 * c + 2.0)).sqrt()) / (6.0 * c - 1.0)
    }

    #[test]
    fn relu_family() {
        let solver = LinearOdeSolver::prepare(&relu_problem()).unwrap();
        for c in [-1.0, -2.0 / 3.0, 0.0, 1.0 / 6.0, 1.0] {
            let sol = solver.solution_through(0.0, c).unwrap();
            for x in [-0.9f64, -0.3, 0.2, 0.8] {
                let exact = if x < 0.0 { 0.0 } else { x } + c * (-3.0 * x).exp();
                assert!((sol.u.eval(x).unwrap() - exact).abs() < 1e-10, "C = {c}, x = {x}");
            }
            let (s, v) = sol.recovered[0];
            assert_eq!(s, 0.0);
            assert!((v - closed_form(c)).abs() < 1e-9, "C = {c}: {v} vs {}", closed_form(c));
            let report = verify_ode_solution(&relu_problem(), &sol, 100).unwrap();
            assert!(report.violations.is_empty(), "C = {c}: {:?}", report.violations);
        }
    }

    #[test]
    fn default_constant_gives_relu() {
        let sol = solve_linear_ode(&relu_problem()).unwrap();
        assert!((sol.constants[0]).abs() < 1e-15);
        for x in [-0.5, 0.0, 0.5] {
            assert!((sol.u.eval(x).unwrap() - x.max(0.0)).abs() < 1e-10);
        }
        assert!((sol.recovered[0].1 - (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn two_roots_and_none() {
        let solver = LinearOdeSolver::prepare(&relu_problem()).unwrap();
        let roots = solver.count_solutions_for_target(0.0, 2f64.sqrt() - 1.0, -2.0, 2.0, 400).unwrap();
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!(roots.iter().any(|r| r.abs() < 1e-10));
        assert!(roots.iter().any(|r| (r + 2.0 / 3.0).abs() < 1e-10));
        assert!(solver.count_solutions_for_target(0.0, 0.0, -2.0, 2.0, 400).unwrap().is_empty());
        assert_eq!(
            solver.count_solutions_for_target(0.5, 0.0, -2.0, 2.0, 10),
            Err(Error::NotASingularPoint { s: 0.5 })
        );
    }

    #[test]
    fn trivial_problem_with_ic() {
        let one = PiecewiseFunction::smooth(0.0, 1.0, "1").unwrap();
        let prob = LinearOdeProblem::new("0", one, Some((0.0, 0.0))).unwrap();
        let sol = solve_linear_ode(&prob).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((sol.u.eval(x).unwrap() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn ic_on_a_jump_is_rejected() {
        let err = LinearOdeProblem::new("3", relu_forcing(), Some((0.0, 1.0))).unwrap_err();
        assert_eq!(err, Error::InitialConditionOnSingularPoint { x0: 0.0 });
    }

    #[test]
    fn ic_propagates_both_ways() {
        let f = PiecewiseFunction::from_exprs(0.0, 3.0, &[1.0, 2.0], &["1", "-1", "2"], &[]).unwrap();
        let prob = LinearOdeProblem::new("x", f, Some((1.5, 0.25))).unwrap();
        let solver = LinearOdeSolver::prepare(&prob).unwrap();
        let a = solver.solve().unwrap();
        let b = solver.solve().unwrap();
        assert_eq!(a.constants, b.constants);
        assert!((a.u.eval(1.5).unwrap() - 0.25).abs() < 1e-12);
        for j in 1..3 {
            assert!((a.constants[j] - a.constants[j - 1] - solver.integrals[j - 1].total()).abs() < 1e-12);
        }
        let report = verify_ode_solution(&prob, &a, 50).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn perturbed_constant_breaks_continuity() {
        let f = PiecewiseFunction::from_exprs(0.0, 2.0, &[1.0], &["1", "x"], &[(1.0, PointValue::Unknown)]).unwrap();
        let prob = LinearOdeProblem::new("1", f, None).unwrap();
        let solver = LinearOdeSolver::prepare(&prob).unwrap();
        let mut cs = solver.default_constants().unwrap();
        cs[1] += 0.1;
        let sol = solver.solution_with_constants(cs).unwrap();
        let report = verify_ode_solution(&prob, &sol, 20).unwrap();
        assert!(report.violations.iter().any(|v| v.point == 1.0));
        assert!(matches!(report.ensure(), Err(Error::ResidualViolation { .. })));
    }

    #[test]
    fn smooth_problem_matches_integrating_factor() {
        // u' + 2u = x, u(0) = 1  =>  u = x/2 - 1/4 + (5/4) e^{-2x}
        let f = PiecewiseFunction::smooth(0.0, 2.0, "x").unwrap();
        let prob = LinearOdeProblem::new("2", f, Some((0.0, 1.0))).unwrap();
        let sol = solve_linear_ode(&prob).unwrap();
        for i in 0..=40 {
            let x = i as f64 / 20.0;
            let exact = x / 2.0 - 0.25 + 1.25 * (-2.0 * x).exp();
            assert!((sol.u.eval(x).unwrap() - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn recover_kinks() {
        let abs = PiecewiseFunction::smooth(-1.0, 1.0, "abs(x)").unwrap();
        assert_eq!(recover_singular_value(&abs, 0.0).unwrap(), 0.0);
        let u = relu_forcing();
        assert!(recover_singular_value(&u, 0.0).is_err());
        let relu = PiecewiseFunction::smooth(-1.0, 1.0, "(x+abs(x))/2").unwrap();
        assert!((recover_singular_value(&relu, 0.0).unwrap() - combine_a(1.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn integrating_factor_is_not_a_product_rule() {
        let weighted = PiecewiseFunction::from_exprs(0.0, 2.0, &[1.0], &["0", "exp(x)*(x-1)"], &[(1.0, PointValue::Defined(0.0))]).unwrap();
        let plain = PiecewiseFunction::from_exprs(0.0, 2.0, &[1.0], &["0", "x-1"], &[(1.0, PointValue::Defined(0.0))]).unwrap();
        let e = 1f64.exp();
        let lhs = specular_derivative(&weighted, 1.0).unwrap();
        let rhs = e * specular_derivative(&plain, 1.0).unwrap();
        assert!((lhs - ((e * e + 1.0).sqrt() - 1.0) / e).abs() < 1e-9);
        assert!((rhs - e * (2f64.sqrt() - 1.0)).abs() < 1e-9);
        assert!((lhs - rhs).abs() > 0.1);
    }
}
