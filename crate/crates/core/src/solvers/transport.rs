//! Transport equation `∂ₜu + b·Dₓu = c χ{x = tb}` with kinked linear initial
//! data `g(x) = a₁σ` for `σ = Σxᵢ ≥ 0` and `a₂σ` otherwise.
//!
//! The scalar `b` is the total speed along `σ`; in `n` dimensions each axis
//! moves at `b/n`, so `u(x, t) = g` evaluated at `σ - tb`.

use crate::calculus::worst;
use crate::error::{Error, Result};
use crate::specular1d::combine_a;
use crate::specularnd::{specular_gradient, NdFunction};

const RESIDUAL_TOL: f64 = 1e-8;

/// Value of `c` for which a solution exists.
///
/// The time term is `A(-a₁b, -a₂b)`; the spatial term is `bⁿ·n·A(a₁, a₂)`.
pub fn transport_admissible_c(a1: f64, a2: f64, b: f64, n: usize) -> Result<f64> {
    if n == 0 || ![a1, a2, b].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("transport parameters must be finite with n ≥ 1".into()));
    }
    if a1 + a2 == 0.0 {
        return Ok(0.0);
    }
    if b == 0.0 {
        return Err(Error::BZero);
    }
    Ok(combine_a(-a1 * b, -a2 * b) + b.powi(n as i32) * n as f64 * combine_a(a1, a2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportProblem {
    pub dim: usize,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSolution {
    pub dim: usize,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub c: f64,
}

impl TransportSolution {
    pub fn initial(&self, x: &[f64]) -> f64 {
        self.profile(x.iter().sum())
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.profile(x.iter().sum::<f64>() - t * self.b)
    }

    fn profile(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.a1 * s
        } else {
            self.a2 * s
        }
    }

    /// `u` as a function of `(x₁, …, xₙ, t)`.
    pub fn as_nd_function(&self) -> Result<NdFunction> {
        let n = self.dim;
        let vars: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let s = format!("({} - ({:?})*x{})", vars.join("+"), self.b, n + 1);
        let even = (self.a1 + self.a2) / 2.0;
        let odd = (self.a1 - self.a2) / 2.0;
        NdFunction::new(n + 1, &format!("({even:?})*{s} + ({odd:?})*abs({s})"), &[])
    }
}

pub fn solve_transport(problem: &TransportProblem) -> Result<TransportSolution> {
    let required = transport_admissible_c(problem.a1, problem.a2, problem.b, problem.dim)?;
    if let Some(given) = problem.c {
        if (given - required).abs() > 1e-9 {
            return Err(Error::InadmissibleC { given, required });
        }
    }
    Ok(TransportSolution {
        dim: problem.dim,
        b: problem.b,
        a1: problem.a1,
        a2: problem.a2,
        c: problem.c.unwrap_or(required),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResidual {
    /// `(x₁, …, xₙ, t)`.
    pub point: Vec<f64>,
    pub residual: f64,
    pub on_line: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransportReport {
    pub checked: usize,
    pub violations: Vec<TransportResidual>,
    /// Largest |residual| over all checked points, infinite on NaN.
    pub max_residual: f64,
}

impl TransportReport {
    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::ResidualViolation {
                point: v.point.clone(),
                residual: v.residual,
            }),
        }
    }
}

/// Residual of `∂ˢₜu + Σ (b/n) ∂ˢ_{xᵢ}u - c χ` at `samples` points on the
/// line `σ = tb` and `samples` points off it, with partials from the n-D
/// machinery.
pub fn verify_transport(sol: &TransportSolution, samples: usize) -> Result<TransportReport> {
    let f = sol.as_nd_function()?;
    let n = sol.dim;
    let speed = sol.b / n as f64;
    let mut report = TransportReport::default();
    for k in 0..samples {
        let t = 0.05 + 2.0 * k as f64 / samples.max(1) as f64;
        // Zero-sum spread so points are not all on the diagonal.
        let spread = |i: usize| if n == 1 { 0.0 } else { 0.3 * ((k + i) % 3) as f64 - 0.3 };
        let mut base: Vec<f64> = (0..n).map(spread).collect();
        let mean = base.iter().sum::<f64>() / n as f64;
        base.iter_mut().for_each(|v| *v -= mean);
        let offset = 4.0 * (((k * 7919) % 1000) as f64 / 1000.0 - 0.5);
        let offset = if offset.abs() < 0.05 { 0.5 } else { offset };
        for (on_line, shift) in [(true, 0.0), (false, offset)] {
            let mut point: Vec<f64> = base.iter().map(|v| v + (t * sol.b + shift) / n as f64).collect();
            point.push(t);
            let grad = specular_gradient(&f, &point)?;
            let lhs = grad[n] + speed * grad[..n].iter().sum::<f64>();
            let residual = lhs - if on_line { sol.c } else { 0.0 };
            report.checked += 1;
            report.max_residual = worst(report.max_residual, residual.abs());
            if !(residual.abs() <= RESIDUAL_TOL) {
                report.violations.push(TransportResidual { point, residual, on_line });
            }
        }
    }
    Ok(report)
}
