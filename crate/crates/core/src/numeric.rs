//! Sequence limits and Richardson extrapolation on plain closures.

use crate::error::Side;

/// Default initial step for sequences and difference quotients.
pub const H0: f64 = 1e-2;
/// Estimates beyond this magnitude count as divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;
const MAX_HALVINGS: usize = 40;

/// Outcome of a failed limit or extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Failure {
    Diverges,
    NoConvergence { last: [f64; 2] },
}

/// One-sided limit of `g` at `x0` along `x0 ± h0·2^-k`, `k ≤ 40`.
///
/// Accepts when two successive samples differ by less than
/// `1e-9·(1+|v|)` and returns the order-1 extrapolation of the last pair.
pub fn sequence_limit(g: impl Fn(f64) -> f64, x0: f64, side: Side, h0: f64) -> Result<f64, Failure> {
    let mut prev: Option<f64> = None;
    for k in 0..=MAX_HALVINGS {
        let x = x0 + side.sign() * h0 * 0.5f64.powi(k as i32);
        let v = g(x);
        if !v.is_finite() || v.abs() > DIVERGENCE_BOUND {
            return Err(Failure::Diverges);
        }
        if let Some(p) = prev {
            if (v - p).abs() < 1e-9 * (1.0 + v.abs()) {
                return Ok(2.0 * v - p);
            }
        }
        prev = Some(v);
    }
    Err(Failure::Diverges)
}

/// Result of Richardson extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    pub error: f64,
}

/// Richardson extrapolation of `q(h)` as `h → 0` for an error expansion in
/// integer powers of `h`, sampling `h = h0·2^-i` for `i < levels`.
///
/// Returns the tableau entry with the smallest error estimate. Stops early
/// once round-off makes the diagonal worse than twice the best estimate.
pub fn richardson(q: impl Fn(f64) -> f64, h0: f64, levels: usize) -> Option<Extrapolated> {
    let levels = levels.max(2);
    let mut prev_row: Vec<f64> = Vec::with_capacity(levels);
    let mut best = Extrapolated {
        value: f64::NAN,
        error: f64::INFINITY,
    };
    for i in 0..levels {
        let h = h0 * 0.5f64.powi(i as i32);
        let v = q(h);
        if !v.is_finite() {
            return None;
        }
        let mut row = Vec::with_capacity(i + 1);
        row.push(v);
        let mut fac = 1.0;
        for j in 1..=i {
            fac *= 2.0;
            let t = row[j - 1] + (row[j - 1] - prev_row[j - 1]) / (fac - 1.0);
            let err = (t - row[j - 1]).abs().max((t - prev_row[j - 1]).abs());
            if err <= best.error {
                best = Extrapolated { value: t, error: err };
            }
            row.push(t);
        }
        if i >= 2 {
            let diag_err = (row[i] - prev_row[i - 1]).abs();
            if diag_err >= 2.0 * best.error && best.error < 1e-10 * (1.0 + best.value.abs()) {
                break;
            }
        }
        prev_row = row;
    }
    best.value.is_finite().then_some(best)
}

/// Central derivative by the five-point stencil.
pub fn central_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// `|a - b| <= tol·(1 + max(|a|,|b|))`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
