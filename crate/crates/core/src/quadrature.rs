//! Adaptive Simpson quadrature and cumulative integral tables.

use std::fmt;
use std::sync::Arc;

const MAX_DEPTH: u32 = 48;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// On failure returns the error estimate that was achieved.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, f64> {
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut state = State { achieved: 0.0, ok: true };
    let v = step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut state);
    if state.ok && v.is_finite() {
        Ok(v)
    } else {
        Err(if state.achieved.is_finite() { state.achieved } else { f64::INFINITY })
    }
}

struct State {
    achieved: f64,
    ok: bool,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    st: &mut State,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        st.ok = false;
        st.achieved = f64::INFINITY;
        return f64::NAN;
    }
    if delta.abs() <= 15.0 * tol || depth == 0 || m <= a || m >= b {
        if delta.abs() > 15.0 * tol {
            st.ok = false;
        }
        st.achieved += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, st)
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, st)
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * GL5_X
        .iter()
        .zip(GL5_W)
        .map(|(x, w)| w * f(c + r * x))
        .sum::<f64>()
}

pub type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Running integral `x ↦ ∫_lo^x g` on `[lo, hi]`.
///
/// Node values come from adaptive Simpson; the remainder from the nearest
/// node below `x` uses a fixed Gauss-Legendre rule, so evaluation is cheap and
/// smooth in `x`.
#[derive(Clone)]
pub struct CumulativeTable {
    lo: f64,
    hi: f64,
    step: f64,
    cum: Vec<f64>,
    integrand: Integrand,
}

impl fmt::Debug for CumulativeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CumulativeTable")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("total", &self.total())
            .finish()
    }
}

impl CumulativeTable {
    pub const NODES: usize = 64;

    /// Builds the table; the total is accurate to `tol` absolute.
    pub fn new(integrand: Integrand, lo: f64, hi: f64, tol: f64) -> Result<Self, f64> {
        let n = Self::NODES;
        let step = (hi - lo) / n as f64;
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        let mut achieved = 0.0;
        for k in 0..n {
            let a = lo + step * k as f64;
            let b = if k + 1 == n { hi } else { lo + step * (k + 1) as f64 };
            match adaptive_simpson(&*integrand, a, b, tol / n as f64) {
                Ok(v) => acc += v,
                Err(e) => achieved += e,
            }
            cum.push(acc);
        }
        if achieved > 0.0 {
            return Err(achieved);
        }
        Ok(CumulativeTable {
            lo,
            hi,
            step,
            cum,
            integrand,
        })
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().expect("table has nodes")
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn integrand(&self, x: f64) -> f64 {
        (self.integrand)(x)
    }

    /// `∫_lo^x g` for `x` in `[lo, hi]`.
    pub fn at(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.total();
        }
        let k = (((x - self.lo) / self.step).floor() as usize).min(Self::NODES - 1);
        let node = self.lo + self.step * k as f64;
        if x == node {
            return self.cum[k];
        }
        self.cum[k] + gauss_legendre5(&*self.integrand, node, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubic() {
        let v = adaptive_simpson(&|x| x * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_handles_kink() {
        let v = adaptive_simpson(&|x: f64| x.abs(), -1.0, 0.5, 1e-10).unwrap();
        assert!((v - 0.625).abs() < 1e-10);
    }

    #[test]
    fn simpson_reports_nonfinite() {
        assert!(adaptive_simpson(&|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn table_matches_closed_form() {
        let t = CumulativeTable::new(Arc::new(|x: f64| x.exp()), 0.0, 2.0, 1e-10).unwrap();
        for i in 0..=100 {
            let x = 0.02 * i as f64;
            assert!((t.at(x) - (x.exp() - 1.0)).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn gl5_exact_through_degree_nine() {
        let v = gauss_legendre5(&|x: f64| x.powi(9) + x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
    }
}
