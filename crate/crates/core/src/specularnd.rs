//! Specular calculus in several variables: axis limits, semi-specular
//! partials, sphere point sets, tangent hyperplanes, gradients and
//! directional derivatives.
//!
//! Axes are 0-based here; expressions name them `x1..xn` (or `x, y, z` for
//! `n ≤ 3`).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Side};
use crate::expr::Expression;
use crate::numeric::{self, richardson};
use crate::piecewise::{jump_tolerance, limit_of, OneSided};
use crate::specular1d::{quotient_limit, SemiPair};

/// Largest dimension for which hyperplane subsets are enumerated.
pub const MAX_ENUM_DIM: usize = 8;
const PLANE_TOL: f64 = 1e-9;
const SEMI_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Exclusion {
    lhs: Expression,
    rhs: Expression,
}

/// Scalar function on ℝⁿ given by an expression, undefined on an optional
/// set of loci `lhs == rhs`.
#[derive(Debug, Clone)]
pub struct NdFunction {
    dim: usize,
    expr: Expression,
    exclusions: Vec<Exclusion>,
}

fn resolver(dim: usize) -> impl Fn(&str) -> Option<usize> {
    move |name: &str| {
        if let Some(i) = name.strip_prefix('x').and_then(|r| r.parse::<usize>().ok()) {
            return (1..=dim).contains(&i).then(|| i - 1);
        }
        let alias = ["x", "y", "z"].iter().position(|&v| v == name)?;
        (dim <= 3 && alias < dim).then_some(alias)
    }
}

impl NdFunction {
    pub fn new(dim: usize, expr: &str, exclude: &[&str]) -> Result<NdFunction> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let bind = |text: &str| Expression::parse(text)?.bind_with(dim, resolver(dim));
        let exclusions = exclude
            .iter()
            .map(|locus| {
                let (l, r) = locus.split_once("==").ok_or_else(|| {
                    Error::InvalidArgument(format!("exclusion `{locus}` must have the form lhs==rhs"))
                })?;
                Ok(Exclusion {
                    lhs: bind(l)?,
                    rhs: bind(r)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NdFunction {
            dim,
            expr: bind(expr)?,
            exclusions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn is_excluded(&self, x: &[f64]) -> bool {
        self.exclusions.iter().any(|e| {
            let (l, r) = (e.lhs.eval(x), e.rhs.eval(x));
            (l - r).abs() <= 1e-12 * (1.0 + l.abs().max(r.abs()))
        })
    }

    /// Value at `x`; NaN on the exclusion set or where the expression is
    /// undefined.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if self.is_excluded(x) {
            f64::NAN
        } else {
            self.expr.eval(x)
        }
    }

    fn check_point(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.dim || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point must have {} finite coordinates",
                self.dim
            )));
        }
        Ok(())
    }

    fn check_axis(&self, i: usize) -> Result<()> {
        if i >= self.dim {
            return Err(Error::InvalidArgument(format!("axis index {i} out of range for dimension {}", self.dim)));
        }
        Ok(())
    }

    /// `t ↦ f(a + t·e_i)` in absolute coordinate `t`.
    fn section(&self, a: &[f64], i: usize) -> impl Fn(f64) -> f64 + '_ {
        let p = a.to_vec();
        move |t: f64| {
            let mut q = p.clone();
            q[i] = t;
            self.eval(&q)
        }
    }
}

/// One-sided limits of `f` along axis `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLimits {
    pub axis: usize,
    pub right: f64,
    pub left: f64,
    pub mid: f64,
    /// Both limits came from direct evaluation.
    pub exact: bool,
}

fn axis_one_sided(f: &NdFunction, a: &[f64], i: usize) -> Result<(OneSided, OneSided)> {
    f.check_point(a)?;
    f.check_axis(i)?;
    let g = f.section(a, i);
    let side = |side| limit_of(&g, a[i], side, f64::INFINITY).ok_or(Error::AxisLimitDiverges { axis: i, side });
    Ok((side(Side::Right)?, side(Side::Left)?))
}

pub fn axis_limits(f: &NdFunction, a: &[f64], i: usize) -> Result<AxisLimits> {
    let (r, l) = axis_one_sided(f, a, i)?;
    Ok(AxisLimits {
        axis: i,
        right: r.value,
        left: l.value,
        mid: (r.value + l.value) / 2.0,
        exact: r.exact && l.exact,
    })
}

/// Semi-specular partial derivatives along axis `i`.
pub fn semi_specular_partial(f: &NdFunction, a: &[f64], i: usize) -> Result<SemiPair> {
    let lim = axis_limits(f, a, i)?;
    let g = f.section(a, i);
    let side = |side: Side, limit: f64| {
        [1e-2, 1e-3, 1e-4]
            .into_iter()
            .find_map(|h0| quotient_limit(&g, a[i], side, limit, h0, SEMI_TOL))
            .ok_or(Error::SemiDerivativeDiverges { side })
    };
    Ok(SemiPair {
        right: side(Side::Right, lim.right)?,
        left: side(Side::Left, lim.left)?,
    })
}

/// Per-axis data gathered once and shared by the set-valued operations.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AxisData {
    limits: AxisLimits,
    pair: SemiPair,
}

fn axis_data(f: &NdFunction, a: &[f64], i: usize) -> Result<AxisData> {
    let not_diff = Error::NotSpecularlyPartialDifferentiable { axis: i };
    let (r, l) = axis_one_sided(f, a, i).map_err(|_| not_diff.clone())?;
    if (r.value - l.value).abs() > jump_tolerance(r, l) {
        return Err(not_diff);
    }
    let pair = semi_specular_partial(f, a, i).map_err(|_| not_diff)?;
    Ok(AxisData {
        limits: AxisLimits {
            axis: i,
            right: r.value,
            left: l.value,
            mid: (r.value + l.value) / 2.0,
            exact: r.exact && l.exact,
        },
        pair,
    })
}

/// Specular partial derivative along axis `i`.
pub fn specular_partial(f: &NdFunction, a: &[f64], i: usize) -> Result<f64> {
    f.check_point(a)?;
    f.check_axis(i)?;
    axis_data(f, a, i).map(|d| d.pair.combined())
}

fn all_axis_data(f: &NdFunction, a: &[f64]) -> Result<Vec<Option<AxisData>>> {
    f.check_point(a)?;
    Ok((0..f.dim).map(|i| axis_data(f, a, i).ok()).collect())
}

/// Axes along which `f` is specularly partial differentiable at `a`.
pub fn compute_v(f: &NdFunction, a: &[f64]) -> Result<Vec<usize>> {
    Ok(all_axis_data(f, a)?
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|_| i))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    /// Coordinates in ℝⁿ⁺¹.
    pub coords: Vec<f64>,
    pub axis: usize,
    pub side: Side,
}

/// Intersections of the axis phototangents with unit spheres around the
/// lifted points `(a, f[a]_(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePointSet {
    pub points: Vec<SpherePoint>,
    /// Sphere centers, one per axis in V, in axis order.
    pub centers: Vec<(usize, Vec<f64>)>,
    pub radius: f64,
}

impl SpherePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn sphere_points(a: &[f64], data: &[Option<AxisData>]) -> SpherePointSet {
    let n = a.len();
    let mut points = Vec::new();
    let mut centers = Vec::new();
    for (i, d) in data.iter().enumerate() {
        let Some(d) = d else { continue };
        let mut center = a.to_vec();
        center.push(d.limits.mid);
        for (side, slope) in [(Side::Right, d.pair.right), (Side::Left, d.pair.left)] {
            let s = side.sign() / slope.hypot(1.0);
            let mut p = center.clone();
            p[i] += s;
            p[n] += s * slope;
            points.push(SpherePoint { coords: p, axis: i, side });
        }
        centers.push((i, center));
    }
    SpherePointSet {
        points,
        centers,
        radius: 1.0,
    }
}

pub fn compute_p(f: &NdFunction, a: &[f64]) -> Result<SpherePointSet> {
    Ok(sphere_points(a, &all_axis_data(f, a)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Differentiability {
    None,
    Weak { w: usize, mid: f64 },
    Strong { mid: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: Differentiability,
    /// Axes of V grouped by equal mid values.
    pub classes: Vec<Vec<usize>>,
    /// False when the literal reading (|P| ≥ n+1 and one mid value over all of
    /// V) gives a different weak verdict than the majority-class reading.
    pub readings_agree: bool,
}

fn classify_data(n: usize, data: &[Option<AxisData>]) -> Classification {
    let mut classes: Vec<(AxisLimits, Vec<usize>)> = Vec::new();
    for (i, d) in data.iter().enumerate() {
        let Some(d) = d else { continue };
        let same = |rep: &AxisLimits| {
            let tol = if rep.exact && d.limits.exact {
                1e-12
            } else {
                1e-8 * (1.0 + rep.mid.abs().max(d.limits.mid.abs()))
            };
            (rep.mid - d.limits.mid).abs() <= tol
        };
        match classes.iter_mut().find(|(rep, _)| same(rep)) {
            Some((_, members)) => members.push(i),
            None => classes.push((d.limits, vec![i])),
        }
    }
    let v_len: usize = classes.iter().map(|(_, m)| m.len()).sum();
    let majority = classes.iter().find(|(_, m)| 2 * m.len() > n);
    let literal = 2 * v_len > n && classes.len() == 1;
    let kind = match majority {
        Some((rep, _)) if v_len == n && classes.len() == 1 => Differentiability::Strong { mid: rep.mid },
        Some((rep, m)) => Differentiability::Weak { w: m[0], mid: rep.mid },
        None => Differentiability::None,
    };
    Classification {
        kind,
        readings_agree: literal == majority.is_some(),
        classes: classes.into_iter().map(|(_, m)| m).collect(),
    }
}

pub fn classify_differentiability(f: &NdFunction, a: &[f64]) -> Result<Classification> {
    Ok(classify_data(f.dim, &all_axis_data(f, a)?))
}

/// Graph hyperplane `x_{n+1} = Σ cᵢ(xᵢ - aᵢ) + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub anchor: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(x.iter().zip(&self.anchor))
            .map(|(c, (x, a))| c * (x - a))
            .sum::<f64>()
            + self.offset
    }

    /// Normal `(-c, 1)` scaled by its largest magnitude, leading nonzero
    /// entry positive.
    pub fn normalized_normal(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.coeffs.iter().map(|c| -c).collect();
        v.push(1.0);
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lead = v.iter().copied().find(|x| x.abs() > 1e-12 * scale).unwrap_or(1.0);
        let k = lead.signum() / scale;
        v.iter().map(|x| x * k).collect()
    }

    /// Same plane within `tol` on normalized normals and height at the anchor.
    pub fn approx_eq(&self, other: &Hyperplane, tol: f64) -> bool {
        let (a, b) = (self.normalized_normal(), other.normalized_normal());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
            && (self.eval(&other.anchor) - other.offset).abs() <= tol * (1.0 + other.offset.abs())
    }
}

/// Weak tangent hyperplanes and the number of rejected vertical or
/// degenerate subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPlanes {
    pub planes: Vec<Hyperplane>,
    pub rejected: usize,
    pub classification: Classification,
}

/// Iterator over `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut idx: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let cur = idx.clone()?;
        let mut next = cur.clone();
        let mut i = k;
        loop {
            if i == 0 {
                idx = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                idx = Some(next);
                break;
            }
        }
        Some(cur)
    })
}

/// Fits `z = Σ c_j (x_j - a_j) + d` over the axes in `axes` through the given
/// points. Returns `None` for a vertical or degenerate subset.
fn fit_plane(points: &[&SpherePoint], a: &[f64], axes: &[usize]) -> Option<Vec<f64>> {
    let n = a.len();
    let m = axes.len();
    let design = DMatrix::from_fn(points.len(), m + 1, |r, c| {
        if c < m {
            points[r].coords[axes[c]] - a[axes[c]]
        } else {
            1.0
        }
    });
    let z = DVector::from_fn(points.len(), |r, _| points[r].coords[n]);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax.max(1.0)) {
        return None;
    }
    let sol = svd.solve(&z, 1e-14).ok()?;
    let mut coeffs = vec![0.0; n];
    for (c, &ax) in axes.iter().enumerate() {
        coeffs[ax] = sol[c];
    }
    Some(coeffs)
}

/// All weak specular tangent hyperplanes at `a`.
///
/// Every `(n+1)`-subset of the sphere points belonging to the majority class
/// determines a candidate by a fit over that class's axes (exact when the
/// class covers every axis, least squares otherwise); candidates are
/// translated to pass through `(a, f[a]_(w))` and deduplicated.
pub fn weak_tangent_hyperplanes(f: &NdFunction, a: &[f64]) -> Result<TangentPlanes> {
    let n = f.dim;
    if n > MAX_ENUM_DIM {
        return Err(Error::DimensionTooLarge { n, limit: MAX_ENUM_DIM });
    }
    let data = all_axis_data(f, a)?;
    let classification = classify_data(n, &data);
    let (axes, mid): (Vec<usize>, f64) = match classification.kind {
        Differentiability::None => return Err(Error::NotWeaklyDifferentiable),
        Differentiability::Strong { mid } => ((0..n).collect(), mid),
        Differentiability::Weak { w, mid } => (
            classification
                .classes
                .iter()
                .find(|c| c.contains(&w))
                .expect("w belongs to a class")
                .clone(),
            mid,
        ),
    };
    let set = sphere_points(a, &data);
    let pts: Vec<&SpherePoint> = set.points.iter().filter(|p| axes.contains(&p.axis)).collect();
    let mut planes: Vec<Hyperplane> = Vec::new();
    let mut rejected = 0;
    for subset in combinations(pts.len(), n + 1) {
        let chosen: Vec<&SpherePoint> = subset.iter().map(|&k| pts[k]).collect();
        match fit_plane(&chosen, a, &axes) {
            Some(coeffs) => {
                let plane = Hyperplane {
                    anchor: a.to_vec(),
                    coeffs,
                    offset: mid,
                };
                if !planes.iter().any(|p| p.approx_eq(&plane, PLANE_TOL)) {
                    planes.push(plane);
                }
            }
            None => rejected += 1,
        }
    }
    if planes.is_empty() {
        return Err(Error::DegenerateP);
    }
    Ok(TangentPlanes {
        planes,
        rejected,
        classification,
    })
}

/// The unique weak tangent hyperplane.
pub fn strong_tangent_hyperplane(f: &NdFunction, a: &[f64]) -> Result<Hyperplane> {
    let mut t = weak_tangent_hyperplanes(f, a)?;
    if t.planes.len() != 1 {
        return Err(Error::NoUniqueWeakPlane { count: t.planes.len() });
    }
    Ok(t.planes.remove(0))
}

fn per_axis<T>(f: &NdFunction, a: &[f64], op: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    f.check_point(a)?;
    let mut out = Vec::with_capacity(f.dim);
    let mut errors = Vec::new();
    for i in 0..f.dim {
        match op(i) {
            Ok(v) => out.push(v),
            Err(e) => errors.push((i, e)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::AxisErrors(errors))
    }
}

/// Semi-specular partial pairs on every axis.
pub fn semi_gradients(f: &NdFunction, a: &[f64]) -> Result<Vec<SemiPair>> {
    per_axis(f, a, |i| semi_specular_partial(f, a, i))
}

pub fn right_gradient(f: &NdFunction, a: &[f64]) -> Result<Vec<f64>> {
    Ok(semi_gradients(f, a)?.iter().map(|p| p.right).collect())
}

pub fn left_gradient(f: &NdFunction, a: &[f64]) -> Result<Vec<f64>> {
    Ok(semi_gradients(f, a)?.iter().map(|p| p.left).collect())
}

pub fn specular_gradient(f: &NdFunction, a: &[f64]) -> Result<Vec<f64>> {
    per_axis(f, a, |i| specular_partial(f, a, i))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

fn check_unit(f: &NdFunction, u: &[f64]) -> Result<()> {
    if u.len() != f.dim || (norm(u) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector in {} dimensions",
            f.dim
        )));
    }
    Ok(())
}

/// `(Dᴿf(a)·u, Dᴸf(a)·u)`.
pub fn directional_semi(f: &NdFunction, a: &[f64], u: &[f64]) -> Result<SemiPair> {
    check_unit(f, u)?;
    let pairs = semi_gradients(f, a)?;
    let right: Vec<f64> = pairs.iter().map(|p| p.right).collect();
    let left: Vec<f64> = pairs.iter().map(|p| p.left).collect();
    Ok(SemiPair::new(dot(&right, u), dot(&left, u)))
}

/// Specularly directional derivative through the gradient dot products.
pub fn specular_directional(f: &NdFunction, a: &[f64], u: &[f64]) -> Result<f64> {
    directional_semi(f, a, u).map(|p| p.combined())
}

/// Specularly directional derivative from its limit definition, using the
/// symmetric quotient of `g(h) = f(a + hu) - f[a]` with `f[a]` the mean of
/// the limits along `±u`.
pub fn specular_directional_by_limit(f: &NdFunction, a: &[f64], u: &[f64]) -> Result<f64> {
    f.check_point(a)?;
    check_unit(f, u)?;
    let line = |t: f64| {
        let p: Vec<f64> = a.iter().zip(u).map(|(a, u)| a + t * u).collect();
        f.eval(&p)
    };
    let lim = |side| limit_of(line, 0.0, side, f64::INFINITY).ok_or(Error::LimitDiverges { x0: 0.0, side });
    let mid = (lim(Side::Right)?.value + lim(Side::Left)?.value) / 2.0;
    let sigma = |h: f64| {
        let gp = line(h) - mid;
        let gm = line(-h) - mid;
        let (np, nm) = (gp.hypot(h), gm.hypot(h));
        (gp * nm - gm * np) / (h * nm + h * np)
    };
    let r = richardson(sigma, numeric::H0, 21).ok_or(Error::NoConvergence {
        last: [sigma(1e-7), sigma(5e-8)],
    })?;
    Ok(r.value)
}

/// Bound on the specularly directional derivative over unit directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalExtrema {
    pub bound: f64,
    pub argmax: Option<Vec<f64>>,
    pub argmin: Option<Vec<f64>>,
}

pub fn directional_extrema(f: &NdFunction, a: &[f64]) -> Result<DirectionalExtrema> {
    let pairs = semi_gradients(f, a)?;
    let right: Vec<f64> = pairs.iter().map(|p| p.right).collect();
    let left: Vec<f64> = pairs.iter().map(|p| p.left).collect();
    let (nr, nl) = (norm(&right), norm(&left));
    let bound = (nr + nl) / 2.0;
    let unit = |v: &[f64], n: f64| v.iter().map(|x| x / n).collect::<Vec<f64>>();
    let argmax = match (nr > 0.0, nl > 0.0) {
        (false, false) => None,
        (true, false) => Some(unit(&right, nr)),
        (false, true) => Some(unit(&left, nl)),
        (true, true) => {
            let (ur, ul) = (unit(&right, nr), unit(&left, nl));
            let diff: Vec<f64> = ur.iter().zip(&ul).map(|(x, y)| x - y).collect();
            let sum: Vec<f64> = ur.iter().zip(&ul).map(|(x, y)| x + y).collect();
            let angle = 2.0 * norm(&diff).atan2(norm(&sum));
            (angle <= 1e-9).then(|| unit(&sum, norm(&sum)))
        }
    };
    let argmin = argmax.as_ref().map(|v| v.iter().map(|x| -x).collect());
    Ok(DirectionalExtrema { bound, argmax, argmin })
}
