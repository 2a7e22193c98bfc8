//! Property tests over the public API.

use proptest::prelude::*;

use crate::calculus::{assign_h1, check_h1, indefinite_integral, verify_ftc};
use crate::solvers::ode::{LinearOdeProblem, LinearOdeSolver};
use crate::solvers::transport::transport_admissible_c;
use crate::specular1d::{combine_a, combine_a_via_angles, specular_derivative};
use crate::specularnd::{
    classify_differentiability, compute_p, compute_v, directional_semi, specular_directional,
    specular_directional_by_limit, weak_tangent_hyperplanes, Differentiability, NdFunction,
};
use crate::{PiecewiseFunction, PointValue};

fn slope() -> impl Strategy<Value = f64> {
    prop_oneof![-10.0..10.0f64, -1e4..1e4f64, Just(0.0), Just(1.0), Just(-1.0)]
}

fn unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
}

/// Continuous piecewise linear function on [-1, 1] through the given knot
/// values at -1, -0.5, 0, 0.5, 1.
fn polyline(ys: &[f64]) -> PiecewiseFunction {
    let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let exprs: Vec<String> = (0..4)
        .map(|k| {
            let m = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
            format!("({:?}) + ({:?})*(x - ({:?}))", ys[k], m, xs[k])
        })
        .collect();
    let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
    let values: Vec<(f64, PointValue)> = (1..4).map(|k| (xs[k], PointValue::Defined(ys[k]))).collect();
    PiecewiseFunction::from_exprs(-1.0, 1.0, &xs[1..4], &refs, &values).unwrap()
}

proptest! {
    #[test]
    fn combine_a_symmetry_and_oddness(a in slope(), b in slope()) {
        prop_assert_eq!(combine_a(a, b), combine_a(b, a));
        prop_assert_eq!(combine_a(-a, -b), -combine_a(a, b));
    }

    #[test]
    fn combine_a_between_and_bounded(a in slope(), b in slope()) {
        let v = combine_a(a, b);
        prop_assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
        if a + b != 0.0 && a * b >= 0.0 {
            prop_assert!(v.abs() <= (a + b).abs() / 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn combine_a_routes_agree(a in slope(), b in slope()) {
        let (x, y) = (combine_a(a, b), combine_a_via_angles(a, b));
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()) + 1e-15, "{} vs {}", x, y);
    }

    #[test]
    fn smooth_polynomials_have_classical_derivative(c in prop::array::uniform4(-3.0..3.0f64), x in -0.9..0.9f64) {
        let expr = format!("({:?}) + ({:?})*x + ({:?})*x^2 + ({:?})*x^3", c[0], c[1], c[2], c[3]);
        let f = PiecewiseFunction::smooth(-1.0, 1.0, &expr).unwrap();
        let exact = c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        let d = specular_derivative(&f, x).unwrap();
        prop_assert!((d - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn midgap_is_mean_of_limits(jump in -5.0..5.0f64, m1 in slope(), m2 in slope()) {
        let e1 = format!("({m1:?})*x");
        let e2 = format!("({jump:?}) + ({m2:?})*x");
        let f = PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &[&e1, &e2], &[]).unwrap();
        let (r, l) = (f.right_limit(0.0).unwrap(), f.left_limit(0.0).unwrap());
        prop_assert_eq!(f.midgap_value(0.0).unwrap(), (r + l) / 2.0);
        prop_assert_eq!(f.singular_points().is_empty(), jump == 0.0);
    }

    #[test]
    fn removable_breakpoints_do_not_change_singular_points(t in -0.9..0.9f64) {
        let plain = PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &["x-1", "x^2"], &[]).unwrap();
        let cut = if t.abs() < 0.05 { 0.5 } else { t };
        let (bps, exprs): (Vec<f64>, Vec<&str>) = if cut < 0.0 {
            (vec![cut, 0.0], vec!["x-1", "x-1", "x^2"])
        } else {
            (vec![0.0, cut], vec!["x-1", "x^2", "x^2"])
        };
        let refined = PiecewiseFunction::from_exprs(-1.0, 1.0, &bps, &exprs, &[]).unwrap();
        prop_assert_eq!(plain.singular_points(), refined.singular_points());
    }

    #[test]
    fn extended_segment_matches_eval(x in -0.999..0.999f64) {
        let f = PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &["exp(x)", "sin(x)+2"], &[]).unwrap();
        prop_assume!(x != 0.0);
        let i = usize::from(x > 0.0);
        let ext = f.extended_segment(i).unwrap();
        prop_assert!((ext.eval(x) - f.eval(x).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ftc_on_random_jump_functions(c in prop::array::uniform4(-3.0..3.0f64)) {
        let e: Vec<String> = c.iter().enumerate().map(|(k, v)| format!("({v:?}) + {k}*x")).collect();
        let refs: Vec<&str> = e.iter().map(String::as_str).collect();
        let bps = [-0.5, 0.0, 0.5];
        let values: Vec<(f64, PointValue)> = bps.iter().map(|&b| (b, PointValue::Unknown)).collect();
        let f = PiecewiseFunction::from_exprs(-1.0, 1.0, &bps, &refs, &values).unwrap();
        let big = indefinite_integral(&f).unwrap();
        prop_assert_eq!(big.eval(-1.0).unwrap(), 0.0);
        for &b in &bps {
            let gap = big.function().right_limit(b).unwrap() - big.function().left_limit(b).unwrap();
            prop_assert!(gap.abs() <= 1e-9);
        }
        let report = verify_ftc(&f, &big, 200).unwrap();
        prop_assert!(report.violations.is_empty(), "{:?}", report.violations.first());
    }

    #[test]
    fn h1_assignment_is_idempotent(c in prop::array::uniform3(-3.0..3.0f64)) {
        let e: Vec<String> = c.iter().map(|v| format!("({v:?})*x + {v:?}")).collect();
        let refs: Vec<&str> = e.iter().map(String::as_str).collect();
        let f = PiecewiseFunction::from_exprs(-1.0, 1.0, &[-0.3, 0.4], &refs, &[(-0.3, PointValue::Unknown), (0.4, PointValue::Unknown)]).unwrap();
        let g = assign_h1(&f).unwrap();
        let r = check_h1(&g).unwrap();
        prop_assert!(r.holds() && r.assignments.is_empty());
        let twice = assign_h1(&g).unwrap();
        prop_assert_eq!(twice.point_values(), g.point_values());
    }

    #[test]
    fn ode_constants_follow_the_recurrence(p in -2.0..2.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64, c0 in -2.0..2.0f64) {
        let ea = format!("{a:?}");
        let eb = format!("({b:?})*x + 1");
        let f = PiecewiseFunction::from_exprs(0.0, 2.0, &[1.0], &[&ea, &eb], &[(1.0, PointValue::Unknown)]).unwrap();
        let prob = LinearOdeProblem::new(&format!("{p:?}"), f, None).unwrap().with_constant(c0);
        let solver = LinearOdeSolver::prepare(&prob).unwrap();
        let sol = solver.solve().unwrap();
        let again = solver.solve().unwrap();
        prop_assert_eq!(&sol.constants, &again.constants);
        prop_assert_eq!(sol.constants[0], c0);
        let gap = sol.u.right_limit(1.0).unwrap() - sol.u.left_limit(1.0).unwrap();
        prop_assert!(gap.abs() <= 1e-9);
        // The recovered jump value satisfies the singular-value hypothesis for
        // the residual u^S + p u.
        if let Some(&(s, v)) = sol.recovered.first() {
            let us = specular_derivative(&sol.u, s).unwrap();
            prop_assert!((us + p * sol.u.eval(s).unwrap() - v).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn transport_reduces_without_kink(a in -5.0..5.0f64, b in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64]) {
        prop_assert!(transport_admissible_c(a, a, b, 1).unwrap().abs() <= 1e-12 * (1.0 + a.abs() * b.abs()));
    }

    #[test]
    fn sphere_points_lie_on_unit_spheres(x in -1.0..1.0f64, y in -1.0..1.0f64) {
        for expr in ["abs(x)-abs(y)-x-y", "x*y/sqrt(x^2+y^2)", "abs(x)+abs(y)", "exp(x)*cos(y)"] {
            let f = NdFunction::new(2, expr, &[]).unwrap();
            let a = [(x * 4.0).round() / 4.0, (y * 4.0).round() / 4.0];
            let v = compute_v(&f, &a).unwrap();
            let p = compute_p(&f, &a).unwrap();
            prop_assert_eq!(p.len(), 2 * v.len());
            for q in &p.points {
                let (_, c) = p.centers.iter().find(|(i, _)| *i == q.axis).unwrap();
                let r: f64 = q.coords.iter().zip(c).map(|(u, w)| (u - w).powi(2)).sum::<f64>().sqrt();
                prop_assert!((r - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn plane_count_and_two_dimensional_classes(x in -1.0..1.0f64, y in -1.0..1.0f64) {
        for expr in ["abs(x)-abs(y)-x-y", "abs(x)+2*abs(y)", "(x+abs(x))/2+y^2", "x^2/(x^2+y^2+1)"] {
            let f = NdFunction::new(2, expr, &[]).unwrap();
            let a = [(x * 2.0).round() / 2.0, (y * 2.0).round() / 2.0];
            let c = classify_differentiability(&f, &a).unwrap();
            // In two dimensions weak differentiability is strong differentiability.
            let weak = matches!(c.kind, Differentiability::Weak { .. });
            prop_assert!(!weak);
            if let Ok(t) = weak_tangent_hyperplanes(&f, &a) {
                prop_assert!(t.planes.len() <= 4); // C(4, 3)
            }
        }
    }

    #[test]
    fn directional_bound_and_sign(u in unit(3), k in 0usize..4) {
        let corpus = [
            ("abs(x1)+abs(x2)+abs(x3)", [0.0, 0.0, 0.0]),
            ("abs(x1)+abs(x2)+abs(x3)", [0.5, -1.0, 0.0]),
            ("x1^2+x2*x3", [1.0, 2.0, -1.0]),
            ("(x1+abs(x1))/2+(x2+abs(x2))/2+x3", [0.0, 0.0, 0.3]),
        ];
        let (expr, a) = corpus[k];
        let f = NdFunction::new(3, expr, &[]).unwrap();
        let bound = crate::specularnd::directional_extrema(&f, &a).unwrap().bound;
        let d = specular_directional(&f, &a, &u).unwrap();
        prop_assert!(d.abs() <= bound + 1e-9);
        let pair = directional_semi(&f, &a, &u).unwrap();
        let s = pair.right + pair.left;
        if s.abs() > 1e-9 {
            prop_assert_eq!(d.signum(), s.signum());
        } else {
            prop_assert!(d.abs() <= 1e-9);
        }
    }

    #[test]
    fn dot_and_limit_routes_agree(u in unit(2), k in 0usize..4) {
        let corpus = [
            ("abs(x)+abs(y)", [0.0, 0.0]),
            ("abs(x)+abs(y)", [0.3, -0.2]),
            ("x*y/sqrt(x^2+y^2)", [0.0, 0.0]),
            ("sin(x)*exp(y)", [0.4, 0.1]),
        ];
        let (expr, a) = corpus[k];
        let f = NdFunction::new(2, expr, &[]).unwrap();
        let dot = specular_directional(&f, &a, &u).unwrap();
        let lim = specular_directional_by_limit(&f, &a, &u).unwrap();
        prop_assert!((dot - lim).abs() <= 1e-4, "{} vs {}", dot, lim);
    }

    #[test]
    fn polyline_specular_derivative_is_between_slopes(ys in prop::collection::vec(-2.0..2.0f64, 5), k in 1usize..4) {
        let f = polyline(&ys);
        let x = -1.0 + 0.5 * k as f64;
        let (l, r) = ((ys[k] - ys[k - 1]) / 0.5, (ys[k + 1] - ys[k]) / 0.5);
        let d = specular_derivative(&f, x).unwrap();
        prop_assert!((d - combine_a(r, l)).abs() <= 1e-9 * (1.0 + d.abs()));
    }
}
