//! Subcommand dispatch: load documents, call the library, shape the JSON.

use std::path::Path;

use serde_json::Value;
use specular_core::calculus::{check_h1, indefinite_integral, verify_ftc};
use specular_core::doc::{nd_from_json, piecewise_from_json, OdeDoc, TransportDoc};
use specular_core::piecewise::PiecewiseFunction;
use specular_core::solvers::{solve_linear_ode, solve_transport, verify_ode_solution, verify_transport, LinearOdeProblem, TransportProblem};
use specular_core::specular1d::{
    higher_specular, phototangent, semi_specular, specular_derivative, specular_derivative_via_angles,
    specular_derivative_via_criterion, specular_tangent_line, Steps,
};
use specular_core::specularnd::{
    classify_differentiability, compute_p, compute_v, directional_extrema, directional_semi, semi_gradients,
    semi_specular_partial, specular_directional, specular_directional_by_limit, specular_gradient, specular_partial,
    weak_tangent_hyperplanes, Differentiability,
};
use specular_core::{Error, NdFunction, Result};

use crate::output::{int, num, nums, obj, render};
use crate::plot::{plot, PlotSpec};
use crate::{
    Command, DeriveArgs, DirectionalArgs, GradientArgs, IntegrateArgs, OdeArgs, OdeSetup, PlotArgs, PointArgs, Route,
    TangentArgs, TransportArgs, TransportSetup, VerifyArgs, VerifyTarget,
};

/// Rendered result; `failed` maps to exit status 1 without an error value.
pub struct Output {
    pub text: String,
    pub failed: bool,
}

impl From<Value> for Output {
    fn from(v: Value) -> Output {
        Output { text: render(&v), failed: false }
    }
}

pub fn run(command: Command) -> Result<Output> {
    match command {
        Command::Derive(a) => derive(a).map(Output::from),
        Command::Tangent(a) => tangent(a).map(Output::from),
        Command::Gradient(a) => gradient(a).map(Output::from),
        Command::Directional(a) => directional(a).map(Output::from),
        Command::Hyperplanes(a) => hyperplanes(a).map(Output::from),
        Command::Integrate(a) => integrate(a).map(Output::from),
        Command::Ode(a) => ode(a).map(Output::from),
        Command::Transport(a) => transport(a).map(Output::from),
        Command::Plot(a) => plot_cmd(a),
        Command::Verify(a) => verify(a),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn load_piecewise(path: &Path) -> Result<PiecewiseFunction> {
    piecewise_from_json(&read(path)?)
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("--{flag}: `{t}` is not a finite number")))
        })
        .collect()
}

fn parse_pair(flag: &str, s: &str) -> Result<(f64, f64)> {
    match parse_list(flag, s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::InvalidArgument(format!("--{flag} expects two comma-separated numbers"))),
    }
}

fn load_point(args: &PointArgs) -> Result<(NdFunction, Vec<f64>)> {
    let f = nd_from_json(&read(&args.function)?)?;
    let a = parse_list("at", &args.at)?;
    if a.len() != f.dim() {
        return Err(Error::InvalidArgument(format!("--at has {} coordinates, the function has {}", a.len(), f.dim())));
    }
    Ok((f, a))
}

fn finite(flag: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("--{flag} must be finite")))
    }
}

fn derive(a: DeriveArgs) -> Result<Value> {
    let at = finite("at", a.at)?;
    let f = load_piecewise(&a.function)?;
    if a.order == 0 {
        return Err(Error::InvalidArgument("--order must be at least 1".into()));
    }
    if a.order > 1 {
        if !matches!(a.route, Route::Closed) {
            return Err(Error::InvalidArgument("--route applies only to order 1".into()));
        }
        let value = higher_specular(&f, at, a.order)?;
        return Ok(obj([("value", num(value)), ("at", num(at)), ("order", int(a.order))]));
    }
    let value = match a.route {
        Route::Closed => specular_derivative(&f, at)?,
        Route::Angles => specular_derivative_via_angles(&f, at)?,
        Route::Criterion => specular_derivative_via_criterion(&f, at, Steps::default())?,
    };
    let semi = semi_specular(&f, at).ok();
    Ok(obj([
        ("value", num(value)),
        ("at", num(at)),
        ("right", semi.map_or(Value::Null, |p| num(p.right))),
        ("left", semi.map_or(Value::Null, |p| num(p.left))),
    ]))
}

fn tangent(a: TangentArgs) -> Result<Value> {
    let at = finite("at", a.at)?;
    let f = load_piecewise(&a.function)?;
    let line = specular_tangent_line(&f, at)?;
    let pt = phototangent(&f, at)?;
    let mut fields = vec![
        ("slope", num(line.slope)),
        ("anchor", nums(&[line.anchor_x, line.anchor_y])),
        ("intercept", num(line.anchor_y - line.slope * line.anchor_x)),
        (
            "phototangent",
            obj([
                ("mid", num(pt.mid)),
                ("right_value", num(pt.right_value)),
                ("left_value", num(pt.left_value)),
                ("right_slope", num(pt.right_slope)),
                ("left_slope", num(pt.left_slope)),
            ]),
        ),
    ];
    if let Some(path) = &a.svg {
        let dom = f.domain();
        let p = plot(&f, &PlotSpec { range: (dom.lo, dom.hi), samples: a.samples, at: Some(at) })?;
        write_file(path, &p.svg)?;
        fields.push(("svg", Value::from(path.display().to_string())));
    }
    Ok(object(fields))
}

fn object(fields: Vec<(&str, Value)>) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn gradient(a: GradientArgs) -> Result<Value> {
    let (f, at) = load_point(&a.point)?;
    if let Some(axis) = a.axis {
        if axis == 0 || axis > f.dim() {
            return Err(Error::InvalidArgument(format!("--axis must be in 1..={}", f.dim())));
        }
        let semi = semi_specular_partial(&f, &at, axis - 1)?;
        let value = specular_partial(&f, &at, axis - 1)?;
        return Ok(obj([("value", num(value)), ("axis", int(axis)), ("right", num(semi.right)), ("left", num(semi.left))]));
    }
    let semi = semi_gradients(&f, &at)?;
    let specular = specular_gradient(&f, &at)?;
    let right: Vec<f64> = semi.iter().map(|p| p.right).collect();
    let left: Vec<f64> = semi.iter().map(|p| p.left).collect();
    Ok(obj([("specular", nums(&specular)), ("right", nums(&right)), ("left", nums(&left))]))
}

fn directional(a: DirectionalArgs) -> Result<Value> {
    let (f, at) = load_point(&a.point)?;
    let dir = parse_list("dir", &a.dir)?;
    if dir.len() != f.dim() {
        return Err(Error::InvalidArgument(format!("--dir has {} components, the function has {}", dir.len(), f.dim())));
    }
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("--dir must be nonzero".into()));
    }
    let u: Vec<f64> = dir.iter().map(|v| v / norm).collect();
    let value = specular_directional(&f, &at, &u)?;
    let semi = directional_semi(&f, &at, &u)?;
    let by_limit = specular_directional_by_limit(&f, &at, &u).map_or(Value::Null, num);
    let bound = directional_extrema(&f, &at).map_or(Value::Null, |e| num(e.bound));
    Ok(obj([
        ("value", num(value)),
        ("right", num(semi.right)),
        ("left", num(semi.left)),
        ("by_limit", by_limit),
        ("bound", bound),
        ("dir", nums(&u)),
    ]))
}

fn axes(list: &[usize]) -> Value {
    Value::Array(list.iter().map(|i| int(i + 1)).collect())
}

fn hyperplanes(a: PointArgs) -> Result<Value> {
    let (f, at) = load_point(&a)?;
    let class = classify_differentiability(&f, &at)?;
    let v = compute_v(&f, &at)?;
    let p = compute_p(&f, &at)?;
    let (kind, w, mid) = match class.kind {
        Differentiability::None => ("none", Value::Null, Value::Null),
        Differentiability::Weak { w, mid } => ("weak", int(w), num(mid)),
        Differentiability::Strong { mid } => ("strong", int(f.dim()), num(mid)),
    };
    let points: Vec<Value> = p
        .points
        .iter()
        .map(|s| obj([("axis", int(s.axis + 1)), ("side", Value::from(s.side.name())), ("coords", nums(&s.coords))]))
        .collect();
    let head = [
        ("classification", Value::from(kind)),
        ("w", w),
        ("mid", mid),
        ("readings_agree", Value::from(class.readings_agree)),
        ("classes", Value::Array(class.classes.iter().map(|c| axes(c)).collect())),
        ("v", axes(&v)),
        ("p", Value::Array(points)),
    ];
    let tangent = weak_tangent_hyperplanes(&f, &at)?;
    let planes: Vec<Value> = tangent
        .planes
        .iter()
        .map(|h| obj([("coeffs", nums(&h.coeffs)), ("offset", num(h.offset)), ("anchor", nums(&h.anchor))]))
        .collect();
    let mut fields: Vec<(&str, Value)> = head.into_iter().collect();
    fields.push(("planes", Value::Array(planes)));
    fields.push(("rejected", int(tangent.rejected)));
    Ok(object(fields))
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 })
}

fn positive(flag: &str, n: usize) -> Result<usize> {
    if n == 0 {
        Err(Error::InvalidArgument(format!("--{flag} must be positive")))
    } else {
        Ok(n)
    }
}

fn sampled(f: &PiecewiseFunction, n: usize) -> Value {
    let dom = f.domain();
    Value::Array(grid(dom.lo, dom.hi, n).map(|x| nums(&[x, f.eval(x).unwrap_or(f64::NAN)])).collect())
}

fn integrate(a: IntegrateArgs) -> Result<Value> {
    let n = positive("samples", a.samples)?;
    let f = load_piecewise(&a.function)?;
    let h1 = check_h1(&f)?;
    let big = indefinite_integral(&f)?;
    let assignments: Vec<Value> = h1.assignments.iter().map(|&(x, v)| nums(&[x, v])).collect();
    Ok(obj([
        ("constants", nums(big.constants())),
        ("breakpoints", nums(f.breakpoints())),
        ("h1", obj([("holds", Value::from(h1.holds())), ("assignments", Value::Array(assignments))])),
        ("values", sampled(big.function(), n)),
    ]))
}

fn ode_problem(s: &OdeSetup) -> Result<LinearOdeProblem> {
    let mut doc: OdeDoc = serde_json::from_str(&read(&s.problem)?)
        .map_err(|e| Error::InvalidArgument(format!("malformed document: {e}")))?;
    if let Some(ic) = &s.ic {
        let (x, y) = parse_pair("ic", ic)?;
        doc.ic = Some([x, y]);
    }
    let problem = doc.build()?;
    match s.constant {
        Some(_) if doc.ic.is_some() => Err(Error::InvalidArgument("--constant conflicts with the initial condition".into())),
        Some(c) => Ok(problem.with_constant(finite("constant", c)?)),
        None => Ok(problem),
    }
}

fn ode(a: OdeArgs) -> Result<Value> {
    let n = positive("samples", a.samples)?;
    let problem = ode_problem(&a.setup)?;
    let sol = solve_linear_ode(&problem)?;
    let recovered: Vec<Value> = sol.recovered.iter().map(|&(s, v)| nums(&[s, v])).collect();
    Ok(obj([
        ("constants", nums(&sol.constants)),
        ("recovered", Value::Array(recovered)),
        ("values", sampled(&sol.u, n)),
    ]))
}

fn transport_problem(s: &TransportSetup) -> Result<TransportProblem> {
    let doc = match &s.problem {
        Some(path) => Some(
            serde_json::from_str::<TransportDoc>(&read(path)?)
                .map_err(|e| Error::InvalidArgument(format!("malformed document: {e}")))?,
        ),
        None => None,
    };
    let pick = |flag: &str, v: Option<f64>, d: Option<f64>| -> Result<f64> {
        v.or(d).ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required"))).and_then(|x| finite(flag, x))
    };
    let dim = s.dim.or(doc.as_ref().map(|d| d.dim)).unwrap_or(1);
    if dim == 0 {
        return Err(Error::InvalidArgument("--dim must be at least 1".into()));
    }
    let c = match s.c.or(doc.as_ref().and_then(|d| d.c)) {
        Some(c) => Some(finite("c", c)?),
        None => None,
    };
    Ok(TransportProblem {
        dim,
        b: pick("b", s.b, doc.as_ref().map(|d| d.b))?,
        a1: pick("a1", s.a1, doc.as_ref().map(|d| d.a1))?,
        a2: pick("a2", s.a2, doc.as_ref().map(|d| d.a2))?,
        c,
    })
}

fn transport(a: TransportArgs) -> Result<Value> {
    let sol = solve_transport(&transport_problem(&a.setup)?)?;
    Ok(obj([
        ("c", num(sol.c)),
        ("dim", int(sol.dim)),
        ("b", num(sol.b)),
        ("a1", num(sol.a1)),
        ("a2", num(sol.a2)),
        ("speed", num(sol.b / sol.dim as f64)),
    ]))
}

fn plot_cmd(a: PlotArgs) -> Result<Output> {
    let f = load_piecewise(&a.function)?;
    let dom = f.domain();
    let range = match &a.range {
        Some(r) => parse_pair("range", r)?,
        None => (dom.lo, dom.hi),
    };
    let at = a.at.map(|x| finite("at", x)).transpose()?;
    let p = plot(&f, &PlotSpec { range, samples: a.samples, at })?;
    match &a.svg {
        None => Ok(Output { text: p.svg, failed: false }),
        Some(path) => {
            write_file(path, &p.svg)?;
            Ok(obj([
                ("svg", Value::from(path.display().to_string())),
                ("polylines", int(p.polylines)),
                ("open_markers", int(p.open_markers)),
                ("closed_markers", int(p.closed_markers)),
            ])
            .into())
        }
    }
}

fn verify(a: VerifyArgs) -> Result<Output> {
    let n = positive("samples", a.samples)?;
    if let Some(t) = a.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument("--tol must be a finite non-negative number".into()));
        }
    }
    let (target, checked, deviation, clean, violations) = match &a.target {
        VerifyTarget::Ftc { function } => {
            let f = load_piecewise(function)?;
            let r = verify_ftc(&f, &indefinite_integral(&f)?, n)?;
            let v = r.violations.iter().map(|v| obj([("point", num(v.point)), ("lhs", num(v.lhs)), ("rhs", num(v.rhs))]));
            ("ftc", r.checked, r.max_deviation, r.violations.is_empty(), v.collect::<Vec<_>>())
        }
        VerifyTarget::Ode(setup) => {
            let problem = ode_problem(setup)?;
            let r = verify_ode_solution(&problem, &solve_linear_ode(&problem)?, n)?;
            let v = r.violations.iter().map(|v| obj([("point", num(v.point)), ("residual", num(v.residual))]));
            ("ode", r.checked, r.max_residual, r.violations.is_empty(), v.collect())
        }
        VerifyTarget::Transport(setup) => {
            let r = verify_transport(&solve_transport(&transport_problem(setup)?)?, n)?;
            let v = r.violations.iter().map(|v| {
                obj([("point", nums(&v.point)), ("residual", num(v.residual)), ("on_line", Value::from(v.on_line))])
            });
            ("transport", r.checked, r.max_residual, r.violations.is_empty(), v.collect())
        }
    };
    let ok = match a.tol {
        Some(t) => deviation <= t,
        None => clean,
    };
    let v = obj([
        ("target", Value::from(target)),
        ("ok", Value::from(ok)),
        ("checked", int(checked)),
        ("max_deviation", num(deviation)),
        ("tolerance", a.tol.map_or(Value::Null, num)),
        ("violations", Value::Array(violations)),
    ]);
    Ok(Output { text: render(&v), failed: !ok })
}
