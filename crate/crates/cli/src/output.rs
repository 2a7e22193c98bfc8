//! Deterministic JSON rendering and structured error objects.

use serde_json::{Map, Number, Value};
use specular_core::Error;

/// Formats `v` with 17 significant digits, trailing zeros trimmed.
///
/// Seventeen digits always round-trip an `f64`. Magnitudes in `[1e-5, 1e17)`
/// are written positionally, others in exponent form.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };

    if !(-5..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        return format!("{sign}{head}{frac}e{exp}");
    }
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{digits}");
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        let (int, frac) = digits.split_at(int_len);
        format!("{sign}{int}.{frac}")
    }
}

/// A JSON number, or `null` when `v` is not finite.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Value::Number(format_f64(v).parse::<Number>().expect("valid JSON number"))
}

pub fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

pub fn int(v: usize) -> Value {
    Value::Number(Number::from(v))
}

/// Builds an object with fields in the given order.
pub fn obj<const N: usize>(fields: [(&str, Value); N]) -> Value {
    let mut m = Map::new();
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("serializable value");
    s.push('\n');
    s
}

/// Serializes an error as `{"error": kind, ...fields, "message": text}`.
///
/// Axis indices are reported 1-based.
pub fn error_json(e: &Error) -> Value {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    put("error", Value::from(e.kind()));
    match e {
        Error::SyntaxError { position, expected } => {
            put("position", int(*position));
            put("expected", Value::from(expected.as_str()));
        }
        Error::UnknownFunction { name } | Error::UnknownVariable { name } => put("name", Value::from(name.as_str())),
        Error::UndefinedAt { x } | Error::OutOfDomain { x } => put("x", num(*x)),
        Error::LimitDiverges { x0, side } => {
            put("x0", num(*x0));
            put("side", Value::from(side.name()));
        }
        Error::AxisLimitDiverges { axis, side } => {
            put("axis", int(axis + 1));
            put("side", Value::from(side.name()));
        }
        Error::SemiDerivativeDiverges { side } | Error::WitnessNotFound { side } => put("side", Value::from(side.name())),
        Error::NotSpecularlyDifferentiable { x0, reason } => {
            put("reason", Value::from(reason.name()));
            put("x0", num(*x0));
        }
        Error::HigherOrderFailure { x0, level, reason } => {
            put("reason", Value::from(reason.name()));
            put("x0", num(*x0));
            put("level", int(*level));
        }
        Error::NoConvergence { last } => put("last", nums(last)),
        Error::Discontinuous { at } => put("at", num(*at)),
        Error::NotSpecularlyPartialDifferentiable { axis } => put("axis", int(axis + 1)),
        Error::AxisErrors(list) => {
            let axes = list
                .iter()
                .map(|(i, inner)| {
                    let mut v = error_json(inner);
                    if let Value::Object(o) = &mut v {
                        o.insert("axis".to_string(), int(i + 1));
                    }
                    v
                })
                .collect();
            put("axes", Value::Array(axes));
        }
        Error::NoUniqueWeakPlane { count } => put("count", int(*count)),
        Error::DimensionTooLarge { n, limit } => {
            put("n", int(*n));
            put("limit", int(*limit));
        }
        Error::QuadratureFailure { segment, achieved_tolerance } => {
            put("segment", int(*segment));
            put("achieved_tolerance", num(*achieved_tolerance));
        }
        Error::FTCViolation { point, lhs, rhs } => {
            put("point", num(*point));
            put("lhs", num(*lhs));
            put("rhs", num(*rhs));
        }
        Error::InitialConditionOnSingularPoint { x0 } => put("x0", num(*x0)),
        Error::NotASingularPoint { s } => put("s", num(*s)),
        Error::InadmissibleC { given, required } => {
            put("given", num(*given));
            put("required", num(*required));
        }
        Error::ResidualViolation { point, residual } => {
            put("point", nums(point));
            put("residual", num(*residual));
        }
        Error::InvalidFunction(_) | Error::InvalidArgument(_) | Error::NotWeaklyDifferentiable | Error::DegenerateP | Error::BZero => {}
    }
    put("message", Value::from(e.to_string()));
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use specular_core::FailureReason;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(2f64.sqrt() - 1.0), "0.41421356237309515");
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(-3.0), "-3");
        assert_eq!(format_f64(1e20), "1e20");
        assert_eq!(format_f64(1.5e-7), "1.4999999999999999e-7");
        assert_eq!(format_f64(2f64.powi(-20)), "9.5367431640625e-7");
        assert_eq!(format_f64(2f64.powi(-13)), "0.0001220703125");
        assert_eq!(format_f64(-0.0), "0");
        assert_eq!(format_f64(123456.0), "123456");
    }

    #[test]
    fn formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e12, -2.5e-300, f64::MAX, f64::MIN_POSITIVE, 1e-5, 9.999e16] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v, "{v}");
        }
    }

    #[test]
    fn numbers_render_verbatim() {
        let v = obj([("value", num(0.1)), ("bad", num(f64::NAN))]);
        assert_eq!(render(&v), "{\"value\":0.10000000000000001,\"bad\":null}\n");
    }

    #[test]
    fn error_objects() {
        let e = Error::NotSpecularlyDifferentiable { x0: 0.0, reason: FailureReason::Jump };
        let s = render(&error_json(&e));
        assert!(s.starts_with("{\"error\":\"NotSpecularlyDifferentiable\",\"reason\":\"jump\",\"x0\":0,"), "{s}");
        let e = Error::AxisErrors(vec![(0, Error::NotSpecularlyPartialDifferentiable { axis: 0 })]);
        let v = error_json(&e);
        assert_eq!(v["axes"][0]["axis"], 1);
    }
}
