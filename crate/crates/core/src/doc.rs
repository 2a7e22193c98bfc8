//! JSON input documents.
//!
//! A piecewise function looks like
//! `{"domain":[-1,1], "breakpoints":[0], "segments":[{"expr":"-1"},{"expr":"1"}], "values":{"0": 0}}`
//! where a value is a number, `null` (undefined) or `"unknown"`. Segments may
//! also be plain expression strings.

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::piecewise::{Location, PiecewiseFunction, PointValue, SegmentBody};
use crate::solvers::{LinearOdeProblem, TransportProblem};
use crate::specularnd::NdFunction;

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed document: {e}")))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SegmentDoc {
    Text(String),
    Full {
        expr: String,
        #[serde(default)]
        dexpr: Option<String>,
    },
}

impl SegmentDoc {
    fn body(&self) -> Result<SegmentBody> {
        match self {
            SegmentDoc::Text(e) => SegmentBody::parse(e, None),
            SegmentDoc::Full { expr, dexpr } => SegmentBody::parse(expr, dexpr.as_deref()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseDoc {
    pub domain: [f64; 2],
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub segments: Vec<SegmentDoc>,
    #[serde(default)]
    pub values: serde_json::Map<String, Value>,
}

fn point_value(key: &str, v: &Value) -> Result<PointValue> {
    match v {
        Value::Null => Ok(PointValue::Undefined),
        Value::String(s) if s == "unknown" => Ok(PointValue::Unknown),
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .map(PointValue::Defined)
            .ok_or_else(|| Error::InvalidFunction(format!("value at {key} is not finite"))),
        other => Err(Error::InvalidFunction(format!(
            "value at {key} must be a number, null or \"unknown\", got {other}"
        ))),
    }
}

impl PiecewiseDoc {
    pub fn from_json(text: &str) -> Result<PiecewiseDoc> {
        parse(text)
    }

    pub fn build(&self) -> Result<PiecewiseFunction> {
        let bodies = self.segments.iter().map(SegmentDoc::body).collect::<Result<Vec<_>>>()?;
        let undefined = vec![PointValue::Undefined; self.breakpoints.len()];
        let f = PiecewiseFunction::new(self.domain[0], self.domain[1], self.breakpoints.clone(), bodies, undefined)?;
        let mut values = f.point_values().to_vec();
        for (key, v) in &self.values {
            let x: f64 = key
                .trim()
                .parse()
                .map_err(|_| Error::InvalidFunction(format!("value key `{key}` is not a number")))?;
            match f.locate(x) {
                Ok(Location::Breakpoint(k)) => values[k] = point_value(key, v)?,
                _ => return Err(Error::InvalidFunction(format!("{key} is not a breakpoint"))),
            }
        }
        f.with_point_values(values)
    }
}

pub fn piecewise_from_json(text: &str) -> Result<PiecewiseFunction> {
    PiecewiseDoc::from_json(text)?.build()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdDoc {
    pub dim: usize,
    pub expr: String,
    #[serde(default)]
    pub exclude: Vec<String>,
}

impl NdDoc {
    pub fn build(&self) -> Result<NdFunction> {
        let exclude: Vec<&str> = self.exclude.iter().map(String::as_str).collect();
        NdFunction::new(self.dim, &self.expr, &exclude)
    }
}

pub fn nd_from_json(text: &str) -> Result<NdFunction> {
    parse::<NdDoc>(text)?.build()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeDoc {
    pub domain: [f64; 2],
    pub p: String,
    pub f: PiecewiseDoc,
    #[serde(default)]
    pub ic: Option<[f64; 2]>,
}

impl OdeDoc {
    pub fn build(&self) -> Result<LinearOdeProblem> {
        if self.domain != self.f.domain {
            return Err(Error::InvalidFunction(format!(
                "problem domain {:?} differs from the forcing domain {:?}",
                self.domain, self.f.domain
            )));
        }
        LinearOdeProblem::new(&self.p, self.f.build()?, self.ic.map(|[x, y]| (x, y)))
    }
}

pub fn ode_from_json(text: &str) -> Result<LinearOdeProblem> {
    parse::<OdeDoc>(text)?.build()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportDoc {
    #[serde(default = "one")]
    pub dim: usize,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(default)]
    pub c: Option<f64>,
}

fn one() -> usize {
    1
}

impl TransportDoc {
    pub fn build(&self) -> TransportProblem {
        TransportProblem {
            dim: self.dim,
            b: self.b,
            a1: self.a1,
            a2: self.a2,
            c: self.c,
        }
    }
}

pub fn transport_from_json(text: &str) -> Result<TransportProblem> {
    Ok(parse::<TransportDoc>(text)?.build())
}
