use std::fmt;

use thiserror::Error;

/// Which side of a point a one-sided quantity is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Right,
    Left,
}

impl Side {
    /// +1 for the right side, -1 for the left side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a point fails to be specularly differentiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The one-sided limits differ.
    Jump,
    /// A one-sided limit or semi-derivative does not exist.
    DivergentSide,
}

impl FailureReason {
    pub fn name(self) -> &'static str {
        match self {
            FailureReason::Jump => "jump",
            FailureReason::DivergentSide => "divergent-side",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis indices are stored 0-based and displayed 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // input validation
    #[error("syntax error at offset {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("undeclared variable `{name}`")]
    UnknownVariable { name: String },
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // evaluation and limits
    #[error("function is undefined at x = {x}")]
    UndefinedAt { x: f64 },
    #[error("x = {x} lies outside the domain")]
    OutOfDomain { x: f64 },
    #[error("{side} limit at {x0} diverges")]
    LimitDiverges { x0: f64, side: Side },
    #[error("{side} limit along axis {} diverges", .axis + 1)]
    AxisLimitDiverges { axis: usize, side: Side },
    #[error("{side} semi-specular derivative diverges")]
    SemiDerivativeDiverges { side: Side },

    // specular derivatives
    #[error("not specularly differentiable at {x0} ({reason})")]
    NotSpecularlyDifferentiable { x0: f64, reason: FailureReason },
    #[error("not specularly differentiable at {x0} at derivative level {level} ({reason})")]
    HigherOrderFailure {
        x0: f64,
        level: usize,
        reason: FailureReason,
    },
    #[error("extrapolation did not converge (last estimates {last:?})")]
    NoConvergence { last: [f64; 2] },
    #[error("no {side} witness found on the grid")]
    WitnessNotFound { side: Side },
    #[error("function has a jump at {at} inside the interval")]
    Discontinuous { at: f64 },
    #[error("not specularly partial differentiable along axis {}", .axis + 1)]
    NotSpecularlyPartialDifferentiable { axis: usize },
    #[error("{} axes failed: {}", .0.len(), fmt_axis_errors(.0))]
    AxisErrors(Vec<(usize, Error)>),

    // hyperplanes
    #[error("function is not weakly specularly differentiable at the point")]
    NotWeaklyDifferentiable,
    #[error("no subset of the sphere points determines a non-vertical hyperplane")]
    DegenerateP,
    #[error("expected a unique weak tangent hyperplane, found {count}")]
    NoUniqueWeakPlane { count: usize },
    #[error("dimension {n} exceeds the enumeration limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    // integration
    #[error("quadrature failed on segment {segment} (achieved {achieved_tolerance:e})")]
    QuadratureFailure {
        segment: usize,
        achieved_tolerance: f64,
    },
    #[error("FTC identity fails at {point}: {lhs} != {rhs}")]
    FTCViolation { point: f64, lhs: f64, rhs: f64 },

    // solvers
    #[error("initial condition at {x0} sits on a singular point")]
    InitialConditionOnSingularPoint { x0: f64 },
    #[error("point {s} is not a jump of the forcing term")]
    NotASingularPoint { s: f64 },
    #[error("constant c = {given} is inadmissible, required {required}")]
    InadmissibleC { given: f64, required: f64 },
    #[error("speed b = 0 with a1 + a2 != 0")]
    BZero,
    #[error("residual {residual:e} at {point:?}")]
    ResidualViolation { point: Vec<f64>, residual: f64 },
}

fn fmt_axis_errors(errs: &[(usize, Error)]) -> String {
    errs.iter()
        .map(|(i, e)| format!("axis {}: {e}", i + 1))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Stable variant name used in serialized error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SyntaxError { .. } => "SyntaxError",
            Error::UnknownFunction { .. } => "UnknownFunction",
            Error::UnknownVariable { .. } => "UnknownVariable",
            Error::InvalidFunction(_) => "InvalidFunction",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::UndefinedAt { .. } => "UndefinedAt",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::LimitDiverges { .. } | Error::AxisLimitDiverges { .. } => "LimitDiverges",
            Error::SemiDerivativeDiverges { .. } => "SemiDerivativeDiverges",
            Error::NotSpecularlyDifferentiable { .. } | Error::HigherOrderFailure { .. } => {
                "NotSpecularlyDifferentiable"
            }
            Error::NoConvergence { .. } => "NoConvergence",
            Error::WitnessNotFound { .. } => "WitnessNotFound",
            Error::Discontinuous { .. } => "Discontinuous",
            Error::NotSpecularlyPartialDifferentiable { .. } => {
                "NotSpecularlyPartialDifferentiable"
            }
            Error::AxisErrors(_) => "AxisErrors",
            Error::NotWeaklyDifferentiable => "NotWeaklyDifferentiable",
            Error::DegenerateP => "DegenerateP",
            Error::NoUniqueWeakPlane { .. } => "NoUniqueWeakPlane",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::FTCViolation { .. } => "FTCViolation",
            Error::InitialConditionOnSingularPoint { .. } => "InitialConditionOnSingularPoint",
            Error::NotASingularPoint { .. } => "NotASingularPoint",
            Error::InadmissibleC { .. } => "InadmissibleC",
            Error::BZero => "BZero",
            Error::ResidualViolation { .. } => "ResidualViolation",
        }
    }

    /// True for malformed input, false for mathematical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::SyntaxError { .. }
                | Error::UnknownFunction { .. }
                | Error::UnknownVariable { .. }
                | Error::InvalidFunction(_)
                | Error::InvalidArgument(_)
                | Error::OutOfDomain { .. }
                | Error::DimensionTooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
