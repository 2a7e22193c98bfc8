//! Specular derivatives of piecewise continuous functions.
//!
//! The specular derivative at a kink combines the right and left
//! semi-derivatives `α, β` into the slope of the line bisecting the angle of
//! the two one-sided tangents. This crate computes it in one and several
//! variables, builds tangent lines and hyperplanes, integrates, and solves a
//! first-order linear ODE and the transport equation in that sense.

// `!(x <= tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod doc;
pub mod error;
pub mod expr;
pub mod numeric;
pub mod piecewise;
#[cfg(test)]
mod properties;
pub mod quadrature;
pub mod solvers;
pub mod specular1d;
pub mod specularnd;

pub use error::{Error, FailureReason, Result, Side};
pub use expr::Expression;
pub use piecewise::{PiecewiseFunction, PointValue};
pub use specular1d::{combine_a, specular_derivative, SemiPair};
pub use specularnd::NdFunction;
