//! Differential equations with specular derivatives.

pub mod ode;
pub mod transport;

pub use ode::{
    recover_singular_value, solve_linear_ode, verify_ode_solution, LinearOdeProblem, LinearOdeSolver, OdeSolution,
    ResidualReport,
};
pub use transport::{
    solve_transport, transport_admissible_c, verify_transport, TransportProblem, TransportReport, TransportSolution,
};
