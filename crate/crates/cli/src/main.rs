//! `specular`: command-line front-end for specular-core.
//!
//! Results go to stdout as one JSON line (or to `--out`). Exit status is 0 on
//! success, 2 on invalid input and 1 on a mathematical failure, in which case
//! the error object is printed instead.

mod commands;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use specular_core::Error;

#[derive(Debug, Parser)]
#[command(name = "specular", version, about = "Specular derivatives, tangents, integrals and solvers")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Specular derivative of a piecewise function at a point.
    Derive(DeriveArgs),
    /// Specular tangent line and phototangent at a point.
    Tangent(TangentArgs),
    /// Semi-specular and specular gradients of an n-D function.
    Gradient(GradientArgs),
    /// Specular directional derivative along a direction.
    Directional(DirectionalArgs),
    /// Differentiability class and weak/strong tangent hyperplanes.
    Hyperplanes(PointArgs),
    /// Specular indefinite integral of a piecewise function.
    Integrate(IntegrateArgs),
    /// First-order linear ODE with a piecewise forcing term.
    Ode(OdeArgs),
    /// Transport equation with piecewise-linear initial data.
    Transport(TransportArgs),
    /// SVG plot of a piecewise function.
    Plot(PlotArgs),
    /// Check FTC, ODE or transport identities on a grid.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Route {
    /// Exact one-sided limits combined in closed form.
    Closed,
    /// Same limits combined through angle bisection.
    Angles,
    /// Richardson extrapolation of the symmetric criterion.
    Criterion,
}

#[derive(Debug, Args)]
struct DeriveArgs {
    /// Piecewise function document.
    #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
    function: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    at: f64,
    /// Derivative order; orders above 1 iterate the operator.
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, value_enum, default_value_t = Route::Closed)]
    route: Route,
}

#[derive(Debug, Args)]
struct TangentArgs {
    #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
    function: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    at: f64,
    /// Also write a plot with both overlays.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Debug, Args)]
struct PointArgs {
    /// n-D function document.
    #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
    function: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    at: String,
}

#[derive(Debug, Args)]
struct GradientArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Report a single partial derivative (1-based).
    #[arg(long)]
    axis: Option<usize>,
}

#[derive(Debug, Args)]
struct DirectionalArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Comma-separated direction, normalized before use.
    #[arg(long, allow_hyphen_values = true)]
    dir: String,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
    function: PathBuf,
    /// Number of equal subintervals for the sampled values.
    #[arg(long, default_value_t = 10)]
    samples: usize,
}

#[derive(Debug, Args)]
struct OdeSetup {
    /// ODE problem document.
    #[arg(long, visible_alias = "fn", value_name = "PATH")]
    problem: PathBuf,
    /// Value of the solution at the left end of the domain.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "ic")]
    constant: Option<f64>,
    /// Initial condition `X0,Y0`, replacing the one in the document.
    #[arg(long, allow_hyphen_values = true)]
    ic: Option<String>,
}

#[derive(Debug, Args)]
struct OdeArgs {
    #[command(flatten)]
    setup: OdeSetup,
    #[arg(long, default_value_t = 10)]
    samples: usize,
}

#[derive(Debug, Args)]
struct TransportSetup {
    /// Transport problem document; flags override its fields.
    #[arg(long, visible_alias = "fn", value_name = "PATH")]
    problem: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Forcing constant; checked against the admissible value.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
}

#[derive(Debug, Args)]
struct TransportArgs {
    #[command(flatten)]
    setup: TransportSetup,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
    function: PathBuf,
    /// Destination file; without it the SVG is written to stdout.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Marked point for the phototangent and tangent-line overlays.
    #[arg(long, allow_negative_numbers = true)]
    at: Option<f64>,
    /// Plot range `LO,HI`, defaulting to the domain.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Samples per segment.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(subcommand)]
    target: VerifyTarget,
    /// Pass/fail threshold on the largest deviation; defaults to the
    /// library tolerances.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Grid size.
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
}

#[derive(Debug, Subcommand)]
enum VerifyTarget {
    /// `F^S = f` for the specular indefinite integral of a function.
    Ftc {
        #[arg(long = "fn", visible_alias = "problem", value_name = "PATH")]
        function: PathBuf,
    },
    /// Residual and continuity of an ODE solution.
    Ode(OdeSetup),
    /// Residual of a transport solution on and off the characteristic line.
    Transport(TransportSetup),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let err = Error::InvalidArgument(first.trim_start_matches("error: ").to_string());
            print!("{}", output::render(&output::error_json(&err)));
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    let outcome = commands::run(cli.command);
    let (text, code) = match outcome {
        Ok(out) => (out.text, if out.failed { 1 } else { 0 }),
        Err(e) => (output::render(&output::error_json(&e)), if e.is_validation() { 2 } else { 1 }),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let err = Error::InvalidArgument(format!("cannot write {}: {e}", path.display()));
                print!("{}", output::render(&output::error_json(&err)));
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
