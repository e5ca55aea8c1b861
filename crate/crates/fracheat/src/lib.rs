//! Numerical library for fractional heat kernels and nonlocal parabolic
//! evolution.
//!
//! The kernel of order alpha is evaluated by three independent routes
//! (radial Fourier quadrature, contour-rotated integration, and
//! subordination of the Gaussian semigroup), the nonlocal operator acts on
//! periodic fields spectrally or through principal-value quadrature, and a
//! set of diagnostics estimates analyticity radii, Gevrey orders, two-sided
//! kernel bounds, and backward-in-time solvability.
//!
//! Grid sweeps and Monte Carlo sampling are data parallel; disable the
//! default `parallel` feature for a fully sequential build.

pub mod analytic;
pub mod base;
pub mod dd;
pub mod exec;
mod fftutil;
pub mod kernel;
pub mod mc;
pub mod operator;
pub mod oracles;
pub mod quad;
pub mod solve;
pub mod special;

pub use base::{
    field_norms, validate_params, Field, FieldNorms, Grid, GrowthWeight, Kappa, KappaBounds,
    KernelParams, Topology, ValidationReport,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid parameters (bad grid, bad bounds, bad config).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The requested route cannot represent this query at all.
    #[error("unsupported route: {0}")]
    UnsupportedRoute(String),

    /// The plain route diverges here; a specific other route is required.
    #[error("route required: use the {needed} route ({why})")]
    RouteRequired { needed: &'static str, why: String },

    /// Quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// Explicit time step above the stability limit.
    #[error("CFL violation: dt = {dt} exceeds admissible {admissible}")]
    CflViolation { dt: f64, admissible: f64 },

    /// The growth gate rejected a backward solve.
    #[error("backward-ill-posed: growth gate failed (A_est trace {trace:?})")]
    BackwardIllPosed {
        report: Box<analytic::GateReport>,
        trace: Vec<f64>,
    },

    /// Not enough usable data for an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Fixed-point iteration diverged.
    #[error("iteration diverged: {0}")]
    IterationDiverged(String),
}
