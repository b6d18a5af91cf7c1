//! Error taxonomy shared by the geometry, gauge, evolution, and diagnostics
//! layers.
//!
//! Only genuinely exceptional conditions are errors. Terminal events of a
//! simulation run (floors, horizon, NaN detection) are *data* — see
//! [`crate::evolution::Termination`] — and the evolution loop maps the
//! errors below into that taxonomy instead of propagating them.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the core kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The induced metric has `g_tt >= 0` somewhere: the state does not
    /// describe a time-like immersion at that grid point.
    #[error("state is not time-like: g_tt = {g_tt:.3e} >= 0 at grid point {index}")]
    NonTimelike { index: usize, g_tt: f64 },

    /// A radius field reached zero or below; the evolution equations are
    /// hyperbolic only while every radius is strictly positive.
    #[error("radius r_{factor} = {value:.3e} <= 0 at grid point {index}")]
    NonPositiveRadius {
        factor: usize,
        index: usize,
        value: f64,
    },

    /// The spatial parametrization is degenerate (`g_yy` below threshold),
    /// so tangential projections and reparametrization are ill-defined.
    #[error("degenerate parametrization: g_yy = {g_yy:.3e} at grid point {index}")]
    DegenerateParametrization { index: usize, g_yy: f64 },

    /// A sphere-factor sample vector has the wrong dimension or is not a
    /// unit vector (tolerance 1e-12).
    #[error("sphere sample mismatch for factor {factor}: {reason}")]
    DimensionMismatch { factor: usize, reason: String },

    /// A time-series operation needs more records than are available.
    #[error("insufficient history: need at least {needed} records, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    /// A computed quantity is NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// The CFL time step fell below the configured floor.
    #[error("time step {dt:.3e} fell below floor {floor:.3e}")]
    DtBelowFloor { dt: f64, floor: f64 },

    /// Shape parameters violate the structural requirements (at least one
    /// sphere factor, every sphere dimension >= 1, z-target dimension >= 1).
    #[error("invalid shape: {reason}")]
    InvalidShape { reason: String },

    /// Field data violates the state invariants (grid size, positivity,
    /// finiteness, consistent array lengths).
    #[error("invalid field state: {reason}")]
    InvalidState { reason: String },
}
