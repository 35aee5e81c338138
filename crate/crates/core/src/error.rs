//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter set violates its documented invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Network description failed validation (dangling edges, duplicate
    /// ids, quiescent state above critical current, ...).
    #[error("network validation failed: {0}")]
    InvalidNetwork(String),

    /// The state vector became non-finite during integration.
    #[error("integration diverged at t = {t_ns} ns (last valid time)")]
    Diverged { t_ns: f64 },

    /// The step-size controller underflowed; the system is effectively
    /// unintegrable at the requested tolerances.
    #[error("step size underflow at t = {t_ns} ns (h = {h_ns} ns)")]
    StepUnderflow { t_ns: f64, h_ns: f64 },

    /// An element produced more switching events per unit time than the
    /// configured cap allows.
    #[error("event chattering on {element} at t = {t_ns} ns ({count} events within {window_ns} ns)")]
    EventChatter {
        element: String,
        t_ns: f64,
        count: usize,
        window_ns: f64,
    },

    /// A translated network demands a physically unrealizable parameter.
    #[error("unrealizable parameter: {0}")]
    Unrealizable(String),

    /// Inputs to an analysis routine are ill-posed (e.g. zero right-hand
    /// side in the normalized least-squares error).
    #[error("analysis error: {0}")]
    Analysis(String),
}
