//! Event-triggered average consensus over weight-balanced digraphs.
//!
//! The crate simulates multi-agent single-integrator networks where agents
//! broadcast their state only when a local, state-dependent trigger fires.
//! Three trigger laws are provided, all parameterized by a single scalar
//! `lambda` in `[0, 1]`:
//!
//! - `lambda = 1`: trigger derived from the squared-deviation certificate
//!   `V1 = 1/2 (x - xbar)^T (x - xbar)`,
//! - `lambda = 0`: trigger derived from the Laplacian quadratic certificate
//!   `V2 = 1/2 x^T L^T x`,
//! - intermediate `lambda`: the convex blend of the two.
//!
//! Trajectories are exactly piecewise linear (broadcast states are frozen
//! between events), so the simulator localizes every event by closed-form
//! quadratic root solving instead of numerical integration. A fixed-step
//! oracle is provided as an independent cross-check.
//!
//! The [`clock_sync`] module maps the WSN clock synchronization problem
//! (drift-only local clocks, virtual clocks `T_i = y_i t`) onto the same
//! engine via modified drifts `y_i = gamma_i alpha_i`.

pub mod clock_sync;
pub mod engine;
pub mod graph;
pub mod lyapunov;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod triggers;

pub use engine::{run_event_driven, run_fixed_step_oracle, SimState, Trace};
pub use graph::{Digraph, Spectrum};
pub use triggers::TriggerLaw;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid trigger configuration: {0}")]
    InvalidLaw(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error(
        "event safety cap of {cap} exceeded at t = {t}; this would indicate a Zeno-like fault"
    )]
    SafetyCap { cap: usize, t: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
