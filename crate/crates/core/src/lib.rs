//! Boundary-preserving simulation of the stochastic SIS epidemic model.
//!
//! The core of the crate is the logarithmic corrected Milstein (LCM) scheme:
//! a Milstein step on `log I` with a truncation that keeps every state inside
//! `(0, N)` for any step size, while retaining strong order one. Around it
//! sit a direct Milstein baseline, coupled Brownian paths for pathwise error
//! estimates, and the Monte Carlo experiments that check convergence,
//! extinction, persistence and truncation frequency.

pub mod analysis;
pub mod error;
pub mod export;
pub mod model;
pub mod paths;
pub mod schemes;

pub use analysis::{
    classify_dynamics, count_crossings, dynamics_survey, fit_rate, milstein_failure_rates,
    strong_error, strong_error_with_norm, truncation_table, BaselineFailures, DynamicsThresholds,
    DynamicsVerdict, ErrorNorm, ErrorTable, Expectation, ParameterSet, RateFit, TruncationEntry,
    VerdictKind,
};
pub use error::{Error, Result};
pub use model::{ExtinctionCase, ModelParams, RegimeReport, ReproductionNumbers, LAMBDA_TOL};
pub use paths::{BrownianGrid, LevyAreaIncrement};
pub use schemes::{
    lcm_simulate, lcm_step, milstein_direct_simulate, milstein_direct_step, SchemeKind,
    SchemeParams, Trajectory,
};
