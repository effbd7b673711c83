//! Gravitational search optimization for bounded black-box problems.
//!
//! The crate is organised around a handful of pieces:
//!
//! * [`space`] declares bounded continuous/integer search spaces and maps
//!   continuous optimizer positions onto decoded parameter assignments.
//! * [`gsa`] holds the gravitational search loop: fitness-derived masses, a
//!   decaying gravitational constant, kbest force aggregation and the
//!   velocity/position update.
//! * [`objectives`] defines the black-box [`Objective`] interface together with
//!   analytic benchmarks, a small deterministic neural-network trainer whose
//!   validation loss serves as a hyperparameter-tuning fitness, an external
//!   worker-process objective, and a memoizing wrapper.
//! * [`metrics`] computes binary confusion matrices and the derived
//!   precision/recall/F1 report.

pub mod baseline;
pub mod error;
pub mod gsa;
pub mod history;
pub mod metrics;
pub mod objectives;
pub mod random;
pub mod space;

pub use error::{Error, Result};
pub use gsa::{
    FailurePolicy, GravitySchedule, Gsa, GsaConfig, IterationRecord, Particle, RunError, RunResult,
    Sense,
};
pub use objectives::{EvalError, EvalRecord, Evaluation, Objective};
pub use space::{Dimension, DimensionKind, ParamValue, ParamVector, SearchSpace};
