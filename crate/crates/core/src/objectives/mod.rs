//! Black-box fitness functions.

pub mod benchmarks;
pub mod external;
pub mod memo;
pub mod trainer;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::gsa::Sense;
use crate::space::ParamVector;

pub use benchmarks::{Benchmark, BenchmarkFn};
pub use external::{ExternalObjective, WorkerCommand};
pub use memo::{memoize, Memoized};
pub use trainer::{ToyTrainer, ToyTrainerConfig};

/// Why a single evaluation produced no usable fitness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("objective returned non-finite fitness {0}")]
    NonFinite(f64),
    #[error("missing or ill-typed parameter `{0}`")]
    BadParams(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("worker timed out after {0:?}")]
    Timeout(Duration),
    #[error("worker exited: {0}")]
    WorkerExited(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("worker reported error: {0}")]
    Worker(String),
    #[error("could not launch worker: {0}")]
    Spawn(String),
}

/// Outcome of one objective call plus whether it was served from a cache.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub result: Result<f64, EvalError>,
    pub cache_hit: bool,
}

/// A fitness function over decoded parameter assignments.
///
/// Implementations must be deterministic and callable from several threads.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn sense(&self) -> Sense;

    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError>;

    /// Like [`Objective::evaluate`], also reporting cache hits.
    fn evaluate_traced(&self, params: &ParamVector) -> Evaluation {
        Evaluation {
            result: self.evaluate(params),
            cache_hit: false,
        }
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn sense(&self) -> Sense {
        (**self).sense()
    }
    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        (**self).evaluate(params)
    }
    fn evaluate_traced(&self, params: &ParamVector) -> Evaluation {
        (**self).evaluate_traced(params)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn sense(&self) -> Sense {
        (**self).sense()
    }
    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        (**self).evaluate(params)
    }
    fn evaluate_traced(&self, params: &ParamVector) -> Evaluation {
        (**self).evaluate_traced(params)
    }
}

/// Wraps a closure as an objective.
pub struct FnObjective<F> {
    name: String,
    sense: Sense,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&ParamVector) -> Result<f64, EvalError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, sense: Sense, f: F) -> Self {
        Self {
            name: name.into(),
            sense,
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&ParamVector) -> Result<f64, EvalError> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }
    fn sense(&self) -> Sense {
        self.sense
    }
    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        (self.f)(params)
    }
}

/// Audit entry for one particle evaluation during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub iteration: usize,
    pub particle: usize,
    pub params: ParamVector,
    /// Fitness used by the search; a penalty value when `error` is set.
    pub fitness: f64,
    /// Wall-clock seconds spent, summed over attempts.
    pub duration: f64,
    pub cache_hit: bool,
    /// Attempts made, at least one.
    pub attempt: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
