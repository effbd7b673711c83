//! Gravitational search.
//!
//! Each iteration evaluates every particle, turns fitness into normalized
//! masses, lets the heaviest `kbest` particles pull on the rest with a force
//! scaled by a decaying gravitational constant, and moves the swarm.

mod config;
pub mod physics;
mod run;

pub use config::{GravitySchedule, GsaConfig, Sense};
pub use physics::Particle;
pub use run::{FailurePolicy, Gsa, IterationRecord, PartialRun, RunError, RunResult};
