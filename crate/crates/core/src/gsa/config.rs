use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Moves `value` in the worsening direction by `amount`.
    pub fn worsen(self, value: f64, amount: f64) -> f64 {
        match self {
            Sense::Minimize => value + amount,
            Sense::Maximize => value - amount,
        }
    }
}

/// How the gravitational constant decays over iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GravitySchedule {
    /// `G(t) = G0 (1 - t / t_max)`.
    #[default]
    Linear,
    /// `G(t) = G0 (t0 / t)^beta`, with the iteration index offset by `t0`.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsaConfig {
    pub population: usize,
    pub max_iterations: usize,
    /// Initial gravitational constant, in unit-cube units when `normalize` is set.
    pub g0: f64,
    pub tau: f64,
    pub g_schedule: GravitySchedule,
    pub beta: f64,
    pub t0_gravity: f64,
    pub kbest_final: usize,
    pub sense: Sense,
    pub seed: u64,
    /// Move particles in unit-cube coordinates instead of raw box units.
    pub normalize: bool,
}

impl Default for GsaConfig {
    fn default() -> Self {
        Self {
            population: 30,
            max_iterations: 15,
            g0: 2.0,
            tau: 1e-6,
            g_schedule: GravitySchedule::Linear,
            beta: 0.5,
            t0_gravity: 1.0,
            kbest_final: 1,
            sense: Sense::Minimize,
            seed: 42,
            normalize: true,
        }
    }
}

impl GsaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population < 1 {
            return fail("population must be at least 1".into());
        }
        if self.max_iterations < 1 {
            return fail("max_iterations must be at least 1".into());
        }
        if !(self.g0.is_finite() && self.g0 > 0.0) {
            return fail(format!("g0 must be positive, got {}", self.g0));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if self.kbest_final < 1 || self.kbest_final > self.population {
            return fail(format!(
                "kbest_final must lie in [1, population={}], got {}",
                self.population, self.kbest_final
            ));
        }
        if self.g_schedule == GravitySchedule::Power {
            if !(self.beta > 0.0 && self.beta < 1.0) {
                return fail(format!(
                    "power schedule needs 0 < beta < 1, got {}",
                    self.beta
                ));
            }
            if !(self.t0_gravity.is_finite() && self.t0_gravity > 0.0) {
                return fail(format!(
                    "t0_gravity must be positive, got {}",
                    self.t0_gravity
                ));
            }
        }
        Ok(())
    }
}
