//! Analytic test functions with known global minima of zero.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::gsa::Sense;
use crate::objectives::{EvalError, Objective};
use crate::space::ParamVector;

/// `sum x_i^2`, minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10 n + sum (x_i^2 - 10 cos(2 pi x_i))`, minimum 0 at the origin.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// `sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`, minimum 0 at all ones.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkFn {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl BenchmarkFn {
    pub const ALL: [BenchmarkFn; 3] = [
        BenchmarkFn::Sphere,
        BenchmarkFn::Rastrigin,
        BenchmarkFn::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkFn::Sphere => "sphere",
            BenchmarkFn::Rastrigin => "rastrigin",
            BenchmarkFn::Rosenbrock => "rosenbrock",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            BenchmarkFn::Sphere => sphere(x),
            BenchmarkFn::Rastrigin => rastrigin(x),
            BenchmarkFn::Rosenbrock => rosenbrock(x),
        }
    }

    /// Conventional search box.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            BenchmarkFn::Sphere => (-5.0, 5.0),
            BenchmarkFn::Rastrigin => (-5.12, 5.12),
            BenchmarkFn::Rosenbrock => (-2.048, 2.048),
        }
    }
}

impl FromStr for BenchmarkFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchmarkFn::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                format!("unknown function `{s}` (expected sphere, rastrigin or rosenbrock)")
            })
    }
}

/// A benchmark function exposed as a minimizing objective over any space.
#[derive(Debug, Clone)]
pub struct Benchmark {
    func: BenchmarkFn,
}

impl Benchmark {
    pub fn new(func: BenchmarkFn) -> Self {
        Self { func }
    }
}

impl Objective for Benchmark {
    fn name(&self) -> &str {
        self.func.name()
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        Ok(self.func.eval(&params.to_f64_vec()))
    }
}
