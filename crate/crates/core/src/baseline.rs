//! Uniform random search, the reference point for comparing the optimizer
//! at equal evaluation budgets.

use crate::objectives::{EvalError, Objective};
use crate::random::seeded;
use crate::space::{ParamVector, SearchSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearchResult {
    pub best_params: ParamVector,
    pub best_fitness: f64,
    pub evaluations: usize,
}

/// Draws `budget` uniform points and keeps the best. Failed evaluations
/// count against the budget; an error is returned only if all of them fail.
pub fn random_search<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    budget: usize,
    seed: u64,
) -> Result<RandomSearchResult, EvalError> {
    let mut rng = seeded(seed);
    let sense = objective.sense();
    let mut best: Option<(ParamVector, f64)> = None;
    let mut last_err = EvalError::Protocol("zero evaluation budget".into());
    for _ in 0..budget {
        let params = space
            .decode(&space.sample_uniform(&mut rng))
            .expect("sampled position has the space's dimension");
        match objective.evaluate(&params) {
            Ok(f) if f.is_finite() => {
                if best.as_ref().is_none_or(|b| sense.better(f, b.1)) {
                    best = Some((params, f));
                }
            }
            Ok(f) => last_err = EvalError::NonFinite(f),
            Err(e) => last_err = e,
        }
    }
    best.map(|(best_params, best_fitness)| RandomSearchResult {
        best_params,
        best_fitness,
        evaluations: budget,
    })
    .ok_or(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Benchmark, BenchmarkFn};

    #[test]
    fn finds_something_reasonable_on_sphere() {
        let space = SearchSpace::uniform_box(2, -5.0, 5.0).unwrap();
        let r = random_search(&space, &Benchmark::new(BenchmarkFn::Sphere), 500, 3).unwrap();
        assert!(r.best_fitness < 0.5);
        assert_eq!(r.evaluations, 500);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let space = SearchSpace::uniform_box(2, -5.0, 5.0).unwrap();
        assert!(random_search(&space, &Benchmark::new(BenchmarkFn::Sphere), 0, 3).is_err());
    }
}
