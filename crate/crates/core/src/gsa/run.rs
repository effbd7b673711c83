use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::error::Error;
use crate::gsa::physics::{self, Particle};
use crate::gsa::GsaConfig;
use crate::objectives::{EvalError, EvalRecord, Objective};
use crate::random::seeded;
use crate::space::{ParamVector, SearchSpace};

/// What to do when an evaluation keeps failing.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FailurePolicy {
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Abort the run instead of assigning a penalty.
    pub strict: bool,
    /// Distance beyond the worst finite fitness seen so far.
    pub penalty_margin: f64,
    /// Penalty used before any finite fitness has been observed.
    pub penalty_default: f64,
}

impl Default for FailurePolicy {
    fn default() -> Self {
        Self {
            retries: 1,
            strict: false,
            penalty_margin: 1.0,
            penalty_default: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    /// Gravitational constant used for this iteration's move.
    pub g: f64,
    /// Best fitness found so far in the run.
    pub best_fitness: f64,
    /// Worst fitness in this iteration's swarm.
    pub worst_fitness: f64,
    /// Best fitness in this iteration's swarm.
    pub iteration_best: f64,
    /// Position of the run's best-so-far particle.
    pub best_position: Vec<f64>,
    pub kbest: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub best_params: ParamVector,
    pub best_fitness: f64,
    pub best_position: Vec<f64>,
    pub history: Vec<IterationRecord>,
    /// Objective calls made, retries included, cache hits excluded.
    pub evaluations: usize,
    pub cache_hits: usize,
    pub seed: u64,
}

/// Whatever a run had accumulated when it stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialRun {
    pub best_params: Option<ParamVector>,
    pub best_fitness: Option<f64>,
    pub history: Vec<IterationRecord>,
    pub evaluations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] Error),
    #[error("evaluation of particle {particle} failed at iteration {iteration}: {cause}")]
    Aborted {
        iteration: usize,
        particle: usize,
        cause: EvalError,
        partial: Box<PartialRun>,
    },
}

struct Outcome {
    result: Result<f64, EvalError>,
    attempts: u32,
    cache_hit: bool,
    duration: f64,
}

fn evaluate_one<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamVector,
    retries: u32,
) -> Outcome {
    let mut duration = 0.0;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let start = Instant::now();
        let ev = objective.evaluate_traced(params);
        duration += start.elapsed().as_secs_f64();
        let result = match ev.result {
            Ok(f) if f.is_finite() => Ok(f),
            Ok(f) => Err(EvalError::NonFinite(f)),
            Err(e) => Err(e),
        };
        if result.is_ok() || attempts > retries {
            return Outcome {
                result,
                attempts,
                cache_hit: ev.cache_hit,
                duration,
            };
        }
    }
}

/// The gravitational search driver.
#[derive(Debug, Clone)]
pub struct Gsa {
    config: GsaConfig,
    parallelism: usize,
    failure: FailurePolicy,
}

impl Gsa {
    pub fn new(config: GsaConfig) -> Self {
        Self {
            config,
            parallelism: 1,
            failure: FailurePolicy::default(),
        }
    }

    /// Evaluate up to `n` particles concurrently. Results do not depend on `n`.
    pub fn with_parallelism(mut self, n: usize) -> Self {
        self.parallelism = n.max(1);
        self
    }

    pub fn with_failure_policy(mut self, policy: FailurePolicy) -> Self {
        self.failure = policy;
        self
    }

    pub fn config(&self) -> &GsaConfig {
        &self.config
    }

    pub fn run<O: Objective + ?Sized>(
        &self,
        space: &SearchSpace,
        objective: &O,
    ) -> Result<RunResult, RunError> {
        self.run_logged(space, objective, |_| {})
    }

    /// Runs the search, handing every evaluation record to `log` in
    /// (iteration, particle) order.
    pub fn run_logged<O, L>(
        &self,
        space: &SearchSpace,
        objective: &O,
        mut log: L,
    ) -> Result<RunResult, RunError>
    where
        O: Objective + ?Sized,
        L: FnMut(&EvalRecord),
    {
        let cfg = &self.config;
        cfg.validate()?;
        if objective.sense() != cfg.sense {
            return Err(Error::InvalidConfig(format!(
                "objective `{}` has sense {:?} but the run is configured to {:?}",
                objective.name(),
                objective.sense(),
                cfg.sense
            ))
            .into());
        }
        let pool = if self.parallelism > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.parallelism)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };

        let mut rng = seeded(cfg.seed);
        // With `normalize` the swarm lives in the unit cube and positions are
        // mapped onto the box only for decoding and reporting.
        let unit = space.unit_cube();
        let frame = if cfg.normalize { &unit } else { space };
        let to_box = |x: &[f64]| -> crate::Result<Vec<f64>> {
            if cfg.normalize {
                space.from_unit(x)
            } else {
                Ok(x.to_vec())
            }
        };
        let mut swarm: Vec<Particle> = (0..cfg.population)
            .map(|_| Particle::at_rest(frame.sample_uniform(&mut rng)))
            .collect();

        let mut history = Vec::with_capacity(cfg.max_iterations);
        let mut best: Option<(ParamVector, f64, Vec<f64>)> = None;
        let mut worst_seen: Option<f64> = None;
        let mut evaluations = 0usize;
        let mut cache_hits = 0usize;
        let mut last_error = None;

        for t in 0..cfg.max_iterations {
            let positions: Vec<Vec<f64>> = swarm
                .iter()
                .map(|p| to_box(&p.position))
                .collect::<Result<_, _>>()?;
            let params: Vec<ParamVector> = positions
                .iter()
                .map(|x| space.decode(x))
                .collect::<Result<_, _>>()?;

            // Evaluate the first particle of every distinct assignment concurrently,
            // then the duplicates in index order, so cache behaviour does not depend
            // on scheduling.
            let mut seen = HashSet::new();
            let mut leaders = Vec::new();
            let mut followers = Vec::new();
            for (i, p) in params.iter().enumerate() {
                if seen.insert(p.cache_key()) {
                    leaders.push(i);
                } else {
                    followers.push(i);
                }
            }
            let retries = self.failure.retries;
            let eval = |i: &usize| (*i, evaluate_one(objective, &params[*i], retries));
            let mut outcomes: Vec<Option<Outcome>> = (0..swarm.len()).map(|_| None).collect();
            let led: Vec<(usize, Outcome)> = match &pool {
                Some(pool) => pool.install(|| leaders.par_iter().map(eval).collect()),
                None => leaders.iter().map(eval).collect(),
            };
            for (i, o) in led.into_iter().chain(followers.iter().map(eval)) {
                outcomes[i] = Some(o);
            }
            let outcomes: Vec<Outcome> = outcomes
                .into_iter()
                .map(|o| o.expect("every particle evaluated"))
                .collect();

            for o in &outcomes {
                if o.cache_hit {
                    cache_hits += 1;
                } else {
                    evaluations += o.attempts as usize;
                }
                if let Ok(f) = o.result {
                    worst_seen = Some(match worst_seen {
                        Some(w) if !cfg.sense.better(w, f) => w,
                        _ => f,
                    });
                }
            }

            if let Some((i, err)) = outcomes
                .iter()
                .enumerate()
                .find_map(|(i, o)| o.result.as_ref().err().map(|e| (i, e.clone())))
            {
                if self.failure.strict {
                    for (k, o) in outcomes.iter().enumerate().take(i) {
                        log(&record(
                            t,
                            k,
                            &params[k],
                            o,
                            o.result.clone().unwrap_or(f64::NAN),
                        ));
                    }
                    return Err(RunError::Aborted {
                        iteration: t,
                        particle: i,
                        cause: err,
                        partial: Box::new(PartialRun {
                            best_fitness: best.as_ref().map(|b| b.1),
                            best_params: best.map(|b| b.0),
                            history,
                            evaluations,
                            seed: cfg.seed,
                        }),
                    });
                }
                last_error = Some((t, i, err));
            }

            let penalty = match worst_seen {
                Some(w) => cfg.sense.worsen(w, self.failure.penalty_margin),
                None => cfg.sense.worsen(0.0, self.failure.penalty_default),
            };
            for (i, (p, o)) in swarm.iter_mut().zip(&outcomes).enumerate() {
                p.fitness = o.result.clone().unwrap_or(penalty);
                log(&record(t, i, &params[i], o, p.fitness));
                if o.result.is_ok()
                    && best
                        .as_ref()
                        .is_none_or(|b| cfg.sense.better(p.fitness, b.1))
                {
                    best = Some((params[i].clone(), p.fitness, positions[i].clone()));
                }
            }

            let fitnesses: Vec<f64> = swarm.iter().map(|p| p.fitness).collect();
            let step = physics::advance(&mut swarm, &fitnesses, t, cfg, frame, &mut rng)?;

            // Only reachable in non-strict mode when nothing has succeeded yet.
            let (best_fitness, best_position) = match &best {
                Some(b) => (b.1, b.2.clone()),
                None => (penalty, Vec::new()),
            };
            history.push(IterationRecord {
                t,
                g: step.g,
                best_fitness,
                worst_fitness: step.worst,
                iteration_best: step.best,
                best_position,
                kbest: step.kbest,
            });
        }

        match best {
            Some((best_params, best_fitness, best_position)) => Ok(RunResult {
                best_params,
                best_fitness,
                best_position,
                history,
                evaluations,
                cache_hits,
                seed: cfg.seed,
            }),
            None => {
                let (iteration, particle, cause) =
                    last_error.expect("a run without successes has failures");
                Err(RunError::Aborted {
                    iteration,
                    particle,
                    cause,
                    partial: Box::new(PartialRun {
                        best_params: None,
                        best_fitness: None,
                        history,
                        evaluations,
                        seed: cfg.seed,
                    }),
                })
            }
        }
    }
}

fn record(t: usize, i: usize, params: &ParamVector, o: &Outcome, fitness: f64) -> EvalRecord {
    EvalRecord {
        iteration: t,
        particle: i,
        params: params.clone(),
        fitness,
        duration: o.duration,
        cache_hit: o.cache_hit,
        attempt: o.attempts,
        error: o.result.as_ref().err().map(ToString::to_string),
    }
}
