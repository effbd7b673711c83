use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use crate::gsa::Sense;
use crate::objectives::{EvalError, Evaluation, Objective};
use crate::space::ParamVector;

type Key = Vec<(bool, u64)>;

/// Caches successful fitness values keyed on the decoded parameters.
///
/// Integer values compare exactly and reals by bit pattern, so two positions
/// that round to the same integers share one underlying call. Failures are
/// not cached.
pub struct Memoized<O> {
    inner: O,
    cache: RwLock<HashMap<Key, f64>>,
    calls: AtomicUsize,
    hits: AtomicUsize,
}

pub fn memoize<O: Objective>(objective: O) -> Memoized<O> {
    Memoized::new(objective)
}

impl<O: Objective> Memoized<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: RwLock::new(HashMap::new()),
            calls: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// Calls forwarded to the wrapped objective.
    pub fn underlying_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("memo cache poisoned").len()
    }
}

impl<O: Objective> Objective for Memoized<O> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn sense(&self) -> Sense {
        self.inner.sense()
    }

    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        self.evaluate_traced(params).result
    }

    fn evaluate_traced(&self, params: &ParamVector) -> Evaluation {
        let key = params.cache_key();
        if let Some(&f) = self.cache.read().expect("memo cache poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Evaluation {
                result: Ok(f),
                cache_hit: true,
            };
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let result = self.inner.evaluate(params);
        if let Ok(f) = result {
            self.cache
                .write()
                .expect("memo cache poisoned")
                .entry(key)
                .or_insert(f);
        }
        Evaluation {
            result,
            cache_hit: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::FnObjective;
    use crate::space::SearchSpace;

    fn counting(
    ) -> Memoized<FnObjective<impl Fn(&ParamVector) -> Result<f64, EvalError> + Send + Sync>> {
        memoize(FnObjective::new(
            "sum",
            Sense::Minimize,
            |p: &ParamVector| Ok(p.to_f64_vec().iter().sum()),
        ))
    }

    #[test]
    fn identical_params_hit_cache() {
        let m = counting();
        let space = SearchSpace::classifier_head();
        let p = space.decode(&[8.0, 0.1, 110.0]).unwrap();
        let a = m.evaluate_traced(&p);
        let b = m.evaluate_traced(&p);
        assert!(!a.cache_hit);
        assert!(b.cache_hit);
        assert_eq!(a.result, b.result);
        assert_eq!(m.underlying_calls(), 1);
    }

    #[test]
    fn rounding_collisions_hit_cache() {
        let m = counting();
        let space = SearchSpace::classifier_head();
        m.evaluate(&space.decode(&[7.6, 0.5, 110.2]).unwrap())
            .unwrap();
        let hit = m.evaluate_traced(&space.decode(&[8.4, 0.5, 109.9]).unwrap());
        assert!(hit.cache_hit);
        assert_eq!(m.underlying_calls(), 1);
    }

    #[test]
    fn distinct_params_call_through() {
        let m = counting();
        let space = SearchSpace::classifier_head();
        m.evaluate(&space.decode(&[8.0, 0.5, 110.0]).unwrap())
            .unwrap();
        m.evaluate(&space.decode(&[8.0, 0.5000001, 110.0]).unwrap())
            .unwrap();
        m.evaluate(&space.decode(&[9.0, 0.5, 110.0]).unwrap())
            .unwrap();
        assert_eq!(m.underlying_calls(), 3);
        assert_eq!(m.cache_hits(), 0);
    }

    #[test]
    fn failures_are_not_cached() {
        let m = memoize(FnObjective::new(
            "fail",
            Sense::Minimize,
            |_: &ParamVector| Err(EvalError::Worker("nope".into())),
        ));
        let p = SearchSpace::classifier_head()
            .decode(&[8.0, 0.5, 110.0])
            .unwrap();
        assert!(m.evaluate(&p).is_err());
        assert!(m.evaluate(&p).is_err());
        assert_eq!(m.underlying_calls(), 2);
        assert_eq!(m.cached_len(), 0);
    }
}
