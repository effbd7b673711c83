//! The per-iteration arithmetic of the search: gravitational constant
//! schedules, fitness-to-mass conversion, force aggregation and the
//! velocity/position update.
//!
//! Random weights are drawn from the caller's stream in a fixed order so a
//! run is fully determined by its seed:
//!
//! * forces: ascending particle `i`, then ascending attractor index `j`
//!   (members of the kbest set, skipping `i`), then dimension;
//! * kinematics: ascending particle `i`, then dimension.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::gsa::{GravitySchedule, GsaConfig, Sense};
use crate::random::UnitDraw;
use crate::space::SearchSpace;

/// One candidate solution and its gravitational state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    /// Normalized mass; passive, active and inertial masses are all equal to it.
    pub mass: f64,
}

impl Particle {
    /// A particle at rest with no fitness assigned yet.
    pub fn at_rest(position: Vec<f64>) -> Self {
        let d = position.len();
        Self {
            position,
            velocity: vec![0.0; d],
            fitness: f64::NAN,
            mass: 0.0,
        }
    }
}

/// `G0 (1 - t / t_max)`.
pub fn gravitational_constant_linear(g0: f64, t: usize, t_max: usize) -> Result<f64> {
    if t_max == 0 {
        return Err(Error::InvalidConfig("t_max must be positive".into()));
    }
    if t > t_max {
        return Err(Error::InvalidInput(format!("t={t} exceeds t_max={t_max}")));
    }
    Ok(g0 * (1.0 - t as f64 / t_max as f64))
}

/// `G(t0) (t0 / t)^beta` for `t >= t0 > 0` and `0 < beta < 1`.
pub fn gravitational_constant_power(g_t0: f64, t0: f64, t: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    if t0.is_nan() || t0 <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "t0 must be positive, got {t0}"
        )));
    }
    if t < t0 {
        return Err(Error::InvalidInput(format!("t={t} precedes t0={t0}")));
    }
    Ok(g_t0 * (t0 / t).powf(beta))
}

/// Best and worst fitness of one generation.
pub fn best_worst(fitnesses: &[f64], sense: Sense) -> Result<(f64, f64)> {
    if fitnesses.is_empty() {
        return Err(Error::InvalidInput("empty fitness list".into()));
    }
    if let Some((index, &value)) = fitnesses.iter().enumerate().find(|(_, f)| !f.is_finite()) {
        return Err(Error::NonFiniteFitness { index, value });
    }
    let min = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let max = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(match sense {
        Sense::Minimize => (min, max),
        Sense::Maximize => (max, min),
    })
}

/// Normalized masses: `m_i = (f_i - worst) / (best - worst)`, `M_i = m_i / sum(m)`.
///
/// When every fitness is equal the masses are uniform `1/N`.
pub fn compute_masses(fitnesses: &[f64], sense: Sense) -> Result<Vec<f64>> {
    let (best, worst) = best_worst(fitnesses, sense)?;
    let n = fitnesses.len();
    if best == worst {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let raw: Vec<f64> = fitnesses
        .iter()
        .map(|f| (f - worst) / (best - worst))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|m| m / total).collect())
}

/// Size of the attracting set at iteration `t`: linear from `population`
/// down to `kbest_final` at `t_max`, rounded to nearest.
pub fn kbest_size(t: usize, t_max: usize, population: usize, kbest_final: usize) -> usize {
    let lo = kbest_final.min(population);
    if t_max == 0 {
        return lo;
    }
    let frac = (t.min(t_max)) as f64 / t_max as f64;
    let k = population as f64 - (population - lo) as f64 * frac;
    (k.round() as usize).clamp(lo, population)
}

/// Force exerted by particle `j` on particle `i`, per dimension.
///
/// Scales with the inverse Euclidean distance (not its square); `tau` keeps
/// coincident particles finite.
pub fn pairwise_force(
    g: f64,
    mass_passive_i: f64,
    mass_active_j: f64,
    pos_i: &[f64],
    pos_j: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    check_len(pos_i.len(), pos_j.len())?;
    let scale = g * mass_passive_i * mass_active_j / (distance(pos_i, pos_j) + tau);
    Ok(pos_i
        .iter()
        .zip(pos_j)
        .map(|(a, b)| scale * (b - a))
        .collect())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (y - x) * (y - x))
        .sum::<f64>()
        .sqrt()
}

/// Indices of the `kbest` heaviest particles, heaviest first; ties keep index order.
pub fn kbest_indices(swarm: &[Particle], kbest: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..swarm.len()).collect();
    order.sort_by(|&a, &b| swarm[b].mass.total_cmp(&swarm[a].mass).then(a.cmp(&b)));
    order.truncate(kbest.min(swarm.len()));
    order
}

/// Randomly weighted sum of the forces the kbest set exerts on every particle.
pub fn total_force<R: UnitDraw + ?Sized>(
    swarm: &[Particle],
    g: f64,
    kbest: usize,
    tau: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let dim = swarm.first().map_or(0, |p| p.position.len());
    let mut attractor = vec![false; swarm.len()];
    for j in kbest_indices(swarm, kbest) {
        attractor[j] = true;
    }

    let mut forces = vec![vec![0.0; dim]; swarm.len()];
    for (i, pi) in swarm.iter().enumerate() {
        for (j, pj) in swarm.iter().enumerate() {
            if j == i || !attractor[j] {
                continue;
            }
            let scale = g * pi.mass * pj.mass / (distance(&pi.position, &pj.position) + tau);
            for ((f, a), b) in forces[i].iter_mut().zip(&pi.position).zip(&pj.position) {
                let w = rng.unit();
                *f += w * scale * (b - a);
            }
        }
    }
    forces
}

/// Acceleration, velocity and position update, followed by saturation into
/// the search box.
///
/// A particle of zero mass divides by `tau` instead so its acceleration stays finite.
pub fn step_kinematics<R: UnitDraw + ?Sized>(
    swarm: &mut [Particle],
    forces: &[Vec<f64>],
    tau: f64,
    rng: &mut R,
    space: &SearchSpace,
) -> Result<()> {
    check_len(swarm.len(), forces.len())?;
    for (p, f) in swarm.iter_mut().zip(forces) {
        check_len(p.position.len(), f.len())?;
        let inertia = if p.mass > 0.0 { p.mass } else { p.mass + tau };
        for ((v, x), fd) in p.velocity.iter_mut().zip(p.position.iter_mut()).zip(f) {
            let accel = fd / inertia;
            *v = rng.unit() * *v + accel;
            *x += *v;
        }
        space.clamp_in_place(&mut p.position);
    }
    Ok(())
}

/// Summary of one [`advance`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub g: f64,
    pub kbest: usize,
    pub best: f64,
    pub worst: f64,
}

/// One full move of the swarm from already-evaluated fitnesses: masses,
/// gravitational constant, kbest forces and kinematics, in that order.
pub fn advance<R: UnitDraw + ?Sized>(
    swarm: &mut [Particle],
    fitnesses: &[f64],
    t: usize,
    cfg: &GsaConfig,
    space: &SearchSpace,
    rng: &mut R,
) -> Result<Step> {
    check_len(swarm.len(), fitnesses.len())?;
    let (best, worst) = best_worst(fitnesses, cfg.sense)?;
    let masses = compute_masses(fitnesses, cfg.sense)?;
    for ((p, &f), m) in swarm.iter_mut().zip(fitnesses).zip(masses) {
        p.fitness = f;
        p.mass = m;
    }
    let g = gravity_at(cfg, t)?;
    let kbest = kbest_size(t, cfg.max_iterations, swarm.len(), cfg.kbest_final);
    let forces = total_force(swarm, g, kbest, cfg.tau, rng);
    step_kinematics(swarm, &forces, cfg.tau, rng, space)?;
    Ok(Step {
        g,
        kbest,
        best,
        worst,
    })
}

/// Gravitational constant for iteration `t` (0-based). The power schedule
/// starts its clock at `t0`, so iteration 0 uses `G0` exactly.
pub fn gravity_at(cfg: &GsaConfig, t: usize) -> Result<f64> {
    match cfg.g_schedule {
        GravitySchedule::Linear => gravitational_constant_linear(cfg.g0, t, cfg.max_iterations),
        GravitySchedule::Power => gravitational_constant_power(
            cfg.g0,
            cfg.t0_gravity,
            cfg.t0_gravity + t as f64,
            cfg.beta,
        ),
    }
}
