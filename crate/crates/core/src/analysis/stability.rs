use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lyapunov::sample_near_pure;
use crate::dynamics::{DynamicsSpec, Variant};
use crate::engine::{derive_seed, map_runs, InitialState, Integrator, SimConfig, SimulationJob};
use crate::game::{is_strict_equilibrium, GameDef, MixedProfile};
use crate::stats::{wilson_interval, Z_95};
use crate::{Error, Result};

/// Settings of a stability probe around a strict equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityParams {
    /// Pure profile (one strategy per population of the dynamic).
    pub equilibrium: Vec<usize>,
    /// Starts are drawn with `‖x₀ − q‖₁ ≤ delta`.
    pub delta: f64,
    /// A run must keep `‖X(t) − q‖₁ ≤ stay_radius` at every step.
    pub stay_radius: f64,
    /// and end with `‖X(T) − q‖₁ ≤ tol`.
    pub tol: f64,
    pub horizon: f64,
    pub dt: f64,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub equilibrium: MixedProfile,
    pub delta: f64,
    pub stay_radius: f64,
    pub tol: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    pub runs: usize,
    /// Runs that never left the stay radius.
    pub stayed: usize,
    /// Runs that stayed and ended within `tol`.
    pub successes: usize,
    pub estimate: f64,
    /// Wilson 95% interval.
    pub interval: (f64, f64),
    pub seed: u64,
}

/// The integrator used for a variant: score space for SRD/SLRD, RK4 for
/// the deterministic dynamics, simplex-space Euler–Maruyama otherwise.
pub fn default_integrator(variant: Variant) -> Integrator {
    match variant {
        Variant::SRD | Variant::SLRD => Integrator::ScoreSpace,
        Variant::RD | Variant::LRD => Integrator::DeterministicRK4,
        Variant::ASRD | Variant::SRD1 | Variant::ASRD1 => Integrator::SimplexSpace,
    }
}

/// Estimates the probability that a run started near `q` stays in the
/// stay-radius neighbourhood for the whole horizon and ends within `tol`
/// of `q`. Every step is checked, not only recorded ones.
pub fn stability_probe(spec: &DynamicsSpec, game: &GameDef, params: &StabilityParams) -> Result<StabilityEstimate> {
    let shape = spec.state_shape(game);
    let q = &params.equilibrium;
    if q.len() != shape.len() || q.iter().zip(&shape).any(|(&a, &s)| a >= s) {
        return Err(Error::invalid(format!("equilibrium: {q:?} does not fit state shape {shape:?}")));
    }
    let strict = if spec.variant.is_single_population() {
        is_strict_equilibrium(game, &[q[0], q[0]])
    } else {
        is_strict_equilibrium(game, q)
    };
    if !strict {
        return Err(Error::invalid(format!("equilibrium: {q:?} is not a strict equilibrium")));
    }
    if !(params.delta > 0.0) {
        return Err(Error::invalid("delta: must be positive so that runs start in the interior"));
    }
    if !(params.delta < params.stay_radius) {
        return Err(Error::invalid("delta: must be smaller than stay_radius"));
    }
    if !(params.tol > 0.0) {
        return Err(Error::invalid("tol: must be positive"));
    }
    let integrator = default_integrator(spec.variant);
    let base = SimConfig {
        horizon: params.horizon,
        dt: params.dt,
        integrator,
        record_stride: 1,
        seed: 0,
        initial: InitialState::Uniform,
    };
    SimulationJob::new(game, spec, base.clone()).validate()?;
    let target = MixedProfile::pure(&shape, q)?;
    let outcomes = map_runs(params.runs, params.seed, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        let start = sample_near_pure(&mut rng, &shape, q, params.delta);
        let sim = SimConfig {
            initial: InitialState::Profile(start),
            ..base.clone()
        };
        let traj = SimulationJob::new(game, spec, sim).simulate(seed)?;
        let stayed = traj.states.iter().all(|x| x.l1_distance(&target) <= params.stay_radius);
        Ok((stayed, stayed && traj.terminal().l1_distance(&target) <= params.tol))
    })?;
    let stayed = outcomes.iter().filter(|o| o.0).count();
    let successes = outcomes.iter().filter(|o| o.1).count();
    Ok(StabilityEstimate {
        equilibrium: target,
        delta: params.delta,
        stay_radius: params.stay_radius,
        tol: params.tol,
        horizon: params.horizon,
        integrator,
        runs: params.runs,
        stayed,
        successes,
        estimate: successes as f64 / params.runs as f64,
        interval: wilson_interval(successes, params.runs, Z_95),
        seed: params.seed,
    })
}
