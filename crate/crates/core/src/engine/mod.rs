//! Time integration of the dynamics and seeded Monte Carlo ensembles.
//!
//! Four integrators are provided:
//!
//! - [`Integrator::ScoreSpace`]: Euler–Maruyama on the payoff scores
//!   `dU = u(X) dt + η(X) dW`, with `X = logit(U)`. The state never leaves the
//!   simplex, so no projection is needed. Reference integrator for SRD/SLRD.
//! - [`Integrator::SimplexSpace`]: Euler–Maruyama directly on `X` using the
//!   drift and diffusion of the chosen variant, followed by clamping negative
//!   entries and renormalising. The only integrator for aggregate shocks and
//!   the single-population variants.
//! - [`Integrator::DeterministicRK4`]: classical Runge–Kutta for RD/LRD.
//! - [`Integrator::DiscreteLearning`]: the round-by-round recursion
//!   `U(t+1) = U(t) + u(X(t))`, optionally with additive noise.
//!
//! Randomness comes from one ChaCha8 stream per run, seeded by
//! [`derive_seed`]`(master, run)`; each step draws one standard normal per
//! `(player, strategy)` in that order.

mod ensemble;
mod increments;
mod integrators;
mod trajectory;

pub use ensemble::{
    derive_seed, map_runs, run_ensemble, simulate_ensemble, EnsembleStats, Job, SimulationJob,
    StatSummary, Statistic,
};
pub use increments::{GaussianIncrements, Increments, RefinedIncrements};
pub use integrators::{
    euler_simplex_step, simulate_deterministic, simulate_discrete, simulate_scores,
    simulate_scores_driven, simulate_simplex, simulate_simplex_driven, project_to_simplex,
};
pub use trajectory::Trajectory;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::MixedProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ScoreSpace,
    SimplexSpace,
    #[serde(rename = "rk4", alias = "deterministic_rk4")]
    DeterministicRK4,
    #[serde(rename = "discrete", alias = "discrete_learning")]
    DiscreteLearning,
}

/// Where a simulation starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Every player mixes uniformly (all scores zero).
    #[default]
    Uniform,
    Profile(MixedProfile),
    /// Initial scores `U_{iα}(0)`; only meaningful for the score-based
    /// integrators, the others start from `logit(U)`.
    Scores(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub integrator: Integrator,
    pub record_stride: usize,
    pub seed: u64,
    pub initial: InitialState,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            dt: 1e-2,
            integrator: Integrator::ScoreSpace,
            record_stride: 10,
            seed: 0,
            initial: InitialState::Uniform,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("sim.dt: must be positive and finite"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::invalid("sim.horizon: must be finite and at least dt"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("sim.record_stride: must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps taken: the smallest `n` with `n·dt ≥ T` (up to
    /// rounding in `T/dt`).
    pub fn num_steps(&self) -> usize {
        let ratio = self.horizon / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

/// First 16 hex digits of the SHA-256 digest of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
