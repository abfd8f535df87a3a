use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrators::{simulate_deterministic, simulate_discrete, simulate_scores, simulate_simplex};
use super::{Integrator, SimConfig, Trajectory};
use crate::dynamics::{DynamicsSpec, NoiseModel, Variant};
use crate::game::{GameDef, MixedProfile};
use crate::stats::mean_stderr;
use crate::{Error, Result};

/// Seed of run `run` under `master`: SplitMix64 applied to
/// `master + (run + 1)·γ`, with `γ` the 64-bit golden-ratio increment.
pub fn derive_seed(master: u64, run: u64) -> u64 {
    let mut z = master.wrapping_add(run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(run, seed)` for `run = 0..n_runs` in parallel and returns the
/// results in run order. The first failing run (by index) is reported.
pub fn map_runs<T, F>(n_runs: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    if n_runs == 0 {
        return Err(Error::invalid("runs: at least one run is required"));
    }
    let results: Vec<Result<T>> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let seed = derive_seed(master_seed, run as u64);
            f(run, seed).map_err(|e| Error::RunFailed {
                run,
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Something that can produce one trajectory per `(run, seed)`.
pub trait Job: Sync {
    fn run(&self, run: usize, seed: u64) -> Result<Trajectory>;
}

impl<F> Job for F
where
    F: Fn(usize, u64) -> Result<Trajectory> + Sync,
{
    fn run(&self, run: usize, seed: u64) -> Result<Trajectory> {
        self(run, seed)
    }
}

/// A dynamic on a game simulated with a fixed configuration; each run only
/// changes the seed.
#[derive(Debug, Clone)]
pub struct SimulationJob<'a> {
    pub game: &'a GameDef,
    pub spec: &'a DynamicsSpec,
    pub sim: SimConfig,
}

impl<'a> SimulationJob<'a> {
    pub fn new(game: &'a GameDef, spec: &'a DynamicsSpec, sim: SimConfig) -> Self {
        Self { game, spec, sim }
    }

    /// Checks that the integrator can simulate the variant.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.spec.validate(self.game)?;
        let v = self.spec.variant;
        let ok = match self.sim.integrator {
            Integrator::ScoreSpace | Integrator::DiscreteLearning => {
                matches!(v, Variant::RD | Variant::LRD | Variant::SRD | Variant::SLRD)
            }
            Integrator::SimplexSpace => true,
            Integrator::DeterministicRK4 => matches!(v, Variant::RD | Variant::LRD),
        };
        if !ok {
            return Err(Error::invalid(format!(
                "sim.integrator: {:?} cannot simulate {v:?}",
                self.sim.integrator
            )));
        }
        Ok(())
    }

    /// Simulates with an explicit seed.
    pub fn simulate(&self, seed: u64) -> Result<Trajectory> {
        self.validate()?;
        let cfg = SimConfig {
            seed,
            ..self.sim.clone()
        };
        let quiet = NoiseModel::zero();
        let noise = if self.spec.variant.is_stochastic() {
            &self.spec.noise
        } else {
            &quiet
        };
        let rates = self.spec.rates(self.game.num_players());
        match cfg.integrator {
            Integrator::ScoreSpace => simulate_scores(self.game, noise, &rates, &cfg),
            Integrator::SimplexSpace => simulate_simplex(self.spec, self.game, &cfg),
            Integrator::DeterministicRK4 => simulate_deterministic(self.spec, self.game, &cfg),
            Integrator::DiscreteLearning => simulate_discrete(self.game, noise, &rates, &cfg),
        }
    }
}

impl Job for SimulationJob<'_> {
    fn run(&self, _run: usize, seed: u64) -> Result<Trajectory> {
        self.simulate(seed)
    }
}

/// All trajectories of an ensemble, in run order.
pub fn simulate_ensemble(job: &dyn Job, n_runs: usize, master_seed: u64) -> Result<Vec<Trajectory>> {
    map_runs(n_runs, master_seed, |run, seed| job.run(run, seed))
}

/// A named scalar extracted from each trajectory.
pub struct Statistic {
    pub name: String,
    extract: Box<dyn Fn(&Trajectory) -> f64 + Send + Sync>,
}

impl Statistic {
    pub fn new(name: impl Into<String>, extract: impl Fn(&Trajectory) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            extract: Box::new(extract),
        }
    }

    /// Terminal `X_{iα}(T)`, named `x_{i}_{α}`.
    pub fn terminal_prob(i: usize, alpha: usize) -> Self {
        Self::new(format!("x_{i}_{alpha}"), move |t: &Trajectory| {
            t.terminal().component(i)[alpha]
        })
    }

    pub fn evaluate(&self, t: &Trajectory) -> f64 {
        (self.extract)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Aggregated Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub runs: usize,
    pub seed: u64,
    pub stats: BTreeMap<String, StatSummary>,
    pub run_seeds: Vec<u64>,
    pub terminal_states: Vec<MixedProfile>,
}

impl EnsembleStats {
    pub fn from_trajectories(trajectories: &[Trajectory], master_seed: u64, statistics: &[Statistic]) -> Self {
        let stats = statistics
            .iter()
            .map(|s| {
                let values: Vec<f64> = trajectories.iter().map(|t| s.evaluate(t)).collect();
                let m = mean_stderr(&values);
                (
                    s.name.clone(),
                    StatSummary {
                        mean: m.mean,
                        stderr: m.stderr,
                        count: values.len(),
                    },
                )
            })
            .collect();
        Self {
            runs: trajectories.len(),
            seed: master_seed,
            stats,
            run_seeds: trajectories.iter().map(|t| t.seed).collect(),
            terminal_states: trajectories.iter().map(|t| t.terminal().clone()).collect(),
        }
    }
}

/// Simulates `n_runs` seeded runs of `job` and summarises `statistics`.
pub fn run_ensemble(
    job: &dyn Job,
    n_runs: usize,
    master_seed: u64,
    statistics: &[Statistic],
) -> Result<EnsembleStats> {
    let trajectories = simulate_ensemble(job, n_runs, master_seed)?;
    Ok(EnsembleStats::from_trajectories(&trajectories, master_seed, statistics))
}
