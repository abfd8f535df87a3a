use serde::{Deserialize, Serialize};

use super::bounds::{dominance_entropy_gap, payoff_gap, rate_adjusted_erfc_bound, BoundInputs, ErfcBound};
use super::kl::{kl_growth_slope, kl_series, TimeSeries};
use crate::dynamics::{DynamicsSpec, Noise, NoiseModel};
use crate::engine::Trajectory;
use crate::game::{EliminationTrace, GameDef};
use crate::stats::{binomial_stderr, mean_stderr};
use crate::{Error, Result};

/// A pure strategy whose extinction is tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionTarget {
    pub player: usize,
    pub strategy: usize,
    /// Full-length mixed strategy that dominates it, if known.
    pub dominator: Option<Vec<f64>>,
    /// Round of iterated elimination that removed it.
    pub round: Option<usize>,
    /// Opponent strategies still present when it was removed; `None` means
    /// all of them.
    pub opponents: Option<Vec<Vec<usize>>>,
}

impl ExtinctionTarget {
    /// One target per removal in `trace`, in elimination order.
    pub fn from_trace(trace: &EliminationTrace, game: &GameDef) -> Vec<Self> {
        let full: Vec<Vec<usize>> = game.strategy_counts().iter().map(|&s| (0..s).collect()).collect();
        trace
            .removals()
            .map(|(round, rm)| {
                let before = if round == 1 {
                    full.clone()
                } else {
                    trace.rounds[round - 2].survivors.clone()
                };
                Self {
                    player: rm.player,
                    strategy: rm.strategy,
                    dominator: Some(rm.dominator.strategy.clone()),
                    round: Some(round),
                    opponents: (round > 1).then_some(before),
                }
            })
            .collect()
    }

    /// A strategy with no known dominator.
    pub fn undominated(player: usize, strategy: usize) -> Self {
        Self {
            player,
            strategy,
            dominator: None,
            round: None,
            opponents: None,
        }
    }
}

/// What the theory promises for a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Strictly dominated in the full game: the erfc bound applies.
    Dominated,
    /// Only removed after other strategies were: extinction is predicted but
    /// the bound is not.
    IteratedOnly,
    NoGuarantee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyExtinction {
    pub player: usize,
    pub strategy: usize,
    pub guarantee: Guarantee,
    /// `e^{−M}`.
    pub threshold: f64,
    /// First recorded time with `X_{iα} < e^{−M}`, per run.
    pub first_passage: Vec<Option<f64>>,
    pub mean_terminal_mass: f64,
    /// Fraction of runs with `X_{iα}(T) < e^{−M}`.
    pub empirical: f64,
    pub empirical_stderr: f64,
    /// Average over runs of `d_KL(e_α, X_i(t)) = −log X_{iα}(t)`.
    pub mean_kl: TimeSeries,
    /// Per-run least-squares slopes of the KL series over `[T/2, T]`.
    pub slopes: Vec<f64>,
    pub slope_mean: f64,
    pub slope_stderr: f64,
    /// Worst-case payoff gap `v_i` of the dominator.
    pub payoff_gap: Option<f64>,
    pub bound: Option<ErfcBound>,
    /// `empirical ≥ bound − 3·stderr`; `None` without a bound.
    pub consistent_with_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub m: f64,
    pub runs: usize,
    pub horizon: f64,
    pub strategies: Vec<StrategyExtinction>,
}

/// Extinction statistics of each target over an ensemble.
///
/// `h_i` is taken from the first run's initial state, `η_i` is the noise
/// bound of player `i` and the bound is evaluated at the last recorded time.
pub fn extinction_report(
    trajectories: &[Trajectory],
    game: &GameDef,
    spec: &DynamicsSpec,
    targets: &[ExtinctionTarget],
    m: f64,
) -> Result<ExtinctionReport> {
    if targets.is_empty() {
        return Err(Error::invalid("targets: at least one strategy is required"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!("m: must be positive, got {m}")));
    }
    let first = trajectories
        .first()
        .ok_or_else(|| Error::invalid("trajectories: the ensemble is empty"))?;
    if spec.variant.is_single_population() {
        return Err(Error::Unsupported("extinction reports cover the multi-population dynamics".into()));
    }
    let counts = game.strategy_counts();
    let horizon = first.final_time();
    let quiet = NoiseModel::zero();
    let noise = if spec.variant.is_stochastic() { &spec.noise } else { &quiet };
    let n = trajectories.len();
    let mut strategies = Vec::with_capacity(targets.len());
    for target in targets {
        let (i, alpha) = (target.player, target.strategy);
        if i >= counts.len() || alpha >= counts[i] {
            return Err(Error::invalid(format!("targets: ({i}, {alpha}) is not a strategy of the game")));
        }
        let mut pure = vec![0.0; counts[i]];
        pure[alpha] = 1.0;
        let mut first_passage = Vec::with_capacity(n);
        let mut terminal = Vec::with_capacity(n);
        let mut below = 0usize;
        let mut slopes = Vec::with_capacity(n);
        let mut kl_sum = vec![0.0; first.len()];
        for traj in trajectories {
            if traj.len() != first.len() {
                return Err(Error::invalid("trajectories: runs must share a record grid"));
            }
            let logs: Vec<f64> = (0..traj.len()).map(|k| traj.log_prob(k, i)[alpha]).collect();
            first_passage.push(logs.iter().position(|&l| l < -m).map(|k| traj.times[k]));
            terminal.push(traj.terminal().component(i)[alpha]);
            if *logs.last().unwrap() < -m {
                below += 1;
            }
            let series = kl_series(traj, i, &pure)?;
            for (acc, v) in kl_sum.iter_mut().zip(&series.values) {
                *acc += v;
            }
            slopes.push(kl_growth_slope(&series)?.0);
        }
        let empirical = below as f64 / n as f64;
        let empirical_stderr = binomial_stderr(empirical, n);
        let slope_stats = mean_stderr(&slopes);

        let gap = match &target.dominator {
            Some(p) => Some(payoff_gap(game, i, &pure, p, target.opponents.as_deref())?),
            None => None,
        };
        let full_gap = match &target.dominator {
            Some(p) => Some(payoff_gap(game, i, &pure, p, None)?),
            None => None,
        };
        let guarantee = match (full_gap, target.round) {
            (Some(v), _) if v > 0.0 => Guarantee::Dominated,
            (_, Some(_)) => Guarantee::IteratedOnly,
            _ => Guarantee::NoGuarantee,
        };
        let bound = match (&target.dominator, full_gap) {
            (Some(p), Some(v)) if guarantee == Guarantee::Dominated => {
                let h = dominance_entropy_gap(first.states[0].component(i), alpha, p);
                let lambda = if spec.variant.uses_rates() { spec.rate(i) } else { 1.0 };
                let eta = noise.bound(i);
                let inputs = BoundInputs { m, h, v, eta, strategies: counts[i], t: horizon };
                Some(if eta > 0.0 {
                    rate_adjusted_erfc_bound(&inputs, lambda)?
                } else {
                    noiseless_bound(&inputs, lambda)
                })
            }
            _ => None,
        };
        strategies.push(StrategyExtinction {
            player: i,
            strategy: alpha,
            guarantee,
            threshold: (-m).exp(),
            first_passage,
            mean_terminal_mass: mean_stderr(&terminal).mean,
            empirical,
            empirical_stderr,
            mean_kl: TimeSeries {
                times: first.times.clone(),
                values: kl_sum.into_iter().map(|v| v / n as f64).collect(),
            },
            slopes,
            slope_mean: slope_stats.mean,
            slope_stderr: slope_stats.stderr,
            payoff_gap: gap,
            consistent_with_bound: bound.map(|b| empirical >= b.value - 3.0 * empirical_stderr),
            bound,
        });
    }
    Ok(ExtinctionReport {
        m,
        runs: n,
        horizon,
        strategies,
    })
}

/// The `η → 0` limit of the bound: a step from 0 to 1 at the threshold time.
fn noiseless_bound(inputs: &BoundInputs, lambda: f64) -> ErfcBound {
    let drift = lambda * inputs.v;
    let valid = inputs.m < inputs.h + drift * inputs.t;
    ErfcBound {
        value: if valid { 1.0 } else { 0.0 },
        valid,
        threshold_time: if drift > 0.0 { (inputs.m - inputs.h) / drift } else { f64::INFINITY },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Variant;
    use crate::engine::{simulate_ensemble, InitialState, Integrator, SimConfig, SimulationJob};
    use crate::game::{iterated_elimination, tests::prisoners_dilemma, MixedProfile};

    fn pd_report(spec: &DynamicsSpec, sim: SimConfig, runs: usize, m: f64) -> ExtinctionReport {
        let g = prisoners_dilemma();
        let trace = iterated_elimination(&g).unwrap();
        let targets = ExtinctionTarget::from_trace(&trace, &g);
        let job = SimulationJob::new(&g, spec, sim);
        let trajs = simulate_ensemble(&job, runs, 17).unwrap();
        extinction_report(&trajs, &g, spec, &targets, m).unwrap()
    }

    #[test]
    fn deterministic_run() {
        let rd = DynamicsSpec::with_noise(Variant::RD, NoiseModel::zero());
        let sim = SimConfig { horizon: 20.0, integrator: Integrator::DeterministicRK4, ..SimConfig::default() };
        let report = pd_report(&rd, sim, 1, 3.0);
        assert_eq!(report.strategies.len(), 2);
        for s in &report.strategies {
            assert_eq!(s.guarantee, Guarantee::Dominated);
            assert_eq!(s.payoff_gap, Some(1.0));
            let t = s.first_passage[0].unwrap();
            assert!((0.0..=20.0).contains(&t));
            assert_eq!(s.empirical, 1.0);
            let b = s.bound.unwrap();
            // h = 0 at the uniform start, v = 1: valid after t = 3.
            assert_eq!(b.threshold_time, 3.0);
            assert!(b.valid && b.value == 1.0);
            assert_eq!(s.consistent_with_bound, Some(true));
            assert!(s.mean_kl.values.iter().all(|&v| v >= 0.0));
            // −log X_C grows at least at rate v = 1 along the deterministic path.
            assert!(s.slope_mean >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn noisy_ensemble_respects_the_bound() {
        let srd = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(1.0));
        let sim = SimConfig { horizon: 30.0, ..SimConfig::default() };
        let report = pd_report(&srd, sim, 50, 3.0);
        for s in &report.strategies {
            assert!(s.bound.unwrap().valid);
            assert_eq!(s.consistent_with_bound, Some(true));
            assert!(s.slope_mean >= 1.0 - 3.0 * s.slope_stderr);
            assert_eq!(s.first_passage.len(), 50);
        }
    }

    #[test]
    fn undominated_targets_are_flagged() {
        let g = prisoners_dilemma();
        let srd = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(1.0));
        let sim = SimConfig {
            horizon: 5.0,
            initial: InitialState::Profile(MixedProfile::uniform(&[2, 2])),
            ..SimConfig::default()
        };
        let trajs = simulate_ensemble(&SimulationJob::new(&g, &srd, sim), 4, 1).unwrap();
        let report = extinction_report(&trajs, &g, &srd, &[ExtinctionTarget::undominated(0, 1)], 2.0).unwrap();
        let s = &report.strategies[0];
        assert_eq!(s.guarantee, Guarantee::NoGuarantee);
        assert!(s.bound.is_none() && s.consistent_with_bound.is_none());
        assert!(extinction_report(&trajs, &g, &srd, &[], 2.0).is_err());
        assert!(extinction_report(&trajs, &g, &srd, &[ExtinctionTarget::undominated(0, 2)], 2.0).is_err());
    }

    #[test]
    fn iterated_targets_carry_their_round() {
        let row = vec![vec![4.0, 3.0, 1.0], vec![3.0, 2.0, 5.0], vec![1.0, 0.0, 0.0]];
        let col = vec![vec![4.0, 3.0, 1.0], vec![3.0, 2.0, 1.0], vec![1.0, 5.0, 0.0]];
        let g = GameDef::bimatrix(&row, &col).unwrap();
        let trace = iterated_elimination(&g).unwrap();
        let targets = ExtinctionTarget::from_trace(&trace, &g);
        assert_eq!(targets.len(), 4);
        let b = targets.iter().find(|t| t.player == 0 && t.strategy == 1).unwrap();
        assert_eq!(b.round, Some(2));
        assert_eq!(b.opponents.as_ref().unwrap()[1], vec![0, 1]);
        let c = targets.iter().find(|t| t.player == 0 && t.strategy == 2).unwrap();
        assert!(c.round == Some(1) && c.opponents.is_none());

        let srd = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(0.5));
        let sim = SimConfig { horizon: 5.0, ..SimConfig::default() };
        let trajs = simulate_ensemble(&SimulationJob::new(&g, &srd, sim), 3, 2).unwrap();
        let report = extinction_report(&trajs, &g, &srd, &targets, 2.0).unwrap();
        let rb = report.strategies.iter().find(|s| s.player == 0 && s.strategy == 1).unwrap();
        assert_eq!(rb.guarantee, Guarantee::IteratedOnly);
        assert!(rb.bound.is_none() && rb.payoff_gap.unwrap() > 0.0);
    }
}
