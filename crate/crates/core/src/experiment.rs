//! Batch experiments: each kind maps to exactly one library entry point and
//! produces a JSON report, an optional CSV time series and a compact
//! summary.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    extinction_report, generator_consistency_probe, lyapunov_certificate, rate_adjusted_erfc_bound,
    stability_probe, BoundInputs, Coordinate, ExpLogit, ExtinctionTarget, InverseY, LyapunovFamily,
    PotentialV, ScalarField, StabilityParams,
};
use crate::dynamics::DynamicsSpec;
use crate::engine::{run_ensemble, simulate_ensemble, SimConfig, SimulationJob, Statistic};
use crate::game::{iterated_elimination, rosenthal_potential, strict_equilibria, GameDef, MixedProfile};
use crate::{Error, Result};

/// Test functions selectable from a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Coordinate { player: usize, strategy: usize },
    InverseY { anchor: Vec<usize>, rates: Vec<f64> },
    ExpLogit { anchor: Vec<usize>, exponents: Vec<f64> },
    /// `V − V(anchor)` for the Rosenthal potential.
    Potential { anchor: Vec<usize> },
}

impl FieldSpec {
    pub fn build(&self, game: &GameDef) -> Result<Box<dyn ScalarField>> {
        let counts = game.strategy_counts();
        let check_anchor = |anchor: &[usize]| -> Result<()> {
            if anchor.len() != counts.len() || anchor.iter().zip(counts).any(|(&a, &s)| a >= s) {
                return Err(Error::invalid(format!("params.function.anchor: {anchor:?} is not a pure profile")));
            }
            Ok(())
        };
        Ok(match self {
            Self::Coordinate { player, strategy } => {
                if *player >= counts.len() || *strategy >= counts[*player] {
                    return Err(Error::invalid("params.function: coordinate outside the game"));
                }
                Box::new(Coordinate { player: *player, strategy: *strategy })
            }
            Self::InverseY { anchor, rates } => {
                check_anchor(anchor)?;
                if !(rates.len() == 1 || rates.len() == counts.len()) {
                    return Err(Error::invalid("params.function.rates: need one rate or one per player"));
                }
                Box::new(InverseY { anchor: anchor.clone(), rates: rates.clone() })
            }
            Self::ExpLogit { anchor, exponents } => {
                check_anchor(anchor)?;
                if counts.iter().any(|&s| s != 2) {
                    return Err(Error::invalid("params.function: exp_logit needs two strategies per player"));
                }
                if !(exponents.len() == 1 || exponents.len() == counts.len()) {
                    return Err(Error::invalid("params.function.exponents: need one value or one per player"));
                }
                Box::new(ExpLogit { anchor: anchor.clone(), exponents: exponents.clone() })
            }
            Self::Potential { anchor } => {
                check_anchor(anchor)?;
                let potential = rosenthal_potential(game)?;
                let baseline = potential.at_pure(anchor);
                Box::new(PotentialV { potential, baseline })
            }
        })
    }
}

/// An experiment kind with its parameters. The master seed and the horizon
/// always come from the simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Simulate,
    Ensemble {
        runs: usize,
    },
    Eliminate,
    Equilibria,
    Extinction {
        runs: usize,
        m: f64,
    },
    Stability {
        equilibrium: Vec<usize>,
        delta: f64,
        stay_radius: f64,
        tol: f64,
        runs: usize,
    },
    Bound {
        m: f64,
        h: f64,
        v: f64,
        eta: f64,
        strategies: usize,
        t: f64,
        #[serde(default = "unit_rate")]
        rate: f64,
    },
    Lyapunov {
        equilibrium: Vec<usize>,
        family: LyapunovFamily,
        samples: usize,
        delta: f64,
    },
    GeneratorProbe {
        function: FieldSpec,
        point: MixedProfile,
        h: f64,
        runs: usize,
    },
}

fn unit_rate() -> f64 {
    1.0
}

pub const KINDS: [&str; 9] = [
    "simulate",
    "ensemble",
    "eliminate",
    "equilibria",
    "extinction",
    "stability",
    "bound",
    "lyapunov",
    "generator-probe",
];

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Ensemble { .. } => "ensemble",
            Self::Eliminate => "eliminate",
            Self::Equilibria => "equilibria",
            Self::Extinction { .. } => "extinction",
            Self::Stability { .. } => "stability",
            Self::Bound { .. } => "bound",
            Self::Lyapunov { .. } => "lyapunov",
            Self::GeneratorProbe { .. } => "generator-probe",
        }
    }

    /// Whether results depend on the random seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Self::Simulate
                | Self::Ensemble { .. }
                | Self::Extinction { .. }
                | Self::Stability { .. }
                | Self::Lyapunov { .. }
                | Self::GeneratorProbe { .. }
        )
    }

    /// Whether the kind simulates or evaluates a dynamic.
    pub fn needs_dynamics(&self) -> bool {
        !matches!(self, Self::Eliminate | Self::Equilibria | Self::Bound { .. })
    }

    pub fn needs_game(&self) -> bool {
        !matches!(self, Self::Bound { .. })
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: &'static str,
    pub report: Value,
    /// CSV time series, when the kind has one.
    pub csv: Option<String>,
    /// A few headline numbers.
    pub summary: Value,
}

fn to_json<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::Internal(format!("serialising a report: {e}")))
}

fn require<'a>(dynamics: Option<&'a DynamicsSpec>) -> Result<&'a DynamicsSpec> {
    dynamics.ok_or_else(|| Error::invalid("dynamics: required for this kind"))
}

fn require_game(game: Option<&GameDef>) -> Result<&GameDef> {
    game.ok_or_else(|| Error::invalid("game: required for this kind"))
}

/// Runs `experiment`; the game may only be omitted for `bound`, the
/// dynamics for `eliminate`, `equilibria` and `bound`.
pub fn run_experiment(
    experiment: &Experiment,
    game: Option<&GameDef>,
    dynamics: Option<&DynamicsSpec>,
    sim: &SimConfig,
) -> Result<ExperimentOutput> {
    let kind = experiment.kind();
    let (report, csv, summary) = match experiment {
        Experiment::Simulate => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let traj = SimulationJob::new(game, spec, sim.clone()).simulate(sim.seed)?;
            let mut csv = Vec::new();
            traj.write_csv(&mut csv)
                .map_err(|e| Error::Internal(format!("writing CSV: {e}")))?;
            let report = json!({
                "seed": traj.seed,
                "config_hash": traj.config_hash,
                "steps": traj.steps,
                "records": traj.len(),
                "projections": traj.projections,
                "final_time": traj.final_time(),
                "terminal": traj.terminal(),
            });
            let summary = json!({"final_time": traj.final_time(), "terminal": traj.terminal()});
            (report, Some(String::from_utf8_lossy(&csv).into_owned()), summary)
        }
        Experiment::Ensemble { runs } => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let job = SimulationJob::new(game, spec, sim.clone());
            job.validate()?;
            let stats: Vec<Statistic> = game
                .strategy_counts()
                .iter()
                .enumerate()
                .flat_map(|(i, &s)| (0..s).map(move |a| Statistic::terminal_prob(i, a)))
                .collect();
            let result = run_ensemble(&job, *runs, sim.seed, &stats)?;
            let summary = json!({"runs": result.runs, "stats": result.stats});
            (to_json(&result)?, None, summary)
        }
        Experiment::Eliminate => {
            let trace = iterated_elimination(require_game(game)?)?;
            let summary = json!({
                "rounds": trace.rounds.len(),
                "admissible": trace.admissible,
                "dominance_solvable": trace.is_dominance_solvable(),
            });
            (to_json(&trace)?, None, summary)
        }
        Experiment::Equilibria => {
            let eqs = strict_equilibria(require_game(game)?);
            let summary = json!({"count": eqs.len(), "strict_equilibria": eqs});
            (json!({"strict_equilibria": eqs}), None, summary)
        }
        Experiment::Extinction { runs, m } => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let trace = iterated_elimination(game)?;
            let targets = ExtinctionTarget::from_trace(&trace, game);
            if targets.is_empty() {
                return Err(Error::invalid("game: no strictly dominated strategies to track"));
            }
            let job = SimulationJob::new(game, spec, sim.clone());
            job.validate()?;
            let trajectories = simulate_ensemble(&job, *runs, sim.seed)?;
            let report = extinction_report(&trajectories, game, spec, &targets, *m)?;
            let mut csv = String::from("t,player,strategy,kl\n");
            for s in &report.strategies {
                for (t, v) in s.mean_kl.times.iter().zip(&s.mean_kl.values) {
                    csv.push_str(&format!("{t},{},{},{v}\n", s.player, s.strategy));
                }
            }
            let summary = Value::Array(
                report
                    .strategies
                    .iter()
                    .map(|s| {
                        json!({
                            "player": s.player,
                            "strategy": s.strategy,
                            "empirical": s.empirical,
                            "bound": s.bound.map(|b| b.value),
                            "slope_mean": s.slope_mean,
                        })
                    })
                    .collect(),
            );
            (to_json(&report)?, Some(csv), summary)
        }
        Experiment::Stability { equilibrium, delta, stay_radius, tol, runs } => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let params = StabilityParams {
                equilibrium: equilibrium.clone(),
                delta: *delta,
                stay_radius: *stay_radius,
                tol: *tol,
                horizon: sim.horizon,
                dt: sim.dt,
                runs: *runs,
                seed: sim.seed,
            };
            let est = stability_probe(spec, game, &params)?;
            let summary = json!({"estimate": est.estimate, "interval": est.interval});
            (to_json(&est)?, None, summary)
        }
        Experiment::Bound { m, h, v, eta, strategies, t, rate } => {
            let inputs = BoundInputs { m: *m, h: *h, v: *v, eta: *eta, strategies: *strategies, t: *t };
            let bound = rate_adjusted_erfc_bound(&inputs, *rate)?;
            let report = json!({"inputs": inputs, "rate": rate, "bound": bound});
            (report, None, to_json(&bound)?)
        }
        Experiment::Lyapunov { equilibrium, family, samples, delta } => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let cert = lyapunov_certificate(spec, game, equilibrium, family, *samples, *delta, sim.seed)?;
            let summary = json!({"k": cert.k, "certified": cert.certified, "violations": cert.violation_count});
            (to_json(&cert)?, None, summary)
        }
        Experiment::GeneratorProbe { function, point, h, runs } => {
            let (game, spec) = (require_game(game)?, require(dynamics)?);
            let f = function.build(game)?;
            let probe = generator_consistency_probe(spec, game, f.as_ref(), point, *h, *runs, sim.seed)?;
            let summary = json!({
                "analytic": probe.analytic,
                "empirical": probe.empirical,
                "stderr": probe.stderr,
            });
            (to_json(&probe)?, None, summary)
        }
    };
    Ok(ExperimentOutput { kind, report, csv, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{NoiseModel, Variant};
    use crate::game::tests::prisoners_dilemma;

    #[test]
    fn kinds_round_trip() {
        let e: Experiment = serde_json::from_value(json!({"kind": "generator-probe",
            "function": {"kind": "coordinate", "player": 0, "strategy": 1},
            "point": [[0.5, 0.5], [0.5, 0.5]], "h": 0.001, "runs": 10}))
        .unwrap();
        assert_eq!(e.kind(), "generator-probe");
        assert!(e.is_stochastic() && e.needs_dynamics());
        let back: Experiment = serde_json::from_value(serde_json::to_value(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        let bound: Experiment =
            serde_json::from_value(json!({"kind": "bound", "m": 2, "h": 0, "v": 1, "eta": 1, "strategies": 2, "t": 4}))
                .unwrap();
        assert!(!bound.needs_game());
        assert!(serde_json::from_value::<Experiment>(json!({"kind": "ensemble", "runs": 3, "typo": 1})).is_err());
        for k in ["simulate", "eliminate", "equilibria"] {
            let e: Experiment = serde_json::from_value(json!({"kind": k})).unwrap();
            assert!(KINDS.contains(&e.kind()));
        }
    }

    #[test]
    fn deterministic_kinds() {
        let g = prisoners_dilemma();
        let sim = SimConfig::default();
        let eq = run_experiment(&Experiment::Equilibria, Some(&g), None, &sim).unwrap();
        assert_eq!(eq.report["strict_equilibria"], json!([[1, 1]]));
        let el = run_experiment(&Experiment::Eliminate, Some(&g), None, &sim).unwrap();
        assert_eq!(el.summary["rounds"], 1);
        assert_eq!(el.report["rounds"][0]["removed"].as_array().unwrap().len(), 2);
        let b = Experiment::Bound { m: 2.0, h: 0.0, v: 1.0, eta: 1.0, strategies: 2, t: 4.0, rate: 1.0 };
        let out = run_experiment(&b, None, None, &sim).unwrap();
        assert!((out.summary["value"].as_f64().unwrap() - 0.691_462_461_274_013_1).abs() < 1e-14);
        assert!(run_experiment(&Experiment::Simulate, Some(&g), None, &sim).is_err());
    }

    #[test]
    fn stochastic_kinds_are_reproducible() {
        let g = prisoners_dilemma();
        let spec = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(1.0));
        let sim = SimConfig { horizon: 10.0, seed: 5, ..SimConfig::default() };
        let ext = Experiment::Extinction { runs: 6, m: 2.0 };
        let a = run_experiment(&ext, Some(&g), Some(&spec), &sim).unwrap();
        let b = run_experiment(&ext, Some(&g), Some(&spec), &sim).unwrap();
        assert_eq!(a, b);
        assert!(a.csv.unwrap().starts_with("t,player,strategy,kl\n"));
        let s = run_experiment(&Experiment::Simulate, Some(&g), Some(&spec), &sim).unwrap();
        assert!(s.csv.unwrap().starts_with("t,player,strategy,prob\n"));
    }
}
