//! Strict dominance, iterated elimination and strict equilibria.
//!
//! Payoffs are multilinear, so `q'` beats `q` against every mixed opponent
//! profile iff it does so against every pure one. Dominance tests therefore
//! only ever enumerate opponent vertices, and the search for a mixed dominator
//! is a finite linear program over them.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::{opponent_profiles, GameDef, PAYOFF_MARGIN};
use crate::{Error, Result};

/// Optimal LP gaps at or below this are treated as "no dominator".
pub const LP_MARGIN: f64 = 1e-9;

fn check_strategy(game: &GameDef, i: usize, q: &[f64]) -> Result<()> {
    if i >= game.num_players() {
        return Err(Error::invalid(format!("player {i} out of range")));
    }
    if q.len() != game.strategy_counts()[i] {
        return Err(Error::invalid(format!(
            "strategy vector has length {}, player {i} has {} strategies",
            q.len(),
            game.strategy_counts()[i]
        )));
    }
    if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("strategy vector must be nonnegative"));
    }
    Ok(())
}

fn full_sets(game: &GameDef) -> Vec<Vec<usize>> {
    game.strategy_counts().iter().map(|&s| (0..s).collect()).collect()
}

/// Smallest gap `u_i(α_{-i}; better) − u_i(α_{-i}; worse)` over opponent
/// profiles drawn from `sets`.
fn min_gap(game: &GameDef, i: usize, worse: &[f64], better: &[f64], sets: &[Vec<usize>]) -> f64 {
    opponent_profiles(sets, i)
        .map(|mut prof| {
            game.payoff_against_pure(i, &mut prof, better)
                - game.payoff_against_pure(i, &mut prof, worse)
        })
        .fold(f64::INFINITY, f64::min)
}

/// True iff `better` strictly dominates `worse` for player `i`: it earns more
/// than `PAYOFF_MARGIN` extra against every pure opponent profile.
pub fn dominates(game: &GameDef, i: usize, worse: &[f64], better: &[f64]) -> Result<bool> {
    check_strategy(game, i, worse)?;
    check_strategy(game, i, better)?;
    Ok(min_gap(game, i, worse, better, &full_sets(game)) > PAYOFF_MARGIN)
}

/// A mixed strategy that strictly dominates a given one, with its guaranteed
/// payoff gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominator {
    /// Full-length mixed strategy, supported on the surviving set.
    pub strategy: Vec<f64>,
    /// Worst-case payoff advantage over surviving opponent profiles.
    pub margin: f64,
}

/// Searches for a mixed strategy on player `i`'s surviving set that strictly
/// dominates `q` against all surviving opponent profiles.
///
/// Solves `max ε` s.t. `Σ_μ y_μ u_i(α_{-i}; μ) − u_i(α_{-i}; q) ≥ ε` for every
/// surviving `α_{-i}`, with `y` in the simplex over `survivors[i]`. The margin
/// of the returned strategy is recomputed exactly from the payoff tensor
/// rather than taken from the solver.
pub fn find_dominator(
    game: &GameDef,
    i: usize,
    q: &[f64],
    survivors: &[Vec<usize>],
) -> Result<Option<Dominator>> {
    check_strategy(game, i, q)?;
    if survivors.len() != game.num_players()
        || survivors
            .iter()
            .zip(game.strategy_counts())
            .any(|(s, &n)| s.is_empty() || s.iter().any(|&a| a >= n))
    {
        return Err(Error::invalid("surviving sets do not fit the game"));
    }
    if q.iter()
        .enumerate()
        .any(|(a, &w)| w > 0.0 && !survivors[i].contains(&a))
    {
        return Err(Error::invalid("q must be supported on the surviving set"));
    }

    let own = &survivors[i];
    let bound = 2.0
        * game
            .player_tensor(i)
            .iter()
            .fold(0.0f64, |m, u| m.max(u.abs()))
        + 1.0;

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let eps = lp.add_var(1.0, (-bound, bound));
    let y: Vec<_> = own.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let simplex: Vec<_> = y.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(&simplex, ComparisonOp::Eq, 1.0);

    for mut prof in opponent_profiles(survivors, i) {
        let baseline = game.payoff_against_pure(i, &mut prof, q);
        let mut row = Vec::with_capacity(own.len() + 1);
        for (&mu, &var) in own.iter().zip(&y) {
            prof[i] = mu;
            row.push((var, game.payoff(i, &prof)));
        }
        row.push((eps, -1.0));
        lp.add_constraint(&row, ComparisonOp::Ge, baseline);
    }

    let solution = lp
        .solve()
        .map_err(|e| Error::Lp(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Lp("solver interrupted before finding a solution".into()))?;
    if solution.objective() <= LP_MARGIN {
        return Ok(None);
    }

    let mut strategy = vec![0.0; q.len()];
    for (&mu, &var) in own.iter().zip(&y) {
        strategy[mu] = solution.var_value(var).max(0.0);
    }
    let total: f64 = strategy.iter().sum();
    if total <= 0.0 {
        return Err(Error::Lp("solver returned an empty mixed strategy".into()));
    }
    strategy.iter_mut().for_each(|v| *v /= total);

    let margin = min_gap(game, i, q, &strategy, survivors);
    if margin <= LP_MARGIN {
        return Ok(None);
    }
    Ok(Some(Dominator { strategy, margin }))
}

/// One pure strategy removed during iterated elimination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub player: usize,
    pub strategy: usize,
    pub dominator: Dominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationRound {
    /// Strategies removed this round, per player.
    pub removed: Vec<Removal>,
    /// Surviving sets after this round.
    pub survivors: Vec<Vec<usize>>,
}

/// Rounds that removed at least one strategy, in order. The pass that finds
/// nothing more to remove is not stored; `admissible` holds its survivors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationTrace {
    pub rounds: Vec<EliminationRound>,
    pub admissible: Vec<Vec<usize>>,
}

impl EliminationTrace {
    /// Every removal, tagged with the 1-based round in which it happened.
    pub fn removals(&self) -> impl Iterator<Item = (usize, &Removal)> {
        self.rounds
            .iter()
            .enumerate()
            .flat_map(|(r, round)| round.removed.iter().map(move |rm| (r + 1, rm)))
    }

    /// 1-based round in which `(player, strategy)` was removed.
    pub fn removal_round(&self, player: usize, strategy: usize) -> Option<usize> {
        self.removals()
            .find(|(_, rm)| rm.player == player && rm.strategy == strategy)
            .map(|(r, _)| r)
    }

    pub fn is_dominance_solvable(&self) -> bool {
        self.admissible.iter().all(|s| s.len() == 1)
    }
}

/// Iterated elimination of strictly dominated pure strategies (by pure or
/// mixed dominators), all players simultaneously each round.
pub fn iterated_elimination(game: &GameDef) -> Result<EliminationTrace> {
    let mut survivors = full_sets(game);
    let mut rounds = Vec::new();
    loop {
        let mut removed = Vec::new();
        for i in 0..game.num_players() {
            for &alpha in &survivors[i] {
                if survivors[i].len() == 1 {
                    break;
                }
                let mut q = vec![0.0; game.strategy_counts()[i]];
                q[alpha] = 1.0;
                if let Some(dominator) = find_dominator(game, i, &q, &survivors)? {
                    removed.push(Removal {
                        player: i,
                        strategy: alpha,
                        dominator,
                    });
                }
            }
        }
        if removed.is_empty() {
            break;
        }
        for rm in &removed {
            survivors[rm.player].retain(|&a| a != rm.strategy);
        }
        if survivors.iter().any(Vec::is_empty) {
            return Err(Error::Internal(
                "elimination removed every strategy of a player".into(),
            ));
        }
        rounds.push(EliminationRound {
            removed,
            survivors: survivors.clone(),
        });
    }
    Ok(EliminationTrace {
        rounds,
        admissible: survivors,
    })
}

/// True iff every unilateral pure deviation from `profile` loses more than
/// `PAYOFF_MARGIN`.
pub fn is_strict_equilibrium(game: &GameDef, profile: &[usize]) -> bool {
    let mut dev = profile.to_vec();
    (0..game.num_players()).all(|i| {
        let base = game.payoff(i, profile);
        let ok = (0..game.strategy_counts()[i])
            .filter(|&a| a != profile[i])
            .all(|a| {
                dev[i] = a;
                base - game.payoff(i, &dev) > PAYOFF_MARGIN
            });
        dev[i] = profile[i];
        ok
    })
}

/// All strict Nash equilibria, in row-major profile order.
pub fn strict_equilibria(game: &GameDef) -> Vec<Vec<usize>> {
    game.pure_profiles()
        .filter(|q| is_strict_equilibrium(game, q))
        .collect()
}
