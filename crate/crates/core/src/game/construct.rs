//! Congestion games, their Rosenthal potential, and minority games.

use serde::{Deserialize, Serialize};

use super::{contract_tensor, CongestionStructure, GameDef, MixedProfile, PureProfiles};
use crate::{Error, Result};

/// Tolerance for the exact-potential identity on single deviations.
pub const POTENTIAL_TOLERANCE: f64 = 1e-9;

/// Game in which every player picks one facility and earns
/// `facility_payoffs[α][k − 1]` when `k` players (including themselves) chose
/// facility `α`.
pub fn congestion_game(num_players: usize, facility_payoffs: &[Vec<f64>]) -> Result<GameDef> {
    if num_players == 0 {
        return Err(Error::invalid("a congestion game needs at least one player"));
    }
    if facility_payoffs.is_empty() {
        return Err(Error::invalid("a congestion game needs at least one facility"));
    }
    if let Some(a) = facility_payoffs.iter().position(|f| f.len() < num_players) {
        return Err(Error::invalid(format!(
            "facility {a} payoff must be given for loads 1..={num_players}"
        )));
    }
    let facilities = facility_payoffs.len();
    let game = GameDef::from_fn(vec![facilities; num_players], |i, q| {
        let load = q.iter().filter(|&&a| a == q[i]).count();
        facility_payoffs[q[i]][load - 1]
    })?;
    let structure = CongestionStructure {
        facility_payoffs: facility_payoffs
            .iter()
            .map(|f| f[..num_players].to_vec())
            .collect(),
    };
    Ok(game.with_congestion(structure))
}

/// Odd-`N` binary-choice game paying `win` to players on the strictly smaller
/// side and `lose` to everyone else. A lone player always counts as the
/// minority.
pub fn minority_game(num_players: usize, win: f64, lose: f64) -> Result<GameDef> {
    if num_players % 2 == 0 {
        return Err(Error::invalid(format!(
            "minority games need an odd number of players, got {num_players}"
        )));
    }
    if !(win > lose) {
        return Err(Error::invalid("the winning payoff must exceed the losing one"));
    }
    if num_players == 1 {
        return GameDef::new(vec![2], vec![win, win]);
    }
    GameDef::from_fn(vec![2; num_players], |i, q| {
        let same = q.iter().filter(|&&a| a == q[i]).count();
        if same < num_players - same {
            win
        } else {
            lose
        }
    })
}

/// A scalar function on profiles given by its values on pure profiles and
/// extended multilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFn {
    strategy_counts: Vec<usize>,
    values: Vec<f64>,
}

impl PotentialFn {
    pub fn new(strategy_counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = strategy_counts.iter().product();
        if strategy_counts.is_empty() || values.len() != expected {
            return Err(Error::invalid(format!(
                "potential needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            strategy_counts,
            values,
        })
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, x: &MixedProfile) -> Result<()> {
        if x.shape() != self.strategy_counts {
            return Err(Error::invalid("profile shape does not match the potential"));
        }
        Ok(())
    }

    pub fn at_pure(&self, profile: &[usize]) -> f64 {
        let mut idx = 0;
        for (a, s) in profile.iter().zip(&self.strategy_counts) {
            idx = idx * s + a;
        }
        self.values[idx]
    }

    /// Multilinear extension `V(x)`.
    pub fn evaluate(&self, x: &MixedProfile) -> Result<f64> {
        self.check(x)?;
        Ok(contract_tensor(&self.values, &self.strategy_counts, x.components(), None)[0])
    }

    /// `(V(x_{-i}; α))_α`, i.e. the partial gradient of `V` along player `i`.
    pub fn partial(&self, x: &MixedProfile, i: usize) -> Result<Vec<f64>> {
        self.check(x)?;
        if i >= self.strategy_counts.len() {
            return Err(Error::invalid(format!("player {i} out of range")));
        }
        Ok(contract_tensor(
            &self.values,
            &self.strategy_counts,
            x.components(),
            Some(i),
        ))
    }

    /// Largest violation of `u_i(q) − u_i(q') = −(V(q) − V(q'))` over pure
    /// profile pairs differing only in one player's strategy.
    pub fn max_deviation_error(&self, game: &GameDef) -> f64 {
        let mut worst = 0.0f64;
        for q in PureProfiles::new(&self.strategy_counts) {
            let mut dev = q.clone();
            for i in 0..q.len() {
                for a in 0..self.strategy_counts[i] {
                    if a == q[i] {
                        continue;
                    }
                    dev[i] = a;
                    let du = game.payoff(i, &q) - game.payoff(i, &dev);
                    let dv = self.at_pure(&q) - self.at_pure(&dev);
                    worst = worst.max((du + dv).abs());
                }
                dev[i] = q[i];
            }
        }
        worst
    }
}

/// Rosenthal potential `V(α) = −Σ_facilities Σ_{k=1}^{N_α} u_α(k)` of a game
/// built by [`congestion_game`], checked against the payoff tensor on every
/// single-player deviation.
pub fn rosenthal_potential(game: &GameDef) -> Result<PotentialFn> {
    let structure = game.congestion().ok_or_else(|| {
        Error::invalid("the game carries no congestion structure")
    })?;
    let counts = game.strategy_counts().to_vec();
    let facilities = structure.facility_payoffs.len();
    let values = game
        .pure_profiles()
        .map(|q| {
            let mut loads = vec![0usize; facilities];
            for &a in &q {
                loads[a] += 1;
            }
            -loads
                .iter()
                .zip(&structure.facility_payoffs)
                .map(|(&n, u)| u[..n].iter().sum::<f64>())
                .sum::<f64>()
        })
        .collect();
    let potential = PotentialFn::new(counts, values)?;
    let err = potential.max_deviation_error(game);
    if err > POTENTIAL_TOLERANCE {
        return Err(Error::Internal(format!(
            "Rosenthal potential misses a unilateral payoff difference by {err:e}"
        )));
    }
    Ok(potential)
}
