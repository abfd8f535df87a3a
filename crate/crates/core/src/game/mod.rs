//! Finite normal-form games.
//!
//! A game with `N` players and strategy counts `S_1, …, S_N` stores one dense
//! payoff tensor per player, laid out row-major over pure profiles
//! `(α_1, …, α_N)` with the last player's index varying fastest. Mixed payoffs
//! are computed by contracting that tensor against each player's mixed
//! strategy in turn, so evaluating every `u_{iα}(x)` costs `O(N · ∏ S_j)`.

mod construct;
mod dominance;
mod info;
mod json;

pub use construct::{congestion_game, minority_game, rosenthal_potential, PotentialFn};
pub use dominance::{
    dominates, find_dominator, is_strict_equilibrium, iterated_elimination, strict_equilibria,
    Dominator,
    EliminationRound, EliminationTrace, Removal,
};
pub use info::{cross_entropy, entropy, kl_divergence};
pub use json::GameSpec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest payoff tensor (summed over players) a game may hold.
pub const MAX_TENSOR_ENTRIES: usize = 10_000_000;

/// Strict-inequality margin for payoff comparisons.
pub const PAYOFF_MARGIN: f64 = 1e-12;

/// Congestion structure retained by [`congestion_game`]: `facility_payoffs[α][k-1]`
/// is the payoff `u_α(k)` of facility `α` when `k` players share it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionStructure {
    pub facility_payoffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameDef {
    strategy_counts: Vec<usize>,
    /// Row-major strides of a pure profile into a single player's tensor.
    strides: Vec<usize>,
    num_profiles: usize,
    payoffs: Vec<f64>,
    congestion: Option<CongestionStructure>,
}

impl GameDef {
    /// Builds a game from a flat payoff vector holding `N` consecutive player
    /// tensors.
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<f64>) -> Result<Self> {
        if strategy_counts.is_empty() {
            return Err(Error::invalid("a game needs at least one player"));
        }
        if let Some(i) = strategy_counts.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("player {i} has no strategies")));
        }
        let num_profiles = strategy_counts
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::invalid("payoff tensor size overflows"))?;
        let entries = num_profiles
            .checked_mul(strategy_counts.len())
            .filter(|&e| e <= MAX_TENSOR_ENTRIES)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "payoff tensor exceeds the cap of {MAX_TENSOR_ENTRIES} entries"
                ))
            })?;
        if payoffs.len() != entries {
            return Err(Error::invalid(format!(
                "expected {entries} payoff entries, got {}",
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|u| !u.is_finite()) {
            return Err(Error::invalid("payoffs must be finite"));
        }
        let mut strides = vec![1; strategy_counts.len()];
        for k in (0..strategy_counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * strategy_counts[k + 1];
        }
        Ok(Self {
            strategy_counts,
            strides,
            num_profiles,
            payoffs,
            congestion: None,
        })
    }

    /// Builds a game by evaluating `payoff(i, profile)` on every pure profile.
    pub fn from_fn(
        strategy_counts: Vec<usize>,
        mut payoff: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        let n = strategy_counts.len();
        let profiles: Vec<Vec<usize>> = PureProfiles::new(&strategy_counts).collect();
        let mut payoffs = Vec::with_capacity(n * profiles.len());
        for i in 0..n {
            payoffs.extend(profiles.iter().map(|q| payoff(i, q)));
        }
        Self::new(strategy_counts, payoffs)
    }

    /// Two-player game from bimatrix form: `row[a][b]` pays the row player and
    /// `col[a][b]` the column player when row plays `a` and column plays `b`.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let rows = row.len();
        let cols = row.first().map_or(0, Vec::len);
        let rectangular = |m: &[Vec<f64>]| m.len() == rows && m.iter().all(|r| r.len() == cols);
        if !rectangular(row) || !rectangular(col) {
            return Err(Error::invalid("bimatrix payoffs must be equally sized rectangles"));
        }
        Self::from_fn(vec![rows, cols], |i, q| {
            if i == 0 {
                row[q[0]][q[1]]
            } else {
                col[q[0]][q[1]]
            }
        })
    }

    pub(crate) fn with_congestion(mut self, structure: CongestionStructure) -> Self {
        self.congestion = Some(structure);
        self
    }

    pub fn num_players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    pub fn congestion(&self) -> Option<&CongestionStructure> {
        self.congestion.as_ref()
    }

    /// Player `i`'s payoff tensor, flattened row-major.
    pub fn player_tensor(&self, i: usize) -> &[f64] {
        &self.payoffs[i * self.num_profiles..(i + 1) * self.num_profiles]
    }

    pub fn flat_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    /// `u_{i,α_1⋯α_N}` at a pure profile.
    pub fn payoff(&self, i: usize, profile: &[usize]) -> f64 {
        self.player_tensor(i)[self.flat_index(profile)]
    }

    pub fn pure_profiles(&self) -> PureProfiles {
        PureProfiles::new(&self.strategy_counts)
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.num_players() {
            return Err(Error::invalid(format!(
                "player {i} out of range for a {}-player game",
                self.num_players()
            )));
        }
        Ok(())
    }

    fn check_profile(&self, p: &MixedProfile) -> Result<()> {
        if p.num_players() != self.num_players()
            || p.components()
                .iter()
                .zip(&self.strategy_counts)
                .any(|(c, &s)| c.len() != s)
        {
            return Err(Error::invalid(format!(
                "profile shape {:?} does not match strategy counts {:?}",
                p.shape(),
                self.strategy_counts
            )));
        }
        Ok(())
    }

    /// Contracts player `i`'s tensor against `x_j` for every `j != keep`.
    fn contract(&self, i: usize, x: &[Vec<f64>], keep: Option<usize>) -> Vec<f64> {
        contract_tensor(self.player_tensor(i), &self.strategy_counts, x, keep)
    }

    /// Expected payoff `u_i(p)`.
    pub fn mixed_payoff(&self, p: &MixedProfile, i: usize) -> Result<f64> {
        self.check_player(i)?;
        self.check_profile(p)?;
        Ok(self.contract(i, p.components(), None)[0])
    }

    /// `u_{iα}(p) = u_i(p_{-i}; α)`.
    pub fn pure_strategy_payoff(&self, p: &MixedProfile, i: usize, alpha: usize) -> Result<f64> {
        self.check_player(i)?;
        if alpha >= self.strategy_counts[i] {
            return Err(Error::invalid(format!(
                "strategy {alpha} out of range for player {i}"
            )));
        }
        Ok(self.strategy_payoffs(p, i)?[alpha])
    }

    /// The vector `(u_{iα}(p))_α` of payoffs to each of player `i`'s pure strategies.
    pub fn strategy_payoffs(&self, p: &MixedProfile, i: usize) -> Result<Vec<f64>> {
        self.check_player(i)?;
        self.check_profile(p)?;
        Ok(self.contract(i, p.components(), Some(i)))
    }

    /// Payoff to player `i` for strategy `q_i` against the pure opponent profile
    /// in `profile` (the entry at position `i` is ignored).
    pub fn payoff_against_pure(&self, i: usize, profile: &mut [usize], q: &[f64]) -> f64 {
        let saved = profile[i];
        let mut total = 0.0;
        for (alpha, &w) in q.iter().enumerate() {
            if w != 0.0 {
                profile[i] = alpha;
                total += w * self.payoff(i, profile);
            }
        }
        profile[i] = saved;
        total
    }

    /// Sub-game keeping only the listed strategies of each player.
    pub fn restrict(&self, survivors: &[Vec<usize>]) -> Result<GameDef> {
        if survivors.len() != self.num_players()
            || survivors
                .iter()
                .zip(&self.strategy_counts)
                .any(|(s, &n)| s.is_empty() || s.iter().any(|&a| a >= n))
        {
            return Err(Error::invalid("survivor sets do not fit the game"));
        }
        let counts: Vec<usize> = survivors.iter().map(Vec::len).collect();
        GameDef::from_fn(counts, |i, q| {
            let original: Vec<usize> = q.iter().zip(survivors).map(|(&a, s)| s[a]).collect();
            self.payoff(i, &original)
        })
    }

    /// True when this is a two-player game with `u_2[a][b] = u_1[b][a]`.
    pub fn is_symmetric_two_player(&self) -> bool {
        if self.num_players() != 2 || self.strategy_counts[0] != self.strategy_counts[1] {
            return false;
        }
        let s = self.strategy_counts[0];
        (0..s).all(|a| {
            (0..s).all(|b| (self.payoff(1, &[a, b]) - self.payoff(0, &[b, a])).abs() <= PAYOFF_MARGIN)
        })
    }

    /// Copy of the game with `shift[i][α]` added to every entry of player `i`'s
    /// tensor in which `i` plays `α`.
    pub fn shift_own_payoffs(&self, shift: &[Vec<f64>]) -> Result<GameDef> {
        if shift.len() != self.num_players()
            || shift.iter().zip(&self.strategy_counts).any(|(s, &n)| s.len() != n)
        {
            return Err(Error::invalid("payoff shift shape does not match the game"));
        }
        GameDef::from_fn(self.strategy_counts.clone(), |i, q| {
            self.payoff(i, q) + shift[i][q[i]]
        })
    }
}

pub(crate) fn contract_tensor(
    tensor: &[f64],
    dims: &[usize],
    x: &[Vec<f64>],
    keep: Option<usize>,
) -> Vec<f64> {
    let mut data = tensor.to_vec();
    // Axes are contracted from last to first, so every axis after `k` that
    // is still present is `keep`.
    for k in (0..dims.len()).rev() {
        if Some(k) == keep {
            continue;
        }
        let inner = match keep {
            Some(j) if j > k => dims[j],
            _ => 1,
        };
        let width = dims[k];
        let outer = data.len() / (width * inner);
        let v = &x[k];
        let mut next = vec![0.0; outer * inner];
        for o in 0..outer {
            for (a, &w) in v.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let base = (o * width + a) * inner;
                for r in 0..inner {
                    next[o * inner + r] += w * data[base + r];
                }
            }
        }
        data = next;
    }
    data
}

/// Odometer over pure profiles in row-major order.
#[derive(Debug, Clone)]
pub struct PureProfiles {
    dims: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl PureProfiles {
    pub fn new(dims: &[usize]) -> Self {
        let current = if dims.iter().all(|&d| d > 0) {
            Some(vec![0; dims.len()])
        } else {
            None
        };
        Self {
            dims: dims.to_vec(),
            current,
        }
    }
}

impl Iterator for PureProfiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let mut k = self.dims.len();
        loop {
            if k == 0 {
                self.current = None;
                break;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < self.dims[k] {
                break;
            }
            cur[k] = 0;
        }
        Some(out)
    }
}

/// Iterates over opponent profiles drawn from per-player candidate sets,
/// leaving slot `player` at its first candidate.
pub fn opponent_profiles(sets: &[Vec<usize>], player: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    let dims: Vec<usize> = sets
        .iter()
        .enumerate()
        .map(|(j, s)| if j == player { 1 } else { s.len() })
        .collect();
    PureProfiles::new(&dims).map(move |idx| {
        idx.iter()
            .enumerate()
            .map(|(j, &k)| if j == player { 0 } else { sets[j][k] })
            .collect()
    })
}

/// A point of the product simplex `Δ = ∏ Δ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedProfile {
    components: Vec<Vec<f64>>,
}

/// Tolerance on `|Σ_α p_{iα} − 1|` accepted by [`MixedProfile::new`] before
/// renormalisation.
pub const SIMPLEX_INPUT_TOLERANCE: f64 = 1e-6;

impl MixedProfile {
    /// Validates nonnegativity and unit sums (to [`SIMPLEX_INPUT_TOLERANCE`]) and
    /// renormalises each component exactly.
    pub fn new(components: Vec<Vec<f64>>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::invalid(format!("component {i} is empty")));
            }
            if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!(
                    "component {i} has negative or non-finite entries"
                )));
            }
            let sum: f64 = c.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_INPUT_TOLERANCE {
                return Err(Error::invalid(format!("component {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self::normalized(components))
    }

    /// Normalises arbitrary nonnegative weights (each component must have a
    /// positive sum).
    pub fn from_weights(components: Vec<Vec<f64>>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if c.is_empty() || c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("component {i} has invalid weights")));
            }
            if c.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid(format!("component {i} has zero total weight")));
            }
        }
        Ok(Self::normalized(components))
    }

    fn normalized(mut components: Vec<Vec<f64>>) -> Self {
        for c in &mut components {
            let sum: f64 = c.iter().sum();
            c.iter_mut().for_each(|v| *v /= sum);
        }
        Self { components }
    }

    /// Wraps raw per-player vectors without any validation.
    ///
    /// Used for finite-difference probes of fields that extend off the simplex;
    /// the result need not be a probability profile.
    pub fn new_unchecked(components: Vec<Vec<f64>>) -> Self {
        Self { components }
    }

    pub fn uniform(strategy_counts: &[usize]) -> Self {
        Self {
            components: strategy_counts
                .iter()
                .map(|&s| vec![1.0 / s as f64; s])
                .collect(),
        }
    }

    pub fn pure(strategy_counts: &[usize], profile: &[usize]) -> Result<Self> {
        if strategy_counts.len() != profile.len()
            || profile.iter().zip(strategy_counts).any(|(&a, &s)| a >= s)
        {
            return Err(Error::invalid(format!(
                "pure profile {profile:?} does not fit strategy counts {strategy_counts:?}"
            )));
        }
        Ok(Self {
            components: strategy_counts
                .iter()
                .zip(profile)
                .map(|(&s, &a)| {
                    let mut v = vec![0.0; s];
                    v[a] = 1.0;
                    v
                })
                .collect(),
        })
    }

    pub fn num_players(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.components.iter().map(Vec::len).collect()
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn is_interior(&self) -> bool {
        self.components.iter().flatten().all(|&v| v > 0.0)
    }

    /// `‖x − y‖₁` over all players.
    pub fn l1_distance(&self, other: &MixedProfile) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .sum()
    }
}
