//! Lower bound on the probability that a dominated strategy has been driven
//! below `e^{−M}`.
//!
//! If `p_i` strictly dominates `α` with worst-case payoff gap `v_i`, then
//! `P{X_{iα}(t) < e^{−M}} ≥ ½ erfc((M − h_i(x_i) − v_i t) / (2η_i √(S_i t)))`
//! once `M < h_i(x_i) + v_i t`, where `h_i(x) = log x_α − Σ_β p_β log x_β`.
//! With learning rate `λ_i` the argument becomes
//! `(M − h_i − λ_i v_i t) / (2λ_i η_i √(S_i t))`.

use serde::{Deserialize, Serialize};

use crate::game::{opponent_profiles, GameDef};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErfcBound {
    pub value: f64,
    /// Whether `t` is past the threshold `(M − h)/(λ v)` where the bound
    /// applies.
    pub valid: bool,
    /// `(M − h)/(λ v)`; infinite when `v ≤ 0`.
    pub threshold_time: f64,
}

/// Inputs of the bound besides the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Extinction level: the event is `X_{iα} < e^{−M}`.
    pub m: f64,
    /// `h_i(x_i)` at the initial state.
    pub h: f64,
    /// Worst-case payoff gap of the dominator.
    pub v: f64,
    /// Noise bound `η_i`.
    pub eta: f64,
    /// Number of strategies `S_i`.
    pub strategies: usize,
    pub t: f64,
}

pub fn erfc_bound(inputs: &BoundInputs) -> Result<ErfcBound> {
    rate_adjusted_erfc_bound(inputs, 1.0)
}

pub fn rate_adjusted_erfc_bound(inputs: &BoundInputs, lambda: f64) -> Result<ErfcBound> {
    let BoundInputs {
        m,
        h,
        v,
        eta,
        strategies,
        t,
    } = *inputs;
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t: must be positive, got {t}")));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta: must be positive, got {eta}")));
    }
    if strategies < 1 {
        return Err(Error::invalid("strategies: must be at least 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda: must be positive, got {lambda}")));
    }
    let drift = lambda * v;
    let arg = (m - h - drift * t) / (2.0 * lambda * eta * (strategies as f64 * t).sqrt());
    let threshold_time = if drift > 0.0 {
        (m - h) / drift
    } else {
        f64::INFINITY
    };
    Ok(ErfcBound {
        value: 0.5 * libm::erfc(arg),
        valid: m < h + drift * t,
        threshold_time,
    })
}

/// `h_i(x) = log x_α − Σ_β p_β log x_β` for dominated strategy `α` and
/// dominator `p`.
pub fn dominance_entropy_gap(x: &[f64], alpha: usize, dominator: &[f64]) -> f64 {
    let cross: f64 = dominator
        .iter()
        .zip(x)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, xb)| p * xb.ln())
        .sum();
    x[alpha].ln() - cross
}

/// `v_i = min_{α_{-i}} u_i(α_{-i}; better − worse)` over pure opponent
/// profiles drawn from `opponents` (all of them when `None`).
pub fn payoff_gap(
    game: &GameDef,
    i: usize,
    worse: &[f64],
    better: &[f64],
    opponents: Option<&[Vec<usize>]>,
) -> Result<f64> {
    let counts = game.strategy_counts();
    if i >= counts.len() || worse.len() != counts[i] || better.len() != counts[i] {
        return Err(Error::invalid("strategy vectors do not match the player"));
    }
    let full: Vec<Vec<usize>> = counts.iter().map(|&s| (0..s).collect()).collect();
    let sets = opponents.unwrap_or(&full);
    Ok(opponent_profiles(sets, i)
        .map(|mut prof| {
            game.payoff_against_pure(i, &mut prof, better)
                - game.payoff_against_pure(i, &mut prof, worse)
        })
        .fold(f64::INFINITY, f64::min))
}
