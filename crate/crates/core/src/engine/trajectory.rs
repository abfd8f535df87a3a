use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::game::MixedProfile;

/// One simulated path, sampled on the record grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MixedProfile>,
    /// Score tables at the recorded times, for the score-based integrators.
    pub scores: Option<Vec<Vec<Vec<f64>>>>,
    /// Rates used by `logit` to turn `scores` into `states`.
    pub rates: Vec<f64>,
    pub seed: u64,
    pub config_hash: String,
    /// Steps on which the simplex projection had to clamp a negative entry.
    pub projections: usize,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> &MixedProfile {
        self.states.last().expect("trajectories record at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories record at least the initial state")
    }

    /// `log X_{iα}` at record `k`.
    ///
    /// Computed from the scores when they were recorded, so that strategies
    /// whose probability underflows to zero still get a finite value.
    pub fn log_prob(&self, k: usize, i: usize) -> Vec<f64> {
        match &self.scores {
            Some(scores) => {
                let lambda = if self.rates.len() == 1 { self.rates[0] } else { self.rates[i] };
                let u = &scores[k][i];
                let top = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let log_total = u
                    .iter()
                    .map(|&v| (lambda * (v - top)).exp())
                    .sum::<f64>()
                    .ln();
                u.iter().map(|&v| lambda * (v - top) - log_total).collect()
            }
            None => self.states[k].component(i).iter().map(|v| v.ln()).collect(),
        }
    }

    /// Writes `t,player,strategy,prob` rows for every recorded state.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,player,strategy,prob")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            for (i, c) in x.components().iter().enumerate() {
                for (a, p) in c.iter().enumerate() {
                    writeln!(out, "{t},{i},{a},{p}")?;
                }
            }
        }
        Ok(())
    }
}
