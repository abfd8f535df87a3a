use serde::{Deserialize, Serialize};

use crate::engine::Trajectory;
use crate::stats::ols;
use crate::{Error, Result};

/// A scalar observable sampled on a trajectory's record grid. Entries may be
/// `+∞`; they serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `t,<column>` CSV rows; infinite values are written as `inf`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, column: &str) -> std::io::Result<()> {
        writeln!(out, "t,{column}")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// `d_KL(q, X_i(t))` at every recorded time.
///
/// Uses the recorded scores when present, so that probabilities that
/// underflowed to zero still give finite divergences.
pub fn kl_series(traj: &Trajectory, i: usize, q: &[f64]) -> Result<TimeSeries> {
    if traj.states.first().is_none_or(|x| i >= x.num_players() || x.component(i).len() != q.len()) {
        return Err(Error::invalid(format!(
            "reference strategy does not match player {i} of the trajectory"
        )));
    }
    let values = (0..traj.len())
        .map(|k| {
            let logs = traj.log_prob(k, i);
            let kl: f64 = q
                .iter()
                .zip(&logs)
                .filter(|(qa, _)| **qa > 0.0)
                .map(|(&qa, &lx)| qa * (qa.ln() - lx))
                .sum();
            if kl.is_nan() { f64::INFINITY } else { kl.max(0.0) }
        })
        .collect();
    Ok(TimeSeries {
        times: traj.times.clone(),
        values,
    })
}

/// Least-squares `(slope, intercept)` of the finite entries with
/// `t ∈ [T/2, T]`, `T` the last recorded time.
pub fn kl_growth_slope(series: &TimeSeries) -> Result<(f64, f64)> {
    let half = series.final_time() / 2.0;
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, v)| **t >= half && v.is_finite())
        .map(|(t, v)| (*t, *v))
        .unzip();
    ols(&x, &y).ok_or_else(|| {
        Error::UndefinedResult(format!(
            "slope needs two finite points in the second half of the horizon, found {}",
            x.len()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MixedProfile;

    fn constant_trajectory(x: MixedProfile, n: usize) -> Trajectory {
        Trajectory {
            times: (0..n).map(|k| k as f64).collect(),
            states: vec![x; n],
            scores: None,
            rates: vec![1.0],
            seed: 0,
            config_hash: String::new(),
            projections: 0,
            steps: n,
        }
    }

    #[test]
    fn constant_trajectory_at_q() {
        let q = vec![0.3, 0.7];
        let t = constant_trajectory(MixedProfile::new(vec![q.clone()]).unwrap(), 5);
        let s = kl_series(&t, 0, &q).unwrap();
        assert!(s.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn boundary_states_are_infinite() {
        let t = constant_trajectory(MixedProfile::pure(&[2], &[1]).unwrap(), 4);
        let s = kl_series(&t, 0, &[1.0, 0.0]).unwrap();
        assert!(s.values.iter().all(|v| v.is_infinite()));
        assert!(matches!(kl_growth_slope(&s), Err(Error::UndefinedResult(_))));
    }

    #[test]
    fn slopes() {
        let times: Vec<f64> = (0..=10).map(f64::from).collect();
        let line = TimeSeries {
            values: times.iter().map(|t| 1.0 + 2.5 * t).collect(),
            times: times.clone(),
        };
        let (b, a) = kl_growth_slope(&line).unwrap();
        assert!((b - 2.5).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
        let flat = TimeSeries {
            values: vec![4.0; times.len()],
            times: times.clone(),
        };
        assert_eq!(kl_growth_slope(&flat).unwrap().0, 0.0);
        let mut holes = line.clone();
        holes.values[7] = f64::INFINITY;
        assert!((kl_growth_slope(&holes).unwrap().0 - 2.5).abs() < 1e-12);
    }
}
