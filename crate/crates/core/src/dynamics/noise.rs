use serde::{Deserialize, Deserializer, Serialize};

use crate::game::MixedProfile;
use crate::{Error, Result};

/// State-dependent payoff-noise coefficients `η_{iα}(x)`.
///
/// Implementors must be continuous and bounded on the simplex with
/// `η_{iα}(x) ≤ bound(i)`.
pub trait Noise: Send + Sync {
    /// Writes `η_{iα}(x)` for every strategy `α` of player `i` into `out`.
    fn eta(&self, x: &MixedProfile, i: usize, out: &mut [f64]);

    /// Upper bound `η_i` of `η_{iα}` over all strategies and states.
    fn bound(&self, i: usize) -> f64;

    /// True when `η` does not depend on the state.
    fn is_constant(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `η_{iα}(x) = c_{iα}`.
    Constant,
    /// `η_{iα}(x) = c_{iα}(1 − x_{iα})`: no noise on a strategy a player
    /// already uses exclusively.
    OwnPureVanishing,
}

/// One of the two shipped noise families with coefficients `c_{iα}`.
///
/// Coefficients broadcast: a single row applies to every player and a row
/// with a single entry applies to every strategy of that player. In JSON the
/// coefficients may also be a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    #[serde(deserialize_with = "scalar_or_table")]
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarOrTable {
    Scalar(f64),
    Row(Vec<f64>),
    Table(Vec<Vec<f64>>),
}

fn scalar_or_table<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    Ok(match ScalarOrTable::deserialize(d)? {
        ScalarOrTable::Scalar(c) => vec![vec![c]],
        ScalarOrTable::Row(r) => r.into_iter().map(|c| vec![c]).collect(),
        ScalarOrTable::Table(t) => t,
    })
}

impl NoiseModel {
    /// The same coefficient on every strategy of every player.
    pub fn uniform(kind: NoiseKind, c: f64) -> Self {
        Self {
            kind,
            coefficients: vec![vec![c]],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::uniform(NoiseKind::Constant, c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `c_{iα}` with broadcasting applied.
    pub fn coefficient(&self, i: usize, alpha: usize) -> f64 {
        let row = if self.coefficients.len() == 1 {
            &self.coefficients[0]
        } else {
            &self.coefficients[i]
        };
        if row.len() == 1 {
            row[0]
        } else {
            row[alpha]
        }
    }

    /// Checks the coefficient table against a state shape.
    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        let rows = self.coefficients.len();
        if rows != 1 && rows != shape.len() {
            return Err(Error::invalid(format!(
                "noise.coefficients: expected 1 or {} rows, found {rows}",
                shape.len()
            )));
        }
        for (r, row) in self.coefficients.iter().enumerate() {
            let widths: Vec<usize> = if rows == 1 { shape.to_vec() } else { vec![shape[r]] };
            if row.len() != 1 && widths.iter().any(|&w| w != row.len()) {
                return Err(Error::invalid(format!(
                    "noise.coefficients[{r}]: expected 1 or {} entries, found {}",
                    widths[0],
                    row.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::invalid(format!(
                    "noise.coefficients[{r}]: coefficients must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }

    /// Per-player coefficient rows expanded to the given shape.
    pub fn expanded(&self, shape: &[usize]) -> Vec<Vec<f64>> {
        shape
            .iter()
            .enumerate()
            .map(|(i, &s)| (0..s).map(|a| self.coefficient(i, a)).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().flatten().all(|&c| c == 0.0)
    }
}

impl Noise for NoiseModel {
    fn eta(&self, x: &MixedProfile, i: usize, out: &mut [f64]) {
        let xi = x.component(i);
        for (a, e) in out.iter_mut().enumerate() {
            let c = self.coefficient(i, a);
            *e = match self.kind {
                NoiseKind::Constant => c,
                NoiseKind::OwnPureVanishing => c * (1.0 - xi[a]),
            };
        }
    }

    fn bound(&self, i: usize) -> f64 {
        let row = if self.coefficients.len() == 1 {
            &self.coefficients[0]
        } else {
            &self.coefficients[i]
        };
        row.iter().fold(0.0, |m: f64, &c| m.max(c))
    }

    fn is_constant(&self) -> bool {
        self.kind == NoiseKind::Constant
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let a: NoiseModel = serde_json::from_str(r#"{"kind": "constant", "coefficients": 2.5}"#).unwrap();
        assert_eq!(a.coefficient(3, 7), 2.5);
        let b: NoiseModel =
            serde_json::from_str(r#"{"kind": "own_pure_vanishing", "coefficients": [[1, 2], [3, 4]]}"#)
                .unwrap();
        assert_eq!(b.coefficient(1, 0), 3.0);
        assert_eq!(b.bound(0), 2.0);
        let c: NoiseModel = serde_json::from_str(r#"{"kind": "constant", "coefficients": [1, 2]}"#).unwrap();
        assert_eq!(c.coefficient(1, 1), 2.0);
        assert!(c.validate(&[2, 3]).is_ok());
        assert!(b.validate(&[2, 3]).is_err());
        assert!(NoiseModel::constant(-1.0).validate(&[2]).is_err());
    }

    #[test]
    fn vanishing_noise_is_zero_on_own_pure_strategy() {
        let noise = NoiseModel::uniform(NoiseKind::OwnPureVanishing, 1.5);
        let x = MixedProfile::pure(&[3, 2], &[2, 0]).unwrap();
        let mut eta = vec![0.0; 3];
        noise.eta(&x, 0, &mut eta);
        assert_eq!(eta, vec![1.5, 1.5, 0.0]);
        assert_eq!(noise.bound(0), 1.5);
    }
}
