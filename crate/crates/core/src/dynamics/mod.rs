//! Drift and diffusion of the replicator dynamics and their stochastic
//! variants, evaluated pointwise on the product simplex.
//!
//! For player `i` with state `x_i`, payoffs `u_{iα}(x)`, average
//! `ū_i = Σ_β x_{iβ} u_{iβ}`, noise `η_{iα}(x)` and rate `λ_i`:
//!
//! - RD / LRD: `b_{iα} = λ_i x_{iα}(u_{iα} − ū_i)`, no diffusion.
//! - SRD / SLRD (exponential learning with noisy payoffs):
//!   `b_{iα} = λ_i x_{iα}(u_{iα} − ū_i)
//!     + ½λ_i² x_{iα}[η²_{iα}(1 − 2x_{iα}) − Σ_β η²_{iβ} x_{iβ}(1 − 2x_{iβ})]`.
//! - ASRD (aggregate shocks):
//!   `b_{iα} = x_{iα}(u_{iα} − ū_i) − x_{iα}(η²_{iα} x_{iα} − Σ_β η²_{iβ} x²_{iβ})`.
//!
//! Every stochastic variant shares the diffusion
//! `σ_{i,αβ} = λ_i x_{iα}(δ_{αβ} − x_{iβ}) η_{iβ}`, the loading of `dX_{iα}`
//! on `dW_{iβ}`. SRD1 and ASRD1 are the single-population forms for a
//! symmetric two-player game: the state is one simplex vector `x` and
//! `u_α(x) = Σ_β u_{αβ} x_β`.

mod noise;

pub use noise::{Noise, NoiseKind, NoiseModel};

use serde::{Deserialize, Deserializer, Serialize};

use crate::game::{GameDef, MixedProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    RD,
    LRD,
    SRD,
    SLRD,
    ASRD,
    SRD1,
    ASRD1,
}

impl Variant {
    pub fn is_stochastic(self) -> bool {
        !matches!(self, Variant::RD | Variant::LRD)
    }

    pub fn is_single_population(self) -> bool {
        matches!(self, Variant::SRD1 | Variant::ASRD1)
    }

    /// Variants whose drift and diffusion scale with the learning rates.
    pub fn uses_rates(self) -> bool {
        matches!(self, Variant::LRD | Variant::SLRD)
    }

    fn aggregate_shocks(self) -> bool {
        matches!(self, Variant::ASRD | Variant::ASRD1)
    }
}

/// A dynamic together with its learning rates and noise model.
///
/// `learning_rates` broadcasts like the noise coefficients: one entry applies
/// to every player. In JSON the field is `rates` and may be a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub variant: Variant,
    #[serde(rename = "rates", default = "unit_rate", deserialize_with = "scalar_or_list")]
    pub learning_rates: Vec<f64>,
    #[serde(default = "NoiseModel::zero")]
    pub noise: NoiseModel,
}

fn unit_rate() -> Vec<f64> {
    vec![1.0]
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

fn scalar_or_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Ok(match ScalarOrList::deserialize(d)? {
        ScalarOrList::Scalar(r) => vec![r],
        ScalarOrList::List(l) => l,
    })
}

impl DynamicsSpec {
    pub fn new(variant: Variant, learning_rates: Vec<f64>, noise: NoiseModel) -> Self {
        Self {
            variant,
            learning_rates,
            noise,
        }
    }

    /// Unit rates.
    pub fn with_noise(variant: Variant, noise: NoiseModel) -> Self {
        Self::new(variant, unit_rate(), noise)
    }

    /// `λ_i` as used by the dynamic: the configured rate for LRD/SLRD, 1 for
    /// every other variant.
    pub fn rate(&self, i: usize) -> f64 {
        if !self.variant.uses_rates() {
            return 1.0;
        }
        if self.learning_rates.len() == 1 {
            self.learning_rates[0]
        } else {
            self.learning_rates[i]
        }
    }

    pub fn rates(&self, num_players: usize) -> Vec<f64> {
        (0..num_players).map(|i| self.rate(i)).collect()
    }

    /// Shape of the state for this dynamic on `game`: one simplex per player,
    /// or a single simplex for the single-population variants.
    pub fn state_shape(&self, game: &GameDef) -> Vec<usize> {
        if self.variant.is_single_population() {
            vec![game.strategy_counts()[0]]
        } else {
            game.strategy_counts().to_vec()
        }
    }

    pub fn validate(&self, game: &GameDef) -> Result<()> {
        if self.variant.is_single_population() && !game.is_symmetric_two_player() {
            return Err(Error::invalid(format!(
                "dynamics.variant: {:?} needs a symmetric two-player game",
                self.variant
            )));
        }
        let shape = self.state_shape(game);
        let n = self.learning_rates.len();
        if n != 1 && n != shape.len() {
            return Err(Error::invalid(format!(
                "dynamics.rates: expected 1 or {} entries, found {n}",
                shape.len()
            )));
        }
        if self.learning_rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("dynamics.rates: rates must be positive and finite"));
        }
        self.noise.validate(&shape)
    }
}

/// Drift `b_{iα}` and per-player diffusion matrices `σ_{i,αβ}` at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentField {
    pub drift: Vec<Vec<f64>>,
    /// `diffusion[i][α][β]`: loading of `dX_{iα}` on `dW_{iβ}`.
    pub diffusion: Vec<Vec<Vec<f64>>>,
}

impl TangentField {
    /// Largest `|Σ_α b_{iα}|` and `|Σ_α σ_{i,αβ}|` over players and columns.
    pub fn tangency_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (b, sigma) in self.drift.iter().zip(&self.diffusion) {
            worst = worst.max(b.iter().sum::<f64>().abs());
            for beta in 0..b.len() {
                worst = worst.max(sigma.iter().map(|row| row[beta]).sum::<f64>().abs());
            }
        }
        worst
    }
}

fn check_state(shape: &[usize], x: &MixedProfile) -> Result<()> {
    if x.shape() != shape {
        return Err(Error::invalid(format!(
            "state shape {:?} does not match expected {:?}",
            x.shape(),
            shape
        )));
    }
    Ok(())
}

/// `u_{iα}(x)` for each population of the dynamic.
pub fn population_payoffs(single: bool, game: &GameDef, x: &MixedProfile) -> Result<Vec<Vec<f64>>> {
    if single {
        let xs = x.component(0).to_vec();
        let pair = MixedProfile::new_unchecked(vec![xs.clone(), xs]);
        Ok(vec![game.strategy_payoffs(&pair, 0)?])
    } else {
        (0..game.num_players())
            .map(|i| game.strategy_payoffs(x, i))
            .collect()
    }
}

/// Drift and diffusion of `spec.variant` at `x`.
pub fn eval_field(spec: &DynamicsSpec, game: &GameDef, x: &MixedProfile) -> Result<TangentField> {
    eval_field_with(spec, &spec.noise, game, x)
}

/// [`eval_field`] with an arbitrary noise model in place of `spec.noise`.
pub fn eval_field_with(
    spec: &DynamicsSpec,
    noise: &dyn Noise,
    game: &GameDef,
    x: &MixedProfile,
) -> Result<TangentField> {
    let variant = spec.variant;
    if variant.is_single_population() && !game.is_symmetric_two_player() {
        return Err(Error::invalid(format!(
            "{variant:?} needs a symmetric two-player game"
        )));
    }
    check_state(&spec.state_shape(game), x)?;
    let payoffs = population_payoffs(variant.is_single_population(), game, x)?;

    let mut drift = Vec::with_capacity(payoffs.len());
    let mut diffusion = Vec::with_capacity(payoffs.len());
    for (i, u) in payoffs.iter().enumerate() {
        let xi = x.component(i);
        let s = xi.len();
        let lambda = spec.rate(i);
        let avg: f64 = xi.iter().zip(u).map(|(a, b)| a * b).sum();

        let mut eta = vec![0.0; s];
        if variant.is_stochastic() {
            noise.eta(x, i, &mut eta);
        }

        let b: Vec<f64> = if variant.aggregate_shocks() {
            let mean_sq: f64 = (0..s).map(|k| eta[k] * eta[k] * xi[k] * xi[k]).sum();
            (0..s)
                .map(|a| xi[a] * (u[a] - avg) - xi[a] * (eta[a] * eta[a] * xi[a] - mean_sq))
                .collect()
        } else if variant.is_stochastic() {
            let ito = |k: usize| eta[k] * eta[k] * (1.0 - 2.0 * xi[k]);
            let mean_ito: f64 = (0..s).map(|k| ito(k) * xi[k]).sum();
            (0..s)
                .map(|a| {
                    lambda * xi[a] * (u[a] - avg)
                        + 0.5 * lambda * lambda * xi[a] * (ito(a) - mean_ito)
                })
                .collect()
        } else {
            (0..s).map(|a| lambda * xi[a] * (u[a] - avg)).collect()
        };

        let sigma: Vec<Vec<f64>> = (0..s)
            .map(|a| {
                (0..s)
                    .map(|beta| {
                        let delta = if a == beta { 1.0 } else { 0.0 };
                        lambda * xi[a] * (delta - xi[beta]) * eta[beta]
                    })
                    .collect()
            })
            .collect();
        drift.push(b);
        diffusion.push(sigma);
    }
    Ok(TangentField { drift, diffusion })
}

/// Coefficients of the score SDE `dU_{iα} = u_{iα}(X) dt + η_{iα}(X) dW_{iα}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreField {
    pub drift: Vec<Vec<f64>>,
    /// Diagonal diffusion `η_{iα}(x)`.
    pub diffusion: Vec<Vec<f64>>,
}

pub fn score_field(game: &GameDef, noise: &dyn Noise, x: &MixedProfile) -> Result<ScoreField> {
    let drift = population_payoffs(false, game, x)?;
    let diffusion = drift
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut eta = vec![0.0; u.len()];
            noise.eta(x, i, &mut eta);
            eta
        })
        .collect();
    Ok(ScoreField { drift, diffusion })
}

/// Per-player softmax `x_{iα} ∝ exp(λ_i U_{iα})`, shifted by the per-player
/// maximum before exponentiating. `rates` broadcasts from a single entry.
pub fn logit_map(scores: &[Vec<f64>], rates: &[f64]) -> MixedProfile {
    let components = scores
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let lambda = if rates.len() == 1 { rates[0] } else { rates[i] };
            logit(u, lambda)
        })
        .collect();
    MixedProfile::new_unchecked(components)
}

pub(crate) fn logit(u: &[f64], lambda: f64) -> Vec<f64> {
    let top = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut w: Vec<f64> = u.iter().map(|&v| (lambda * (v - top)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// SRD drift minus the Stratonovich correction, for constant noise.
///
/// The correction is `½ Σ_{β,γ} σ_{γβ} ∂_γ σ_{αβ}` with
/// `∂_γ σ_{αβ} = η_β[δ_{αγ}(δ_{αβ} − x_β) − x_α δ_{βγ}]`, which gives
/// `½ Σ_β η_β[σ_{αβ}(δ_{αβ} − x_β) − x_α σ_{ββ}]`. The result should equal the
/// noise-free replicator drift `x_{iα}(u_{iα} − ū_i)`.
pub fn stratonovich_drift_identity(
    game: &GameDef,
    noise: &NoiseModel,
    x: &MixedProfile,
) -> Result<Vec<Vec<f64>>> {
    if !noise.is_constant() {
        return Err(Error::Unsupported(
            "the Stratonovich identity only holds for constant noise".into(),
        ));
    }
    let spec = DynamicsSpec::with_noise(Variant::SRD, noise.clone());
    let field = eval_field(&spec, game, x)?;
    Ok(field
        .drift
        .iter()
        .zip(&field.diffusion)
        .enumerate()
        .map(|(i, (b, sigma))| {
            let xi = x.component(i);
            let s = xi.len();
            (0..s)
                .map(|a| {
                    let correction: f64 = (0..s)
                        .map(|beta| {
                            let delta = if a == beta { 1.0 } else { 0.0 };
                            noise.coefficient(i, beta)
                                * (sigma[a][beta] * (delta - xi[beta]) - xi[a] * sigma[beta][beta])
                        })
                        .sum();
                    b[a] - 0.5 * correction
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{minority_game, tests::prisoners_dilemma};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(variant: Variant, c: f64) -> DynamicsSpec {
        DynamicsSpec::with_noise(variant, NoiseModel::constant(c))
    }

    fn random_interior(rng: &mut impl Rng, shape: &[usize]) -> MixedProfile {
        MixedProfile::from_weights(
            shape
                .iter()
                .map(|&s| (0..s).map(|_| rng.random_range(0.01..1.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn random_game(rng: &mut impl Rng, shape: &[usize]) -> GameDef {
        GameDef::from_fn(shape.to_vec(), |_, _| rng.random_range(-3.0..3.0)).unwrap()
    }

    fn replicator(game: &GameDef, x: &MixedProfile) -> Vec<Vec<f64>> {
        // Independent evaluation through the mixed payoff of each vertex.
        (0..game.num_players())
            .map(|i| {
                let avg = game.mixed_payoff(x, i).unwrap();
                (0..game.strategy_counts()[i])
                    .map(|a| {
                        let mut c = x.components().to_vec();
                        c[i] = vec![0.0; c[i].len()];
                        c[i][a] = 1.0;
                        let ua = game.mixed_payoff(&MixedProfile::new_unchecked(c), i).unwrap();
                        x.component(i)[a] * (ua - avg)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn rd_examples() {
        let g = prisoners_dilemma();
        let vertex = MixedProfile::pure(&[2, 2], &[0, 1]).unwrap();
        let f = eval_field(&spec(Variant::RD, 0.0), &g, &vertex).unwrap();
        assert!(f.drift.iter().flatten().all(|&b| b == 0.0));

        let solo = GameDef::new(vec![2], vec![1.0, 0.0]).unwrap();
        let x = MixedProfile::uniform(&[2]);
        let f = eval_field(&spec(Variant::RD, 0.0), &solo, &x).unwrap();
        assert_eq!(f.drift[0], vec![0.25, -0.25]);
    }

    #[test]
    fn srd_minus_asrd_is_ito_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let shape = [3, 2];
            let g = random_game(&mut rng, &shape);
            let x = random_interior(&mut rng, &shape);
            let c: Vec<Vec<f64>> = shape
                .iter()
                .map(|&s| (0..s).map(|_| rng.random_range(0.0..2.0)).collect())
                .collect();
            let noise = NoiseModel {
                kind: NoiseKind::Constant,
                coefficients: c.clone(),
            };
            let srd = eval_field(&DynamicsSpec::with_noise(Variant::SRD, noise.clone()), &g, &x).unwrap();
            let asrd = eval_field(&DynamicsSpec::with_noise(Variant::ASRD, noise), &g, &x).unwrap();
            for i in 0..2 {
                let xi = x.component(i);
                let m: f64 = (0..shape[i]).map(|b| c[i][b] * c[i][b] * xi[b]).sum();
                for a in 0..shape[i] {
                    let term = xi[a] * (0.5 * c[i][a] * c[i][a] - 0.5 * m);
                    assert!((srd.drift[i][a] - asrd.drift[i][a] - term).abs() < 1e-12);
                }
            }
            assert_eq!(srd.diffusion, asrd.diffusion);
        }
    }

    #[test]
    fn single_population_variants() {
        let g = prisoners_dilemma();
        let x = MixedProfile::new(vec![vec![0.25, 0.75]]).unwrap();
        let f = eval_field(&spec(Variant::SRD1, 0.0), &g, &x).unwrap();
        // u_C = 3/4, u_D = 5/4 + 3/4 = 2, average = 3/16 + 3/2.
        let avg = 0.25 * 0.75 + 0.75 * 2.0;
        assert!((f.drift[0][0] - 0.25 * (0.75 - avg)).abs() < 1e-15);
        let asym = GameDef::bimatrix(&[vec![1.0, 0.0], vec![0.0, 0.0]], &vec![vec![0.0; 2]; 2]).unwrap();
        assert!(matches!(
            eval_field(&spec(Variant::ASRD1, 1.0), &asym, &x),
            Err(Error::InvalidArgument(_))
        ));
        assert!(eval_field(&spec(Variant::SRD1, 1.0), &g, &MixedProfile::uniform(&[2, 2])).is_err());
    }

    #[test]
    fn score_field_examples() {
        let g = prisoners_dilemma();
        let x = MixedProfile::uniform(&[2, 2]);
        let f = score_field(&g, &NoiseModel::zero(), &x).unwrap();
        assert_eq!(f.drift[0], vec![1.5, 3.0]);
        assert!(f.diffusion.iter().flatten().all(|&e| e == 0.0));
        let constant = GameDef::from_fn(vec![2, 3], |_, _| 2.0).unwrap();
        let f = score_field(&constant, &NoiseModel::constant(1.0), &MixedProfile::uniform(&[2, 3])).unwrap();
        assert!(f.drift.iter().flatten().all(|&u| u == 2.0));
    }

    #[test]
    fn logit_examples() {
        let x = logit_map(&[vec![0.0; 3], vec![0.0; 2]], &[1.0]);
        assert_eq!(x, MixedProfile::uniform(&[3, 2]));
        let t: f64 = 1.7;
        let x = logit_map(&[vec![t, 0.0]], &[1.0]);
        assert!((x.component(0)[0] - t.exp() / (1.0 + t.exp())).abs() < 1e-15);
        let shifted = logit_map(&[vec![t + 1e3, 1e3]], &[1.0]);
        assert!(x.l1_distance(&shifted) < 1e-12);
        let extreme = logit_map(&[vec![800.0, -800.0]], &[2.0]);
        assert_eq!(extreme.component(0), &[1.0, 0.0]);
    }

    #[test]
    fn stratonovich_identity() {
        let g = prisoners_dilemma();
        let x = MixedProfile::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let rd = replicator(&g, &x);
        for c in [0.0, 1.0, 2.5] {
            let s = stratonovich_drift_identity(&g, &NoiseModel::constant(c), &x).unwrap();
            for (a, b) in s.iter().flatten().zip(rd.iter().flatten()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let vertex = MixedProfile::pure(&[2, 2], &[1, 0]).unwrap();
        let s = stratonovich_drift_identity(&g, &NoiseModel::constant(1.0), &vertex).unwrap();
        assert!(s.iter().flatten().all(|v| v.abs() < 1e-15));
        let vanishing = NoiseModel::uniform(NoiseKind::OwnPureVanishing, 1.0);
        assert!(matches!(
            stratonovich_drift_identity(&g, &vanishing, &x),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn spec_json() {
        let s: DynamicsSpec = serde_json::from_str(
            r#"{"variant": "SLRD", "rates": [0.5, 2], "noise": {"kind": "constant", "coefficients": 1}}"#,
        )
        .unwrap();
        assert_eq!(s.rate(1), 2.0);
        let srd: DynamicsSpec = serde_json::from_str(r#"{"variant": "SRD", "rates": 3}"#).unwrap();
        assert_eq!(srd.rate(0), 1.0);
        assert!(srd.noise.is_zero());
        let g = prisoners_dilemma();
        assert!(s.validate(&g).is_ok());
        let bad = DynamicsSpec::new(Variant::LRD, vec![1.0, 1.0, 1.0], NoiseModel::zero());
        assert!(bad.validate(&g).unwrap_err().to_string().contains("dynamics.rates"));
        let three = minority_game(3, 1.0, 0.0).unwrap();
        assert!(spec(Variant::SRD1, 1.0).validate(&three).is_err());
    }

    const ALL: [Variant; 5] = [Variant::RD, Variant::LRD, Variant::SRD, Variant::SLRD, Variant::ASRD];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fields_are_tangent_and_respect_faces(seed in any::<u64>(), c in 0.0f64..3.0, lambda in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = [3, 2, 2];
            let g = random_game(&mut rng, &shape);
            let mut x = random_interior(&mut rng, &shape).into_components();
            // Put the first player on a face.
            x[0][1] = 0.0;
            let x = MixedProfile::from_weights(x).unwrap();
            for kind in [NoiseKind::Constant, NoiseKind::OwnPureVanishing] {
                for v in ALL {
                    let spec = DynamicsSpec::new(v, vec![lambda], NoiseModel::uniform(kind, c));
                    let f = eval_field(&spec, &g, &x).unwrap();
                    prop_assert!(f.tangency_error() < 1e-12);
                    prop_assert_eq!(f.drift[0][1], 0.0);
                    prop_assert!(f.diffusion[0][1].iter().all(|&s| s == 0.0));
                }
            }
        }

        #[test]
        fn reductions_are_exact(seed in any::<u64>(), c in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shape = [2, 3];
            let g = random_game(&mut rng, &shape);
            let x = random_interior(&mut rng, &shape);
            let srd = eval_field(&spec(Variant::SRD, c), &g, &x).unwrap();
            let slrd = eval_field(&DynamicsSpec::new(Variant::SLRD, vec![1.0], NoiseModel::constant(c)), &g, &x).unwrap();
            prop_assert_eq!(&srd, &slrd);
            let quiet = eval_field(&spec(Variant::SRD, 0.0), &g, &x).unwrap();
            let rd = eval_field(&spec(Variant::RD, 0.0), &g, &x).unwrap();
            prop_assert_eq!(quiet.drift, rd.drift);

            // Shifting payoffs by ½c² turns aggregate shocks into SRD.
            let table: Vec<Vec<f64>> = shape
                .iter()
                .map(|&s| (0..s).map(|_| rng.random_range(0.0..c + 0.1)).collect())
                .collect();
            let noise = NoiseModel { kind: NoiseKind::Constant, coefficients: table.clone() };
            let shift: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|v| 0.5 * v * v).collect()).collect();
            let modified = g.shift_own_payoffs(&shift).unwrap();
            let srd = eval_field(&DynamicsSpec::with_noise(Variant::SRD, noise.clone()), &g, &x).unwrap();
            let asrd = eval_field(&DynamicsSpec::with_noise(Variant::ASRD, noise), &modified, &x).unwrap();
            for (a, b) in srd.drift.iter().flatten().zip(asrd.drift.iter().flatten()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn logit_output_is_a_profile(scores in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..5), 1..4), lambda in 0.01f64..10.0) {
            let x = logit_map(&scores, &[lambda]);
            for c in x.components() {
                prop_assert!(c.iter().all(|&v| v >= 0.0));
                prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
