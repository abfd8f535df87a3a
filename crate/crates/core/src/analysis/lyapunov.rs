//! Lyapunov-type checks near strict equilibria: the potential condition for
//! potential games, adjusted-score coordinates and sampled certificates
//! `Lf ≤ −k f`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::generator::{apply_generator, ExpLogit, InverseY, PotentialV, ScalarField};
use super::kl::TimeSeries;
use crate::dynamics::{DynamicsSpec, NoiseKind, NoiseModel};
use crate::engine::Trajectory;
use crate::game::{is_strict_equilibrium, rosenthal_potential, GameDef, MixedProfile, PotentialFn};
use crate::{Error, Result};

/// `V(x(t))` on the record grid.
pub fn potential_along(traj: &Trajectory, potential: &PotentialFn) -> Result<TimeSeries> {
    let values = traj
        .states
        .iter()
        .map(|x| potential.evaluate(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        times: traj.times.clone(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConditionEntry {
    pub player: usize,
    pub strategy: usize,
    /// `V(q_{−i}, μ) − V(q)`.
    pub gap: f64,
    /// `(λ_i/2)(η²_{iμ} + η²_{i,q_i})`.
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCondition {
    pub equilibrium: Vec<usize>,
    pub entries: Vec<PotentialConditionEntry>,
    pub all_hold: bool,
}

/// Evaluates `V(q_{−i}, μ) − V(q) > (λ_i/2)(η²_{iμ} + η²_{i,q_i})` for every
/// unilateral deviation from the strict equilibrium `q`.
pub fn check_potential_condition(
    game: &GameDef,
    potential: &PotentialFn,
    q: &[usize],
    rates: &[f64],
    noise: &NoiseModel,
) -> Result<PotentialCondition> {
    if q.len() != game.num_players() || !is_strict_equilibrium(game, q) {
        return Err(Error::invalid(format!("{q:?} is not a strict equilibrium")));
    }
    if noise.kind != NoiseKind::Constant {
        return Err(Error::invalid("noise: the potential condition needs constant noise"));
    }
    noise.validate(game.strategy_counts())?;
    let base = potential.at_pure(q);
    let mut entries = Vec::new();
    let mut deviation = q.to_vec();
    for (i, &s) in game.strategy_counts().iter().enumerate() {
        let lambda = if rates.len() == 1 { rates[0] } else { rates[i] };
        for mu in (0..s).filter(|&m| m != q[i]) {
            deviation[i] = mu;
            let gap = potential.at_pure(&deviation) - base;
            let threshold =
                0.5 * lambda * (noise.coefficient(i, mu).powi(2) + noise.coefficient(i, q[i]).powi(2));
            entries.push(PotentialConditionEntry {
                player: i,
                strategy: mu,
                gap,
                threshold,
                holds: gap > threshold,
            });
        }
        deviation[i] = q[i];
    }
    Ok(PotentialCondition {
        equilibrium: q.to_vec(),
        all_hold: entries.iter().all(|e| e.holds),
        entries,
    })
}

/// Adjusted-score coordinates of a profile relative to a pure anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedCoords {
    pub anchor: Vec<usize>,
    pub rates: Vec<f64>,
    /// `Y_{i,0} = x_{i,q_i}^{λ_i} / Σ_{μ≠q_i} x_{iμ}^{λ_i}`.
    pub closeness: Vec<f64>,
    /// `Y_{iμ} = x_{iμ}^{λ_i} / Σ_{ν≠q_i} x_{iν}^{λ_i}` for `μ ≠ q_i`, in
    /// strategy order with the anchor skipped.
    pub direction: Vec<Vec<f64>>,
}

fn rate(rates: &[f64], i: usize) -> f64 {
    if rates.len() == 1 {
        rates[0]
    } else {
        rates[i]
    }
}

fn check_anchor(shape: &[usize], anchor: &[usize], rates: &[f64]) -> Result<()> {
    if anchor.len() != shape.len() || anchor.iter().zip(shape).any(|(&a, &s)| a >= s || s < 2) {
        return Err(Error::invalid(format!(
            "anchor: {anchor:?} is not a pure profile of shape {shape:?} with at least two strategies each"
        )));
    }
    if !(rates.len() == 1 || rates.len() == shape.len()) || rates.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("rates: need one positive rate or one per player"));
    }
    Ok(())
}

pub fn adjusted_coords(x: &MixedProfile, rates: &[f64], anchor: &[usize]) -> Result<AdjustedCoords> {
    check_anchor(&x.shape(), anchor, rates)?;
    if !x.is_interior() {
        return Err(Error::OutOfDomain("adjusted coordinates need an interior profile".into()));
    }
    let mut closeness = Vec::with_capacity(anchor.len());
    let mut direction = Vec::with_capacity(anchor.len());
    for (i, &q) in anchor.iter().enumerate() {
        let l = rate(rates, i);
        let c = x.component(i);
        // Work with logs so that small λ and tiny probabilities stay accurate.
        let logs: Vec<f64> = c.iter().enumerate().filter(|(m, _)| *m != q).map(|(_, v)| l * v.ln()).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|v| (v - top).exp()).sum();
        let log_norm = top + total.ln();
        closeness.push((l * c[q].ln() - log_norm).exp());
        direction.push(logs.iter().map(|v| (v - log_norm).exp()).collect());
    }
    Ok(AdjustedCoords {
        anchor: anchor.to_vec(),
        rates: rates.to_vec(),
        closeness,
        direction,
    })
}

pub fn inverse_adjusted(coords: &AdjustedCoords) -> Result<MixedProfile> {
    let shape: Vec<usize> = coords.direction.iter().map(|d| d.len() + 1).collect();
    check_anchor(&shape, &coords.anchor, &coords.rates)?;
    if coords.closeness.len() != shape.len() {
        return Err(Error::invalid("closeness: one entry per player required"));
    }
    let mut components = Vec::with_capacity(shape.len());
    for (i, &q) in coords.anchor.iter().enumerate() {
        let l = rate(&coords.rates, i);
        let y0 = coords.closeness[i];
        if !(y0 > 0.0 && y0.is_finite()) || coords.direction[i].iter().any(|&d| !(d > 0.0)) {
            return Err(Error::OutOfDomain(format!(
                "player {i}: closeness must be positive and finite and the direction interior"
            )));
        }
        // x_μ ∝ Y_μ^{1/λ} off the anchor and x_q = Y_0^{1/λ} on the same scale.
        let mut c: Vec<f64> = coords.direction[i].iter().map(|d| d.powf(1.0 / l)).collect();
        c.insert(q, y0.powf(1.0 / l));
        let total: f64 = c.iter().sum();
        components.push(c.into_iter().map(|v| v / total).collect());
    }
    Ok(MixedProfile::new_unchecked(components))
}

/// Candidate Lyapunov functions near a strict equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovFamily {
    /// `Σ_i x_{i,q_i}^{−λ_i} Σ_{μ≠q_i} x_{iμ}^{λ_i}`.
    InverseY { rates: Vec<f64> },
    /// Dyadic games only: `Σ_i (x_{i,1−q_i}/x_{i,q_i})^{a_i}`.
    ExpLogit { exponents: Vec<f64> },
    /// `V − V(q)` for the Rosenthal potential of a congestion game.
    PotentialV,
}

impl LyapunovFamily {
    pub fn field(&self, game: &GameDef, q: &[usize]) -> Result<Box<dyn ScalarField>> {
        let n = game.num_players();
        let per_player = |v: &Vec<f64>, what: &str| -> Result<()> {
            if !(v.len() == 1 || v.len() == n) || v.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                return Err(Error::invalid(format!(
                    "family.{what}: need one positive value or one per player"
                )));
            }
            Ok(())
        };
        Ok(match self {
            Self::InverseY { rates } => {
                per_player(rates, "rates")?;
                Box::new(InverseY { anchor: q.to_vec(), rates: rates.clone() })
            }
            Self::ExpLogit { exponents } => {
                per_player(exponents, "exponents")?;
                if game.strategy_counts().iter().any(|&s| s != 2) {
                    return Err(Error::invalid("family: exp_logit needs a game with two strategies per player"));
                }
                Box::new(ExpLogit { anchor: q.to_vec(), exponents: exponents.clone() })
            }
            Self::PotentialV => {
                let potential = rosenthal_potential(game)
                    .map_err(|e| Error::invalid(format!("family: potential needs a congestion game ({e})")))?;
                let baseline = potential.at_pure(q);
                Box::new(PotentialV { potential, baseline })
            }
        })
    }
}

/// A sampled point where `Lf ≤ −k f` failed for every `k > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: MixedProfile,
    pub value: f64,
    pub generator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    pub equilibrium: Vec<usize>,
    pub family: LyapunovFamily,
    pub delta: f64,
    pub samples: usize,
    /// Largest `k` with `Lf ≤ −k f` at every sample.
    pub k: f64,
    pub certified: bool,
    pub violation_count: usize,
    /// The first few violating points.
    pub violations: Vec<Violation>,
}

const REPORTED_VIOLATIONS: usize = 20;

/// An interior profile with `‖x − q‖₁ ≤ delta`, `q` pure.
///
/// Each player's component is pulled from the vertex toward an exponential
/// (flat Dirichlet) direction; the total L1 distance is uniform on `(0, δ]`.
pub fn sample_near_pure<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], q: &[usize], delta: f64) -> MixedProfile {
    let directions: Vec<Vec<f64>> = shape
        .iter()
        .map(|&s| {
            let w: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        })
        .collect();
    let spread: f64 = directions.iter().zip(q).map(|(w, &a)| 2.0 * (1.0 - w[a])).sum();
    let radius = delta * (1.0 - rng.random::<f64>());
    let scale = (radius / spread).min(1.0);
    let components = directions
        .into_iter()
        .zip(q)
        .map(|(w, &a)| {
            w.iter()
                .enumerate()
                .map(|(m, &v)| {
                    let vertex = if m == a { 1.0 } else { 0.0 };
                    vertex + scale * (v - vertex)
                })
                .collect()
        })
        .collect();
    MixedProfile::new_unchecked(components)
}

/// Samples `n` profiles in the L1 `delta`-ball around the strict equilibrium
/// `q` and finds the largest `k` with `Lf ≤ −k f` at all of them.
pub fn lyapunov_certificate(
    spec: &DynamicsSpec,
    game: &GameDef,
    q: &[usize],
    family: &LyapunovFamily,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<LyapunovCertificate> {
    if spec.variant.is_single_population() {
        return Err(Error::Unsupported("certificates are defined for the multi-population dynamics".into()));
    }
    spec.validate(game)?;
    if q.len() != game.num_players() || !is_strict_equilibrium(game, q) {
        return Err(Error::invalid(format!("{q:?} is not a strict equilibrium")));
    }
    if n == 0 {
        return Err(Error::invalid("samples: at least one sample is required"));
    }
    if !(delta > 0.0 && delta <= 2.0 * game.num_players() as f64) {
        return Err(Error::invalid(format!("delta: must be positive, got {delta}")));
    }
    let f = family.field(game, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = game.strategy_counts().to_vec();
    let mut k = f64::INFINITY;
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for _ in 0..n {
        let x = sample_near_pure(&mut rng, &shape, q, delta);
        let value = f.value(&x);
        let generator = apply_generator(spec, game, f.as_ref(), &x)?;
        if !(value > 0.0) {
            continue;
        }
        let ratio = -generator / value;
        k = k.min(ratio);
        if !(ratio > 0.0) {
            violation_count += 1;
            if violations.len() < REPORTED_VIOLATIONS {
                violations.push(Violation { point: x, value, generator });
            }
        }
    }
    if k == f64::INFINITY {
        return Err(Error::UndefinedResult("f vanished at every sample".into()));
    }
    Ok(LyapunovCertificate {
        equilibrium: q.to_vec(),
        family: family.clone(),
        delta,
        samples: n,
        k,
        certified: k > 0.0,
        violation_count,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Variant;
    use crate::engine::{simulate_deterministic, InitialState, Integrator, SimConfig};
    use crate::game::{congestion_game, tests::prisoners_dilemma};

    fn minus_k_congestion() -> GameDef {
        congestion_game(2, &[vec![-1.0, -2.0], vec![-1.0, -2.0]]).unwrap()
    }

    #[test]
    fn potential_condition() {
        let g = minus_k_congestion();
        let v = rosenthal_potential(&g).unwrap();
        let quiet = check_potential_condition(&g, &v, &[0, 1], &[1.0], &NoiseModel::zero()).unwrap();
        assert!(quiet.all_hold);
        // V(q) = 2 and both deviations reach V = 3.
        let unit = check_potential_condition(&g, &v, &[0, 1], &[1.0], &NoiseModel::constant(1.0)).unwrap();
        assert_eq!(unit.entries.len(), 2);
        for e in &unit.entries {
            assert_eq!(e.gap, 1.0);
            assert_eq!(e.threshold, 1.0);
            assert!(!e.holds);
        }
        let slow = check_potential_condition(&g, &v, &[1, 0], &[0.1], &NoiseModel::constant(1.0)).unwrap();
        assert!(slow.all_hold);
        assert!(check_potential_condition(&g, &v, &[0, 0], &[1.0], &NoiseModel::zero()).is_err());
        let vanishing = NoiseModel::uniform(NoiseKind::OwnPureVanishing, 1.0);
        assert!(check_potential_condition(&g, &v, &[0, 1], &[1.0], &vanishing).is_err());
    }

    #[test]
    fn potential_decreases_along_rd() {
        let g = minus_k_congestion();
        let v = rosenthal_potential(&g).unwrap();
        let spec = DynamicsSpec::with_noise(Variant::RD, NoiseModel::zero());
        let start = MixedProfile::new(vec![vec![0.6, 0.4], vec![0.45, 0.55]]).unwrap();
        let cfg = SimConfig {
            horizon: 30.0,
            integrator: Integrator::DeterministicRK4,
            record_stride: 1,
            initial: InitialState::Profile(start),
            ..SimConfig::default()
        };
        let traj = simulate_deterministic(&spec, &g, &cfg).unwrap();
        let series = potential_along(&traj, &v).unwrap();
        assert!(series.values.windows(2).all(|w| w[1] <= w[0] + 1e-8));
        assert!(series.values[0] - series.values.last().unwrap() > 0.45);
        let vertex = SimConfig {
            initial: InitialState::Profile(MixedProfile::pure(&[2, 2], &[0, 1]).unwrap()),
            ..cfg
        };
        let still = potential_along(&simulate_deterministic(&spec, &g, &vertex).unwrap(), &v).unwrap();
        assert!(still.values.iter().all(|&x| x == 2.0));
    }

    #[test]
    fn adjusted_coordinates() {
        let x = MixedProfile::new(vec![vec![0.5, 0.5]]).unwrap();
        let c = adjusted_coords(&x, &[1.0], &[0]).unwrap();
        assert!((c.closeness[0] - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let shape = [2, 3, 4];
            let x = MixedProfile::from_weights(
                shape.iter().map(|&s| (0..s).map(|_| rng.random_range(1e-3..1.0)).collect()).collect(),
            )
            .unwrap();
            let anchor: Vec<usize> = shape.iter().map(|&s| rng.random_range(0..s)).collect();
            let rates: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..5.0)).collect();
            let c = adjusted_coords(&x, &rates, &anchor).unwrap();
            for d in &c.direction {
                assert!(d.iter().all(|&v| v >= 0.0));
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let back = inverse_adjusted(&c).unwrap();
            assert!(back.l1_distance(&x) < 1e-9);
        }
        let closeness: Vec<f64> = [0.5, 0.9, 0.99, 0.999999]
            .iter()
            .map(|&p| adjusted_coords(&MixedProfile::new(vec![vec![p, 1.0 - p]]).unwrap(), &[0.5], &[0]).unwrap().closeness[0])
            .collect();
        assert!(closeness.windows(2).all(|w| w[1] > w[0]));
        let edge = MixedProfile::pure(&[2], &[0]).unwrap();
        assert!(matches!(adjusted_coords(&edge, &[1.0], &[0]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn samples_stay_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = [1, 0, 2];
        let center = MixedProfile::pure(&[2, 2, 3], &q).unwrap();
        for _ in 0..1000 {
            let x = sample_near_pure(&mut rng, &[2, 2, 3], &q, 0.05);
            assert!(x.is_interior());
            assert!(x.l1_distance(&center) <= 0.05 + 1e-12);
            for c in x.components() {
                assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certificates() {
        let g = minus_k_congestion();
        let rd = DynamicsSpec::with_noise(Variant::RD, NoiseModel::zero());
        let pot = lyapunov_certificate(&rd, &g, &[0, 1], &LyapunovFamily::PotentialV, 500, 0.1, 1).unwrap();
        assert!(pot.certified && pot.violation_count == 0);

        // PD: v = 1 for both players, η = 1, so λ < 1 works.
        let pd = prisoners_dilemma();
        let srd = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(1.0));
        let inv = LyapunovFamily::InverseY { rates: vec![0.5] };
        let good = lyapunov_certificate(&srd, &pd, &[1, 1], &inv, 1000, 0.05, 2).unwrap();
        assert!(good.certified, "k = {}", good.k);
        let noisy = DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(10.0));
        let wild = LyapunovFamily::InverseY { rates: vec![20.0] };
        let bad = lyapunov_certificate(&noisy, &pd, &[1, 1], &wild, 1000, 0.05, 2).unwrap();
        assert!(!bad.certified && bad.violation_count > 0 && !bad.violations.is_empty());

        let exp = LyapunovFamily::ExpLogit { exponents: vec![0.5] };
        assert!(lyapunov_certificate(&srd, &pd, &[1, 1], &exp, 500, 0.05, 3).unwrap().certified);

        assert!(lyapunov_certificate(&srd, &pd, &[0, 0], &inv, 10, 0.05, 2).is_err());
        assert!(lyapunov_certificate(&srd, &pd, &[1, 1], &LyapunovFamily::PotentialV, 10, 0.05, 2).is_err());
        let g3 = GameDef::from_fn(vec![3, 2], |i, p| if p[i] == 0 { 1.0 } else { 0.0 }).unwrap();
        assert!(lyapunov_certificate(&srd, &g3, &[0, 0], &exp, 10, 0.05, 2).is_err());
    }
}
