//! The infinitesimal generator `Lf = Σ b·∂f + ½ Σ (σσᵀ)·∂²f` and test
//! functions to apply it to.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{eval_field, DynamicsSpec};
use crate::engine::{euler_simplex_step, map_runs, GaussianIncrements, Increments};
use crate::game::{GameDef, MixedProfile, PotentialFn};
use crate::stats::mean_stderr;
use crate::{Error, Result};

/// Step of the central finite differences used when a field has no
/// analytic derivatives.
pub const FD_STEP: f64 = 1e-5;

/// A smooth scalar function of the profile.
///
/// Fields must accept points slightly off the simplex (finite-difference
/// probes). Derivatives are with respect to the raw coordinates `x_{iα}`.
/// Only the per-player diagonal blocks of the Hessian are needed because the
/// noise is independent across players.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &MixedProfile) -> f64;

    fn gradient(&self, _x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// `hessian[i][α][β] = ∂²f / ∂x_{iα} ∂x_{iβ}`.
    fn hessian_blocks(&self, _x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        None
    }

    /// JSON description used in reports.
    fn describe(&self) -> Value;
}

fn bump(x: &MixedProfile, moves: &[(usize, usize, f64)]) -> MixedProfile {
    let mut c = x.components().to_vec();
    for &(i, a, h) in moves {
        c[i][a] += h;
    }
    MixedProfile::new_unchecked(c)
}

pub fn fd_gradient(f: &dyn ScalarField, x: &MixedProfile) -> Vec<Vec<f64>> {
    let h = FD_STEP;
    x.components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (0..c.len())
                .map(|a| (f.value(&bump(x, &[(i, a, h)])) - f.value(&bump(x, &[(i, a, -h)]))) / (2.0 * h))
                .collect()
        })
        .collect()
}

pub fn fd_hessian_blocks(f: &dyn ScalarField, x: &MixedProfile) -> Vec<Vec<Vec<f64>>> {
    let h = FD_STEP;
    let f0 = f.value(x);
    x.components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = c.len();
            let mut block = vec![vec![0.0; s]; s];
            for a in 0..s {
                block[a][a] = (f.value(&bump(x, &[(i, a, h)])) - 2.0 * f0
                    + f.value(&bump(x, &[(i, a, -h)])))
                    / (h * h);
                for b in a + 1..s {
                    let v = (f.value(&bump(x, &[(i, a, h), (i, b, h)]))
                        - f.value(&bump(x, &[(i, a, h), (i, b, -h)]))
                        - f.value(&bump(x, &[(i, a, -h), (i, b, h)]))
                        + f.value(&bump(x, &[(i, a, -h), (i, b, -h)])))
                        / (4.0 * h * h);
                    block[a][b] = v;
                    block[b][a] = v;
                }
            }
            block
        })
        .collect()
}

/// `Lf(x)` for the dynamic `spec` on `game`.
pub fn apply_generator(
    spec: &DynamicsSpec,
    game: &GameDef,
    f: &dyn ScalarField,
    x: &MixedProfile,
) -> Result<f64> {
    let field = eval_field(spec, game, x)?;
    let grad = f.gradient(x).unwrap_or_else(|| fd_gradient(f, x));
    let hess = f.hessian_blocks(x).unwrap_or_else(|| fd_hessian_blocks(f, x));
    let mut total = 0.0;
    for (i, sigma) in field.diffusion.iter().enumerate() {
        let s = sigma.len();
        for a in 0..s {
            total += field.drift[i][a] * grad[i][a];
            for b in 0..s {
                let cov: f64 = (0..s).map(|k| sigma[a][k] * sigma[b][k]).sum();
                total += 0.5 * cov * hess[i][a][b];
            }
        }
    }
    Ok(total)
}

/// `f(x) = x_{iα}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub player: usize,
    pub strategy: usize,
}

impl ScalarField for Coordinate {
    fn value(&self, x: &MixedProfile) -> f64 {
        x.component(self.player)[self.strategy]
    }

    fn gradient(&self, x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        let mut g: Vec<Vec<f64>> = x.components().iter().map(|c| vec![0.0; c.len()]).collect();
        g[self.player][self.strategy] = 1.0;
        Some(g)
    }

    fn hessian_blocks(&self, x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        Some(zero_blocks(x))
    }

    fn describe(&self) -> Value {
        json!({"kind": "coordinate", "player": self.player, "strategy": self.strategy})
    }
}

fn zero_blocks(x: &MixedProfile) -> Vec<Vec<Vec<f64>>> {
    x.components()
        .iter()
        .map(|c| vec![vec![0.0; c.len()]; c.len()])
        .collect()
}

fn rate_of(rates: &[f64], i: usize) -> f64 {
    if rates.len() == 1 {
        rates[0]
    } else {
        rates[i]
    }
}

/// `f(x) = Σ_i x_{i,q_i}^{−λ_i} Σ_{μ≠q_i} x_{iμ}^{λ_i}`: the reciprocal of the
/// adjusted coordinate `Y_{i,0}`, summed over players. Vanishes exactly at
/// the anchor profile `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseY {
    pub anchor: Vec<usize>,
    pub rates: Vec<f64>,
}

impl ScalarField for InverseY {
    fn value(&self, x: &MixedProfile) -> f64 {
        self.anchor
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let l = rate_of(&self.rates, i);
                let c = x.component(i);
                let others: f64 = c
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| *m != q)
                    .map(|(_, v)| v.powf(l))
                    .sum();
                c[q].powf(-l) * others
            })
            .sum()
    }

    fn gradient(&self, x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        Some(
            self.anchor
                .iter()
                .enumerate()
                .map(|(i, &q)| {
                    let l = rate_of(&self.rates, i);
                    let c = x.component(i);
                    let others: f64 = c
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| *m != q)
                        .map(|(_, v)| v.powf(l))
                        .sum();
                    c.iter()
                        .enumerate()
                        .map(|(m, &v)| {
                            if m == q {
                                -l * v.powf(-l - 1.0) * others
                            } else {
                                l * c[q].powf(-l) * v.powf(l - 1.0)
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    fn hessian_blocks(&self, x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        Some(
            self.anchor
                .iter()
                .enumerate()
                .map(|(i, &q)| {
                    let l = rate_of(&self.rates, i);
                    let c = x.component(i);
                    let x0 = c[q];
                    let s = c.len();
                    let others: f64 = (0..s).filter(|&m| m != q).map(|m| c[m].powf(l)).sum();
                    let mut block = vec![vec![0.0; s]; s];
                    block[q][q] = l * (l + 1.0) * x0.powf(-l - 2.0) * others;
                    for m in (0..s).filter(|&m| m != q) {
                        let cross = -l * l * x0.powf(-l - 1.0) * c[m].powf(l - 1.0);
                        block[q][m] = cross;
                        block[m][q] = cross;
                        block[m][m] = l * (l - 1.0) * x0.powf(-l) * c[m].powf(l - 2.0);
                    }
                    block
                })
                .collect(),
        )
    }

    fn describe(&self) -> Value {
        json!({"kind": "inverse_y", "anchor": self.anchor, "rates": self.rates})
    }
}

/// Dyadic games: `f(x) = Σ_i exp(−a_i y_i)` with
/// `y_i = log x_{i,q_i} − log x_{i,1−q_i}`. Vanishes as `x → q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpLogit {
    pub anchor: Vec<usize>,
    pub exponents: Vec<f64>,
}

impl ExpLogit {
    fn term(&self, x: &MixedProfile, i: usize) -> (usize, usize, f64, f64) {
        let q = self.anchor[i];
        let o = 1 - q;
        let a = rate_of(&self.exponents, i);
        let c = x.component(i);
        (q, o, a, (c[o] / c[q]).powf(a))
    }
}

impl ScalarField for ExpLogit {
    fn value(&self, x: &MixedProfile) -> f64 {
        (0..self.anchor.len()).map(|i| self.term(x, i).3).sum()
    }

    fn gradient(&self, x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        Some(
            (0..self.anchor.len())
                .map(|i| {
                    let (q, o, a, f) = self.term(x, i);
                    let c = x.component(i);
                    let mut g = vec![0.0; 2];
                    g[q] = -a * f / c[q];
                    g[o] = a * f / c[o];
                    g
                })
                .collect(),
        )
    }

    fn hessian_blocks(&self, x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        Some(
            (0..self.anchor.len())
                .map(|i| {
                    let (q, o, a, f) = self.term(x, i);
                    let c = x.component(i);
                    let mut h = vec![vec![0.0; 2]; 2];
                    h[q][q] = a * (a + 1.0) * f / (c[q] * c[q]);
                    h[o][o] = a * (a - 1.0) * f / (c[o] * c[o]);
                    h[q][o] = -a * a * f / (c[q] * c[o]);
                    h[o][q] = h[q][o];
                    h
                })
                .collect(),
        )
    }

    fn describe(&self) -> Value {
        json!({"kind": "exp_logit", "anchor": self.anchor, "exponents": self.exponents})
    }
}

/// `f(x) = V(x) − V(q)` for a multilinear potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialV {
    pub potential: PotentialFn,
    pub baseline: f64,
}

impl ScalarField for PotentialV {
    fn value(&self, x: &MixedProfile) -> f64 {
        self.potential.evaluate(x).unwrap_or(f64::NAN) - self.baseline
    }

    fn gradient(&self, x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        (0..x.num_players())
            .map(|i| self.potential.partial(x, i).ok())
            .collect()
    }

    fn hessian_blocks(&self, x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        // Multilinear: no curvature within one player's coordinates.
        Some(zero_blocks(x))
    }

    fn describe(&self) -> Value {
        json!({"kind": "potential", "baseline": self.baseline})
    }
}

/// `Σ_k w_k f_k`.
#[derive(Clone)]
pub struct LinearCombination {
    pub terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl ScalarField for LinearCombination {
    fn value(&self, x: &MixedProfile) -> f64 {
        self.terms.iter().map(|(w, f)| w * f.value(x)).sum()
    }

    fn gradient(&self, x: &MixedProfile) -> Option<Vec<Vec<f64>>> {
        let mut out: Vec<Vec<f64>> = x.components().iter().map(|c| vec![0.0; c.len()]).collect();
        for (w, f) in &self.terms {
            let g = f.gradient(x).unwrap_or_else(|| fd_gradient(f.as_ref(), x));
            for (o, gi) in out.iter_mut().flatten().zip(g.iter().flatten()) {
                *o += w * gi;
            }
        }
        Some(out)
    }

    fn hessian_blocks(&self, x: &MixedProfile) -> Option<Vec<Vec<Vec<f64>>>> {
        let mut out = zero_blocks(x);
        for (w, f) in &self.terms {
            let h = f.hessian_blocks(x).unwrap_or_else(|| fd_hessian_blocks(f.as_ref(), x));
            for (o, hi) in out.iter_mut().flatten().flatten().zip(h.iter().flatten().flatten()) {
                *o += w * hi;
            }
        }
        Some(out)
    }

    fn describe(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(w, f)| json!({"weight": w, "field": f.describe()}))
                .collect(),
        )
    }
}

/// Monte Carlo check of `Lf(x)` against one-step paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProbe {
    pub point: MixedProfile,
    pub function: Value,
    pub analytic: f64,
    /// Mean of `(f(X(h)) − f(x)) / h` over the runs.
    pub empirical: f64,
    pub stderr: f64,
    pub h: f64,
    pub runs: usize,
    pub seed: u64,
}

impl GeneratorProbe {
    /// `|empirical − analytic| ≤ z·stderr + c·h`.
    pub fn agrees(&self, z: f64, c: f64) -> bool {
        (self.empirical - self.analytic).abs() <= z * self.stderr + c * self.h
    }
}

/// Estimates the drift of `f(X(t))` at `x` from `n_runs` Euler–Maruyama steps
/// of length `h` and compares it with [`apply_generator`].
pub fn generator_consistency_probe(
    spec: &DynamicsSpec,
    game: &GameDef,
    f: &dyn ScalarField,
    x: &MixedProfile,
    h: f64,
    n_runs: usize,
    seed: u64,
) -> Result<GeneratorProbe> {
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::invalid(format!("h: must lie in (0, 0.01], got {h}")));
    }
    if !x.is_interior() {
        return Err(Error::invalid("point: the probe needs an interior profile"));
    }
    spec.validate(game)?;
    let analytic = apply_generator(spec, game, f, x)?;
    let f0 = f.value(x);
    let dim: usize = x.shape().iter().sum();
    let samples = map_runs(n_runs, seed, |_, run_seed| {
        let mut dw = vec![0.0; dim];
        GaussianIncrements::new(run_seed).fill(h, &mut dw);
        let (next, _) = euler_simplex_step(spec, game, x, h, &dw)?;
        Ok((f.value(&next) - f0) / h)
    })?;
    let m = mean_stderr(&samples);
    Ok(GeneratorProbe {
        point: x.clone(),
        function: f.describe(),
        analytic,
        empirical: m.mean,
        stderr: m.stderr,
        h,
        runs: n_runs,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{NoiseModel, Variant};
    use crate::game::{congestion_game, rosenthal_potential, tests::prisoners_dilemma};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Wraps a field and hides its analytic derivatives.
    struct Opaque<F>(F);

    impl<F: ScalarField> ScalarField for Opaque<F> {
        fn value(&self, x: &MixedProfile) -> f64 {
            self.0.value(x)
        }
        fn describe(&self) -> Value {
            json!("opaque")
        }
    }

    struct Constant;

    impl ScalarField for Constant {
        fn value(&self, _: &MixedProfile) -> f64 {
            2.0
        }
        fn describe(&self) -> Value {
            json!("constant")
        }
    }

    fn random_point(rng: &mut impl Rng, shape: &[usize]) -> MixedProfile {
        MixedProfile::from_weights(
            shape
                .iter()
                .map(|&s| (0..s).map(|_| rng.random_range(0.1..1.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn srd(c: f64) -> DynamicsSpec {
        DynamicsSpec::with_noise(Variant::SRD, NoiseModel::constant(c))
    }

    #[test]
    fn trivial_fields() {
        let g = prisoners_dilemma();
        let x = MixedProfile::new(vec![vec![0.3, 0.7], vec![0.4, 0.6]]).unwrap();
        assert!(apply_generator(&srd(1.0), &g, &Opaque(Constant), &x).unwrap().abs() < 1e-6);
        let rd = DynamicsSpec::with_noise(Variant::RD, NoiseModel::zero());
        let f = Coordinate { player: 1, strategy: 1 };
        let drift = eval_field(&rd, &g, &x).unwrap().drift[1][1];
        assert_eq!(apply_generator(&rd, &g, &f, &x).unwrap(), drift);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = rosenthal_potential(&congestion_game(2, &[vec![-1.0, -2.0], vec![-1.5, -2.5]]).unwrap()).unwrap();
        let fields: Vec<Box<dyn ScalarField>> = vec![
            Box::new(InverseY { anchor: vec![1, 0], rates: vec![0.7, 1.3] }),
            Box::new(InverseY { anchor: vec![0, 1], rates: vec![1.0] }),
            Box::new(ExpLogit { anchor: vec![1, 0], exponents: vec![0.5, 2.0] }),
            Box::new(PotentialV { potential: v, baseline: 1.0 }),
        ];
        for _ in 0..20 {
            let x = random_point(&mut rng, &[2, 2]);
            for f in &fields {
                let (g, h) = (f.gradient(&x).unwrap(), f.hessian_blocks(&x).unwrap());
                let (gf, hf) = (fd_gradient(f.as_ref(), &x), fd_hessian_blocks(f.as_ref(), &x));
                for (a, b) in g.iter().flatten().zip(gf.iter().flatten()) {
                    assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{}", f.describe());
                }
                for (a, b) in h.iter().flatten().flatten().zip(hf.iter().flatten().flatten()) {
                    assert!((a - b).abs() < 1e-3 * (1.0 + a.abs()), "{}", f.describe());
                }
            }
        }
        let three = InverseY { anchor: vec![2], rates: vec![0.5] };
        let x = MixedProfile::new(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let h = three.hessian_blocks(&x).unwrap();
        let hf = fd_hessian_blocks(&three, &x);
        for (a, b) in h.iter().flatten().flatten().zip(hf.iter().flatten().flatten()) {
            assert!((a - b).abs() < 1e-4 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn generator_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = prisoners_dilemma();
        let f: Arc<dyn ScalarField> = Arc::new(InverseY { anchor: vec![1, 1], rates: vec![1.0] });
        let h: Arc<dyn ScalarField> = Arc::new(Coordinate { player: 0, strategy: 0 });
        for _ in 0..50 {
            let x = random_point(&mut rng, &[2, 2]);
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let combo = LinearCombination { terms: vec![(a, f.clone()), (b, h.clone())] };
            for spec in [srd(1.0), DynamicsSpec::with_noise(Variant::ASRD, NoiseModel::constant(2.0))] {
                let lhs = apply_generator(&spec, &g, &combo, &x).unwrap();
                let rhs = a * apply_generator(&spec, &g, f.as_ref(), &x).unwrap()
                    + b * apply_generator(&spec, &g, h.as_ref(), &x).unwrap();
                assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn srd_asrd_generator_gap_is_ito_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = prisoners_dilemma();
        let f = InverseY { anchor: vec![1, 1], rates: vec![1.0] };
        let c = 1.3;
        for _ in 0..50 {
            let x = random_point(&mut rng, &[2, 2]);
            let gap = apply_generator(&srd(c), &g, &f, &x).unwrap()
                - apply_generator(&DynamicsSpec::with_noise(Variant::ASRD, NoiseModel::constant(c)), &g, &f, &x)
                    .unwrap();
            let grad = f.gradient(&x).unwrap();
            let expected: f64 = (0..2)
                .map(|i| {
                    let xi = x.component(i);
                    let m: f64 = xi.iter().map(|v| c * c * v).sum();
                    (0..2).map(|a| xi[a] * (0.5 * c * c - 0.5 * m) * grad[i][a]).sum::<f64>()
                })
                .sum();
            assert!((gap - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn dyadic_generator_in_logit_coordinates() {
        // For dyadic games L acts on g(y_i), y_i = log(x_{i0}/x_{i1}), as
        // Δu_i g' + ½η_i² g'' with η_i² = η_{i0}² + η_{i1}².
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let game = GameDef::from_fn(vec![2, 2, 2], |_, _| rng.random_range(-2.0..2.0)).unwrap();
        let noise = NoiseModel { kind: crate::dynamics::NoiseKind::Constant, coefficients: vec![vec![0.7, 1.1], vec![0.4], vec![1.5, 0.2]] };
        let spec = DynamicsSpec::with_noise(Variant::SRD, noise.clone());
        for _ in 0..20 {
            let x = random_point(&mut rng, &[2, 2, 2]);
            for i in 0..3 {
                let a = rng.random_range(0.2..2.0);
                let anchor = vec![0; 3];
                // exp(−a y_i) for player i only.
                let f = ExpLogit { anchor: anchor.clone(), exponents: vec![a] };
                let single = SinglePlayer { inner: f, player: i };
                let lf = apply_generator(&spec, &game, &single, &x).unwrap();
                let u = game.strategy_payoffs(&x, i).unwrap();
                let du = u[0] - u[1];
                let eta2 = noise.coefficient(i, 0).powi(2) + noise.coefficient(i, 1).powi(2);
                let xi = x.component(i);
                let g = (xi[1] / xi[0]).powf(a);
                let expected = -a * (du - 0.5 * a * eta2) * g;
                assert!((lf - expected).abs() < 1e-6 * (1.0 + expected.abs()), "{lf} vs {expected}");
            }
        }
    }

    /// Restricts a sum-over-players field to one player's term.
    struct SinglePlayer {
        inner: ExpLogit,
        player: usize,
    }

    impl SinglePlayer {
        fn mask(&self, x: &MixedProfile) -> MixedProfile {
            let mut c = x.components().to_vec();
            for (i, ci) in c.iter_mut().enumerate() {
                if i != self.player {
                    // Anchor strategy 0 at certainty kills the other terms.
                    *ci = vec![1.0, 0.0];
                }
            }
            MixedProfile::new_unchecked(c)
        }
    }

    impl ScalarField for SinglePlayer {
        fn value(&self, x: &MixedProfile) -> f64 {
            self.inner.value(&self.mask(x))
        }
        fn describe(&self) -> Value {
            json!("single")
        }
    }

    #[test]
    fn probe_without_noise_is_deterministic() {
        let g = prisoners_dilemma();
        let rd = DynamicsSpec::with_noise(Variant::RD, NoiseModel::zero());
        let x = MixedProfile::uniform(&[2, 2]);
        let f = Coordinate { player: 0, strategy: 1 };
        let p = generator_consistency_probe(&rd, &g, &f, &x, 1e-3, 16, 7).unwrap();
        assert_eq!(p.stderr, 0.0);
        assert!((p.empirical - p.analytic).abs() < 1e-12);
        assert!(generator_consistency_probe(&rd, &g, &f, &x, 0.1, 16, 7).is_err());
        let vertex = MixedProfile::pure(&[2, 2], &[0, 0]).unwrap();
        assert!(generator_consistency_probe(&rd, &g, &f, &vertex, 1e-3, 16, 7).is_err());
    }

    #[test]
    fn probe_matches_srd_and_asrd() {
        let g = prisoners_dilemma();
        let x = MixedProfile::uniform(&[2, 2]);
        let f = Coordinate { player: 0, strategy: 1 };
        let a = generator_consistency_probe(&srd(1.0), &g, &f, &x, 1e-3, 10_000, 11).unwrap();
        assert!(a.stderr > 0.0 && a.agrees(3.0, 10.0));
        let asrd = DynamicsSpec::with_noise(Variant::ASRD, NoiseModel::constant(1.0));
        let b = generator_consistency_probe(&asrd, &g, &f, &x, 1e-3, 10_000, 11).unwrap();
        assert!(b.agrees(3.0, 10.0));
        // At the uniform point the Itô term is ½·½(1 − ½) = 0 for equal noise.
        assert!((a.analytic - b.analytic).abs() < 1e-15);
    }
}
