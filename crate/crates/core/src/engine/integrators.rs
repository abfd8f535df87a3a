use serde_json::json;
use sha2::{Digest, Sha256};

use super::increments::{GaussianIncrements, Increments};
use super::{InitialState, Integrator, SimConfig, Trajectory};
use crate::dynamics::{eval_field, logit, score_field, DynamicsSpec, Noise, Variant};
use crate::game::{GameDef, MixedProfile};
use crate::{Error, Result};

/// Accumulates the record grid of a run.
struct Recorder {
    stride: usize,
    last_step: usize,
    dt: f64,
    times: Vec<f64>,
    states: Vec<MixedProfile>,
    scores: Option<Vec<Vec<Vec<f64>>>>,
}

impl Recorder {
    fn new(cfg: &SimConfig, last_step: usize, dt: f64, with_scores: bool) -> Self {
        let capacity = last_step / cfg.record_stride + 2;
        Self {
            stride: cfg.record_stride,
            last_step,
            dt,
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
            scores: with_scores.then(|| Vec::with_capacity(capacity)),
        }
    }

    fn record(&mut self, step: usize, x: &MixedProfile, scores: Option<&[Vec<f64>]>) {
        if step % self.stride != 0 && step != self.last_step {
            return;
        }
        self.times.push(step as f64 * self.dt);
        self.states.push(x.clone());
        if let (Some(all), Some(u)) = (self.scores.as_mut(), scores) {
            all.push(u.to_vec());
        }
    }

    fn finish(self, seed: u64, config_hash: String, rates: Vec<f64>, projections: usize) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            scores: self.scores,
            rates,
            seed,
            config_hash,
            projections,
            steps: self.last_step,
        }
    }
}

/// Hash of everything that determines a run except its seed.
fn run_hash(game: &GameDef, cfg: &SimConfig, dynamics: serde_json::Value) -> String {
    let mut cfg = cfg.clone();
    cfg.seed = 0;
    let header = json!({"sim": cfg, "dynamics": dynamics}).to_string();
    let mut h = Sha256::new();
    h.update(header.as_bytes());
    for s in game.strategy_counts() {
        h.update((*s as u64).to_le_bytes());
    }
    for i in 0..game.num_players() {
        for u in game.player_tensor(i) {
            h.update(u.to_le_bytes());
        }
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn require(cfg: &SimConfig, integrator: Integrator) -> Result<()> {
    cfg.validate()?;
    if cfg.integrator != integrator {
        return Err(Error::invalid(format!(
            "sim.integrator: expected {integrator:?}, found {:?}",
            cfg.integrator
        )));
    }
    Ok(())
}

fn broadcast(rates: &[f64], n: usize) -> Result<Vec<f64>> {
    let out = match rates.len() {
        1 => vec![rates[0]; n],
        k if k == n => rates.to_vec(),
        k => {
            return Err(Error::invalid(format!(
                "expected 1 or {n} learning rates, found {k}"
            )))
        }
    };
    if out.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid("learning rates must be positive and finite"));
    }
    Ok(out)
}

fn check_shape(shape: &[usize], found: &[usize], what: &str) -> Result<()> {
    if shape != found {
        return Err(Error::invalid(format!(
            "sim.initial: {what} shape {found:?} does not match {shape:?}"
        )));
    }
    Ok(())
}

/// Initial scores for the score-based integrators.
fn initial_scores(shape: &[usize], rates: &[f64], init: &InitialState) -> Result<Vec<Vec<f64>>> {
    match init {
        InitialState::Uniform => Ok(shape.iter().map(|&s| vec![0.0; s]).collect()),
        InitialState::Scores(u) => {
            let found: Vec<usize> = u.iter().map(Vec::len).collect();
            check_shape(shape, &found, "score")?;
            if u.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid("sim.initial: scores must be finite"));
            }
            Ok(u.clone())
        }
        InitialState::Profile(x) => {
            check_shape(shape, &x.shape(), "profile")?;
            if !x.is_interior() {
                return Err(Error::invalid(
                    "sim.initial: score-based integrators need an interior starting profile",
                ));
            }
            Ok(x.components()
                .iter()
                .zip(rates)
                .map(|(c, l)| c.iter().map(|v| v.ln() / l).collect())
                .collect())
        }
    }
}

/// Initial profile for the simplex-based integrators.
fn initial_profile(shape: &[usize], rates: &[f64], init: &InitialState) -> Result<MixedProfile> {
    match init {
        InitialState::Uniform => Ok(MixedProfile::uniform(shape)),
        InitialState::Profile(x) => {
            check_shape(shape, &x.shape(), "profile")?;
            MixedProfile::new(x.components().to_vec())
        }
        InitialState::Scores(_) => {
            let u = initial_scores(shape, rates, init)?;
            Ok(logit_profile(&u, rates))
        }
    }
}

fn logit_profile(u: &[Vec<f64>], rates: &[f64]) -> MixedProfile {
    MixedProfile::new_unchecked(u.iter().zip(rates).map(|(s, &l)| logit(s, l)).collect())
}

fn recenter(u: &mut [Vec<f64>]) {
    for s in u {
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        s.iter_mut().for_each(|v| *v -= mean);
    }
}

fn non_finite(step: usize, what: &str) -> Error {
    Error::Simulation {
        step,
        message: format!("{what} became non-finite"),
    }
}

fn noise_json(noise: &dyn Noise, n: usize) -> serde_json::Value {
    json!({
        "constant": noise.is_constant(),
        "bounds": (0..n).map(|i| noise.bound(i)).collect::<Vec<_>>(),
    })
}

/// Euler–Maruyama on the scores, `X = logit(U)`.
pub fn simulate_scores(
    game: &GameDef,
    noise: &dyn Noise,
    rates: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    simulate_scores_driven(game, noise, rates, cfg, &mut GaussianIncrements::new(cfg.seed))
}

/// [`simulate_scores`] driven by an explicit increment source.
pub fn simulate_scores_driven(
    game: &GameDef,
    noise: &dyn Noise,
    rates: &[f64],
    cfg: &SimConfig,
    increments: &mut dyn Increments,
) -> Result<Trajectory> {
    require(cfg, Integrator::ScoreSpace)?;
    let shape = game.strategy_counts().to_vec();
    let rates = broadcast(rates, shape.len())?;
    let mut u = initial_scores(&shape, &rates, &cfg.initial)?;
    recenter(&mut u);
    let steps = cfg.num_steps();
    let dt = cfg.dt;
    let hash = run_hash(
        game,
        cfg,
        json!({"rates": rates, "noise": noise_json(noise, shape.len())}),
    );

    let mut x = logit_profile(&u, &rates);
    let mut rec = Recorder::new(cfg, steps, dt, true);
    rec.record(0, &x, Some(&u));
    let mut dw = vec![0.0; shape.iter().sum()];
    for step in 1..=steps {
        let field = score_field(game, noise, &x)?;
        increments.fill(dt, &mut dw);
        let mut k = 0;
        for (i, s) in u.iter_mut().enumerate() {
            for (a, v) in s.iter_mut().enumerate() {
                *v += field.drift[i][a] * dt + field.diffusion[i][a] * dw[k];
                k += 1;
            }
        }
        recenter(&mut u);
        if u.iter().flatten().any(|v| !v.is_finite()) {
            return Err(non_finite(step, "a payoff score"));
        }
        x = logit_profile(&u, &rates);
        rec.record(step, &x, Some(&u));
    }
    Ok(rec.finish(cfg.seed, hash, rates, 0))
}

/// Clamps negative entries of each component to zero and renormalises.
/// Returns whether any entry had to be clamped.
pub fn project_to_simplex(x: &mut [Vec<f64>]) -> Result<bool> {
    let mut clamped = false;
    for c in x.iter_mut() {
        for v in c.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clamped = true;
            }
        }
        let total: f64 = c.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Internal("projection met an empty or non-finite component".into()));
        }
        c.iter_mut().for_each(|v| *v /= total);
    }
    Ok(clamped)
}

/// One Euler–Maruyama step `x + b dt + σ dW` followed by projection, with the
/// increments `dw` laid out per `(player, strategy)`.
///
/// Returns the new state and whether the projection clamped anything.
pub fn euler_simplex_step(
    spec: &DynamicsSpec,
    game: &GameDef,
    x: &MixedProfile,
    dt: f64,
    dw: &[f64],
) -> Result<(MixedProfile, bool)> {
    let field = eval_field(spec, game, x)?;
    let mut next = x.components().to_vec();
    let mut offset = 0;
    for (i, c) in next.iter_mut().enumerate() {
        let s = c.len();
        let w = &dw[offset..offset + s];
        for (a, v) in c.iter_mut().enumerate() {
            let noise: f64 = field.diffusion[i][a].iter().zip(w).map(|(g, z)| g * z).sum();
            *v += field.drift[i][a] * dt + noise;
        }
        offset += s;
    }
    if next.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("state became non-finite"));
    }
    let clamped = project_to_simplex(&mut next)?;
    Ok((MixedProfile::new_unchecked(next), clamped))
}

/// Euler–Maruyama on the profile itself using the variant's drift and
/// diffusion, with clamp-and-renormalise projection after every step.
pub fn simulate_simplex(spec: &DynamicsSpec, game: &GameDef, cfg: &SimConfig) -> Result<Trajectory> {
    simulate_simplex_driven(spec, game, cfg, &mut GaussianIncrements::new(cfg.seed))
}

/// [`simulate_simplex`] driven by an explicit increment source.
pub fn simulate_simplex_driven(
    spec: &DynamicsSpec,
    game: &GameDef,
    cfg: &SimConfig,
    increments: &mut dyn Increments,
) -> Result<Trajectory> {
    require(cfg, Integrator::SimplexSpace)?;
    spec.validate(game)?;
    let shape = spec.state_shape(game);
    let rates = spec.rates(shape.len());
    let mut x = initial_profile(&shape, &rates, &cfg.initial)?;
    let steps = cfg.num_steps();
    let dt = cfg.dt;
    let hash = run_hash(game, cfg, json!(spec));

    let mut rec = Recorder::new(cfg, steps, dt, false);
    rec.record(0, &x, None);
    let mut dw = vec![0.0; shape.iter().sum()];
    let mut projections = 0;
    for step in 1..=steps {
        increments.fill(dt, &mut dw);
        let (next, clamped) = euler_simplex_step(spec, game, &x, dt, &dw).map_err(|e| match e {
            Error::InvalidArgument(m) | Error::Internal(m) => Error::Simulation { step, message: m },
            other => other,
        })?;
        projections += usize::from(clamped);
        x = next;
        rec.record(step, &x, None);
    }
    Ok(rec.finish(cfg.seed, hash, rates, projections))
}

/// Classical fourth-order Runge–Kutta for RD/LRD, renormalising after each
/// step.
pub fn simulate_deterministic(spec: &DynamicsSpec, game: &GameDef, cfg: &SimConfig) -> Result<Trajectory> {
    require(cfg, Integrator::DeterministicRK4)?;
    if !matches!(spec.variant, Variant::RD | Variant::LRD) {
        return Err(Error::invalid(format!(
            "dynamics.variant: RK4 integrates RD or LRD, not {:?}",
            spec.variant
        )));
    }
    spec.validate(game)?;
    let shape = spec.state_shape(game);
    let rates = spec.rates(shape.len());
    let mut x = initial_profile(&shape, &rates, &cfg.initial)?;
    let steps = cfg.num_steps();
    let dt = cfg.dt;
    let hash = run_hash(game, cfg, json!(spec));

    let drift = |p: &MixedProfile| -> Result<Vec<Vec<f64>>> { Ok(eval_field(spec, game, p)?.drift) };
    let offset = |base: &MixedProfile, k: &[Vec<f64>], h: f64| {
        MixedProfile::new_unchecked(
            base.components()
                .iter()
                .zip(k)
                .map(|(c, d)| c.iter().zip(d).map(|(v, g)| v + h * g).collect())
                .collect(),
        )
    };

    let mut rec = Recorder::new(cfg, steps, dt, false);
    rec.record(0, &x, None);
    let mut projections = 0;
    for step in 1..=steps {
        let k1 = drift(&x)?;
        let k2 = drift(&offset(&x, &k1, dt / 2.0))?;
        let k3 = drift(&offset(&x, &k2, dt / 2.0))?;
        let k4 = drift(&offset(&x, &k3, dt))?;
        let mut next: Vec<Vec<f64>> = x
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.iter()
                    .enumerate()
                    .map(|(a, v)| {
                        v + dt / 6.0 * (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a])
                    })
                    .collect()
            })
            .collect();
        if next.iter().flatten().any(|v| !v.is_finite()) {
            return Err(non_finite(step, "the state"));
        }
        projections += usize::from(
            project_to_simplex(&mut next)
                .map_err(|e| Error::Simulation { step, message: e.to_string() })?,
        );
        x = MixedProfile::new_unchecked(next);
        rec.record(step, &x, None);
    }
    Ok(rec.finish(cfg.seed, hash, rates, projections))
}

/// Discrete-time exponential learning: `U(t+1) = U(t) + u(X(t)) + η(X(t))·ξ`,
/// `X = logit(U)`, for `⌈T⌉` rounds. Noise draws are skipped entirely when
/// every noise bound is zero.
pub fn simulate_discrete(
    game: &GameDef,
    noise: &dyn Noise,
    rates: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let round_cfg = SimConfig { dt: 1.0, ..cfg.clone() };
    require(&round_cfg, Integrator::DiscreteLearning)?;
    let shape = game.strategy_counts().to_vec();
    let rates = broadcast(rates, shape.len())?;
    let mut u = initial_scores(&shape, &rates, &cfg.initial)?;
    let rounds = round_cfg.num_steps();
    let hash = run_hash(
        game,
        &round_cfg,
        json!({"rates": rates, "noise": noise_json(noise, shape.len())}),
    );
    let noisy = (0..shape.len()).any(|i| noise.bound(i) > 0.0);
    let mut source = GaussianIncrements::new(cfg.seed);

    let mut x = logit_profile(&u, &rates);
    let mut rec = Recorder::new(&round_cfg, rounds, 1.0, true);
    rec.record(0, &x, Some(&u));
    let mut xi = vec![0.0; shape.iter().sum()];
    for round in 1..=rounds {
        let field = score_field(game, noise, &x)?;
        if noisy {
            source.fill(1.0, &mut xi);
        }
        let mut k = 0;
        for (i, s) in u.iter_mut().enumerate() {
            for (a, v) in s.iter_mut().enumerate() {
                *v += field.drift[i][a] + field.diffusion[i][a] * xi[k];
                k += 1;
            }
        }
        recenter(&mut u);
        if u.iter().flatten().any(|v| !v.is_finite()) {
            return Err(non_finite(round, "a payoff score"));
        }
        x = logit_profile(&u, &rates);
        rec.record(round, &x, Some(&u));
    }
    Ok(rec.finish(cfg.seed, hash, rates, 0))
}
