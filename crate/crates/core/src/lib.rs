//! Stochastic replicator dynamics induced by exponential learning in finite
//! games whose payoffs are perturbed by noise.
//!
//! The crate is organised bottom-up:
//!
//! - [`game`]: normal-form games, payoffs, dominance, strict equilibria,
//!   congestion/minority constructors and information measures.
//! - [`dynamics`]: drift and diffusion of every replicator variant, noise
//!   models and the logit (softmax) choice map.
//! - [`engine`]: score-space and simplex-space Euler–Maruyama, RK4 for the
//!   deterministic dynamics, discrete-time learning and seeded ensembles.
//! - [`analysis`]: KL trajectories, extinction bounds, the infinitesimal
//!   generator, Lyapunov certificates and stability probes.
//! - [`experiment`]: one entry point per batch experiment kind.


pub mod analysis;
pub mod dynamics;
pub mod engine;
mod error;
pub mod experiment;
pub mod game;
pub mod stats;

pub use error::{Error, Result};
