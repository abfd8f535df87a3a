//! Instruments for checking rationality properties of the dynamics: KL
//! divergence growth and extinction bounds, the infinitesimal generator,
//! Lyapunov certificates and Monte Carlo stability probes.

mod bounds;
mod extinction;
mod generator;
mod kl;
mod lyapunov;
mod stability;

pub use bounds::{
    dominance_entropy_gap, erfc_bound, payoff_gap, rate_adjusted_erfc_bound, BoundInputs, ErfcBound,
};
pub use extinction::{extinction_report, ExtinctionReport, ExtinctionTarget, Guarantee, StrategyExtinction};
pub use generator::{
    apply_generator, fd_gradient, fd_hessian_blocks, generator_consistency_probe, Coordinate, ExpLogit,
    GeneratorProbe, InverseY, LinearCombination, PotentialV, ScalarField, FD_STEP,
};
pub use kl::{kl_growth_slope, kl_series, TimeSeries};
pub use lyapunov::{
    adjusted_coords, check_potential_condition, inverse_adjusted, lyapunov_certificate, potential_along,
    sample_near_pure, AdjustedCoords, LyapunovCertificate, LyapunovFamily, PotentialCondition,
    PotentialConditionEntry, Violation,
};
pub use stability::{default_integrator, stability_probe, StabilityEstimate, StabilityParams};
