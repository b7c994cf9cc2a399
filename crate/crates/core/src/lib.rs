//! Simulation and exact analysis of the `(n, k)` opinion game on a complete
//! graph.
//!
//! `n` agents hold binary opinions; a decision is made at the first time at
//! least `k` of them hold opinion 1. Agents are rejectors, consentors,
//! Bernoulli agents, or random, majority or minority followers, and update
//! either all at once (synchronous) or one uniformly chosen agent per step
//! (asynchronous).
//!
//! - [`model`]: roles, populations, configurations, opinion states.
//! - [`dynamics`]: update kernels, decision and freezing tests.
//! - [`montecarlo`]: reproducible parallel trial engine.
//! - [`exact`]: lumped absorbing chains, drifts, Poisson-binomial tails.
//! - [`formulas`]: closed-form bounds and expectations.

pub mod dynamics;
mod error;
pub mod exact;
pub mod formulas;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{GameConfig, Mode, OpinionState, Population, Role};
