//! Exact analysis of the game.
//!
//! Asynchronous populations are reduced to a lumped Markov chain over the
//! number of opinion-1 agents in each exchangeable class; on the complete
//! graph the transition law depends on the state only through those counts.
//! Synchronous Bernoulli populations reduce to a per-round Poisson-binomial
//! tail.

mod chain;
mod drift;
pub mod full;
mod layout;
pub mod rational;
pub mod solve;
mod tail;

pub use chain::{
    absorption, build_chain, build_chain_with_cap, verify_lemma7, Absorption, Census,
    ChainAnalysis, ChainDump, StateClass, StateDump, DEFAULT_STATE_CAP,
};
pub use drift::{one_step_w_drift, one_step_z_drift};
pub use layout::{AgentClass, ClassKind, ClassLayout, LumpedState, Weight};
pub use tail::{
    geometric_decision_law, lemma2_bounds, normal_approx_p, poisson_binomial_tail, std_normal_cdf,
    GeometricLaw, GeometricRegime, RoundBounds,
};
