//! Unlumped chain over all `2^n` opinion vectors.
//!
//! Transitions come straight from per-agent update laws, with no class
//! bookkeeping, so this chain serves as the reference for the lumped one.

use crate::dynamics::update_law;
use crate::error::{Error, Result};
use crate::model::{GameConfig, Mode, Role};

use super::solve::{hitting_probabilities, SparseRows};

pub const FULL_CHAIN_MAX_AGENTS: usize = 16;

/// Decision probability from every opinion vector, indexed by bitmask
/// (bit `i` is agent `i`). Vectors inconsistent with pinned roles are
/// included and solved like any other state.
pub fn full_decision_probabilities(config: &GameConfig) -> Result<Vec<f64>> {
    if config.mode() != Mode::Asynchronous {
        return Err(Error::UnsupportedMode {
            expected: "asynchronous",
        });
    }
    let roles = config.population().roles();
    let n = roles.len();
    if n > FULL_CHAIN_MAX_AGENTS {
        return Err(Error::StateSpaceTooLarge {
            states: 1u128 << n,
            cap: 1 << FULL_CHAIN_MAX_AGENTS,
        });
    }
    let k = config.k();
    let count = 1usize << n;
    let mut rows: SparseRows = Vec::with_capacity(count);
    let mut decision = Vec::with_capacity(count);
    for mask in 0..count {
        let z = mask.count_ones() as usize;
        if z >= k {
            rows.push(vec![(mask, 1.0)]);
            decision.push(true);
            continue;
        }
        decision.push(false);
        let mut row = Vec::with_capacity(n + 1);
        let mut leave = 0.0;
        for (i, &role) in roles.iter().enumerate() {
            let own = mask >> i & 1 == 1;
            let p_one = update_law(role, own, z - usize::from(own), n)?.one_probability();
            let flip = if own { 1.0 - p_one } else { p_one } / n as f64;
            if flip > 0.0 {
                row.push((mask ^ (1 << i), flip));
                leave += flip;
            }
        }
        if leave < 1.0 {
            row.push((mask, 1.0 - leave));
        }
        rows.push(row);
    }
    Ok(hitting_probabilities(&rows, &decision)?.values)
}

/// Time-0 probability of each opinion vector.
pub fn full_initial_distribution(roles: &[Role]) -> Vec<f64> {
    let n = roles.len();
    (0..1usize << n)
        .map(|mask| {
            roles
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let p = r.initial_one_probability();
                    if mask >> i & 1 == 1 {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product()
        })
        .collect()
}

/// Decision probability from the time-0 law on the full chain.
pub fn full_decision_probability(config: &GameConfig) -> Result<f64> {
    let h = full_decision_probabilities(config)?;
    Ok(full_initial_distribution(config.population().roles())
        .iter()
        .zip(&h)
        .map(|(w, p)| w * p)
        .sum())
}
