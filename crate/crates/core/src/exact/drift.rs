//! Exact one-step conditional drifts of `Z` and `W` under the asynchronous
//! update dynamics. The decision threshold is ignored: these are drifts of
//! the update kernel itself.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::layout::{ClassLayout, LumpedState};
use crate::error::{Error, Result};
use crate::model::{w_from_z, GameConfig, Mode};

fn drift_of(
    config: &GameConfig,
    state: &LumpedState,
    f: impl Fn(usize, usize) -> i64,
) -> Result<BigRational> {
    if config.mode() != Mode::Asynchronous {
        return Err(Error::UnsupportedMode {
            expected: "asynchronous",
        });
    }
    let layout = ClassLayout::new(config.population(), usize::MAX)?;
    if state.counts.len() != layout.classes().len()
        || state
            .counts
            .iter()
            .zip(layout.classes())
            .any(|(&c, class)| c > class.size)
    {
        return Err(Error::Precondition(format!(
            "lumped state {:?} does not fit the population",
            state.counts
        )));
    }
    let n = layout.n();
    let z = layout.z(state);
    let now = f(n, z);
    Ok(layout
        .moves::<BigRational>(state)
        .into_iter()
        .fold(BigRational::zero(), |acc, (t, p)| {
            let z_next = layout.z(&layout.decode(t));
            acc + p * BigRational::from_integer(BigInt::from(f(n, z_next) - now))
        }))
}

/// `E[Z_{t+1} - Z_t | state]`.
pub fn one_step_z_drift(config: &GameConfig, state: &LumpedState) -> Result<BigRational> {
    drift_of(config, state, |_, z| z as i64)
}

/// `E[W_{t+1} - W_t | state]` with `W = 2 Z (n - Z)`.
pub fn one_step_w_drift(config: &GameConfig, state: &LumpedState) -> Result<BigRational> {
    drift_of(config, state, |n, z| w_from_z(n, z) as i64)
}
