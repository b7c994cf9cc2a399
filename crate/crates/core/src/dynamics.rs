//! One-step update kernels, decision detection and fixed-point detection.
//!
//! Synchronous mode with follower roles is an extension: every agent reads
//! the time-`t` state and excludes itself from its neighborhood. The theory
//! only uses synchronous mode for Bernoulli-type agents.
//!
//! In asynchronous mode a Bernoulli agent redraws only when it is the
//! selected agent.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{draw_bernoulli, w_from_z, GameConfig, Mode, OpinionState, Role};

/// Distribution of an agent's next opinion given what it sees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateLaw {
    /// Next opinion is 1 with probability `p`. Rejectors are `p = 0`,
    /// consentors `p = 1`.
    Bernoulli(f64),
    /// Copy a uniformly chosen neighbor: 1 with probability `ones / others`.
    Copy { ones: usize, others: usize },
    /// Deterministic next opinion.
    Fixed(bool),
}

impl UpdateLaw {
    pub fn one_probability(&self) -> f64 {
        match *self {
            UpdateLaw::Bernoulli(p) => p,
            UpdateLaw::Copy { ones, others } => ones as f64 / others as f64,
            UpdateLaw::Fixed(x) => f64::from(u8::from(x)),
        }
    }

    /// Same as [`UpdateLaw::one_probability`], without rounding. Bernoulli
    /// parameters convert from their exact binary value.
    pub fn one_probability_exact(&self) -> BigRational {
        match *self {
            UpdateLaw::Bernoulli(p) => {
                BigRational::from_float(p).expect("bernoulli parameter is finite")
            }
            UpdateLaw::Copy { ones, others } => {
                BigRational::new(BigInt::from(ones), BigInt::from(others))
            }
            UpdateLaw::Fixed(true) => BigRational::one(),
            UpdateLaw::Fixed(false) => BigRational::zero(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match *self {
            UpdateLaw::Bernoulli(p) => draw_bernoulli(rng, p),
            UpdateLaw::Copy { ones, others } => rng.gen_range(0..others) < ones,
            UpdateLaw::Fixed(x) => x,
        }
    }

    /// True when the next opinion is `x` with certainty.
    pub fn is_certainly(&self, x: bool) -> bool {
        let p = self.one_probability();
        if x {
            p == 1.0
        } else {
            p == 0.0
        }
    }
}

/// Law of the next opinion for an agent with `role` currently holding
/// `self_opinion`, when `ones_among_others` of its `n - 1` neighbors hold 1.
pub fn update_law(
    role: Role,
    self_opinion: bool,
    ones_among_others: usize,
    n: usize,
) -> Result<UpdateLaw> {
    if role.is_follower() && n < 2 {
        return Err(Error::NoNeighbors);
    }
    if n == 0 || ones_among_others > n - 1 {
        return Err(Error::Precondition(format!(
            "{ones_among_others} ones among {} neighbors",
            n.saturating_sub(1)
        )));
    }
    let others = n - 1;
    // compare ones against others / 2 without halving
    let twice = 2 * ones_among_others;
    Ok(match role {
        Role::Rejector => UpdateLaw::Bernoulli(0.0),
        Role::Consentor => UpdateLaw::Bernoulli(1.0),
        Role::Bernoulli(p) => UpdateLaw::Bernoulli(p),
        Role::RandomFollower => UpdateLaw::Copy {
            ones: ones_among_others,
            others,
        },
        Role::MajorityFollower => UpdateLaw::Fixed(match twice.cmp(&others) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self_opinion,
        }),
        Role::MinorityFollower => UpdateLaw::Fixed(match twice.cmp(&others) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self_opinion,
        }),
    })
}

/// Samples one agent's next opinion.
pub fn update_opinion<R: Rng + ?Sized>(
    role: Role,
    self_opinion: bool,
    ones_among_others: usize,
    n: usize,
    rng: &mut R,
) -> Result<bool> {
    Ok(update_law(role, self_opinion, ones_among_others, n)?.sample(rng))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    /// The updating agent; `None` in synchronous mode.
    pub selected_agent: Option<usize>,
    pub changed: bool,
    pub new_state: OpinionState,
}

/// One asynchronous step: a uniformly selected agent updates.
pub fn step_async<R: Rng + ?Sized>(
    state: &OpinionState,
    config: &GameConfig,
    rng: &mut R,
) -> StepRecord {
    let mut next = state.clone();
    let mut z = state.z();
    let (agent, changed) = step_async_in_place(&mut next, &mut z, config.population().roles(), rng);
    StepRecord {
        selected_agent: Some(agent),
        changed,
        new_state: next,
    }
}

/// One synchronous round: every agent updates from the time-`t` state.
pub fn step_sync<R: Rng + ?Sized>(
    state: &OpinionState,
    config: &GameConfig,
    rng: &mut R,
) -> StepRecord {
    let mut next = state.clone();
    let mut z = state.z();
    let changed = step_sync_in_place(&mut next, &mut z, config.population().roles(), rng);
    StepRecord {
        selected_agent: None,
        changed,
        new_state: next,
    }
}

pub fn step<R: Rng + ?Sized>(state: &OpinionState, config: &GameConfig, rng: &mut R) -> StepRecord {
    match config.mode() {
        Mode::Asynchronous => step_async(state, config, rng),
        Mode::Synchronous => step_sync(state, config, rng),
    }
}

/// Asynchronous step that mutates `state` and keeps `z` current. Returns the
/// selected agent and whether its opinion changed.
pub(crate) fn step_async_in_place<R: Rng + ?Sized>(
    state: &mut OpinionState,
    z: &mut usize,
    roles: &[Role],
    rng: &mut R,
) -> (usize, bool) {
    let n = roles.len();
    let agent = rng.gen_range(0..n);
    let own = state.opinions[agent];
    let ones = *z - usize::from(own);
    let next = update_law(roles[agent], own, ones, n)
        .expect("configuration validated at construction")
        .sample(rng);
    let changed = next != own;
    if changed {
        let w_before = w_from_z(n, *z);
        state.opinions[agent] = next;
        if next {
            *z += 1;
        } else {
            *z -= 1;
        }
        debug_assert_eq!(
            w_before as i64 - w_from_z(n, *z) as i64,
            w_recursion_change(own, ones, n, changed),
            "W recursion violated"
        );
    }
    state.t += 1;
    (agent, changed)
}

pub(crate) fn step_sync_in_place<R: Rng + ?Sized>(
    state: &mut OpinionState,
    z: &mut usize,
    roles: &[Role],
    rng: &mut R,
) -> bool {
    let n = roles.len();
    let z_now = *z;
    let mut changed = false;
    let mut z_next = 0;
    let next: Vec<bool> = roles
        .iter()
        .zip(&state.opinions)
        .map(|(&role, &own)| {
            let x = update_law(role, own, z_now - usize::from(own), n)
                .expect("configuration validated at construction")
                .sample(rng);
            changed |= x != own;
            z_next += usize::from(x);
            x
        })
        .collect();
    state.opinions = next;
    state.t += 1;
    *z = z_next;
    changed
}

/// `W_t - W_{t+1}` predicted from the selected agent's view:
/// `2 * sum_{j != k} (1{x_k != x_j} - 1{x_k == x_j}) * 1{x_k changed}`.
pub fn w_recursion_change(own: bool, ones_among_others: usize, n: usize, changed: bool) -> i64 {
    if !changed {
        return 0;
    }
    let others = (n - 1) as i64;
    let disagree = if own {
        others - ones_among_others as i64
    } else {
        ones_among_others as i64
    };
    let agree = others - disagree;
    2 * (disagree - agree)
}

/// Decision test, `Z >= k`.
pub fn is_decision(state: &OpinionState, k: usize) -> bool {
    state.z() >= k
}

/// True iff no agent can change its opinion at the next update.
pub fn is_frozen(state: &OpinionState, config: &GameConfig) -> Result<bool> {
    let roles = config.population().roles();
    if !config.population().freezing_defined() {
        return Err(Error::FreezingUndefined);
    }
    let n = roles.len();
    let z = state.z();
    for (&role, &own) in roles.iter().zip(&state.opinions) {
        let law = update_law(role, own, z - usize::from(own), n)?;
        if !law.is_certainly(own) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Constant-time freezing test for the simulation loop. Tracks how many
/// followers of each kind hold opinion 1.
#[derive(Clone, Debug)]
pub(crate) struct FreezeTracker {
    n: usize,
    // (size, ones) for random, majority, minority followers
    classes: [(usize, usize); 3],
}

impl FreezeTracker {
    pub fn new(roles: &[Role], state: &OpinionState) -> Self {
        let mut classes = [(0, 0); 3];
        for (&role, &x) in roles.iter().zip(&state.opinions) {
            if let Some(c) = Self::class_of(role) {
                classes[c].0 += 1;
                classes[c].1 += usize::from(x);
            }
        }
        FreezeTracker {
            n: roles.len(),
            classes,
        }
    }

    fn class_of(role: Role) -> Option<usize> {
        match role {
            Role::RandomFollower => Some(0),
            Role::MajorityFollower => Some(1),
            Role::MinorityFollower => Some(2),
            _ => None,
        }
    }

    pub fn record_change(&mut self, role: Role, now: bool) {
        if let Some(c) = Self::class_of(role) {
            if now {
                self.classes[c].1 += 1;
            } else {
                self.classes[c].1 -= 1;
            }
        }
    }

    pub fn rebuild(&mut self, roles: &[Role], state: &OpinionState) {
        *self = FreezeTracker::new(roles, state);
    }

    pub fn is_frozen(&self, z: usize) -> bool {
        let n = self.n;
        let others = n.saturating_sub(1);
        let [(rs, r1), (ms, m1), (ns, n1)] = self.classes;
        let has = |ones: usize, size: usize| (ones > 0, size > ones);
        let (r_one, r_zero) = has(r1, rs);
        if (r_one && z != n) || (r_zero && z != 0) {
            return false;
        }
        // a 1-holder sees z - 1 ones, a 0-holder sees z ones
        let (m_one, m_zero) = has(m1, ms);
        if (m_one && 2 * (z - 1) < others) || (m_zero && 2 * z > others) {
            return false;
        }
        let (n_one, n_zero) = has(n1, ns);
        if (n_one && 2 * (z - 1) > others) || (n_zero && 2 * z < others) {
            return false;
        }
        true
    }
}
