//! Agents, populations, game configuration and opinion states.
//!
//! The social graph is always the complete graph on the population, so an
//! agent's neighborhood is every other agent. Nothing here stores edges.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behavioral class of a single agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Role {
    /// Holds opinion 0 at all times.
    Rejector,
    /// Holds opinion 1 at all times.
    Consentor,
    /// Opinion is a fresh Bernoulli(p) draw whenever the agent updates.
    Bernoulli(f64),
    /// Copies a uniformly chosen neighbor.
    RandomFollower,
    /// Adopts the strict majority opinion of its neighbors, keeps its own on a tie.
    MajorityFollower,
    /// Adopts the strict minority opinion of its neighbors, keeps its own on a tie.
    MinorityFollower,
}

impl Role {
    /// Bernoulli(1/2).
    pub const NEUTRALIST: Role = Role::Bernoulli(0.5);

    pub fn bernoulli(p: f64) -> Result<Role> {
        if p.is_finite() && (0.0..=1.0).contains(&p) {
            Ok(Role::Bernoulli(p))
        } else {
            Err(Error::InvalidProbability(p))
        }
    }

    pub fn is_follower(&self) -> bool {
        matches!(
            self,
            Role::RandomFollower | Role::MajorityFollower | Role::MinorityFollower
        )
    }

    /// Probability that the agent's opinion is 1 at time 0.
    pub fn initial_one_probability(&self) -> f64 {
        match *self {
            Role::Rejector => 0.0,
            Role::Consentor => 1.0,
            Role::Bernoulli(p) => p,
            Role::RandomFollower | Role::MajorityFollower | Role::MinorityFollower => 0.5,
        }
    }

    /// True for Bernoulli agents whose opinion can still change by itself.
    pub fn is_stochastic_bernoulli(&self) -> bool {
        matches!(*self, Role::Bernoulli(p) if p > 0.0 && p < 1.0)
    }

    fn validate(&self) -> Result<()> {
        if let Role::Bernoulli(p) = *self {
            Role::bernoulli(p)?;
        }
        Ok(())
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Rejector => f.write_str("rejector"),
            Role::Consentor => f.write_str("consentor"),
            Role::Bernoulli(p) if *p == 0.5 => f.write_str("neutralist"),
            Role::Bernoulli(p) => write!(f, "bernoulli({p})"),
            Role::RandomFollower => f.write_str("random"),
            Role::MajorityFollower => f.write_str("majority"),
            Role::MinorityFollower => f.write_str("minority"),
        }
    }
}

/// Per-class agent counts of a population.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub rejectors: usize,
    pub consentors: usize,
    pub random: usize,
    pub majority: usize,
    pub minority: usize,
    /// Every Bernoulli agent, neutralists included.
    pub bernoulli: usize,
    /// Bernoulli(1/2) agents only.
    pub neutralists: usize,
}

impl Census {
    pub fn followers(&self) -> usize {
        self.random + self.majority + self.minority
    }
}

/// Ordered list of agent roles. Agent `i` is `roles[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Population {
    roles: Vec<Role>,
}

impl Population {
    pub fn new(roles: Vec<Role>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for role in &roles {
            role.validate()?;
        }
        Ok(Population { roles })
    }

    /// Builds a population from `(count, role)` groups in order.
    pub fn from_groups(groups: &[(usize, Role)]) -> Result<Self> {
        let roles = groups
            .iter()
            .flat_map(|&(count, role)| std::iter::repeat_n(role, count))
            .collect();
        Population::new(roles)
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for role in &self.roles {
            match *role {
                Role::Rejector => c.rejectors += 1,
                Role::Consentor => c.consentors += 1,
                Role::Bernoulli(p) => {
                    c.bernoulli += 1;
                    if p == 0.5 {
                        c.neutralists += 1;
                    }
                }
                Role::RandomFollower => c.random += 1,
                Role::MajorityFollower => c.majority += 1,
                Role::MinorityFollower => c.minority += 1,
            }
        }
        c
    }

    /// True when no agent can change its own opinion without looking at others.
    pub fn freezing_defined(&self) -> bool {
        !self.roles.iter().any(Role::is_stochastic_bernoulli)
    }
}

impl fmt::Display for Population {
    /// Run-length form accepted by [`Population::from_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.roles.len() {
            let role = self.roles[i];
            let mut j = i + 1;
            while j < self.roles.len() && self.roles[j] == role {
                j += 1;
            }
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{}*{}", j - i, role)?;
            first = false;
            i = j;
        }
        Ok(())
    }
}

impl FromStr for Population {
    type Err = Error;

    /// Parses `count*role` terms separated by commas, e.g.
    /// `2*rejector,1*consentor,3*majority,4*bernoulli(0.3)`. The count may be
    /// omitted and defaults to 1. Columns in errors are 1-based.
    fn from_str(s: &str) -> Result<Self> {
        let mut groups = Vec::new();
        let mut offset = 0;
        for term in s.split(',') {
            let column = offset + 1 + (term.len() - term.trim_start().len());
            offset += term.len() + 1;
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::Parse {
                    column,
                    message: "empty term".into(),
                });
            }
            let (count, role_text, role_column) = match term.split_once('*') {
                Some((count, role)) => {
                    let count = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                        column,
                        message: format!("invalid count {:?}", count.trim()),
                    })?;
                    let skip = term.len() - role.len();
                    let lead = role.len() - role.trim_start().len();
                    (count, role.trim(), column + skip + lead)
                }
                None => (1, term, column),
            };
            if count == 0 {
                return Err(Error::Parse {
                    column,
                    message: "count must be positive".into(),
                });
            }
            let role = parse_role(role_text).map_err(|message| Error::Parse {
                column: role_column,
                message,
            })?;
            groups.push((count, role));
        }
        Population::from_groups(&groups).map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                column: 1,
                message: other.to_string(),
            },
        })
    }
}

fn parse_role(text: &str) -> std::result::Result<Role, String> {
    let lower = text.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix("bernoulli") {
        let inner = rest
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("expected bernoulli(p), found {text:?}"))?;
        let p: f64 = inner
            .trim()
            .parse()
            .map_err(|_| format!("invalid probability {:?}", inner.trim()))?;
        return Role::bernoulli(p).map_err(|e| e.to_string());
    }
    match lower.as_str() {
        "rejector" | "r" => Ok(Role::Rejector),
        "consentor" | "c" => Ok(Role::Consentor),
        "neutralist" | "neutral" | "n" => Ok(Role::NEUTRALIST),
        "random" | "random-follower" | "rf" => Ok(Role::RandomFollower),
        "majority" | "majority-follower" | "mf" => Ok(Role::MajorityFollower),
        "minority" | "minority-follower" | "nf" => Ok(Role::MinorityFollower),
        _ => Err(format!("unknown role {text:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "sync")]
    Synchronous,
    #[serde(rename = "async")]
    Asynchronous,
}

impl Mode {
    pub fn default_max_steps(self) -> u64 {
        match self {
            Mode::Synchronous => 10_000,
            Mode::Asynchronous => 1_000_000,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Synchronous => "sync",
            Mode::Asynchronous => "async",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sync" | "synchronous" => Ok(Mode::Synchronous),
            "async" | "asynchronous" => Ok(Mode::Asynchronous),
            _ => Err(Error::Parse {
                column: 1,
                message: format!("unknown mode {s:?}"),
            }),
        }
    }
}

/// One game instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GameConfig {
    population: Population,
    k: usize,
    mode: Mode,
    master_seed: u64,
    max_steps: u64,
}

impl GameConfig {
    /// Uses the mode's default step budget; see [`GameConfig::with_max_steps`].
    pub fn new(population: Population, k: usize, mode: Mode, master_seed: u64) -> Result<Self> {
        let max_steps = mode.default_max_steps();
        GameConfig::with_max_steps(population, k, mode, master_seed, max_steps)
    }

    pub fn with_max_steps(
        population: Population,
        k: usize,
        mode: Mode,
        master_seed: u64,
        max_steps: u64,
    ) -> Result<Self> {
        let n = population.len();
        if k < 1 || k > n {
            return Err(Error::InvalidThreshold { k, n });
        }
        if max_steps < 1 {
            return Err(Error::InvalidMaxSteps);
        }
        if n == 1 && population.roles()[0].is_follower() {
            return Err(Error::NoNeighbors);
        }
        Ok(GameConfig {
            population,
            k,
            mode,
            master_seed,
            max_steps,
        })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn n(&self) -> usize {
        self.population.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        GameConfig {
            master_seed,
            ..self.clone()
        }
    }
}

/// Opinion vector at time `t`. `true` is opinion 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OpinionState {
    pub opinions: Vec<bool>,
    pub t: u64,
}

impl OpinionState {
    pub fn new(opinions: Vec<bool>) -> Self {
        OpinionState { opinions, t: 0 }
    }

    /// Builds a state from 0/1 digits, mostly for tests.
    pub fn from_bits(bits: &[u8]) -> Self {
        OpinionState::new(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn n(&self) -> usize {
        self.opinions.len()
    }

    pub fn z(&self) -> usize {
        z_value(self)
    }

    pub fn w(&self) -> u64 {
        w_value(self)
    }
}

impl fmt::Display for OpinionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.opinions {
            f.write_str(if x { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Number of agents holding opinion 1.
pub fn z_value(state: &OpinionState) -> usize {
    state.opinions.iter().filter(|&&x| x).count()
}

/// Ordered-pair disagreement count, `2 Z (n - Z)`.
pub fn w_value(state: &OpinionState) -> u64 {
    w_from_z(state.n(), z_value(state))
}

pub fn w_from_z(n: usize, z: usize) -> u64 {
    2 * z as u64 * (n - z) as u64
}

/// Uniform draw compared against `p`. Always consumes exactly one `f64`, so
/// a pinned role and the Bernoulli agent with the same `p` use the stream
/// identically.
#[inline]
pub(crate) fn draw_bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// Samples the time-0 state: pinned roles at their value, followers
/// Bernoulli(1/2), Bernoulli agents Bernoulli(p). One uniform per agent, in
/// agent order.
pub fn initial_state<R: Rng + ?Sized>(population: &Population, rng: &mut R) -> OpinionState {
    let opinions = population
        .roles()
        .iter()
        .map(|role| draw_bernoulli(rng, role.initial_one_probability()))
        .collect();
    OpinionState::new(opinions)
}
