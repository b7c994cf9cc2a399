use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dynamics::{update_law, UpdateLaw};
use crate::error::{Error, Result};
use crate::model::{Population, Role};

/// Exchangeable agent class of the lumped chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ClassKind {
    RandomFollower,
    MajorityFollower,
    MinorityFollower,
    /// Bernoulli agent with `0 < p < 1`.
    Bernoulli(f64),
}

impl ClassKind {
    fn role(self) -> Role {
        match self {
            ClassKind::RandomFollower => Role::RandomFollower,
            ClassKind::MajorityFollower => Role::MajorityFollower,
            ClassKind::MinorityFollower => Role::MinorityFollower,
            ClassKind::Bernoulli(p) => Role::Bernoulli(p),
        }
    }

    fn initial_one_probability(self) -> f64 {
        self.role().initial_one_probability()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AgentClass {
    pub kind: ClassKind,
    pub size: usize,
}

/// Per-class counts of agents holding opinion 1. Pinned agents are implicit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LumpedState {
    pub counts: Vec<usize>,
}

/// Arithmetic needed to fill transition rows, for `f64` and exact rationals.
pub trait Weight:
    Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn frac(num: usize, den: usize) -> Self;
    fn law_one(law: &UpdateLaw) -> Self;
}

impl Weight for f64 {
    fn frac(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn law_one(law: &UpdateLaw) -> Self {
        law.one_probability()
    }
}

impl Weight for BigRational {
    fn frac(num: usize, den: usize) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn law_one(law: &UpdateLaw) -> Self {
        law.one_probability_exact()
    }
}

/// Class structure of a population: pinned agents plus exchangeable classes,
/// with a mixed-radix indexing of lumped states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassLayout {
    n: usize,
    pinned_ones: usize,
    pinned_zeros: usize,
    classes: Vec<AgentClass>,
    #[serde(skip)]
    agent_class: Vec<Option<usize>>,
    #[serde(skip)]
    strides: Vec<usize>,
    state_count: usize,
}

impl ClassLayout {
    /// Fails with [`Error::StateSpaceTooLarge`] when the lumped chain has more
    /// than `cap` states.
    pub fn new(population: &Population, cap: usize) -> Result<Self> {
        let mut pinned_ones = 0;
        let mut pinned_zeros = 0;
        let mut classes: Vec<AgentClass> = Vec::new();
        let mut agent_class = Vec::with_capacity(population.len());
        let order = |k: &ClassKind| match *k {
            ClassKind::RandomFollower => (0, 0.0),
            ClassKind::MajorityFollower => (1, 0.0),
            ClassKind::MinorityFollower => (2, 0.0),
            ClassKind::Bernoulli(p) => (3, p),
        };
        let kinds: Vec<Option<ClassKind>> = population
            .roles()
            .iter()
            .map(|&role| match role {
                Role::Rejector | Role::Consentor => None,
                Role::Bernoulli(p) if p == 0.0 || p == 1.0 => None,
                Role::Bernoulli(p) => Some(ClassKind::Bernoulli(p)),
                Role::RandomFollower => Some(ClassKind::RandomFollower),
                Role::MajorityFollower => Some(ClassKind::MajorityFollower),
                Role::MinorityFollower => Some(ClassKind::MinorityFollower),
            })
            .collect();
        for kind in kinds.iter().flatten() {
            if !classes.iter().any(|c| c.kind == *kind) {
                classes.push(AgentClass {
                    kind: *kind,
                    size: 0,
                });
            }
        }
        classes.sort_by(|a, b| {
            let (ra, pa) = order(&a.kind);
            let (rb, pb) = order(&b.kind);
            ra.cmp(&rb).then(pa.total_cmp(&pb))
        });
        for (role, kind) in population.roles().iter().zip(&kinds) {
            match kind {
                Some(kind) => {
                    let idx = classes.iter().position(|c| c.kind == *kind).unwrap();
                    classes[idx].size += 1;
                    agent_class.push(Some(idx));
                }
                None => {
                    if role.initial_one_probability() == 1.0 {
                        pinned_ones += 1;
                    } else {
                        pinned_zeros += 1;
                    }
                    agent_class.push(None);
                }
            }
        }
        let mut strides = Vec::with_capacity(classes.len());
        let mut total: u128 = 1;
        for c in &classes {
            strides.push(total as usize);
            total *= (c.size + 1) as u128;
            if total > cap as u128 {
                return Err(Error::StateSpaceTooLarge { states: total, cap });
            }
        }
        Ok(ClassLayout {
            n: population.len(),
            pinned_ones,
            pinned_zeros,
            classes,
            agent_class,
            strides,
            state_count: total as usize,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Consentors and Bernoulli(1) agents.
    pub fn pinned_ones(&self) -> usize {
        self.pinned_ones
    }

    /// Rejectors and Bernoulli(0) agents.
    pub fn pinned_zeros(&self) -> usize {
        self.pinned_zeros
    }

    pub fn classes(&self) -> &[AgentClass] {
        &self.classes
    }

    pub fn class_index(&self, kind: ClassKind) -> Option<usize> {
        self.classes.iter().position(|c| c.kind == kind)
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn encode(&self, state: &LumpedState) -> usize {
        state
            .counts
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| c * s)
            .sum()
    }

    pub fn decode(&self, mut index: usize) -> LumpedState {
        let counts = self
            .classes
            .iter()
            .map(|c| {
                let radix = c.size + 1;
                let v = index % radix;
                index /= radix;
                v
            })
            .collect();
        LumpedState { counts }
    }

    pub fn states(&self) -> impl Iterator<Item = LumpedState> + '_ {
        (0..self.state_count).map(move |i| self.decode(i))
    }

    pub fn z(&self, state: &LumpedState) -> usize {
        self.pinned_ones + state.counts.iter().sum::<usize>()
    }

    /// Image of a full opinion vector under lumping.
    pub fn lump(&self, opinions: &[bool]) -> LumpedState {
        let mut counts = vec![0; self.classes.len()];
        for (class, &x) in self.agent_class.iter().zip(opinions) {
            if let Some(c) = class {
                counts[*c] += usize::from(x);
            }
        }
        LumpedState { counts }
    }

    /// One asynchronous step of the update dynamics from `state`, ignoring
    /// the decision threshold. Returns `(target index, probability)` pairs
    /// with the self-loop last.
    pub fn moves<W: Weight>(&self, state: &LumpedState) -> Vec<(usize, W)> {
        let n = self.n;
        let z = self.z(state);
        let here = self.encode(state);
        let mut out = Vec::with_capacity(2 * self.classes.len() + 1);
        let mut leave = W::zero();
        for (j, class) in self.classes.iter().enumerate() {
            let role = class.kind.role();
            let ones = state.counts[j];
            let zeros = class.size - ones;
            if ones > 0 {
                let law = update_law(role, true, z - 1, n).expect("valid lumped state");
                let p = W::frac(ones, n) * (W::one() - W::law_one(&law));
                if !p.is_zero() {
                    leave = leave + p.clone();
                    out.push((here - self.strides[j], p));
                }
            }
            if zeros > 0 {
                let law = update_law(role, false, z, n).expect("valid lumped state");
                let p = W::frac(zeros, n) * W::law_one(&law);
                if !p.is_zero() {
                    leave = leave + p.clone();
                    out.push((here + self.strides[j], p));
                }
            }
        }
        let stay = W::one() - leave;
        if !stay.is_zero() {
            out.push((here, stay));
        }
        out
    }

    /// Law of the lumped time-0 state: independent binomials per class.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let per_class: Vec<Vec<f64>> = self
            .classes
            .iter()
            .map(|c| binomial_pmf(c.size, c.kind.initial_one_probability()))
            .collect();
        self.states()
            .map(|s| {
                s.counts
                    .iter()
                    .zip(&per_class)
                    .map(|(&c, pmf)| pmf[c])
                    .product()
            })
            .collect()
    }

    /// Exact version of [`ClassLayout::initial_distribution`].
    pub fn initial_distribution_exact(&self) -> Vec<BigRational> {
        let per_class: Vec<Vec<BigRational>> = self
            .classes
            .iter()
            .map(|c| {
                let p = BigRational::from_float(c.kind.initial_one_probability()).unwrap();
                binomial_pmf_exact(c.size, &p)
            })
            .collect();
        self.states()
            .map(|s| {
                s.counts
                    .iter()
                    .zip(&per_class)
                    .fold(BigRational::one(), |acc, (&c, pmf)| acc * pmf[c].clone())
            })
            .collect()
    }
}

fn binomial_pmf(size: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; size + 1];
    pmf[0] = 1.0;
    for m in 0..size {
        for c in (0..=m + 1).rev() {
            let from_one = if c > 0 { pmf[c - 1] * p } else { 0.0 };
            pmf[c] = pmf[c] * (1.0 - p) + from_one;
        }
    }
    pmf
}

fn binomial_pmf_exact(size: usize, p: &BigRational) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    let mut pmf = vec![BigRational::zero(); size + 1];
    pmf[0] = BigRational::one();
    for m in 0..size {
        for c in (0..=m + 1).rev() {
            let from_one = if c > 0 {
                pmf[c - 1].clone() * p
            } else {
                BigRational::zero()
            };
            pmf[c] = pmf[c].clone() * &q + from_one;
        }
    }
    pmf
}
