use serde::Serialize;

use super::layout::{ClassKind, ClassLayout, LumpedState};
use super::solve::{can_reach, expected_hitting_times, hitting_probabilities, SparseRows};
use crate::error::{Error, Result};
use crate::model::{GameConfig, Mode};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// Reaches an absorbing state with positive probability.
    Transient,
    /// `Z >= k`; the dynamics halt.
    AbsorbingDecision,
    /// Fixed point of the dynamics with `Z < k`.
    AbsorbingNoDecision,
    /// No absorbing state is reachable; the walk cycles forever without
    /// deciding (Bernoulli agents out of reach of the threshold).
    NeverAbsorbed,
}

/// Lumped asynchronous chain with its absorption analysis.
#[derive(Clone, Debug)]
pub struct ChainAnalysis {
    layout: ClassLayout,
    k: usize,
    rows: SparseRows,
    classification: Vec<StateClass>,
    p_decision: Vec<f64>,
    expected_steps: Vec<f64>,
    residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Absorption {
    pub p_decision: f64,
    pub p_no_decision: f64,
    /// Infinite when absorption is not almost sure.
    pub expected_steps: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub states: usize,
    pub transient: usize,
    pub absorbing_decision: usize,
    pub absorbing_no_decision: usize,
    pub never_absorbed: usize,
}

pub fn build_chain(config: &GameConfig) -> Result<ChainAnalysis> {
    build_chain_with_cap(config, DEFAULT_STATE_CAP)
}

/// Builds and solves the lumped chain. Decision states are absorbing.
pub fn build_chain_with_cap(config: &GameConfig, cap: usize) -> Result<ChainAnalysis> {
    if config.mode() != Mode::Asynchronous {
        return Err(Error::UnsupportedMode {
            expected: "asynchronous",
        });
    }
    let layout = ClassLayout::new(config.population(), cap)?;
    let k = config.k();
    let count = layout.state_count();
    let mut rows: SparseRows = Vec::with_capacity(count);
    let mut classification = Vec::with_capacity(count);
    for s in layout.states() {
        let idx = layout.encode(&s);
        if layout.z(&s) >= k {
            rows.push(vec![(idx, 1.0)]);
            classification.push(StateClass::AbsorbingDecision);
            continue;
        }
        let row = layout.moves::<f64>(&s);
        let fixed = row.len() == 1 && row[0].0 == idx;
        classification.push(if fixed {
            StateClass::AbsorbingNoDecision
        } else {
            StateClass::Transient
        });
        rows.push(row);
    }
    let absorbing: Vec<bool> = classification
        .iter()
        .map(|c| {
            matches!(
                c,
                StateClass::AbsorbingDecision | StateClass::AbsorbingNoDecision
            )
        })
        .collect();
    let reach = can_reach(&rows, &absorbing);
    for (c, r) in classification.iter_mut().zip(&reach) {
        if !r {
            *c = StateClass::NeverAbsorbed;
        }
    }

    let decision: Vec<bool> = classification
        .iter()
        .map(|&c| c == StateClass::AbsorbingDecision)
        .collect();
    let hits = hitting_probabilities(&rows, &decision)?;
    let times = expected_hitting_times(&rows, &absorbing)?;
    Ok(ChainAnalysis {
        layout,
        k,
        rows,
        classification,
        p_decision: hits.values,
        expected_steps: times.values,
        residual: hits.residual.max(times.residual),
    })
}

impl ChainAnalysis {
    pub fn layout(&self) -> &ClassLayout {
        &self.layout
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn state(&self, index: usize) -> LumpedState {
        self.layout.decode(index)
    }

    pub fn index_of(&self, state: &LumpedState) -> usize {
        self.layout.encode(state)
    }

    /// Transition row of a state: `(target, probability)` pairs.
    pub fn row(&self, index: usize) -> &[(usize, f64)] {
        &self.rows[index]
    }

    pub fn classification(&self) -> &[StateClass] {
        &self.classification
    }

    /// Decision probability from each state.
    pub fn p_decision(&self) -> &[f64] {
        &self.p_decision
    }

    /// Expected steps to absorption from each state.
    pub fn expected_steps(&self) -> &[f64] {
        &self.expected_steps
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn census(&self) -> Census {
        let mut c = Census {
            states: self.rows.len(),
            ..Census::default()
        };
        for class in &self.classification {
            match class {
                StateClass::Transient => c.transient += 1,
                StateClass::AbsorbingDecision => c.absorbing_decision += 1,
                StateClass::AbsorbingNoDecision => c.absorbing_no_decision += 1,
                StateClass::NeverAbsorbed => c.never_absorbed += 1,
            }
        }
        c
    }

    /// True when every non-absorbing state reaches an absorbing one with
    /// positive probability, i.e. the absorption time is almost surely finite.
    pub fn absorbs_almost_surely(&self) -> bool {
        !self.classification.contains(&StateClass::NeverAbsorbed)
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn initial_distribution(&self) -> Vec<f64> {
        self.layout.initial_distribution()
    }

    /// Absorption statistics from the model's time-0 law.
    pub fn absorption_from_start(&self) -> Result<Absorption> {
        absorption(self, &self.initial_distribution())
    }

    pub fn dump(&self) -> ChainDump {
        ChainDump {
            k: self.k,
            layout: self.layout.clone(),
            states: (0..self.rows.len())
                .map(|i| {
                    let s = self.layout.decode(i);
                    StateDump {
                        index: i,
                        z: self.layout.z(&s),
                        counts: s.counts,
                        class: self.classification[i],
                        p_decision: self.p_decision[i],
                        expected_steps: finite(self.expected_steps[i]),
                        transitions: self.rows[i].clone(),
                    }
                })
                .collect(),
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Combines per-state results over an initial law.
pub fn absorption(chain: &ChainAnalysis, initial_distribution: &[f64]) -> Result<Absorption> {
    if initial_distribution.len() != chain.state_count() {
        return Err(Error::Precondition(format!(
            "initial distribution has {} entries for {} states",
            initial_distribution.len(),
            chain.state_count()
        )));
    }
    let total: f64 = initial_distribution.iter().sum();
    if (total - 1.0).abs() > 1e-9 || initial_distribution.iter().any(|&p| p < 0.0) {
        return Err(Error::Precondition(format!(
            "initial distribution sums to {total}"
        )));
    }
    let mut p = 0.0;
    let mut steps = 0.0;
    for ((&w, &h), &t) in initial_distribution
        .iter()
        .zip(&chain.p_decision)
        .zip(&chain.expected_steps)
    {
        if w > 0.0 {
            p += w * h;
            steps += w * t;
        }
    }
    Ok(Absorption {
        p_decision: p,
        p_no_decision: 1.0 - p,
        expected_steps: steps,
        residual: chain.residual,
    })
}

/// Checks that every no-decision absorbing state has all majority followers
/// at opinion 0. Requires rejectors, consentors and at least two majority
/// followers, with `k <= n - n_r`.
pub fn verify_lemma7(chain: &ChainAnalysis) -> Result<bool> {
    let layout = &chain.layout;
    let classes = layout.classes();
    let majority = layout.class_index(ClassKind::MajorityFollower);
    let followers = majority.map_or(0, |j| classes[j].size);
    if classes.len() != 1 || majority.is_none() || followers < 2 {
        return Err(Error::Precondition(
            "population must be rejectors, consentors and at least two majority followers".into(),
        ));
    }
    if chain.k > layout.n() - layout.pinned_zeros() {
        return Err(Error::Precondition(format!(
            "threshold {} exceeds the {} non-rejectors",
            chain.k,
            layout.n() - layout.pinned_zeros()
        )));
    }
    let j = majority.unwrap();
    Ok(chain
        .classification
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == StateClass::AbsorbingNoDecision)
        .all(|(i, _)| layout.decode(i).counts[j] == 0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainDump {
    pub k: usize,
    pub layout: ClassLayout,
    pub states: Vec<StateDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StateDump {
    pub index: usize,
    pub counts: Vec<usize>,
    pub z: usize,
    pub class: StateClass,
    pub p_decision: f64,
    pub expected_steps: Option<f64>,
    pub transitions: Vec<(usize, f64)>,
}
