//! Reproducible Monte Carlo estimation of decision probability and timing.
//!
//! Every trial owns a generator seeded from `(master_seed, trial_index)`
//! through [`trial_seed`], so results do not depend on how trials are
//! scheduled across threads. Aggregation always walks trials in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{step_async_in_place, step_sync_in_place, FreezeTracker};
use crate::model::{initial_state, GameConfig, Mode};

/// Two-sided 99% standard normal quantile, Phi^-1(0.995).
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub decided: bool,
    /// Steps (asynchronous) or rounds (synchronous) until `Z >= k`.
    pub decision_time: Option<u64>,
    pub frozen: bool,
    /// First time from which no opinion can change again.
    pub freeze_time: Option<u64>,
    /// Hit `max_steps` without deciding or freezing.
    pub truncated: bool,
    pub final_z: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub n_trials: u64,
    pub decided: u64,
    pub p_decision_hat: f64,
    pub wilson_ci_99: (f64, f64),
    /// Mean over deciding trials; `None` when no trial decided.
    pub mean_decision_time: Option<f64>,
    pub frozen_rate: f64,
    pub mean_freeze_time: Option<f64>,
    pub truncation_rate: f64,
}

/// splitmix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial_index`: `mix64(master_seed ^ mix64(trial_index))`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    mix64(master_seed ^ mix64(trial_index))
}

pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial_index))
}

/// Runs one trajectory until decision, freezing or the step budget.
pub fn run_trial(config: &GameConfig, trial_index: u64) -> TrialOutcome {
    let mut rng = trial_rng(config.master_seed(), trial_index);
    let roles = config.population().roles();
    let k = config.k();
    let check_frozen = config.population().freezing_defined();

    let mut state = initial_state(config.population(), &mut rng);
    let mut z = state.z();
    let mut tracker = FreezeTracker::new(roles, &state);

    loop {
        let t = state.t;
        if z >= k {
            return TrialOutcome {
                decided: true,
                decision_time: Some(t),
                frozen: false,
                freeze_time: None,
                truncated: false,
                final_z: z,
            };
        }
        if check_frozen && tracker.is_frozen(z) {
            return TrialOutcome {
                decided: false,
                decision_time: None,
                frozen: true,
                freeze_time: Some(t),
                truncated: false,
                final_z: z,
            };
        }
        if t >= config.max_steps() {
            return TrialOutcome {
                decided: false,
                decision_time: None,
                frozen: false,
                freeze_time: None,
                truncated: true,
                final_z: z,
            };
        }
        match config.mode() {
            Mode::Asynchronous => {
                let (agent, changed) = step_async_in_place(&mut state, &mut z, roles, &mut rng);
                if changed {
                    tracker.record_change(roles[agent], state.opinions[agent]);
                }
            }
            Mode::Synchronous => {
                if step_sync_in_place(&mut state, &mut z, roles, &mut rng) && check_frozen {
                    tracker.rebuild(roles, &state);
                }
            }
        }
    }
}

/// Runs trials `0..n_trials` on the global rayon pool; output is in trial order.
pub fn run_trials(config: &GameConfig, n_trials: u64) -> Vec<TrialOutcome> {
    (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect()
}

/// Runs trials on a dedicated pool of `workers` threads.
pub fn run_trials_with_workers(
    config: &GameConfig,
    n_trials: u64,
    workers: usize,
) -> Vec<TrialOutcome> {
    if workers <= 1 {
        return (0..n_trials).map(|i| run_trial(config, i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| run_trials(config, n_trials))
}

pub fn estimate(config: &GameConfig, n_trials: u64) -> Estimate {
    summarize(&run_trials(config, n_trials))
}

pub fn estimate_with_workers(config: &GameConfig, n_trials: u64, workers: usize) -> Estimate {
    summarize(&run_trials_with_workers(config, n_trials, workers))
}

/// Folds outcomes in the given order.
pub fn summarize(outcomes: &[TrialOutcome]) -> Estimate {
    let n = outcomes.len() as u64;
    let mut decided = 0u64;
    let mut frozen = 0u64;
    let mut truncated = 0u64;
    let mut decision_sum = 0u128;
    let mut freeze_sum = 0u128;
    for o in outcomes {
        if let Some(t) = o.decision_time {
            decided += 1;
            decision_sum += u128::from(t);
        }
        if let Some(t) = o.freeze_time {
            frozen += 1;
            freeze_sum += u128::from(t);
        }
        truncated += u64::from(o.truncated);
    }
    let rate = |c: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let mean = |s: u128, c: u64| (c > 0).then(|| s as f64 / c as f64);
    let p = rate(decided);
    Estimate {
        n_trials: n,
        decided,
        p_decision_hat: p,
        wilson_ci_99: wilson_interval(decided, n, Z_99),
        mean_decision_time: mean(decision_sum, decided),
        frozen_rate: rate(frozen),
        mean_freeze_time: mean(freeze_sum, frozen),
        truncation_rate: rate(truncated),
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    (lo, hi)
}

/// Empirical survival `P(T >= t)` of the decision time over deciding and
/// non-deciding trials, for `t` in `0..len`.
pub fn decision_time_survival(outcomes: &[TrialOutcome], len: usize) -> Vec<f64> {
    let n = outcomes.len() as f64;
    let mut hist = vec![0u64; len + 1];
    for o in outcomes {
        let t = o.decision_time.map_or(len, |t| (t as usize).min(len));
        hist[t] += 1;
    }
    let mut survival = Vec::with_capacity(len);
    let mut remaining = outcomes.len() as u64;
    for &h in hist.iter().take(len) {
        survival.push(remaining as f64 / n);
        remaining -= h;
    }
    survival
}
