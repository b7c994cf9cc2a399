//! Synchronous Bernoulli populations: per-round decision probability,
//! geometric decision time, and the normal approximations to it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GameConfig, Mode, Role};

/// `P(sum of independent Bernoulli(p_i) >= threshold)`.
///
/// Dynamic-programming convolution over the count distribution, with every
/// count at or above the threshold merged into one bucket so the tail is
/// accumulated directly rather than as `1 - cdf`.
pub fn poisson_binomial_tail(probabilities: &[f64], threshold: usize) -> Result<f64> {
    if let Some(&p) = probabilities
        .iter()
        .find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p)))
    {
        return Err(Error::InvalidProbability(p));
    }
    if threshold > probabilities.len() + 1 {
        return Err(Error::Precondition(format!(
            "threshold {threshold} exceeds {} + 1",
            probabilities.len()
        )));
    }
    if threshold == 0 {
        return Ok(1.0);
    }
    // dist[c] = P(count = c) for c < threshold, dist[threshold] = P(count >= threshold)
    let mut dist = vec![0.0; threshold + 1];
    dist[0] = 1.0;
    for (seen, &p) in probabilities.iter().enumerate() {
        let q = 1.0 - p;
        dist[threshold] += dist[threshold - 1] * p;
        let top = (seen + 1).min(threshold - 1);
        for c in (1..=top).rev() {
            dist[c] = dist[c] * q + dist[c - 1] * p;
        }
        dist[0] *= q;
    }
    Ok(dist[threshold])
}

/// Standard normal CDF through the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `1 - Phi((k_eff - n_eff p) / sqrt(n_eff p (1 - p)))`.
pub fn normal_approx_p(n_eff: usize, p_agent: f64, k_eff: f64) -> Result<f64> {
    if n_eff < 1 {
        return Err(Error::Precondition("n_eff must be at least 1".into()));
    }
    if !(p_agent.is_finite() && (0.0..=1.0).contains(&p_agent)) {
        return Err(Error::InvalidProbability(p_agent));
    }
    if p_agent == 0.0 || p_agent == 1.0 {
        return Err(Error::DegenerateVariance(p_agent));
    }
    let n = n_eff as f64;
    let sd = (n * p_agent * (1.0 - p_agent)).sqrt();
    Ok(1.0 - std_normal_cdf((k_eff - n * p_agent) / sd))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricRegime {
    /// Pinned consentors already meet the threshold: `T = 0`.
    DecidedAtStart,
    /// Each round succeeds independently with probability `p > 0`.
    Geometric,
    /// The threshold is out of reach: `p = 0`.
    Never,
}

/// Decision-time law of a synchronous Bernoulli population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricLaw {
    pub regime: GeometricRegime,
    /// Per-round decision probability.
    pub p: f64,
    /// `E[T] + 1 = 1/p`; 0 when decided at the start.
    pub expected_rounds: f64,
    /// `E[T] = (1 - p)/p`.
    pub expected_t: f64,
    /// Probability that a decision is ever made.
    pub p_decision: f64,
}

/// `(pinned ones, stochastic probabilities, rejectors)` of a Bernoulli-type population.
fn bernoulli_parts(config: &GameConfig) -> Result<(usize, Vec<f64>, usize)> {
    if config.mode() != Mode::Synchronous {
        return Err(Error::UnsupportedMode {
            expected: "synchronous",
        });
    }
    let mut consentors = 0;
    let mut rejectors = 0;
    let mut ps = Vec::new();
    for role in config.population().roles() {
        match *role {
            Role::Consentor => consentors += 1,
            Role::Rejector => rejectors += 1,
            Role::Bernoulli(p) => ps.push(p),
            _ => {
                return Err(Error::Precondition(
                    "population must consist of rejectors, consentors and Bernoulli agents".into(),
                ))
            }
        }
    }
    Ok((consentors, ps, rejectors))
}

pub fn geometric_decision_law(config: &GameConfig) -> Result<GeometricLaw> {
    let (consentors, ps, _) = bernoulli_parts(config)?;
    let k = config.k();
    if k <= consentors {
        return Ok(GeometricLaw {
            regime: GeometricRegime::DecidedAtStart,
            p: 1.0,
            expected_rounds: 0.0,
            expected_t: 0.0,
            p_decision: 1.0,
        });
    }
    let threshold = k - consentors;
    let p = if threshold > ps.len() {
        0.0
    } else {
        poisson_binomial_tail(&ps, threshold)?
    };
    if p == 0.0 {
        return Ok(GeometricLaw {
            regime: GeometricRegime::Never,
            p: 0.0,
            expected_rounds: f64::INFINITY,
            expected_t: f64::INFINITY,
            p_decision: 0.0,
        });
    }
    Ok(GeometricLaw {
        regime: GeometricRegime::Geometric,
        p,
        expected_rounds: 1.0 / p,
        expected_t: (1.0 - p) / p,
        p_decision: 1.0,
    })
}

/// Normal-approximation round probabilities at the largest and smallest
/// agent probability among non-rejectors (consentors count as `p = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundBounds {
    pub p_max: f64,
    pub p_min: f64,
    /// `1/p_max`, the lower end of the mean rounds to decide.
    pub rounds_low: f64,
    /// `1/p_min`.
    pub rounds_high: f64,
}

pub fn lemma2_bounds(config: &GameConfig) -> Result<RoundBounds> {
    let (consentors, mut ps, _) = bernoulli_parts(config)?;
    ps.extend(std::iter::repeat_n(1.0, consentors));
    if ps.is_empty() {
        return Err(Error::Precondition("no non-rejector agents".into()));
    }
    let hi = ps.iter().copied().fold(f64::MIN, f64::max);
    let lo = ps.iter().copied().fold(f64::MAX, f64::min);
    let k = config.k() as f64;
    let p_max = normal_approx_p(ps.len(), hi, k)?;
    let p_min = normal_approx_p(ps.len(), lo, k)?;
    Ok(RoundBounds {
        p_max,
        p_min,
        rounds_low: 1.0 / p_max,
        rounds_high: 1.0 / p_min,
    })
}
