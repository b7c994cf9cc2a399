//! Exact rational absorption for small chains, used to anchor the
//! floating-point solver.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::layout::ClassLayout;
use super::solve::can_reach;
use crate::error::{Error, Result};
use crate::model::{GameConfig, Mode};

/// Largest lumped chain accepted by the rational solver.
pub const RATIONAL_STATE_CAP: usize = 2_000;

/// Exact decision probability from every lumped state.
pub fn decision_probabilities_exact(config: &GameConfig) -> Result<Vec<BigRational>> {
    if config.mode() != Mode::Asynchronous {
        return Err(Error::UnsupportedMode {
            expected: "asynchronous",
        });
    }
    let layout = ClassLayout::new(config.population(), RATIONAL_STATE_CAP)?;
    let k = config.k();
    let count = layout.state_count();
    let decision: Vec<bool> = layout.states().map(|s| layout.z(&s) >= k).collect();
    let rows: Vec<Vec<(usize, BigRational)>> = layout
        .states()
        .map(|s| layout.moves::<BigRational>(&s))
        .collect();
    let float_rows: Vec<Vec<(usize, f64)>> = rows
        .iter()
        .map(|r| r.iter().map(|(t, _)| (*t, 1.0)).collect())
        .collect();
    let reach = can_reach(&float_rows, &decision);
    let unknown: Vec<usize> = (0..count).filter(|&s| reach[s] && !decision[s]).collect();
    let mut local = vec![usize::MAX; count];
    for (i, &s) in unknown.iter().enumerate() {
        local[s] = i;
    }
    let m = unknown.len();
    // augmented [I - Q | b]
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] = BigRational::one();
        for (t, p) in &rows[s] {
            if decision[*t] {
                a[i][m] += p;
            } else if local[*t] != usize::MAX {
                a[i][local[*t]] -= p;
            }
        }
    }
    let x = gauss_jordan(a)?;
    let mut values: Vec<BigRational> = decision
        .iter()
        .map(|&d| {
            if d {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    for (&s, v) in unknown.iter().zip(x) {
        values[s] = v;
    }
    Ok(values)
}

/// Exact decision probability from the time-0 law.
pub fn decision_probability_exact(config: &GameConfig) -> Result<BigRational> {
    let layout = ClassLayout::new(config.population(), RATIONAL_STATE_CAP)?;
    let per_state = decision_probabilities_exact(config)?;
    Ok(layout
        .initial_distribution_exact()
        .into_iter()
        .zip(per_state)
        .fold(BigRational::zero(), |acc, (w, h)| acc + w * h))
}

fn gauss_jordan(mut a: Vec<Vec<BigRational>>) -> Result<Vec<BigRational>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::SingularSystem(format!("no pivot in column {col}")))?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut().skip(col) {
            *v = &*v * &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                *v -= &f * p;
            }
        }
    }
    Ok(a.into_iter().map(|row| row[m].clone()).collect())
}
