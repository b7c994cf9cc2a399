//! Hitting probabilities and expected hitting times on sparse
//! row-stochastic matrices.
//!
//! Systems up to [`DENSE_LIMIT`] unknowns go through a dense LU
//! factorization; larger ones use symmetric Gauss-Seidel sweeps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type SparseRows = Vec<Vec<(usize, f64)>>;

pub const DENSE_LIMIT: usize = 2500;
const SWEEP_LIMIT: usize = 200_000;
const SWEEP_TOLERANCE: f64 = 1e-13;

/// Marks every state that can reach a state in `target` (targets included).
pub fn can_reach(rows: &SparseRows, target: &[bool]) -> Vec<bool> {
    let n = rows.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in rows.iter().enumerate() {
        for &(t, p) in row {
            if p > 0.0 && t != s {
                reverse[t].push(s);
            }
        }
    }
    let mut seen = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
    while let Some(t) = stack.pop() {
        for &s in &reverse[t] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Max-norm residual of the linear system that was solved.
    pub residual: f64,
}

/// `P(hit target)` from each state. States that cannot reach the target get 0.
pub fn hitting_probabilities(rows: &SparseRows, target: &[bool]) -> Result<Solution> {
    let reach = can_reach(rows, target);
    let unknown: Vec<usize> = (0..rows.len())
        .filter(|&s| reach[s] && !target[s])
        .collect();
    let rhs: Vec<f64> = unknown
        .iter()
        .map(|&s| {
            rows[s]
                .iter()
                .filter(|(t, _)| target[*t])
                .map(|(_, p)| p)
                .sum()
        })
        .collect();
    let (x, residual) = solve_restricted(rows, &unknown, &rhs)?;
    let mut values: Vec<f64> = target.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    for (&s, v) in unknown.iter().zip(x) {
        values[s] = v;
    }
    Ok(Solution { values, residual })
}

/// Expected steps to hit `target`. Infinite where the target is not hit
/// almost surely.
pub fn expected_hitting_times(rows: &SparseRows, target: &[bool]) -> Result<Solution> {
    let reach = can_reach(rows, target);
    let lost: Vec<bool> = reach.iter().map(|r| !r).collect();
    let may_get_lost = can_reach(rows, &lost);
    let unknown: Vec<usize> = (0..rows.len())
        .filter(|&s| !target[s] && !may_get_lost[s])
        .collect();
    let rhs = vec![1.0; unknown.len()];
    let (x, residual) = solve_restricted(rows, &unknown, &rhs)?;
    let mut values: Vec<f64> = (0..rows.len())
        .map(|s| if target[s] { 0.0 } else { f64::INFINITY })
        .collect();
    for (&s, v) in unknown.iter().zip(x) {
        values[s] = v;
    }
    Ok(Solution { values, residual })
}

/// Solves `(I - Q) x = b` where `Q` is `rows` restricted to `unknown`.
fn solve_restricted(rows: &SparseRows, unknown: &[usize], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = unknown.len();
    if m == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut local = vec![usize::MAX; rows.len()];
    for (i, &s) in unknown.iter().enumerate() {
        local[s] = i;
    }
    // rows of I - Q in local coordinates
    let system: Vec<Vec<(usize, f64)>> = unknown
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut row = vec![(i, 1.0)];
            for &(t, p) in &rows[s] {
                let j = local[t];
                if j == usize::MAX {
                    continue;
                }
                if j == i {
                    row[0].1 -= p;
                } else {
                    row.push((j, -p));
                }
            }
            row
        })
        .collect();

    let x = if m <= DENSE_LIMIT {
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (i, row) in system.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        let b = DVector::from_column_slice(rhs);
        let lu = a.lu();
        let x = lu.solve(&b).ok_or_else(|| {
            Error::SingularSystem(format!("LU factorization of {m} unknowns is singular"))
        })?;
        x.iter().copied().collect::<Vec<f64>>()
    } else {
        gauss_seidel(&system, rhs)?
    };
    let residual = residual(&system, &x, rhs);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::SingularSystem(format!(
            "residual {residual:e} over {m} unknowns"
        )));
    }
    Ok((x, residual))
}

/// Symmetric Gauss-Seidel: alternating forward and backward sweeps.
fn gauss_seidel(system: &[Vec<(usize, f64)>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = system.len();
    let mut x = vec![0.0; m];
    for sweep in 0..SWEEP_LIMIT {
        let mut delta: f64 = 0.0;
        let mut relax = |i: usize, x: &mut [f64]| -> Result<()> {
            let row = &system[i];
            let diag = row[0].1;
            if diag <= 0.0 {
                return Err(Error::SingularSystem(format!(
                    "non-positive pivot at row {i}"
                )));
            }
            let off: f64 = row[1..].iter().map(|&(j, v)| v * x[j]).sum();
            let next = (rhs[i] - off) / diag;
            delta = delta.max((next - x[i]).abs());
            x[i] = next;
            Ok(())
        };
        if sweep % 2 == 0 {
            for i in 0..m {
                relax(i, &mut x)?;
            }
        } else {
            for i in (0..m).rev() {
                relax(i, &mut x)?;
            }
        }
        if delta < SWEEP_TOLERANCE && residual(system, &x, rhs) < 1e-11 {
            return Ok(x);
        }
    }
    Err(Error::SingularSystem(format!(
        "Gauss-Seidel did not converge in {SWEEP_LIMIT} sweeps over {m} unknowns"
    )))
}

fn residual(system: &[Vec<(usize, f64)>], x: &[f64], rhs: &[f64]) -> f64 {
    system
        .iter()
        .zip(rhs)
        .map(|(row, b)| (row.iter().map(|&(j, v)| v * x[j]).sum::<f64>() - b).abs())
        .fold(0.0, f64::max)
}
