//! Closed-form bounds and expectations.
//!
//! Bounds are kept as exact ratios. A bound at or above 1 says nothing about
//! a probability; it is flagged vacuous but never clamped.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bound {
    pub exact: Ratio<u64>,
}

impl Bound {
    pub fn value(&self) -> f64 {
        *self.exact.numer() as f64 / *self.exact.denom() as f64
    }

    pub fn is_vacuous(&self) -> bool {
        self.exact >= Ratio::from_integer(1)
    }
}

impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Bound", 3)?;
        st.serialize_field("value", &self.value())?;
        st.serialize_field("exact", &format!("{}", self.exact))?;
        st.serialize_field("vacuous", &self.is_vacuous())?;
        st.end()
    }
}

/// Upper bound `(n - n_r) / (2k)` on the decision probability with `n_r`
/// rejectors and `n - n_r` random followers.
pub fn theorem1_bound(n: usize, n_r: usize, k: usize) -> Result<Bound> {
    if n_r > n {
        return Err(Error::Domain(format!("{n_r} rejectors among {n} agents")));
    }
    if k < 1 || k > n - n_r {
        return Err(Error::Domain(format!(
            "k = {k} outside 1..={}: a decision cannot be made",
            n - n_r
        )));
    }
    Ok(Bound {
        exact: Ratio::new((n - n_r) as u64, 2 * k as u64),
    })
}

/// Upper bound on the no-decision probability with `n_c` consentors, `n_r`
/// rejectors and at least two majority followers:
/// `((n - n_c - n_r)(n + n_c + n_r - 1) + 4 n_c n_r) / (4 n_c (n - n_c))`.
pub fn theorem2_bound(n: usize, n_c: usize, n_r: usize) -> Result<Bound> {
    if n_c == 0 {
        return Err(Error::Domain(
            "no consentors: the bound divides by n_c".into(),
        ));
    }
    if n_c + n_r + 2 > n {
        return Err(Error::Precondition(format!(
            "need at least two majority followers, have {}",
            n.saturating_sub(n_c + n_r)
        )));
    }
    let (n, c, r) = (n as u64, n_c as u64, n_r as u64);
    let numer = (n - c - r) * (n + c + r - 1) + 4 * c * r;
    Ok(Bound {
        exact: Ratio::new(numer, 4 * c * (n - c)),
    })
}

/// `E[W_0]` when followers start i.i.d. Bernoulli(1/2):
/// `((n - n_c - n_r)(n + n_c + n_r - 1) + 4 n_c n_r) / 2`, always an integer.
pub fn expected_w0(n: usize, n_c: usize, n_r: usize) -> Result<u64> {
    if n_c + n_r > n {
        return Err(Error::Domain(format!(
            "{n_c} consentors and {n_r} rejectors exceed {n} agents"
        )));
    }
    let (n, c, r) = (n as u64, n_c as u64, n_r as u64);
    let twice = (n - c - r) * (n + c + r).saturating_sub(1) + 4 * c * r;
    Ok(twice / 2)
}

/// Mean of a geometric number of failures, `(1 - p) / p`.
pub fn expected_t_from_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!(
            "success probability {p} not in (0, 1]"
        )));
    }
    Ok((1.0 - p) / p)
}

/// `E[Z_{t+1} - Z_t | Z_t = z] = -n_r z / (n (n - 1))` for rejectors and
/// random followers.
pub fn z_drift(n: usize, n_r: usize, z: usize) -> Ratio<i64> {
    Ratio::new(-((n_r * z) as i64), (n * (n - 1)) as i64)
}
