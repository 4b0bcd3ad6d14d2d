//! Precision curves and the true difference in precision at `k`.

use crate::error::{Error, Result};
use crate::population::Population;
use crate::scalar::Scalar;
use crate::targeting::TargetingMethod;

/// Precision at every resource level `j = 1..=N` for one targeting method.
///
/// Backed by integer prefix counts of positives, so any value can be
/// recovered exactly as `positives(j) / j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionCurve {
    /// Outcomes in rank order.
    outcomes: Vec<u8>,
    /// `prefix[j]` positives among the top `j`; `prefix[0] = 0`.
    prefix: Vec<u64>,
    values: Vec<f64>,
}

impl PrecisionCurve {
    pub fn new(method: &TargetingMethod, population: &Population) -> Result<Self> {
        if method.len() != population.len() {
            return Err(Error::Invalid(format!(
                "ranking covers {} units, population has {}",
                method.len(),
                population.len()
            )));
        }
        let outcomes: Vec<u8> = method
            .order()
            .iter()
            .map(|&i| population.outcome(i))
            .collect();
        Ok(Self::from_ranked_outcomes(outcomes))
    }

    /// Curve for outcomes already listed in rank order.
    pub fn from_ranked_outcomes(outcomes: Vec<u8>) -> Self {
        let mut prefix = Vec::with_capacity(outcomes.len() + 1);
        prefix.push(0u64);
        let mut running = 0u64;
        for &y in &outcomes {
            running += u64::from(y);
            prefix.push(running);
        }
        let values = prefix[1..]
            .iter()
            .enumerate()
            .map(|(i, &p)| p as f64 / (i + 1) as f64)
            .collect();
        Self {
            outcomes,
            prefix,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `mu_1 ..= mu_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Positives among the top `j`, `0 <= j <= N`.
    pub fn positives(&self, j: usize) -> u64 {
        self.prefix[j]
    }

    /// Outcome of the unit at 1-based `rank`.
    pub fn outcome_at(&self, rank: usize) -> u8 {
        self.outcomes[rank - 1]
    }

    pub fn ranked_outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    /// `mu_j` for `1 <= j <= N`.
    pub fn precision(&self, j: usize) -> Result<f64> {
        self.check_level(j)?;
        Ok(self.values[j - 1])
    }

    /// `mu_j` in the requested scalar type, from the exact count.
    pub fn precision_as<T: Scalar>(&self, j: usize) -> Result<T> {
        self.check_level(j)?;
        Ok(T::from_ratio(self.prefix[j], j as u64))
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.len() {
            return Err(Error::range("k", j, 1, self.len()));
        }
        Ok(())
    }
}

/// Convenience wrapper for [`PrecisionCurve::new`].
pub fn precision_curve(method: &TargetingMethod, population: &Population) -> Result<PrecisionCurve> {
    PrecisionCurve::new(method, population)
}

/// `mu_{S_k} - mu_{T_k}` on the full population.
pub fn delta_true<T: Scalar>(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<T> {
    let cs = PrecisionCurve::new(s, population)?;
    let ct = PrecisionCurve::new(t, population)?;
    delta_from_curves(&cs, &ct, k)
}

pub(crate) fn delta_from_curves<T: Scalar>(
    s: &PrecisionCurve,
    t: &PrecisionCurve,
    k: usize,
) -> Result<T> {
    s.check_level(k)?;
    let diff = s.positives(k) as i64 - t.positives(k) as i64;
    Ok(T::from_signed_ratio(diff, k as u64))
}
