//! The randomized design: split the population into random halves `X'` and
//! `X''`, observe the top `k/2` of `S` in `X'` and of `T` in `X''`.
//!
//! Conditional on `M = m` (see [`crate::combinatorics`]), the top `k/2` of a
//! half consists of unit `s_m` plus `k/2 - 1` units drawn uniformly without
//! replacement from `s_1 ..= s_{m-1}`, so its expected precision is the
//! reweighted precision
//!
//! ```text
//! nu(m, k) = ((k/2 - 1) * mu_{m-1} + y_{s_m}) / (k/2)
//! ```
//!
//! and the expected RCT estimate of `mu_k` is `sum_m P(M = m) nu(m, k)`.
//!
//! The expected difference is formed as the difference of the two expected
//! precisions. A leading `2/k` factor on the single-sum form of this
//! difference would not be consistent with `nu` already being a mean, and is
//! not applied.

use crate::combinatorics::{m_distribution, RankDistribution};
use crate::error::{Error, Result};
use crate::montecarlo::{run_replicates, EmpiricalDistribution, MonteCarlo};
use crate::population::Population;
use crate::precision::{delta_from_curves, PrecisionCurve};
use crate::scalar::Scalar;
use crate::targeting::TargetingMethod;

use rand::Rng;

/// Expected RCT estimates against the full-population truth at one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RctAnalysis<T> {
    pub k: usize,
    pub expected_precision_s: T,
    pub expected_precision_t: T,
    /// `expected_precision_s - expected_precision_t`.
    pub expected_delta: T,
    pub true_delta: T,
    /// `expected_delta - true_delta`.
    pub bias: T,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::Odd {
            what: "k",
            value: k,
        });
    }
    if k < 2 || k > n {
        return Err(Error::range("k", k, 2, n));
    }
    Ok(())
}

/// Reweighted precision `nu(m, k)` from a precision curve.
pub fn nu_from_curve<T: Scalar>(curve: &PrecisionCurve, m: usize, k: usize) -> Result<T> {
    check_k(curve.len(), k)?;
    let half = k / 2;
    if m < half || m > curve.len() {
        return Err(Error::range("m", m, half, curve.len()));
    }
    let last = u64::from(curve.outcome_at(m));
    if m == 1 {
        // Only reachable with k = 2, where mu_0 carries weight zero.
        return Ok(T::from_count(last));
    }
    let (h, m1) = (half as u64, (m - 1) as u64);
    // ((h-1) * P/(m-1) + y) / h = ((h-1) P + y (m-1)) / (h (m-1))
    Ok(T::from_ratio(
        (h - 1) * curve.positives(m - 1) + last * m1,
        h * m1,
    ))
}

/// Reweighted precision of `s` at population rank `m` for resource level `k`.
pub fn nu<T: Scalar>(
    s: &TargetingMethod,
    population: &Population,
    m: usize,
    k: usize,
) -> Result<T> {
    nu_from_curve(&PrecisionCurve::new(s, population)?, m, k)
}

/// `sum_m P(M = m) nu(m, k)` for a precomputed law of `M`.
pub fn expected_precision_from_curve<T: Scalar>(
    curve: &PrecisionCurve,
    law: &RankDistribution<T>,
) -> Result<T> {
    if law.population() != curve.len() {
        return Err(Error::Invalid(format!(
            "law of M is for N = {}, curve has {} units",
            law.population(),
            curve.len()
        )));
    }
    let k = law.resource_level();
    let mut total = T::zero();
    for (m, p) in law.iter() {
        total = total + p.clone() * nu_from_curve::<T>(curve, m, k)?;
    }
    Ok(total)
}

/// Expected precision observed in the top `k/2` of a random half.
pub fn expected_rct_precision<T: Scalar>(
    s: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<T> {
    population.require_even()?;
    check_k(population.len(), k)?;
    let law = m_distribution::<T>(population.len(), k)?;
    expected_precision_from_curve(&PrecisionCurve::new(s, population)?, &law)
}

/// Expected precision of the top `depth` units of a random half.
///
/// Identical to [`expected_rct_precision`] at `k = 2 * depth`; exposed to
/// study going deeper into each half than `k/2`.
pub fn expected_half_precision<T: Scalar>(
    s: &TargetingMethod,
    population: &Population,
    depth: usize,
) -> Result<T> {
    expected_rct_precision(s, population, 2 * depth)
}

/// Expected RCT estimates for both methods and the resulting bias at `k`.
pub fn rct_analysis<T: Scalar>(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<RctAnalysis<T>> {
    population.require_even()?;
    check_k(population.len(), k)?;
    let law = m_distribution::<T>(population.len(), k)?;
    let cs = PrecisionCurve::new(s, population)?;
    let ct = PrecisionCurve::new(t, population)?;
    analysis_from_curves(&cs, &ct, &law)
}

pub(crate) fn analysis_from_curves<T: Scalar>(
    cs: &PrecisionCurve,
    ct: &PrecisionCurve,
    law: &RankDistribution<T>,
) -> Result<RctAnalysis<T>> {
    let k = law.resource_level();
    let expected_precision_s = expected_precision_from_curve(cs, law)?;
    let expected_precision_t = expected_precision_from_curve(ct, law)?;
    let expected_delta = expected_precision_s.clone() - expected_precision_t.clone();
    let true_delta: T = delta_from_curves(cs, ct, k)?;
    let bias = expected_delta.clone() - true_delta.clone();
    Ok(RctAnalysis {
        k,
        expected_precision_s,
        expected_precision_t,
        expected_delta,
        true_delta,
        bias,
    })
}

struct Scratch {
    perm: Vec<usize>,
    in_first: Vec<bool>,
}

/// Monte Carlo draws of the RCT estimator over uniformly random halves.
///
/// Each replicate shuffles the first `N/2` positions of a unit permutation
/// (partial Fisher-Yates) to form `X'`; `S` selects from `X'` and `T` from
/// the complement.
pub fn simulate_rct(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
    config: &MonteCarlo,
) -> Result<EmpiricalDistribution> {
    population.require_even()?;
    let n = population.len();
    check_k(n, k)?;
    if s.len() != n || t.len() != n {
        return Err(Error::Invalid(
            "targeting methods do not cover the population".into(),
        ));
    }
    let outcomes: Vec<u8> = population.units().iter().map(|u| u.outcome()).collect();
    let half = n / 2;
    let quota = k / 2;
    let denom = quota as f64;

    let values = run_replicates(
        config,
        || Scratch {
            perm: Vec::with_capacity(n),
            in_first: vec![false; n],
        },
        |scratch, rng| {
            scratch.perm.clear();
            scratch.perm.extend(0..n);
            for i in 0..half {
                let j = rng.random_range(i..n);
                scratch.perm.swap(i, j);
            }
            for &u in &scratch.perm[..half] {
                scratch.in_first[u] = true;
            }
            let observe = |order: &[usize], want_first: bool| -> i64 {
                let mut taken = 0;
                let mut positives = 0i64;
                for &u in order {
                    if scratch.in_first[u] == want_first {
                        positives += i64::from(outcomes[u]);
                        taken += 1;
                        if taken == quota {
                            break;
                        }
                    }
                }
                positives
            };
            let diff = observe(s.order(), true) - observe(t.order(), false);
            for &u in &scratch.perm[..half] {
                scratch.in_first[u] = false;
            }
            diff as f64 / denom
        },
    )?;
    Ok(EmpiricalDistribution::new(values, config.seed))
}
