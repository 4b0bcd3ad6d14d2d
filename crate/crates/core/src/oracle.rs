//! Brute-force ground truth in exact rational arithmetic.
//!
//! These enumerate every half-partition (for the randomized design) or
//! every pair of samples (for the survey) with equal weight. They are
//! independent of the closed forms in [`crate::rct`] and
//! [`crate::survey`] and exist to check them; hard size guards keep them
//! off production paths.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::combinatorics::binomial_exact;
use crate::error::{Error, Result};
use crate::population::Population;
use crate::scalar::Rational;
use crate::survey::{atoms_from_keys, ExactEstimatorDistribution, SurveyDesign};
use crate::targeting::TargetingMethod;

/// Largest population the partition enumerator accepts.
pub const MAX_ENUMERATED_POPULATION: usize = 16;

/// Largest remainder size the survey enumerator accepts per arm.
pub const MAX_ENUMERATED_ARM: usize = 8;

/// Exact averages over all `C(N, N/2)` halves.
#[derive(Debug, Clone, PartialEq)]
pub struct RctEnumeration {
    /// `E[mean outcome of S's top k/2 in X']`.
    pub expected_s: Rational,
    /// `E[mean outcome of T's top k/2 in X'']`.
    pub expected_t: Rational,
    pub expected_delta: Rational,
    /// `m_law[m - 1] = P(M = m)` for `m = 1..=N`, tallied from `S`.
    pub m_law: Vec<Rational>,
}

impl RctEnumeration {
    pub fn m_probability(&self, m: usize) -> Rational {
        self.m_law
            .get(m.wrapping_sub(1))
            .cloned()
            .unwrap_or_else(|| Rational::from_integer(0.into()))
    }
}

/// Calls `visit` with every `r`-subset of `0..n`, in lexicographic order.
pub fn for_each_combination<F: FnMut(&[usize])>(n: usize, r: usize, mut visit: F) {
    if r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        visit(&idx);
        // Rightmost position that can still advance.
        let mut i = r;
        while i > 0 && idx[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn ratio(num: u64, den: &BigInt) -> Rational {
    Rational::new(BigInt::from(num), den.clone())
}

/// Enumerate all halves, selecting the top `depth` units of `S` in `X'` and
/// of `T` in `X''`.
pub fn enumerate_half_selection(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    depth: usize,
) -> Result<RctEnumeration> {
    let n = population.len();
    if n > MAX_ENUMERATED_POPULATION {
        return Err(Error::Guard(format!(
            "partition enumeration limited to N <= {MAX_ENUMERATED_POPULATION}, got {n}"
        )));
    }
    population.require_even()?;
    let half = n / 2;
    if depth == 0 || depth > half {
        return Err(Error::range("depth", depth, 1, half));
    }
    if s.len() != n || t.len() != n {
        return Err(Error::Invalid(
            "targeting methods do not cover the population".into(),
        ));
    }

    let mut in_first = vec![false; n];
    let mut sum_s = 0u64;
    let mut sum_t = 0u64;
    let mut m_counts = vec![0u64; n + 1];
    let mut partitions = 0u64;
    for_each_combination(n, half, |chosen| {
        in_first.iter_mut().for_each(|b| *b = false);
        for &u in chosen {
            in_first[u] = true;
        }
        let mut taken = 0;
        for (rank0, &u) in s.order().iter().enumerate() {
            if in_first[u] {
                sum_s += u64::from(population.outcome(u));
                taken += 1;
                if taken == depth {
                    m_counts[rank0 + 1] += 1;
                    break;
                }
            }
        }
        let mut taken = 0;
        for &u in t.order() {
            if !in_first[u] {
                sum_t += u64::from(population.outcome(u));
                taken += 1;
                if taken == depth {
                    break;
                }
            }
        }
        partitions += 1;
    });

    debug_assert_eq!(
        BigInt::from(partitions),
        BigInt::from(binomial_exact(n as u64, half as u64))
    );
    let per_estimate = BigInt::from(partitions) * BigInt::from(depth as u64);
    let expected_s = ratio(sum_s, &per_estimate);
    let expected_t = ratio(sum_t, &per_estimate);
    let total = BigInt::from(partitions);
    Ok(RctEnumeration {
        expected_delta: expected_s.clone() - expected_t.clone(),
        expected_s,
        expected_t,
        m_law: m_counts[1..].iter().map(|&c| ratio(c, &total)).collect(),
    })
}

/// Ground truth for the randomized design at resource level `k`.
pub fn enumerate_rct(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<RctEnumeration> {
    if k % 2 != 0 {
        return Err(Error::Odd {
            what: "k",
            value: k,
        });
    }
    if k < 2 || k > population.len() {
        return Err(Error::range("k", k, 2, population.len()));
    }
    enumerate_half_selection(s, t, population, k / 2)
}

/// Ground truth for the survey estimator's law: every pair of samples,
/// equally weighted.
pub fn enumerate_survey(design: &SurveyDesign) -> Result<ExactEstimatorDistribution<Rational>> {
    let size = design.excluded_size();
    if size > MAX_ENUMERATED_ARM {
        return Err(Error::Guard(format!(
            "survey enumeration limited to remainders of size <= {MAX_ENUMERATED_ARM}, got {size}"
        )));
    }
    if size == 0 {
        return Ok(ExactEstimatorDistribution::point_mass(Rational::from_integer(
            0.into(),
        )));
    }
    let (ns, nt) = (design.sample_size_s(), design.sample_size_t());
    if ns == 0 || nt == 0 {
        return Err(Error::Invalid("survey arms need positive sample sizes".into()));
    }
    let tally = |outcomes: &[u8], draws: usize| {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for_each_combination(outcomes.len(), draws, |chosen| {
            let positives = chosen.iter().map(|&i| usize::from(outcomes[i])).sum();
            *counts.entry(positives).or_default() += 1;
        });
        counts
    };
    let s_counts = tally(design.s_excluded_outcomes(), ns);
    let t_counts = tally(design.t_excluded_outcomes(), nt);
    let mut keyed: BTreeMap<i64, u64> = BTreeMap::new();
    let mut pairs = 0u64;
    for (&a, &ca) in &s_counts {
        for (&b, &cb) in &t_counts {
            let key = (a * nt) as i64 - (b * ns) as i64;
            *keyed.entry(key).or_default() += ca * cb;
            pairs += ca * cb;
        }
    }
    let total = BigInt::from(pairs);
    let keyed: BTreeMap<i64, Rational> = keyed
        .into_iter()
        .map(|(key, c)| (key, ratio(c, &total)))
        .collect();
    ExactEstimatorDistribution::from_atoms(atoms_from_keys(design, keyed))
}
