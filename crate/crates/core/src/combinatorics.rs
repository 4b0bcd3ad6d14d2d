//! Binomial kernels and the law of `M`, the largest population rank that
//! lands in the top `k/2` of a uniformly random half of the population.
//!
//! With `N` units split into two halves of size `N/2`, the method's top
//! `k/2` within the half reaches down to population rank `M`. `M = m`
//! exactly when `k/2 - 1` of the first `m - 1` ranked units fall in the half
//! and unit `m` does too, giving
//!
//! ```text
//! P(M = m) = C(m-1, k/2-1) * C(N-m, (N-k)/2) / C(N, N/2),   k/2 <= m <= (N+k)/2
//! ```

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_traits::One;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::{sum_ascending, Scalar};

/// Largest `n` for which binomials are evaluated with exact integers.
const EXACT_LN_LIMIT: u64 = 60;

/// Tolerance on the raw mass of a floating point rank distribution.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Exact binomial coefficient. Returns zero when `r > n`.
pub fn binomial_exact(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::default();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn binomial_u64(n: u64, r: u64) -> u64 {
    let r = r.min(n - r);
    // Each prefix product is itself a binomial, so the division is exact.
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

pub(crate) fn ln_binomial_unchecked(n: u64, r: u64) -> f64 {
    debug_assert!(r <= n);
    if r == 0 || r == n {
        return 0.0;
    }
    if n <= EXACT_LN_LIMIT {
        return (binomial_u64(n, r) as f64).ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// Natural log of `C(n, r)`.
pub fn log_binomial(n: u64, r: u64) -> Result<f64> {
    if r > n {
        return Err(Error::Invalid(format!(
            "log_binomial: r = {r} exceeds n = {n}"
        )));
    }
    Ok(ln_binomial_unchecked(n, r))
}

/// Hypergeometric probability of `x` successes in `draws` draws without
/// replacement from `population` items of which `successes` are marked.
///
/// Values of `x` outside the feasible range have probability zero.
pub fn hypergeometric_pmf<T: Scalar>(
    x: usize,
    population: usize,
    successes: usize,
    draws: usize,
) -> Result<T> {
    if successes > population {
        return Err(Error::range("successes", successes, 0, population));
    }
    if draws > population {
        return Err(Error::range("draws", draws, 0, population));
    }
    let lo = (draws + successes).saturating_sub(population);
    let hi = draws.min(successes);
    if x < lo || x > hi {
        return Ok(T::zero());
    }
    let (pop, succ, n, x) = (
        population as u64,
        successes as u64,
        draws as u64,
        x as u64,
    );
    Ok(T::binomial_quotient(
        &[(succ, x), (pop - succ, n - x)],
        &[(pop, n)],
    ))
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::Odd {
            what: "N",
            value: n,
        });
    }
    if k % 2 != 0 {
        return Err(Error::Odd {
            what: "k",
            value: k,
        });
    }
    if n < 2 {
        return Err(Error::range("N", n, 2, usize::MAX));
    }
    if k < 2 || k > n {
        return Err(Error::range("k", k, 2, n));
    }
    Ok(())
}

/// Support of `M`: `k/2 ..= (N+k)/2`.
pub fn m_support(n: usize, k: usize) -> Result<RangeInclusive<usize>> {
    check_sizes(n, k)?;
    Ok(k / 2..=(n + k) / 2)
}

fn m_terms(n: usize, k: usize, m: usize) -> ([(u64, u64); 2], [(u64, u64); 1]) {
    let (n, k, m) = (n as u64, k as u64, m as u64);
    (
        [(m - 1, k / 2 - 1), (n - m, (n - k) / 2)],
        [(n, n / 2)],
    )
}

/// `P(M = m)`; zero outside the support.
pub fn m_pmf<T: Scalar>(n: usize, k: usize, m: usize) -> Result<T> {
    let support = m_support(n, k)?;
    if !support.contains(&m) {
        return Ok(T::zero());
    }
    let (numer, denom) = m_terms(n, k, m);
    Ok(T::binomial_quotient(&numer, &denom))
}

/// `ln P(M = m)`; negative infinity outside the support.
///
/// Useful far in the tail, where the probability itself underflows.
pub fn ln_m_pmf(n: usize, k: usize, m: usize) -> Result<f64> {
    let support = m_support(n, k)?;
    if !support.contains(&m) {
        return Ok(f64::NEG_INFINITY);
    }
    let (numer, denom) = m_terms(n, k, m);
    let up: f64 = numer
        .iter()
        .map(|&(a, b)| ln_binomial_unchecked(a, b))
        .sum();
    Ok(up - ln_binomial_unchecked(denom[0].0, denom[0].1))
}

/// Closed-form `P(M = m+1) / P(M = m)`:
///
/// ```text
/// m (N/2 + k/2 - m) / ((m - k/2 + 1) (N - m))
/// ```
///
/// It exceeds one exactly when `m < (k-2) N / (N-2)`, so the law of `M`
/// rises up to `k - 1` and falls afterwards whenever `k <= N/2`. For larger
/// `k` the peak moves to `k` (with a tie between `k - 1` and `k` when
/// `k = N/2 + 1`). See [`m_mode`].
///
/// Both `m` and `m + 1` must lie in the support.
pub fn m_ratio<T: Scalar>(n: usize, k: usize, m: usize) -> Result<T> {
    let support = m_support(n, k)?;
    if !support.contains(&m) || !support.contains(&(m + 1)) {
        return Err(Error::range(
            "m",
            m,
            *support.start(),
            support.end().saturating_sub(1),
        ));
    }
    let (n, k, m) = (n as u64, k as u64, m as u64);
    Ok(T::from_ratio(m * (n / 2 + k / 2 - m), (m - k / 2 + 1) * (n - m)))
}

/// Modes of the law of `M`: one rank, or two adjacent ranks on a tie.
///
/// Derived from the sign of `P(M = m+1) - P(M = m)`, which is the sign of
/// `(k/2 - 1) N - m (N/2 - 1)`.
pub fn m_mode(n: usize, k: usize) -> Result<Vec<usize>> {
    let support = m_support(n, k)?;
    let (lo, hi) = (*support.start(), *support.end());
    if n == 2 {
        // Both ranks equally likely.
        return Ok(vec![1, 2]);
    }
    // Rising while m * (N/2 - 1) < (k/2 - 1) * N.
    let (num, den) = ((k / 2 - 1) * n, n / 2 - 1);
    let first_non_rising = num.div_ceil(den).clamp(lo, hi);
    if num % den == 0 && num / den >= lo && first_non_rising < hi {
        Ok(vec![first_non_rising, first_non_rising + 1])
    } else {
        Ok(vec![first_non_rising])
    }
}

/// Full law of `M` for a given population size and resource level.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDistribution<T> {
    n: usize,
    k: usize,
    pmf: Vec<T>,
}

impl<T: Scalar> RankDistribution<T> {
    pub fn population(&self) -> usize {
        self.n
    }

    pub fn resource_level(&self) -> usize {
        self.k
    }

    pub fn support(&self) -> RangeInclusive<usize> {
        self.k / 2..=(self.n + self.k) / 2
    }

    /// Probabilities over the support, in increasing `m`.
    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    pub fn probability(&self, m: usize) -> T {
        if self.support().contains(&m) {
            self.pmf[m - self.k / 2].clone()
        } else {
            T::zero()
        }
    }

    /// `(m, P(M = m))` pairs over the support.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> + '_ {
        let start = self.k / 2;
        self.pmf.iter().enumerate().map(move |(i, p)| (start + i, p))
    }

    /// Smallest `m` attaining the maximum probability.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.pmf.iter().enumerate() {
            if *p > self.pmf[best] {
                best = i;
            }
        }
        self.k / 2 + best
    }

    pub fn total(&self) -> T {
        sum_ascending(&self.pmf)
    }
}

/// Assemble the law of `M` over its whole support.
///
/// Floating point laws are checked to carry unit mass within
/// [`NORMALIZATION_TOLERANCE`] and then rescaled by their ascending-order
/// sum; exact laws must sum to one exactly.
pub fn m_distribution<T: Scalar>(n: usize, k: usize) -> Result<RankDistribution<T>> {
    let support = m_support(n, k)?;
    let mut pmf = support
        .map(|m| m_pmf::<T>(n, k, m))
        .collect::<Result<Vec<T>>>()?;
    let total = sum_ascending(&pmf);
    if T::EXACT {
        if !total.is_one() {
            return Err(Error::Guard(format!(
                "exact law of M for N = {n}, k = {k} sums to {total:?}"
            )));
        }
    } else {
        let drift = (total.as_f64() - 1.0).abs();
        if !(drift <= NORMALIZATION_TOLERANCE) {
            return Err(Error::Guard(format!(
                "law of M for N = {n}, k = {k} has mass {} (tolerance {NORMALIZATION_TOLERANCE:e})",
                total.as_f64()
            )));
        }
        for p in &mut pmf {
            *p = p.clone() / total.clone();
        }
    }
    Ok(RankDistribution { n, k, pmf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    /// Rank of the `k/2`-th member of each half, tallied over all halves of
    /// `0..n` (rank i + 1 for index i).
    fn brute_force_m_counts(n: usize, k: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n + 1];
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n / 2 {
                continue;
            }
            let mut seen = 0;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    seen += 1;
                    if seen == k / 2 {
                        counts[i + 1] += 1;
                        break;
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn log_binomial_small_values() {
        assert!((log_binomial(5, 2).unwrap() - 10f64.ln()).abs() < 1e-15);
        assert_eq!(log_binomial(17, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(17, 17).unwrap(), 0.0);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_poker_hands() {
        // Pascal's triangle up to row 52.
        let mut row = vec![1u64];
        for _ in 0..52 {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        assert_eq!(row[5], 2_598_960);
        let got = log_binomial(52, 5).unwrap();
        assert!((got - (row[5] as f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn log_binomial_large_matches_exact() {
        for &(n, r) in &[(61u64, 30u64), (100, 50), (200, 17), (1000, 500)] {
            let exact = binomial_exact(n, r);
            let bits = exact.bits();
            // ln(x) = ln(x / 2^s) + s ln 2 with x / 2^s representable.
            let shift = bits.saturating_sub(60);
            let mantissa = (&exact >> shift).to_string().parse::<f64>().unwrap();
            let reference = mantissa.ln() + shift as f64 * std::f64::consts::LN_2;
            let got = log_binomial(n, r).unwrap();
            assert!(
                ((got - reference) / reference).abs() < 1e-13,
                "n={n} r={r}: {got} vs {reference}"
            );
        }
    }

    #[test]
    fn hypergeometric_examples() {
        let half: f64 = hypergeometric_pmf(1, 2, 1, 1).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        // Both marked items among 2 draws from 4: 1 of C(4,2) = 6 draws.
        let exact: Rational = hypergeometric_pmf(2, 4, 2, 2).unwrap();
        assert_eq!(exact, q(1, 6));
        let total: f64 = (0..=23)
            .map(|x| hypergeometric_pmf::<f64>(x, 50, 17, 23).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(hypergeometric_pmf::<f64>(0, 10, 8, 5).unwrap(), 0.0);
        assert!(hypergeometric_pmf::<f64>(0, 10, 11, 5).is_err());
    }

    #[test]
    fn m_pmf_tiny_populations() {
        assert_eq!(m_pmf::<Rational>(2, 2, 1).unwrap(), q(1, 2));
        assert_eq!(m_pmf::<Rational>(2, 2, 2).unwrap(), q(1, 2));
        let counts = brute_force_m_counts(6, 2);
        assert_eq!(&counts[1..], &[10, 6, 3, 1, 0, 0]);
        let expected = [q(10, 20), q(6, 20), q(3, 20), q(1, 20)];
        for (m, want) in (1..=4).zip(expected.iter()) {
            assert_eq!(&m_pmf::<Rational>(6, 2, m).unwrap(), want);
        }
        assert_eq!(m_pmf::<Rational>(6, 2, 5).unwrap(), q(0, 1));
    }

    #[test]
    fn m_pmf_matches_brute_force_small_grid() {
        for n in (2..=12).step_by(2) {
            let halves = binomial_u64(n as u64, n as u64 / 2) as i64;
            for k in (2..=n).step_by(2) {
                let counts = brute_force_m_counts(n, k);
                for m in 1..=n {
                    let got = m_pmf::<Rational>(n, k, m).unwrap();
                    assert_eq!(got, q(counts[m] as i64, halves), "N={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn m_pmf_rejects_bad_sizes() {
        assert!(matches!(m_pmf::<f64>(7, 2, 1), Err(Error::Odd { .. })));
        assert!(matches!(m_pmf::<f64>(8, 3, 1), Err(Error::Odd { .. })));
        assert!(matches!(m_pmf::<f64>(8, 10, 1), Err(Error::OutOfRange { .. })));
        assert!(matches!(m_pmf::<f64>(8, 0, 1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn distribution_small_case() {
        let d = m_distribution::<f64>(6, 2).unwrap();
        assert_eq!(d.support(), 1..=4);
        for (got, want) in d.pmf().iter().zip([0.5, 0.3, 0.15, 0.05]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(d.mode(), 1);
        let exact = m_distribution::<Rational>(6, 2).unwrap();
        assert_eq!(exact.total(), q(1, 1));
    }

    #[test]
    fn distribution_mode_at_k_minus_one() {
        let d = m_distribution::<f64>(1000, 50).unwrap();
        assert_eq!(d.mode(), 49);
        let big = m_distribution::<f64>(30_000, 100).unwrap();
        assert_eq!(big.mode(), 99);
        assert!((big.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_edge_and_escape_probability() {
        // Lower edge: the half holds the whole absolute top k/2.
        let (n, k) = (12usize, 4usize);
        let edge = m_pmf::<Rational>(n, k, k / 2).unwrap();
        let want = Rational::binomial_quotient(
            &[((n - k / 2) as u64, ((n - k) / 2) as u64)],
            &[(n as u64, (n / 2) as u64)],
        );
        assert_eq!(edge, want);
        let d = m_distribution::<Rational>(n, k).unwrap();
        let beyond: Rational = d
            .iter()
            .filter(|(m, _)| *m > k)
            .fold(q(0, 1), |acc, (_, p)| acc + p.clone());
        assert!(beyond > q(0, 1));
    }

    #[test]
    fn ratio_small_cases() {
        assert_eq!(m_ratio::<Rational>(6, 2, 1).unwrap(), q(3, 5));
        assert_eq!(m_ratio::<Rational>(6, 2, 3).unwrap(), q(1, 3));
        assert!(m_ratio::<f64>(6, 2, 4).is_err());
        assert!(m_ratio::<f64>(6, 4, 1).is_err());
    }

    #[test]
    fn ratio_exact_against_quotient() {
        for n in (2..=20).step_by(2) {
            for k in (2..=n).step_by(2) {
                let support = m_support(n, k).unwrap();
                for m in *support.start()..*support.end() {
                    let closed = m_ratio::<Rational>(n, k, m).unwrap();
                    let quotient = m_pmf::<Rational>(n, k, m + 1).unwrap()
                        / m_pmf::<Rational>(n, k, m).unwrap();
                    assert_eq!(closed, quotient, "N={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn rising_threshold() {
        for n in (4..=40).step_by(2) {
            for k in (2..=n).step_by(2) {
                let support = m_support(n, k).unwrap();
                for m in *support.start()..*support.end() {
                    let r = m_ratio::<Rational>(n, k, m).unwrap();
                    let lhs = (m * (n - 2)) as i64;
                    let rhs = ((k - 2) * n) as i64;
                    assert_eq!(r > q(1, 1), lhs < rhs, "N={n} k={k} m={m}");
                    assert_eq!(r == q(1, 1), lhs == rhs, "N={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn modes_match_exact_scan() {
        for n in (2..=40).step_by(2) {
            for k in (2..=n).step_by(2) {
                let d = m_distribution::<Rational>(n, k).unwrap();
                let best = d.pmf().iter().max().unwrap().clone();
                let scanned: Vec<usize> =
                    d.iter().filter(|(_, p)| **p == best).map(|(m, _)| m).collect();
                assert_eq!(m_mode(n, k).unwrap(), scanned, "N={n} k={k}");
                if 2 * k <= n {
                    assert_eq!(scanned, vec![k - 1]);
                }
            }
        }
        // Past N/2 the peak moves to k.
        assert_eq!(m_mode(10, 8).unwrap(), vec![8]);
        assert_eq!(m_mode(6, 4).unwrap(), vec![3, 4]);
    }

    #[test]
    fn full_population_mode_is_last_rank() {
        // k = N: P(M = N) = 1/2 > P(M = N-1).
        let d = m_distribution::<Rational>(10, 10).unwrap();
        assert_eq!(d.probability(10), q(1, 2));
        assert_eq!(d.mode(), 10);
    }
}
