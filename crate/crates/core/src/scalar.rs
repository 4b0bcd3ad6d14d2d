//! Scalar abstraction shared by the analytic routines.
//!
//! Every closed form in this crate is a finite sum of products of integer
//! ratios and binomial quotients, so the same code runs in floating point
//! (`f32`, `f64`) and in exact rational arithmetic ([`Rational`]). Floating
//! point instantiations evaluate binomial quotients in log space; the
//! rational instantiation uses exact big-integer binomials.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

use crate::combinatorics::{binomial_exact, ln_binomial_unchecked};

/// Arbitrary-precision rational in canonical form.
pub type Rational = BigRational;

/// Numeric type the analytic routines are generic over.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Send + Sync + 'static {
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: u64, den: u64) -> Self;

    /// `num / den` for a signed numerator; `den` must be nonzero.
    fn from_signed_ratio(num: i64, den: u64) -> Self;

    /// `prod C(n, r) over numer` divided by `prod C(n, r) over denom`.
    ///
    /// Callers guarantee `r <= n` in every pair.
    fn binomial_quotient(numer: &[(u64, u64)], denom: &[(u64, u64)]) -> Self;

    fn as_f64(&self) -> f64;

    fn from_count(v: u64) -> Self {
        Self::from_ratio(v, 1)
    }
}

fn ln_quotient(numer: &[(u64, u64)], denom: &[(u64, u64)]) -> f64 {
    let up: f64 = numer.iter().map(|&(n, r)| ln_binomial_unchecked(n, r)).sum();
    let down: f64 = denom.iter().map(|&(n, r)| ln_binomial_unchecked(n, r)).sum();
    up - down
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_signed_ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn binomial_quotient(numer: &[(u64, u64)], denom: &[(u64, u64)]) -> Self {
        ln_quotient(numer, denom).exp()
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_signed_ratio(num: i64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn binomial_quotient(numer: &[(u64, u64)], denom: &[(u64, u64)]) -> Self {
        ln_quotient(numer, denom).exp() as f32
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: u64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_signed_ratio(num: i64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn binomial_quotient(numer: &[(u64, u64)], denom: &[(u64, u64)]) -> Self {
        let product = |pairs: &[(u64, u64)]| {
            pairs
                .iter()
                .fold(BigUint::one(), |acc, &(n, r)| acc * binomial_exact(n, r))
        };
        Rational::new(BigInt::from(product(numer)), BigInt::from(product(denom)))
    }

    fn as_f64(&self) -> f64 {
        // Ratio::to_f64 handles numerators and denominators beyond f64 range.
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_zero() {
                0.0
            } else {
                f64::NAN
            }
        })
    }
}

/// Sum of `values` taken in ascending order of magnitude.
pub fn sum_ascending<T: Scalar>(values: &[T]) -> T {
    let mut sorted: Vec<&T> = values.iter().collect();
    sorted.sort_by(|a, b| {
        a.as_f64()
            .abs()
            .partial_cmp(&b.as_f64().abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
}
