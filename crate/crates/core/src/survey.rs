//! The survey design: take the top `k` of each method on the full
//! population, discard their intersection `I`, sample each remainder
//! without replacement and rescale by `alpha = 1 - |I|/k`.
//!
//! Units in `I` contribute equally to both precisions, so
//! `delta = alpha * (mean(S_k \ I) - mean(T_k \ I))` and the sample
//! analogue is unbiased. When `k - |I|` is smaller than the nominal
//! per-arm sample of `ceil(k/2)`, each remainder is observed in full.
//!
//! Stratified surveys are not covered.

use std::collections::BTreeMap;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::montecarlo::{run_replicates, EmpiricalDistribution, MonteCarlo};
use crate::population::Population;
use crate::scalar::Scalar;
use crate::targeting::TargetingMethod;

/// Target sets, their overlap and the per-arm samples of a survey at `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyDesign {
    k: usize,
    s_top: Vec<usize>,
    t_top: Vec<usize>,
    intersection: Vec<usize>,
    /// Outcomes of `S_k \ I`, in `S` rank order.
    s_excluded: Vec<u8>,
    /// Outcomes of `T_k \ I`, in `T` rank order.
    t_excluded: Vec<u8>,
    intersection_positives: usize,
    sample_size_s: usize,
    sample_size_t: usize,
}

impl SurveyDesign {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Unit indices of `S_k`, in rank order.
    pub fn s_top(&self) -> &[usize] {
        &self.s_top
    }

    pub fn t_top(&self) -> &[usize] {
        &self.t_top
    }

    /// Unit indices in both target sets, ascending.
    pub fn intersection(&self) -> &[usize] {
        &self.intersection
    }

    /// `k - |I|`, the size of each remainder.
    pub fn excluded_size(&self) -> usize {
        self.k - self.intersection.len()
    }

    pub fn alpha<T: Scalar>(&self) -> T {
        T::from_ratio(self.excluded_size() as u64, self.k as u64)
    }

    pub fn sample_size_s(&self) -> usize {
        self.sample_size_s
    }

    pub fn sample_size_t(&self) -> usize {
        self.sample_size_t
    }

    pub fn positives_s_excluded(&self) -> usize {
        self.s_excluded.iter().map(|&y| usize::from(y)).sum()
    }

    pub fn positives_t_excluded(&self) -> usize {
        self.t_excluded.iter().map(|&y| usize::from(y)).sum()
    }

    pub fn positives_intersection(&self) -> usize {
        self.intersection_positives
    }

    pub fn s_excluded_outcomes(&self) -> &[u8] {
        &self.s_excluded
    }

    pub fn t_excluded_outcomes(&self) -> &[u8] {
        &self.t_excluded
    }

    /// Override the per-arm sample sizes, e.g. for a smaller budget.
    pub fn with_sample_sizes(mut self, s: usize, t: usize) -> Result<Self> {
        let size = self.excluded_size();
        if s > size {
            return Err(Error::range("sample_size_s", s, 0, size));
        }
        if t > size {
            return Err(Error::range("sample_size_t", t, 0, size));
        }
        self.sample_size_s = s;
        self.sample_size_t = t;
        Ok(self)
    }

    /// The estimate for `a` positives among the `S` sample and `b` among the
    /// `T` sample. Keyed by the integer `a * n_T - b * n_S` so equal
    /// estimates share one bit pattern.
    fn estimate<T: Scalar>(&self, key: i64) -> T {
        let (ns, nt) = (self.sample_size_s as u64, self.sample_size_t as u64);
        T::from_signed_ratio(
            key * self.excluded_size() as i64,
            self.k as u64 * ns * nt,
        )
    }

    fn key(&self, a: usize, b: usize) -> i64 {
        (a * self.sample_size_t) as i64 - (b * self.sample_size_s) as i64
    }

    fn require_samples(&self) -> Result<bool> {
        if self.excluded_size() == 0 {
            return Ok(false);
        }
        if self.sample_size_s == 0 || self.sample_size_t == 0 {
            return Err(Error::Invalid(format!(
                "survey with alpha > 0 needs positive sample sizes, got {} and {}",
                self.sample_size_s, self.sample_size_t
            )));
        }
        Ok(true)
    }
}

/// Build the survey design for methods `s` and `t` at resource level `k`.
pub fn build_survey_design(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<SurveyDesign> {
    let n = population.len();
    if k == 0 || k > n {
        return Err(Error::range("k", k, 1, n));
    }
    if s.len() != n || t.len() != n {
        return Err(Error::Invalid(
            "targeting methods do not cover the population".into(),
        ));
    }
    let s_top = s.top(k).to_vec();
    let t_top = t.top(k).to_vec();
    let mut in_t = vec![false; n];
    for &u in &t_top {
        in_t[u] = true;
    }
    let mut in_s = vec![false; n];
    for &u in &s_top {
        in_s[u] = true;
    }
    let mut intersection: Vec<usize> = s_top.iter().copied().filter(|&u| in_t[u]).collect();
    intersection.sort_unstable();
    let s_excluded: Vec<u8> = s_top
        .iter()
        .filter(|&&u| !in_t[u])
        .map(|&u| population.outcome(u))
        .collect();
    let t_excluded: Vec<u8> = t_top
        .iter()
        .filter(|&&u| !in_s[u])
        .map(|&u| population.outcome(u))
        .collect();
    let intersection_positives = intersection
        .iter()
        .map(|&u| usize::from(population.outcome(u)))
        .sum();
    let sample = k.div_ceil(2).min(k - intersection.len());
    Ok(SurveyDesign {
        k,
        s_top,
        t_top,
        intersection,
        s_excluded,
        t_excluded,
        intersection_positives,
        sample_size_s: sample,
        sample_size_t: sample,
    })
}

/// Finite law of an estimator: distinct values ascending with their
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEstimatorDistribution<T> {
    support: Vec<T>,
    pmf: Vec<T>,
    mean: T,
    variance: T,
}

/// Tolerance on the total mass of a floating point estimator law.
pub const ESTIMATOR_MASS_TOLERANCE: f64 = 1e-12;

impl<T: Scalar> ExactEstimatorDistribution<T> {
    pub(crate) fn from_atoms(atoms: Vec<(T, T)>) -> Result<Self> {
        let total = atoms.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone());
        if T::EXACT {
            if !total.is_one() {
                return Err(Error::Guard(format!("estimator law sums to {total:?}")));
            }
        } else if !((total.as_f64() - 1.0).abs() <= ESTIMATOR_MASS_TOLERANCE) {
            return Err(Error::Guard(format!(
                "estimator law has mass {}",
                total.as_f64()
            )));
        }
        let mean = atoms
            .iter()
            .fold(T::zero(), |acc, (v, p)| acc + v.clone() * p.clone());
        let variance = atoms.iter().fold(T::zero(), |acc, (v, p)| {
            let d = v.clone() - mean.clone();
            acc + d.clone() * d * p.clone()
        });
        let (support, pmf) = atoms.into_iter().unzip();
        Ok(Self {
            support,
            pmf,
            mean,
            variance,
        })
    }

    pub fn point_mass(value: T) -> Self {
        Self {
            support: vec![value.clone()],
            pmf: vec![T::one()],
            mean: value,
            variance: T::zero(),
        }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &T)> + '_ {
        self.support.iter().zip(self.pmf.iter())
    }

    pub fn mean(&self) -> &T {
        &self.mean
    }

    pub fn variance(&self) -> &T {
        &self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.as_f64().max(0.0).sqrt()
    }

    pub fn total(&self) -> T {
        self.pmf.iter().fold(T::zero(), |acc, p| acc + p.clone())
    }

    pub fn probability_of(&self, value: &T) -> T {
        self.iter()
            .find(|(v, _)| *v == value)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(T::zero)
    }
}

pub(crate) fn atoms_from_keys<T: Scalar>(
    design: &SurveyDesign,
    keyed: BTreeMap<i64, T>,
) -> Vec<(T, T)> {
    keyed
        .into_iter()
        .map(|(key, p)| (design.estimate::<T>(key), p))
        .collect()
}

/// Exact sampling law of the survey estimator.
///
/// Positives drawn in each arm are hypergeometric and independent across
/// arms; probabilities of pairs yielding the same estimate are pooled.
pub fn exact_survey_distribution<T: Scalar>(
    design: &SurveyDesign,
) -> Result<ExactEstimatorDistribution<T>> {
    if !design.require_samples()? {
        return Ok(ExactEstimatorDistribution::point_mass(T::zero()));
    }
    let size = design.excluded_size();
    let arm = |positives: usize, draws: usize| -> Result<Vec<(usize, T)>> {
        let lo = (draws + positives).saturating_sub(size);
        let hi = draws.min(positives);
        (lo..=hi)
            .map(|x| {
                crate::combinatorics::hypergeometric_pmf::<T>(x, size, positives, draws)
                    .map(|p| (x, p))
            })
            .collect()
    };
    let s_law = arm(design.positives_s_excluded(), design.sample_size_s)?;
    let t_law = arm(design.positives_t_excluded(), design.sample_size_t)?;
    let mut keyed: BTreeMap<i64, T> = BTreeMap::new();
    for (a, pa) in &s_law {
        for (b, pb) in &t_law {
            let p = pa.clone() * pb.clone();
            let slot = keyed.entry(design.key(*a, *b)).or_insert_with(T::zero);
            *slot = slot.clone() + p;
        }
    }
    ExactEstimatorDistribution::from_atoms(atoms_from_keys(design, keyed))
}

fn sample_positives<R: rand::Rng + ?Sized>(rng: &mut R, outcomes: &[u8], draws: usize) -> usize {
    if draws == outcomes.len() {
        return outcomes.iter().map(|&y| usize::from(y)).sum();
    }
    index::sample(rng, outcomes.len(), draws)
        .iter()
        .map(|i| usize::from(outcomes[i]))
        .sum()
}

/// Monte Carlo draws of the survey estimator.
pub fn simulate_survey(design: &SurveyDesign, config: &MonteCarlo) -> Result<EmpiricalDistribution> {
    let active = design.require_samples()?;
    let values = run_replicates(
        config,
        || (),
        |_, rng| {
            if !active {
                return 0.0;
            }
            let a = sample_positives(rng, &design.s_excluded, design.sample_size_s);
            let b = sample_positives(rng, &design.t_excluded, design.sample_size_t);
            design.estimate::<f64>(design.key(a, b))
        },
    )?;
    Ok(EmpiricalDistribution::new(values, config.seed))
}

/// Draws of the absolute-precision estimates obtained when the
/// intersection is sampled as well.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsoluteSurvey {
    pub precision_s: EmpiricalDistribution,
    pub precision_t: EmpiricalDistribution,
    pub delta: EmpiricalDistribution,
}

/// Survey that also samples `intersection_sample` units of `I` and reports
/// design-weighted estimates of `mu_{S_k}` and `mu_{T_k}`:
/// `|I|/k * mean(I') + alpha * mean(arm sample)`.
pub fn simulate_survey_absolute(
    design: &SurveyDesign,
    population: &Population,
    intersection_sample: usize,
    config: &MonteCarlo,
) -> Result<AbsoluteSurvey> {
    let active = design.require_samples()?;
    let common = design.intersection.len();
    if common > 0 && (intersection_sample == 0 || intersection_sample > common) {
        return Err(Error::range("intersection sample", intersection_sample, 1, common));
    }
    let shared: Vec<u8> = design
        .intersection
        .iter()
        .map(|&u| population.outcome(u))
        .collect();
    let k = design.k as f64;
    let alpha = design.alpha::<f64>();
    let weight_common = common as f64 / k;
    let mean = |positives: usize, draws: usize| positives as f64 / draws as f64;

    // One replicate yields three numbers; run the fan-out three times on
    // identical streams and pick a different component each time.
    let component = |which: usize| {
        run_replicates(
            config,
            || (),
            |_, rng| {
                let arm_s = if active {
                    mean(
                        sample_positives(rng, &design.s_excluded, design.sample_size_s),
                        design.sample_size_s,
                    )
                } else {
                    0.0
                };
                let arm_t = if active {
                    mean(
                        sample_positives(rng, &design.t_excluded, design.sample_size_t),
                        design.sample_size_t,
                    )
                } else {
                    0.0
                };
                let shared_mean = if common > 0 {
                    mean(
                        sample_positives(rng, &shared, intersection_sample),
                        intersection_sample,
                    )
                } else {
                    0.0
                };
                match which {
                    0 => weight_common * shared_mean + alpha * arm_s,
                    1 => weight_common * shared_mean + alpha * arm_t,
                    _ => alpha * (arm_s - arm_t),
                }
            },
        )
    };
    Ok(AbsoluteSurvey {
        precision_s: EmpiricalDistribution::new(component(0)?, config.seed),
        precision_t: EmpiricalDistribution::new(component(1)?, config.seed),
        delta: EmpiricalDistribution::new(component(2)?, config.seed),
    })
}

/// `alpha * (mean(S_k \ I) - mean(T_k \ I))` from full outcome knowledge.
pub fn survey_identity_check<T: Scalar>(
    s: &TargetingMethod,
    t: &TargetingMethod,
    population: &Population,
    k: usize,
) -> Result<T> {
    let design = build_survey_design(s, t, population, k)?;
    let size = design.excluded_size() as u64;
    if size == 0 {
        return Ok(T::zero());
    }
    let s_mean = T::from_ratio(design.positives_s_excluded() as u64, size);
    let t_mean = T::from_ratio(design.positives_t_excluded() as u64, size);
    Ok(design.alpha::<T>() * (s_mean - t_mean))
}

/// `mu_{S_k}` and `mu_{T_k}` recovered from the design's pieces.
pub fn design_precisions<T: Scalar>(design: &SurveyDesign) -> (T, T) {
    let k = design.k as u64;
    let common = design.intersection_positives as u64;
    (
        T::from_ratio(common + design.positives_s_excluded() as u64, k),
        T::from_ratio(common + design.positives_t_excluded() as u64, k),
    )
}
