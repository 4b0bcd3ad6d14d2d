//! Randomization bias in field trials that compare two targeting methods.
//!
//! Two methods `S` and `T` each rank a finite population; the quantity of
//! interest is the difference in precision at `k`,
//! `delta = mu_{S_k} - mu_{T_k}`. This crate provides
//!
//! * the population, ranking and precision-curve model ([`population`],
//!   [`targeting`], [`precision`]);
//! * the law of the deepest rank reached by a half-population selection
//!   ([`combinatorics`]);
//! * closed forms and a Monte Carlo simulator for the split-half randomized
//!   design, which is biased in general ([`rct`]);
//! * the exact law and a simulator for the unbiased survey design
//!   ([`survey`]);
//! * exhaustive enumerators used as ground truth ([`oracle`]);
//! * CSV ingestion, synthetic populations and report tables ([`cli`]).
//!
//! The analytic routines are generic over [`Scalar`]; the aliases below fix
//! the common instantiations.

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod population;
pub mod precision;
pub mod rct;
pub mod scalar;
pub mod survey;
pub mod targeting;

pub use combinatorics::{
    hypergeometric_pmf, ln_m_pmf, log_binomial, m_distribution, m_mode, m_pmf, m_ratio, m_support,
    RankDistribution,
};
pub use error::{Error, Result};
pub use montecarlo::{EmpiricalDistribution, MonteCarlo};
pub use population::{Population, Unit};
pub use precision::{delta_true, precision_curve, PrecisionCurve};
pub use rct::{
    expected_half_precision, expected_rct_precision, nu, rct_analysis, simulate_rct, RctAnalysis,
};
pub use scalar::{Rational, Scalar};
pub use survey::{
    build_survey_design, exact_survey_distribution, simulate_survey, survey_identity_check,
    ExactEstimatorDistribution, SurveyDesign,
};
pub use targeting::{rank_from_scores, select_top, TargetingMethod, TieBreak};

/// Exact rational, the oracle's number type.
pub type ExactRational = Rational;

pub type RankDistributionF64 = RankDistribution<f64>;
pub type RankDistributionF32 = RankDistribution<f32>;
pub type ExactRankDistribution = RankDistribution<Rational>;

pub type RctAnalysisF64 = RctAnalysis<f64>;
pub type RctAnalysisF32 = RctAnalysis<f32>;
pub type ExactRctAnalysis = RctAnalysis<Rational>;

pub type EstimatorDistributionF64 = ExactEstimatorDistribution<f64>;
pub type EstimatorDistributionF32 = ExactEstimatorDistribution<f32>;
pub type ExactEstimatorDistributionQ = ExactEstimatorDistribution<Rational>;
