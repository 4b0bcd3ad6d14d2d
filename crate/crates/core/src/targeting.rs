//! Targeting methods represented as total rankings of the population.
//!
//! A method selects from any subset by taking the subset members with the
//! best global rank, so one ranking determines every selection `S_j(X')`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::population::Population;

/// How to order units with equal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Ascending unit id.
    #[default]
    Id,
    /// Seeded shuffle within each group of tied units.
    Seeded(u64),
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TieBreak::Id => f.write_str("id"),
            TieBreak::Seeded(seed) => write!(f, "seeded:{seed}"),
        }
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "id" {
            return Ok(TieBreak::Id);
        }
        s.strip_prefix("seeded:")
            .and_then(|seed| seed.parse().ok())
            .map(TieBreak::Seeded)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "tie-break `{s}` is neither `id` nor `seeded:<u64>`"
                ))
            })
    }
}

/// Deterministic total ranking of a population's units.
///
/// Positions are 1-based in the public API: rank 1 is the highest priority.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetingMethod {
    /// Unit indices in priority order.
    order: Vec<usize>,
    /// `position[i]` is the 0-based rank of unit `i`.
    position: Vec<usize>,
}

impl TargetingMethod {
    /// Ranking given as unit indices in priority order.
    pub fn from_order(population: &Population, order: Vec<usize>) -> Result<Self> {
        let n = population.len();
        if order.len() != n {
            return Err(Error::Invalid(format!(
                "ranking has {} entries for a population of {n}",
                order.len()
            )));
        }
        let mut position = vec![usize::MAX; n];
        for (rank, &unit) in order.iter().enumerate() {
            if unit >= n {
                return Err(Error::range("unit index", unit, 0, n - 1));
            }
            if position[unit] != usize::MAX {
                return Err(Error::DuplicateId(population.unit(unit).id().to_owned()));
            }
            position[unit] = rank;
        }
        Ok(Self { order, position })
    }

    /// Ranking given as unit ids in priority order.
    pub fn from_ids<S: AsRef<str>>(population: &Population, ids: &[S]) -> Result<Self> {
        let order = ids
            .iter()
            .map(|id| population.index_of(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_order(population, order)
    }

    /// The population order itself: unit `i` has rank `i + 1`.
    pub fn identity(population: &Population) -> Self {
        let order: Vec<usize> = (0..population.len()).collect();
        Self {
            position: order.clone(),
            order,
        }
    }

    /// Same units, opposite priority.
    pub fn reversed(&self) -> Self {
        let n = self.order.len();
        Self {
            order: self.order.iter().rev().copied().collect(),
            position: self.position.iter().map(|&r| n - 1 - r).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Unit indices in priority order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of unit `index`.
    pub fn rank_of(&self, index: usize) -> usize {
        self.position[index] + 1
    }

    /// Unit index at 1-based `rank`.
    pub fn unit_at(&self, rank: usize) -> usize {
        self.order[rank - 1]
    }

    /// Ids in priority order.
    pub fn ids<'a>(&'a self, population: &'a Population) -> impl Iterator<Item = &'a str> + 'a {
        self.order.iter().map(move |&i| population.unit(i).id())
    }

    /// The global top `j` as unit indices.
    pub fn top(&self, j: usize) -> &[usize] {
        &self.order[..j.min(self.order.len())]
    }

    /// Top `j` members of a subset of unit indices, in rank order.
    pub fn select_top_indices(&self, subset: &[usize], j: usize) -> Result<Vec<usize>> {
        if j > subset.len() {
            return Err(Error::range("j", j, 0, subset.len()));
        }
        let mut members = subset.to_vec();
        members.sort_unstable_by_key(|&i| self.position[i]);
        members.dedup();
        if j > members.len() {
            return Err(Error::range("j", j, 0, members.len()));
        }
        members.truncate(j);
        Ok(members)
    }
}

/// Rank units by descending score, resolving ties per `tie_break`.
pub fn rank_from_scores(
    population: &Population,
    scores: &HashMap<String, f64>,
    tie_break: TieBreak,
) -> Result<TargetingMethod> {
    let mut keyed = Vec::with_capacity(population.len());
    for (i, unit) in population.units().iter().enumerate() {
        let score = *scores
            .get(unit.id())
            .ok_or_else(|| Error::MissingScore(unit.id().to_owned()))?;
        if score.is_nan() {
            return Err(Error::Invalid(format!("score for unit `{}` is NaN", unit.id())));
        }
        keyed.push((score, i));
    }
    ranking_from_keyed(population, keyed, tie_break)
}

pub(crate) fn ranking_from_keyed(
    population: &Population,
    mut keyed: Vec<(f64, usize)>,
    tie_break: TieBreak,
) -> Result<TargetingMethod> {
    keyed.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| population.unit(a.1).id().cmp(population.unit(b.1).id()))
    });
    if let TieBreak::Seeded(seed) = tie_break {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut start = 0;
        while start < keyed.len() {
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == keyed[start].0 {
                end += 1;
            }
            if end - start > 1 {
                keyed[start..end].shuffle(&mut rng);
            }
            start = end;
        }
    }
    TargetingMethod::from_order(population, keyed.into_iter().map(|(_, i)| i).collect())
}

/// `S_j(X')` for a subset given by ids: the `j` members with the best global
/// rank, in rank order.
pub fn select_top<S: AsRef<str>>(
    method: &TargetingMethod,
    population: &Population,
    subset: &[S],
    j: usize,
) -> Result<Vec<String>> {
    let mut seen = HashSet::with_capacity(subset.len());
    let mut indices = Vec::with_capacity(subset.len());
    for id in subset {
        let idx = population.index_of(id.as_ref())?;
        if seen.insert(idx) {
            indices.push(idx);
        }
    }
    Ok(method
        .select_top_indices(&indices, j)?
        .into_iter()
        .map(|i| population.unit(i).id().to_owned())
        .collect())
}
