//! Finite populations of units with binary outcomes.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A unit of the population together with its observed binary outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unit {
    id: String,
    positive: bool,
}

impl Unit {
    /// Fails unless `outcome` is 0 or 1.
    pub fn new(id: impl Into<String>, outcome: u8) -> Result<Self> {
        let id = id.into();
        match outcome {
            0 | 1 => Ok(Self {
                id,
                positive: outcome == 1,
            }),
            other => Err(Error::Invalid(format!(
                "unit `{id}` has non-binary outcome {other}"
            ))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn outcome(&self) -> u8 {
        u8::from(self.positive)
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }
}

/// Ordered collection of at least two uniquely identified units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    units: Vec<Unit>,
    index: HashMap<String, usize>,
}

impl Population {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        if units.len() < 2 {
            return Err(Error::range("N", units.len(), 2, usize::MAX));
        }
        let mut index = HashMap::with_capacity(units.len());
        for (i, unit) in units.iter().enumerate() {
            if index.insert(unit.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(unit.id.clone()));
            }
        }
        Ok(Self { units, index })
    }

    /// Population with generated ids `u1, u2, ...`, zero-padded so that
    /// lexicographic and numeric order agree.
    pub fn from_outcomes(outcomes: &[u8]) -> Result<Self> {
        let width = outcomes.len().to_string().len();
        let units = outcomes
            .iter()
            .enumerate()
            .map(|(i, &y)| Unit::new(format!("u{:0width$}", i + 1), y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(units)
    }

    /// Number of units, `N`.
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, index: usize) -> &Unit {
        &self.units[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownUnit(id.to_owned()))
    }

    pub fn outcome(&self, index: usize) -> u8 {
        self.units[index].outcome()
    }

    pub fn positives(&self) -> usize {
        self.units.iter().filter(|u| u.positive).count()
    }

    pub fn positive_rate(&self) -> f64 {
        self.positives() as f64 / self.len() as f64
    }

    /// Fails when `N` is odd; random half-partitions need `N/2` integral.
    pub fn require_even(&self) -> Result<()> {
        if self.len() % 2 == 0 {
            Ok(())
        } else {
            Err(Error::Odd {
                what: "N",
                value: self.len(),
            })
        }
    }
}
