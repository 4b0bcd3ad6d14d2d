#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trialbias::{Population, TargetingMethod};

/// Random outcomes with a random positive rate, and a random ranking.
pub fn random_fixture(rng: &mut ChaCha8Rng, n: usize) -> (Population, TargetingMethod, TargetingMethod) {
    let rate: f64 = rng.random();
    let outcomes: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < rate)).collect();
    let pop = Population::from_outcomes(&outcomes).unwrap();
    let s = random_method(rng, &pop);
    let t = random_method(rng, &pop);
    (pop, s, t)
}

pub fn random_method(rng: &mut ChaCha8Rng, pop: &Population) -> TargetingMethod {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.shuffle(rng);
    TargetingMethod::from_order(pop, order).unwrap()
}

/// A ranking that agrees with `base` except for `swaps` random transpositions.
pub fn perturbed(rng: &mut ChaCha8Rng, pop: &Population, base: &TargetingMethod, swaps: usize) -> TargetingMethod {
    let mut order = base.order().to_vec();
    for _ in 0..swaps {
        let i = rng.random_range(0..order.len());
        let j = rng.random_range(0..order.len());
        order.swap(i, j);
    }
    TargetingMethod::from_order(pop, order).unwrap()
}
