#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sepax::mechanism::{
    constant_point, min_top_dictator, mixture, random_deterministic, random_mechanism, rank_score,
    top_class_uniform, uniform_lottery, zoo, ZOO,
};
use sepax::{Alt, Domain, Lottery, MechanismTable, Rat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strategyproof building blocks; convex combinations stay strategyproof.
pub fn sp_basis(domain: &Arc<Domain>) -> Vec<MechanismTable> {
    let mut basis = vec![
        uniform_lottery(domain),
        top_class_uniform(domain),
        min_top_dictator(domain),
        rank_score(domain),
    ];
    basis.extend((0..domain.m()).map(|a| constant_point(domain, Alt(a))));
    basis
}

pub fn random_sp_mixture<R: Rng>(basis: &[MechanismTable], rng: &mut R) -> MechanismTable {
    let picks: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..basis.len())).collect();
    let weights: Vec<i64> = picks.iter().map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let parts: Vec<(Rat, &MechanismTable)> = picks
        .iter()
        .zip(&weights)
        .map(|(&i, &w)| (Rat::new(w, total), &basis[i]))
        .collect();
    mixture(&parts)
}

/// Replaces the lottery at one random order with a random one.
pub fn perturb<R: Rng>(mech: &MechanismTable, rng: &mut R) -> MechanismTable {
    let domain = mech.domain().clone();
    let m = domain.m();
    let mut lotteries = mech.lotteries().to_vec();
    let i = rng.gen_range(0..lotteries.len());
    let weights: Vec<Rat> = (0..m).map(|a| Rat::from_int(1 + (a as i64 + rng.gen_range(0..3)) % 3)).collect();
    lotteries[i] = Lottery::from_weights(&weights).unwrap();
    MechanismTable::new(domain, lotteries).unwrap()
}

/// Seeded mix of fully random tables, SP mixtures, perturbed SP mixtures
/// and deterministic tables.
pub fn population(domain: &Arc<Domain>, count: usize, seed: u64) -> Vec<(String, MechanismTable)> {
    let mut rng = rng(seed);
    let basis = sp_basis(domain);
    (0..count)
        .map(|i| {
            let mech = match i % 4 {
                0 => random_mechanism(domain, &mut rng, 3),
                1 => random_sp_mixture(&basis, &mut rng),
                2 => perturb(&random_sp_mixture(&basis, &mut rng), &mut rng),
                _ => random_deterministic(domain, &mut rng),
            };
            (format!("random-m{}-{seed}-{i}", domain.m()), mech)
        })
        .collect()
}

pub fn zoo_population(m: usize) -> Vec<(String, MechanismTable)> {
    let domain = Domain::new(m).unwrap();
    ZOO.iter()
        .map(|name| (format!("{name}-m{m}"), zoo(name, &domain).unwrap()))
        .collect()
}
