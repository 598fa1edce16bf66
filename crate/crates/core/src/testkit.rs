//! Deterministic random fixtures and brute-force reference computations for
//! tests and the acceptance suite.
//!
//! The [`brute`] module re-derives the advantage geometry directly from its
//! definitions, in code kept separate from the library implementations it
//! certifies.

use std::collections::BTreeSet;

use num_traits::One;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::Site;
use crate::laws::{offspring_mean, ReproductionLaw};
use crate::Rat;

/// A random valid law: finite offspring support in 1..=5 with mean above 1,
/// nearest neighbors plus a few extra displacement sites in `[-3,3]^d`, all
/// masses small exact rationals.
pub fn random_small_law(rng: &mut ChaCha8Rng, dimension: usize) -> ReproductionLaw {
    let offspring_pmf = loop {
        let support_size = rng.gen_range(1..=3usize);
        let mut counts = BTreeSet::new();
        while counts.len() < support_size {
            counts.insert(rng.gen_range(1..=5u64));
        }
        let weights: Vec<i64> = (0..counts.len()).map(|_| rng.gen_range(1..=8i64)).collect();
        let total: i64 = weights.iter().sum();
        let pmf: crate::laws::CountPmf = counts
            .into_iter()
            .zip(&weights)
            .map(|(k, &w)| (k, Rat::new(w.into(), total.into())))
            .collect();
        if offspring_mean(&pmf) > Rat::one() {
            break pmf;
        }
    };

    let mut support: BTreeSet<Site> = Site::unit_neighbors(dimension).into_iter().collect();
    for _ in 0..rng.gen_range(0..=2usize) {
        let coords: Vec<i32> = (0..dimension).map(|_| rng.gen_range(-3..=3i32)).collect();
        support.insert(Site::new(&coords));
    }
    let weights: Vec<i64> = (0..support.len()).map(|_| rng.gen_range(1..=8i64)).collect();
    let total: i64 = weights.iter().sum();
    let displacement_pmf = support
        .into_iter()
        .zip(&weights)
        .map(|(s, &w)| (s, Rat::new(w.into(), total.into())))
        .collect();

    ReproductionLaw {
        dimension,
        offspring_pmf,
        displacement_pmf,
    }
}

/// A random nonzero integer direction with coordinates in `[-bound, bound]`.
pub fn random_direction(rng: &mut ChaCha8Rng, dimension: usize, bound: i32) -> Site {
    loop {
        let coords: Vec<i32> = (0..dimension).map(|_| rng.gen_range(-bound..=bound)).collect();
        let site = Site::new(&coords);
        if !site.is_origin() {
            return site;
        }
    }
}

/// Brute-force reference computations, written straight from the definitions.
pub mod brute {
    use super::*;

    /// Largest scalar product over the displacement support.
    pub fn reach(law: &ReproductionLaw, x: &Site) -> i64 {
        let mut best: Option<i64> = None;
        for y in law.displacement_pmf.keys() {
            let mut dot: i64 = 0;
            for (a, b) in x.coords().iter().zip(y.coords()) {
                dot += i64::from(*a) * i64::from(*b);
            }
            best = Some(best.map_or(dot, |m: i64| m.max(dot)));
        }
        best.expect("nonempty support")
    }

    /// Membership in the open half-space beyond the defender's reach.
    pub fn in_advantage_set(defender: &ReproductionLaw, x: &Site, y: &Site) -> bool {
        let mut dot: i64 = 0;
        for (a, b) in x.coords().iter().zip(y.coords()) {
            dot += i64::from(*a) * i64::from(*b);
        }
        dot > reach(defender, x)
    }

    /// Expected attacker offspring mass beyond the defender's reach:
    /// mean times the total displacement mass in the advantage set.
    pub fn advantage_mass(
        attacker: &ReproductionLaw,
        defender: &ReproductionLaw,
        x: &Site,
    ) -> Rat {
        let mut mean = Rat::new(0.into(), 1.into());
        for (&k, m) in &attacker.offspring_pmf {
            mean += Rat::new(k.into(), 1.into()) * m;
        }
        let mut mass = Rat::new(0.into(), 1.into());
        for (y, m) in &attacker.displacement_pmf {
            if in_advantage_set(defender, x, y) {
                mass += m;
            }
        }
        mean * mass
    }

    /// Smallest scalar-product excess of attacker support over the
    /// defender's reach, when any.
    pub fn epsilon_gap(
        attacker: &ReproductionLaw,
        defender: &ReproductionLaw,
        x: &Site,
    ) -> Option<i64> {
        let rho = reach(defender, x);
        attacker
            .displacement_pmf
            .keys()
            .filter_map(|y| {
                let mut dot: i64 = 0;
                for (a, b) in x.coords().iter().zip(y.coords()) {
                    dot += i64::from(*a) * i64::from(*b);
                }
                (dot > rho).then_some(dot - rho)
            })
            .min()
    }

    /// `(n-1)/n` when the advantage mass `n` exceeds 1.
    pub fn p_threshold(advantage_mass: &Rat) -> Option<Rat> {
        let one = Rat::new(1.into(), 1.into());
        (advantage_mass > &one).then(|| (advantage_mass - &one) / advantage_mass)
    }
}
