//! Independent reference implementations used to certify the engine.
//!
//! Two oracles share the engine's semantics but none of its sampling
//! machinery:
//!
//! - [`simulate_per_particle`] tracks every particle individually and draws
//!   its offspring count, displacements, tie-breaks, and recoloring flips one
//!   at a time from a single sequential stream. Intended for small
//!   populations; guarded by a particle budget.
//! - [`enumerate_exact`] expands every combination of offspring counts,
//!   displacements, tie-breaks, and recoloring outcomes of a tiny instance,
//!   multiplying exact rational probabilities. Guarded by a leaf budget;
//!   practical up to horizon 2.
//!
//! Agreement with the engine is distributional, not pathwise: the aggregate
//! engine consumes randomness differently, so equality is asserted on outcome
//! laws (total variation against the exact enumeration, two-sample tests
//! between the simulators).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Color, TieBreak, TwoTypeConfig};
use crate::engine::{
    digest_push, init_state, state_digest, EngineError, RunSummary, StateDigest,
};
use crate::lattice::Site;
use crate::laws::ReproductionLaw;
use crate::rat_to_f64;
use crate::rng::{labels, Streams};
use crate::Rat;

/// Default guard for the per-particle simulator.
pub const DEFAULT_PARTICLE_BUDGET: u64 = 1_000_000;

/// Default guard for the exact enumerator.
pub const DEFAULT_LEAF_BUDGET: u64 = 100_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact enumeration exceeded the leaf budget of {budget}")]
    LeafBudget { budget: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

// ---------------------------------------------------------------------------
// Per-particle simulator
// ---------------------------------------------------------------------------

struct CategoricalF64 {
    cumulative: Vec<f64>,
}

impl CategoricalF64 {
    fn from_masses(masses: impl Iterator<Item = f64>) -> Self {
        let mut cumulative: Vec<f64> = masses
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        CategoricalF64 { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

struct ParticleLaw {
    offspring: Vec<u64>,
    offspring_draw: CategoricalF64,
    displacement: Vec<Site>,
    displacement_draw: CategoricalF64,
}

impl ParticleLaw {
    fn new(law: &ReproductionLaw) -> Self {
        ParticleLaw {
            offspring: law.offspring_pmf.keys().copied().collect(),
            offspring_draw: CategoricalF64::from_masses(
                law.offspring_pmf.values().map(rat_to_f64),
            ),
            displacement: law.displacement_pmf.keys().copied().collect(),
            displacement_draw: CategoricalF64::from_masses(
                law.displacement_pmf.values().map(rat_to_f64),
            ),
        }
    }
}

/// Simulates one replication particle by particle, with semantics identical
/// to the engine: non-overlapping generations, first-arrival coloring with
/// tie-breaks, recoloring with probability `p` at sites colored strictly
/// earlier. Every draw comes from one sequential stream in canonical site
/// order.
pub fn simulate_per_particle(
    config: &TwoTypeConfig,
    horizon: u64,
    replication: u64,
    particle_budget: u64,
) -> Result<RunSummary, EngineError> {
    let streams = Streams::new(config.master_seed, replication);
    let mut rng = streams.run_stream(labels::ORACLE);
    let red_law = ParticleLaw::new(&config.red_law);
    let blue_law = ParticleLaw::new(&config.blue_law);
    let p = rat_to_f64(&config.p);
    let p_positive = !config.p.is_zero();

    let mut state = init_state(config)?;
    for t in 0..horizon {
        // Branching, one particle at a time in canonical order.
        let mut arrivals: BTreeMap<Site, [u64; 2]> = BTreeMap::new();
        let mut children_total: u64 = 0;
        for (site, cell) in &state.cells {
            for color in [Color::Red, Color::Blue] {
                let law = match color {
                    Color::Red => &red_law,
                    Color::Blue => &blue_law,
                };
                for _ in 0..cell.count(color) {
                    let k = law.offspring[law.offspring_draw.draw(&mut rng)];
                    for _ in 0..k {
                        let offset = law.displacement[law.displacement_draw.draw(&mut rng)];
                        let target = site
                            .translate(&offset)
                            .ok_or(EngineError::CoordinateOverflow { generation: t })?;
                        arrivals.entry(target).or_insert([0, 0])[color as usize] += 1;
                        children_total += 1;
                        if children_total > particle_budget {
                            return Err(EngineError::ParticleBudget {
                                budget: particle_budget,
                                generation: t,
                            });
                        }
                    }
                }
            }
        }

        for cell in state.cells.values_mut() {
            cell.red = 0;
            cell.blue = 0;
        }

        // Settle, one arrival site at a time.
        let mut total_red: u128 = 0;
        let mut total_blue: u128 = 0;
        let mut new_red = 0;
        let mut new_blue = 0;
        for (site, [mut red_arr, mut blue_arr]) in arrivals {
            match state.cells.get_mut(&site) {
                Some(cell) => {
                    if p_positive {
                        let (same, opposite) = match cell.color {
                            Color::Red => (&mut red_arr, &mut blue_arr),
                            Color::Blue => (&mut blue_arr, &mut red_arr),
                        };
                        let mut flips = 0;
                        for _ in 0..*opposite {
                            if rng.gen_bool(p) {
                                flips += 1;
                            }
                        }
                        *opposite -= flips;
                        *same += flips;
                    }
                    cell.red = red_arr;
                    cell.blue = blue_arr;
                    if !cell.visited {
                        cell.visited = true;
                        state.visited_sites += 1;
                    }
                }
                None => {
                    let winner = if red_arr > 0 && blue_arr > 0 {
                        let winner = match config.tie_break {
                            TieBreak::Coin => {
                                if rng.gen_bool(0.5) {
                                    Color::Red
                                } else {
                                    Color::Blue
                                }
                            }
                            TieBreak::RedWins => Color::Red,
                            TieBreak::BlueWins => Color::Blue,
                            TieBreak::Proportional => {
                                let prob = red_arr as f64 / (red_arr + blue_arr) as f64;
                                if rng.gen_bool(prob) {
                                    Color::Red
                                } else {
                                    Color::Blue
                                }
                            }
                        };
                        if config.same_step_recolor && p_positive {
                            let (same, opposite) = match winner {
                                Color::Red => (&mut red_arr, &mut blue_arr),
                                Color::Blue => (&mut blue_arr, &mut red_arr),
                            };
                            let mut flips = 0;
                            for _ in 0..*opposite {
                                if rng.gen_bool(p) {
                                    flips += 1;
                                }
                            }
                            *opposite -= flips;
                            *same += flips;
                        }
                        winner
                    } else if red_arr > 0 {
                        Color::Red
                    } else {
                        Color::Blue
                    };
                    state.cells.insert(
                        site,
                        crate::engine::Cell {
                            color: winner,
                            colored_at: t + 1,
                            visited: true,
                            red: red_arr,
                            blue: blue_arr,
                        },
                    );
                    state.visited_sites += 1;
                    state.note_colored(&site, winner);
                    match winner {
                        Color::Red => new_red += 1,
                        Color::Blue => new_blue += 1,
                    }
                }
            }
            total_red += u128::from(red_arr);
            total_blue += u128::from(blue_arr);
        }

        state.generation = t + 1;
        state.record_generation(total_red, total_blue, new_red, new_blue);
    }

    let final_digest = state_digest(&state);
    Ok(RunSummary {
        replication,
        seed: streams.replication_seed(),
        horizon,
        final_digest,
        state,
    })
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

/// Exact outcome law of a tiny instance at a fixed horizon, keyed by the
/// canonical digest of the occupied sites.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub probabilities: BTreeMap<StateDigest, Rat>,
}

impl OutcomeDistribution {
    pub fn total_mass(&self) -> Rat {
        self.probabilities.values().cloned().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct MiniCell {
    color: Color,
    red: u64,
    blue: u64,
}

type MiniState = BTreeMap<Site, MiniCell>;

fn full_key(state: &MiniState) -> Vec<u8> {
    let mut bytes = Vec::new();
    for (site, cell) in state {
        digest_push(&mut bytes, site, cell.color, cell.red, cell.blue);
    }
    bytes
}

fn occupied_digest(state: &MiniState) -> StateDigest {
    let mut bytes = Vec::new();
    for (site, cell) in state {
        if cell.red > 0 || cell.blue > 0 {
            digest_push(&mut bytes, site, cell.color, cell.red, cell.blue);
        }
    }
    StateDigest(bytes)
}

fn factorial(n: u64) -> BigInt {
    let mut out = BigInt::one();
    for i in 2..=n {
        out *= BigInt::from(i);
    }
    out
}

/// `n! / Π parts_i!` as an exact rational factor.
fn multinomial_coefficient(n: u64, parts: &[u64]) -> Rat {
    let mut denom = BigInt::one();
    for &c in parts {
        denom *= factorial(c);
    }
    Rat::new(factorial(n), denom)
}

fn rat_pow(base: &Rat, exp: u64) -> Rat {
    let mut out = Rat::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// Enumerates all ways of splitting `n` items over `masses.len()`
/// categories, calling `visit` with the counts and the exact probability of
/// each split.
fn for_each_split<F: FnMut(&[u64], Rat)>(n: u64, masses: &[Rat], visit: &mut F) {
    fn rec<F: FnMut(&[u64], Rat)>(
        remaining: u64,
        idx: usize,
        masses: &[Rat],
        counts: &mut Vec<u64>,
        visit: &mut F,
    ) {
        if idx + 1 == masses.len() {
            counts.push(remaining);
            let n: u64 = counts.iter().sum();
            let mut prob = multinomial_coefficient(n, counts);
            for (c, m) in counts.iter().zip(masses) {
                prob *= rat_pow(m, *c);
            }
            visit(counts, prob);
            counts.pop();
            return;
        }
        for c in 0..=remaining {
            counts.push(c);
            rec(remaining - c, idx + 1, masses, counts, visit);
            counts.pop();
        }
    }
    if masses.is_empty() {
        return;
    }
    rec(n, 0, masses, &mut Vec::new(), visit);
}

/// Enumerates binomial flip outcomes: `flips` of `n` opposing particles
/// adopt the site color, with probability
/// `C(n,flips)·p^flips·(1-p)^(n-flips)`.
fn for_each_flip<F: FnMut(u64, Rat)>(n: u64, p: &Rat, visit: &mut F) {
    if p.is_zero() {
        visit(0, Rat::one());
        return;
    }
    if p.is_one() {
        visit(n, Rat::one());
        return;
    }
    let q = Rat::one() - p;
    for flips in 0..=n {
        let coeff = num_integer::binomial(BigInt::from(n), BigInt::from(flips));
        let prob = Rat::from_integer(coeff) * rat_pow(p, flips) * rat_pow(&q, n - flips);
        visit(flips, prob);
    }
}

struct Enumerator<'a> {
    config: &'a TwoTypeConfig,
    leaf_budget: u64,
    leaves: u64,
}

impl<'a> Enumerator<'a> {
    /// Expands one generation of one state into `out`.
    fn expand(
        &mut self,
        state: &MiniState,
        prob: &Rat,
        out: &mut BTreeMap<Vec<u8>, (MiniState, Rat)>,
    ) -> Result<(), OracleError> {
        let parents: Vec<(Site, Color, u64)> = state
            .iter()
            .flat_map(|(site, cell)| {
                [
                    (*site, Color::Red, cell.red),
                    (*site, Color::Blue, cell.blue),
                ]
            })
            .filter(|&(_, _, n)| n > 0)
            .collect();

        let mut arrival_sets: Vec<(BTreeMap<Site, [u64; 2]>, Rat)> =
            vec![(BTreeMap::new(), prob.clone())];

        for (site, color, count) in parents {
            let law = self.config.law(color);
            let offspring_atoms: Vec<u64> = law.offspring_pmf.keys().copied().collect();
            let offspring_masses: Vec<Rat> = law.offspring_pmf.values().cloned().collect();
            let disp_atoms: Vec<Site> = law.displacement_pmf.keys().copied().collect();
            let disp_masses: Vec<Rat> = law.displacement_pmf.values().cloned().collect();

            let mut next: Vec<(BTreeMap<Site, [u64; 2]>, Rat)> = Vec::new();
            for (arrivals, weight) in &arrival_sets {
                for_each_split(count, &offspring_masses, &mut |offspring_counts, w1| {
                    let children: u64 = offspring_counts
                        .iter()
                        .zip(&offspring_atoms)
                        .map(|(&c, &k)| c * k)
                        .sum();
                    for_each_split(children, &disp_masses, &mut |disp_counts, w2| {
                        let mut arrivals = arrivals.clone();
                        for (&c, offset) in disp_counts.iter().zip(&disp_atoms) {
                            if c > 0 {
                                let target = site.translate(offset).expect("tiny instance");
                                arrivals.entry(target).or_insert([0, 0])[color as usize] += c;
                            }
                        }
                        next.push((arrivals, weight.clone() * &w1 * &w2));
                    });
                });
            }
            arrival_sets = next;
            if arrival_sets.len() as u64 > self.leaf_budget {
                return Err(OracleError::LeafBudget {
                    budget: self.leaf_budget,
                });
            }
        }

        for (arrivals, weight) in arrival_sets {
            self.settle(state, &arrivals, weight, out)?;
        }
        Ok(())
    }

    /// Enumerates tie-break and recoloring outcomes for a fixed arrival set.
    fn settle(
        &mut self,
        state: &MiniState,
        arrivals: &BTreeMap<Site, [u64; 2]>,
        weight: Rat,
        out: &mut BTreeMap<Vec<u8>, (MiniState, Rat)>,
    ) -> Result<(), OracleError> {
        let mut base = state.clone();
        for cell in base.values_mut() {
            cell.red = 0;
            cell.blue = 0;
        }
        let p = &self.config.p;

        let mut partial: Vec<(MiniState, Rat)> = vec![(base, weight)];
        for (&site, &[red_arr, blue_arr]) in arrivals {
            let mut next: Vec<(MiniState, Rat)> = Vec::new();
            for (cells, w) in &partial {
                if let Some(existing) = cells.get(&site) {
                    let color = existing.color;
                    let (same, opposite) = match color {
                        Color::Red => (red_arr, blue_arr),
                        Color::Blue => (blue_arr, red_arr),
                    };
                    for_each_flip(opposite, p, &mut |flips, fw| {
                        let mut cells = cells.clone();
                        let cell = cells.get_mut(&site).expect("existing cell");
                        let (r, b) = match color {
                            Color::Red => (same + flips, opposite - flips),
                            Color::Blue => (opposite - flips, same + flips),
                        };
                        cell.red = r;
                        cell.blue = b;
                        next.push((cells, w.clone() * fw));
                    });
                } else {
                    let contested = red_arr > 0 && blue_arr > 0;
                    let mut color_choices: Vec<(Color, Rat)> = Vec::new();
                    if contested {
                        match self.config.tie_break {
                            TieBreak::Coin => {
                                color_choices.push((Color::Red, Rat::new(1.into(), 2.into())));
                                color_choices.push((Color::Blue, Rat::new(1.into(), 2.into())));
                            }
                            TieBreak::RedWins => color_choices.push((Color::Red, Rat::one())),
                            TieBreak::BlueWins => color_choices.push((Color::Blue, Rat::one())),
                            TieBreak::Proportional => {
                                let total = red_arr + blue_arr;
                                color_choices
                                    .push((Color::Red, Rat::new(red_arr.into(), total.into())));
                                color_choices
                                    .push((Color::Blue, Rat::new(blue_arr.into(), total.into())));
                            }
                        }
                    } else if red_arr > 0 {
                        color_choices.push((Color::Red, Rat::one()));
                    } else {
                        color_choices.push((Color::Blue, Rat::one()));
                    }

                    for (color, cw) in &color_choices {
                        let (same, opposite) = match color {
                            Color::Red => (red_arr, blue_arr),
                            Color::Blue => (blue_arr, red_arr),
                        };
                        let mut place = |flips: u64, fw: Rat, next: &mut Vec<(MiniState, Rat)>| {
                            let mut cells = cells.clone();
                            let (r, b) = match color {
                                Color::Red => (same + flips, opposite - flips),
                                Color::Blue => (opposite - flips, same + flips),
                            };
                            cells.insert(
                                site,
                                MiniCell {
                                    color: *color,
                                    red: r,
                                    blue: b,
                                },
                            );
                            next.push((cells, w.clone() * cw * fw));
                        };
                        if self.config.same_step_recolor && contested {
                            for_each_flip(opposite, p, &mut |flips, fw| {
                                place(flips, fw, &mut next)
                            });
                        } else {
                            place(0, Rat::one(), &mut next);
                        }
                    }
                }
            }
            partial = next;
            if partial.len() as u64 > self.leaf_budget {
                return Err(OracleError::LeafBudget {
                    budget: self.leaf_budget,
                });
            }
        }

        self.leaves += partial.len() as u64;
        if self.leaves > self.leaf_budget {
            return Err(OracleError::LeafBudget {
                budget: self.leaf_budget,
            });
        }
        for (cells, w) in partial {
            let key = full_key(&cells);
            match out.entry(key) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert((cells, w));
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    o.get_mut().1 += w;
                }
            }
        }
        Ok(())
    }
}

/// Exhaustive exact outcome distribution after `horizon` generations.
///
/// Expands every combination of offspring counts, displacements, tie-breaks,
/// and recoloring outcomes with exact rational probabilities. The outcome
/// tree is guarded by `leaf_budget`; in practice that limits the horizon to
/// about 2 for nontrivial laws.
pub fn enumerate_exact(
    config: &TwoTypeConfig,
    horizon: u64,
    leaf_budget: u64,
) -> Result<OutcomeDistribution, OracleError> {
    let initial_state = init_state(config)?;
    let mini: MiniState = initial_state
        .cells
        .iter()
        .map(|(site, cell)| {
            (
                *site,
                MiniCell {
                    color: cell.color,
                    red: cell.red,
                    blue: cell.blue,
                },
            )
        })
        .collect();
    let mut current: BTreeMap<Vec<u8>, (MiniState, Rat)> = BTreeMap::new();
    current.insert(full_key(&mini), (mini, Rat::one()));

    let mut enumerator = Enumerator {
        config,
        leaf_budget,
        leaves: 0,
    };
    for _ in 0..horizon {
        let mut next: BTreeMap<Vec<u8>, (MiniState, Rat)> = BTreeMap::new();
        for (state, prob) in current.values() {
            enumerator.expand(state, prob, &mut next)?;
        }
        current = next;
    }

    let mut probabilities: BTreeMap<StateDigest, Rat> = BTreeMap::new();
    for (state, prob) in current.values() {
        *probabilities
            .entry(occupied_digest(state))
            .or_insert_with(Rat::zero) += prob;
    }
    Ok(OutcomeDistribution { probabilities })
}

/// Builds the empirical digest distribution of a set of replications.
pub fn empirical_distribution(
    digests: impl IntoIterator<Item = StateDigest>,
) -> (BTreeMap<StateDigest, u64>, u64) {
    let mut counts: BTreeMap<StateDigest, u64> = BTreeMap::new();
    let mut total = 0;
    for d in digests {
        *counts.entry(d).or_insert(0) += 1;
        total += 1;
    }
    (counts, total)
}

/// Total variation distance `½·Σ |p̂ − p|` between an empirical frequency
/// map and an exact distribution over the shared digest space.
pub fn total_variation(
    empirical: &BTreeMap<StateDigest, u64>,
    total: u64,
    exact: &OutcomeDistribution,
) -> f64 {
    let keys: std::collections::BTreeSet<&StateDigest> = empirical
        .keys()
        .chain(exact.probabilities.keys())
        .collect();
    let mut sum = 0.0;
    for key in keys {
        let emp = empirical.get(key).copied().unwrap_or(0) as f64 / total as f64;
        let exa = exact.probabilities.get(key).map(rat_to_f64).unwrap_or(0.0);
        sum += (emp - exa).abs();
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialCondition;
    use crate::engine::run_quiet;
    use crate::rat;

    fn walker_config() -> TwoTypeConfig {
        // Engine-level test law: one child, displaced ±1 uniformly.
        let law = ReproductionLaw::uniform_displacement(1, 1, &[&[-1], &[1]]);
        TwoTypeConfig::single_type(law, Color::Red, 2024)
    }

    #[test]
    fn enumerate_horizon_zero_is_point_mass() {
        let dist = enumerate_exact(&walker_config(), 0, 1000).unwrap();
        assert_eq!(dist.probabilities.len(), 1);
        assert_eq!(dist.total_mass(), rat(1, 1));
    }

    #[test]
    fn enumerate_single_walker() {
        // One step: particle at -1 or +1 with probability 1/2 each.
        let dist = enumerate_exact(&walker_config(), 1, 1000).unwrap();
        assert_eq!(dist.probabilities.len(), 2);
        for p in dist.probabilities.values() {
            assert_eq!(*p, rat(1, 2));
        }

        // Two steps: four paths collapse to three occupied outcomes
        // (-2 w.p. 1/4, back at 0 w.p. 1/2, +2 w.p. 1/4).
        let dist = enumerate_exact(&walker_config(), 2, 1000).unwrap();
        assert_eq!(dist.probabilities.len(), 3);
        let probs: Vec<Rat> = dist.probabilities.values().cloned().collect();
        assert_eq!(dist.total_mass(), rat(1, 1));
        assert_eq!(probs.iter().filter(|&p| *p == rat(1, 4)).count(), 2);
        assert_eq!(probs.iter().filter(|&p| *p == rat(1, 2)).count(), 1);
    }

    #[test]
    fn enumerate_two_type_mass_sums_to_one() {
        let law = ReproductionLaw::uniform_displacement(1, 1, &[&[-1], &[1]]);
        let mut config = TwoTypeConfig::new(law.clone(), law, rat(1, 2), 5);
        config.tie_break = TieBreak::Proportional;
        let dist = enumerate_exact(&config, 2, 10_000).unwrap();
        assert_eq!(dist.total_mass(), rat(1, 1));
    }

    #[test]
    fn enumerate_respects_leaf_budget() {
        let law = ReproductionLaw::nearest_neighbor(2, &[(2, 1, 2), (3, 1, 2)]);
        let config = TwoTypeConfig::new(law.clone(), law, rat(1, 2), 5);
        assert!(matches!(
            enumerate_exact(&config, 2, 50),
            Err(OracleError::LeafBudget { .. })
        ));
    }

    #[test]
    fn per_particle_matches_engine_on_deterministic_laws() {
        let red = ReproductionLaw::new(2, &[(2, 1, 1)], &[(&[1, 0], 1, 1)]);
        let config = TwoTypeConfig::new(red.clone(), red, rat(1, 1), 77);
        let engine = run_quiet(&config, 5, 0).unwrap();
        let oracle = simulate_per_particle(&config, 5, 0, DEFAULT_PARTICLE_BUDGET).unwrap();
        assert_eq!(engine.final_digest, oracle.final_digest);
        assert_eq!(
            engine.final_stats().total_particles(),
            oracle.final_stats().total_particles()
        );
    }

    #[test]
    fn per_particle_fair_step_frequency() {
        let config = walker_config();
        let mut at_plus_one = 0u32;
        for rep in 0..10_000 {
            let s = simulate_per_particle(&config, 1, rep, 1000).unwrap();
            if s.state.cells.get(&Site::new(&[1])).is_some_and(|c| c.red == 1) {
                at_plus_one += 1;
            }
        }
        let freq = f64::from(at_plus_one) / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn per_particle_budget_guard() {
        let law = ReproductionLaw::nearest_neighbor(1, &[(3, 1, 1)]);
        let config = TwoTypeConfig::single_type(law, Color::Red, 1);
        assert!(matches!(
            simulate_per_particle(&config, 20, 0, 1000),
            Err(EngineError::ParticleBudget { .. })
        ));
    }

    #[test]
    fn precolored_sites_shape_enumeration() {
        // A walker hemmed in by pre-colored blue sites: with p = 1 every
        // child is recolored blue, so no red particle survives anywhere.
        let law = ReproductionLaw::uniform_displacement(1, 1, &[&[-1], &[1]]);
        let mut config = TwoTypeConfig::new(law.clone(), law, rat(1, 1), 5);
        config.initial = Some(InitialCondition {
            particles: vec![(Site::origin(1), Color::Red, 1)],
            precolored: vec![
                (Site::new(&[-1]), Color::Blue),
                (Site::new(&[1]), Color::Blue),
            ],
        });
        let dist = enumerate_exact(&config, 1, 1000).unwrap();
        assert_eq!(dist.total_mass(), rat(1, 1));
        for digest in dist.probabilities.keys() {
            // The color byte follows the dimension byte and 4 coordinate
            // bytes; both outcomes leave a blue particle at ±1.
            assert_eq!(digest.0[5], 2, "expected blue occupancy");
        }
    }

    #[test]
    fn total_variation_hand_values() {
        let a = StateDigest(vec![1]);
        let b = StateDigest(vec![2]);
        let exact = OutcomeDistribution {
            probabilities: BTreeMap::from([(a.clone(), rat(1, 2)), (b.clone(), rat(1, 2))]),
        };
        let empirical = BTreeMap::from([(a.clone(), 60u64), (b.clone(), 40u64)]);
        assert!((total_variation(&empirical, 100, &exact) - 0.1).abs() < 1e-12);

        let empirical = BTreeMap::from([(a.clone(), 50u64), (b.clone(), 50u64)]);
        assert_eq!(total_variation(&empirical, 100, &exact), 0.0);

        let c = StateDigest(vec![3]);
        let empirical = BTreeMap::from([(c, 100u64)]);
        assert_eq!(total_variation(&empirical, 100, &exact), 1.0);
    }
}
