//! Generation-by-generation two-type dynamics on a sparse lattice.
//!
//! The state keeps aggregate per-site particle counts per color rather than
//! individual particles. Because offspring counts are i.i.d. per parent and
//! displacements i.i.d. per child, the per-site aggregates are sampled
//! exactly: the split of `n` parents over the offspring-count support and the
//! split of their children over the displacement support are multinomial,
//! drawn as chains of binomials. This keeps the per-generation cost
//! proportional to occupied sites rather than particles.
//!
//! One generation applies, in order: branching (parents are consumed,
//! children accumulate as arrivals), coloring of uncolored arrival sites
//! (tie-break when both types arrive), recoloring of arrivals at sites
//! colored in a strictly earlier generation (each opposing particle adopts
//! the site color independently with probability `p`), and replacement of
//! all counts by the post-recoloring arrivals.
//!
//! Every random draw comes from a stream keyed by (replication, generation,
//! site, phase), so trajectories are reproducible regardless of iteration or
//! scheduling order; see [`crate::rng`].

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::config::{Color, CountMode, TieBreak, TwoTypeConfig};
use crate::lattice::Site;
use crate::laws::ReproductionLaw;
use crate::rat_to_f64;
use crate::rng::{labels, Streams};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("per-site count overflow at site {site} in generation {generation}")]
    CountOverflow { site: String, generation: u64 },
    #[error("site coordinate overflow in generation {generation}")]
    CoordinateOverflow { generation: u64 },
    #[error("contradictory initial colors at site {0}")]
    InitialConflict(String),
    #[error("particle budget {budget} exceeded in generation {generation}")]
    ParticleBudget { budget: u64, generation: u64 },
    #[error("observer error: {0}")]
    Observer(#[from] std::io::Error),
}

/// One colored site: its permanent color, the generation it was colored,
/// whether a particle has ever been placed on it, and the current counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub color: Color,
    pub colored_at: u64,
    pub visited: bool,
    pub red: u64,
    pub blue: u64,
}

impl Cell {
    pub fn count(&self, color: Color) -> u64 {
        match color {
            Color::Red => self.red,
            Color::Blue => self.blue,
        }
    }

    pub fn occupied(&self) -> bool {
        self.red > 0 || self.blue > 0
    }
}

/// Cumulative per-generation statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationStats {
    pub generation: u64,
    pub total_red: u128,
    pub total_blue: u128,
    pub newly_colored_red: u64,
    pub newly_colored_blue: u64,
    pub colored_red: u64,
    pub colored_blue: u64,
    pub max_colored_radius_red: Option<u64>,
    pub max_colored_radius_blue: Option<u64>,
    pub visited_sites: u64,
}

impl GenerationStats {
    pub fn total_particles(&self) -> u128 {
        self.total_red + self.total_blue
    }
}

/// Sparse two-type lattice state.
///
/// Sites absent from `cells` are uncolored with zero counts. A cell's color
/// and coloring generation are written once and never change; only counts
/// are replaced from generation to generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeState {
    pub generation: u64,
    pub cells: BTreeMap<Site, Cell>,
    pub dimension: usize,
    /// Set when a capped count was actually clamped.
    pub approximate: bool,
    pub history: Vec<GenerationStats>,
    pub(crate) colored_red: u64,
    pub(crate) colored_blue: u64,
    pub(crate) max_radius_red: Option<u64>,
    pub(crate) max_radius_blue: Option<u64>,
    pub(crate) visited_sites: u64,
}

impl LatticeState {
    pub fn stats(&self) -> &GenerationStats {
        self.history.last().expect("history never empty")
    }

    pub(crate) fn record_generation(
        &mut self,
        total_red: u128,
        total_blue: u128,
        new_red: u64,
        new_blue: u64,
    ) {
        self.history.push(GenerationStats {
            generation: self.generation,
            total_red,
            total_blue,
            newly_colored_red: new_red,
            newly_colored_blue: new_blue,
            colored_red: self.colored_red,
            colored_blue: self.colored_blue,
            max_colored_radius_red: self.max_radius_red,
            max_colored_radius_blue: self.max_radius_blue,
            visited_sites: self.visited_sites,
        });
    }

    pub(crate) fn note_colored(&mut self, site: &Site, color: Color) {
        let radius = site.norm_linf();
        match color {
            Color::Red => {
                self.colored_red += 1;
                self.max_radius_red = Some(self.max_radius_red.map_or(radius, |r| r.max(radius)));
            }
            Color::Blue => {
                self.colored_blue += 1;
                self.max_radius_blue = Some(self.max_radius_blue.map_or(radius, |r| r.max(radius)));
            }
        }
    }
}

/// Canonical digest of the occupied part of a state: the sorted
/// `(site, color, red, blue)` tuples of all cells holding at least one
/// particle, serialized to bytes. States with identical occupied content
/// share a digest even if their colored-but-empty sites differ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub Vec<u8>);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

pub(crate) fn digest_push(bytes: &mut Vec<u8>, site: &Site, color: Color, red: u64, blue: u64) {
    bytes.push(site.dim() as u8);
    for &c in site.coords() {
        bytes.extend_from_slice(&c.to_le_bytes());
    }
    bytes.push(match color {
        Color::Red => 1,
        Color::Blue => 2,
    });
    bytes.extend_from_slice(&red.to_le_bytes());
    bytes.extend_from_slice(&blue.to_le_bytes());
}

pub fn state_digest(state: &LatticeState) -> StateDigest {
    let mut bytes = Vec::new();
    for (site, cell) in &state.cells {
        if !cell.occupied() {
            continue;
        }
        digest_push(&mut bytes, site, cell.color, cell.red, cell.blue);
    }
    StateDigest(bytes)
}

/// Builds the generation-0 state from the configuration's initial condition.
pub fn init_state(config: &TwoTypeConfig) -> Result<LatticeState, EngineError> {
    let dimension = config.dimension();
    let initial = config.resolved_initial();
    let mut state = LatticeState {
        generation: 0,
        cells: BTreeMap::new(),
        dimension,
        approximate: false,
        history: Vec::new(),
        colored_red: 0,
        colored_blue: 0,
        max_radius_red: None,
        max_radius_blue: None,
        visited_sites: 0,
    };

    let mut total_red: u128 = 0;
    let mut total_blue: u128 = 0;
    for &(site, color, count) in &initial.particles {
        let cell = state.cells.entry(site).or_insert(Cell {
            color,
            colored_at: 0,
            visited: false,
            red: 0,
            blue: 0,
        });
        if cell.color != color {
            return Err(EngineError::InitialConflict(site.to_string()));
        }
        if !cell.visited {
            cell.visited = true;
        }
        match color {
            Color::Red => {
                cell.red += count;
                total_red += u128::from(count);
            }
            Color::Blue => {
                cell.blue += count;
                total_blue += u128::from(count);
            }
        }
    }
    for &(site, color) in &initial.precolored {
        match state.cells.entry(site) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(Cell {
                    color,
                    colored_at: 0,
                    visited: false,
                    red: 0,
                    blue: 0,
                });
            }
            std::collections::btree_map::Entry::Occupied(o) => {
                if o.get().color != color {
                    return Err(EngineError::InitialConflict(site.to_string()));
                }
            }
        }
    }

    let noted: Vec<(Site, Color)> = state.cells.iter().map(|(s, c)| (*s, c.color)).collect();
    state.visited_sites = state.cells.values().filter(|c| c.visited).count() as u64;
    for (site, color) in noted {
        state.note_colored(&site, color);
    }
    state.record_generation(total_red, total_blue, state.colored_red, state.colored_blue);
    Ok(state)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Reproduction law compiled for sampling: atoms in canonical order with
/// float masses. Exact rationals govern validation and analysis; sampling is
/// where floating point enters.
struct LawSampler {
    offspring: Vec<(u64, f64)>,
    displacement: Vec<(Site, f64)>,
}

impl LawSampler {
    fn new(law: &ReproductionLaw) -> Self {
        LawSampler {
            offspring: law
                .offspring_pmf
                .iter()
                .map(|(&k, m)| (k, rat_to_f64(m)))
                .collect(),
            displacement: law
                .displacement_pmf
                .iter()
                .map(|(&s, m)| (s, rat_to_f64(m)))
                .collect(),
        }
    }
}

struct StepContext {
    red: LawSampler,
    blue: LawSampler,
    p: f64,
    p_is_zero: bool,
    tie_break: TieBreak,
    count_mode: CountMode,
    same_step_recolor: bool,
}

impl StepContext {
    fn new(config: &TwoTypeConfig) -> Self {
        StepContext {
            red: LawSampler::new(&config.red_law),
            blue: LawSampler::new(&config.blue_law),
            p: rat_to_f64(&config.p),
            p_is_zero: config.p.is_zero(),
            tie_break: config.tie_break,
            count_mode: config.count_mode,
            same_step_recolor: config.same_step_recolor,
        }
    }

    fn sampler(&self, color: Color) -> &LawSampler {
        match color {
            Color::Red => &self.red,
            Color::Blue => &self.blue,
        }
    }
}

fn draw_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0,1)").sample(rng)
}

/// Splits `n` items over `atoms.len()` categories with the given masses:
/// a multinomial draw as a chain of binomials. `out` is cleared and filled
/// with one count per atom.
fn sample_partition(n: u64, masses: &[f64], rng: &mut ChaCha8Rng, out: &mut Vec<u64>) {
    out.clear();
    out.resize(masses.len(), 0);
    let mut remaining = n;
    let mut tail_mass = 1.0f64;
    for (i, &mass) in masses.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == masses.len() {
            out[i] = remaining;
            break;
        }
        let q = if tail_mass <= 0.0 { 1.0 } else { (mass / tail_mass).clamp(0.0, 1.0) };
        let c = draw_binomial(remaining, q, rng);
        out[i] = c;
        remaining -= c;
        tail_mass -= mass;
    }
}

fn clamp_count(
    value: u128,
    mode: CountMode,
    approximate: &mut bool,
    site: &Site,
    generation: u64,
) -> Result<u64, EngineError> {
    match mode {
        CountMode::Exact => u64::try_from(value).map_err(|_| EngineError::CountOverflow {
            site: site.to_string(),
            generation,
        }),
        CountMode::Capped(cap) => {
            if value > u128::from(cap) {
                *approximate = true;
                Ok(cap)
            } else {
                Ok(value as u64)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Step and run
// ---------------------------------------------------------------------------

/// Advances the state by one generation.
pub fn step(
    state: &mut LatticeState,
    config: &TwoTypeConfig,
    streams: &Streams,
) -> Result<(), EngineError> {
    let ctx = StepContext::new(config);
    step_with(state, &ctx, streams)
}

fn step_with(
    state: &mut LatticeState,
    ctx: &StepContext,
    streams: &Streams,
) -> Result<(), EngineError> {
    let t = state.generation;
    let next_gen = t + 1;
    let mut approximate = state.approximate;

    // Branching: consume every parent, accumulate children as arrivals.
    let mut arrivals: BTreeMap<Site, [u64; 2]> = BTreeMap::new();
    let mut counts_buf: Vec<u64> = Vec::new();
    for (site, cell) in &state.cells {
        if !cell.occupied() {
            continue;
        }
        let mut rng = streams.site_stream(t, site, labels::BRANCH);
        for color in [Color::Red, Color::Blue] {
            let parents = cell.count(color);
            if parents == 0 {
                continue;
            }
            let sampler = ctx.sampler(color);

            // Split parents over the offspring-count support.
            let masses: Vec<f64> = sampler.offspring.iter().map(|&(_, m)| m).collect();
            sample_partition(parents, &masses, &mut rng, &mut counts_buf);
            let mut children: u128 = 0;
            for (&(k, _), &c) in sampler.offspring.iter().zip(counts_buf.iter()) {
                children += u128::from(k) * u128::from(c);
            }
            let children = clamp_count(children, ctx.count_mode, &mut approximate, site, t)?;
            if children == 0 {
                continue;
            }

            // Split children over the displacement support.
            let masses: Vec<f64> = sampler.displacement.iter().map(|&(_, m)| m).collect();
            sample_partition(children, &masses, &mut rng, &mut counts_buf);
            for (&(offset, _), &c) in sampler.displacement.iter().zip(counts_buf.iter()) {
                if c == 0 {
                    continue;
                }
                let target = site
                    .translate(&offset)
                    .ok_or(EngineError::CoordinateOverflow { generation: t })?;
                let slot = arrivals.entry(target).or_insert([0, 0]);
                let idx = color as usize;
                slot[idx] = clamp_count(
                    u128::from(slot[idx]) + u128::from(c),
                    ctx.count_mode,
                    &mut approximate,
                    &target,
                    t,
                )?;
            }
        }
    }

    // Parents are consumed; colors and coloring generations persist.
    for cell in state.cells.values_mut() {
        cell.red = 0;
        cell.blue = 0;
    }

    // Settle arrivals: color new sites, recolor at strictly earlier sites.
    let mut total_red: u128 = 0;
    let mut total_blue: u128 = 0;
    let mut new_red: u64 = 0;
    let mut new_blue: u64 = 0;
    for (site, [mut red_arr, mut blue_arr]) in arrivals {
        match state.cells.get_mut(&site) {
            Some(cell) => {
                // Colored in a strictly earlier generation: opposing
                // arrivals adopt the site color independently with
                // probability p.
                if !ctx.p_is_zero {
                    let (same, opposite) = match cell.color {
                        Color::Red => (&mut red_arr, &mut blue_arr),
                        Color::Blue => (&mut blue_arr, &mut red_arr),
                    };
                    if *opposite > 0 {
                        let mut rng = streams.site_stream(t, &site, labels::SETTLE);
                        let flips = draw_binomial(*opposite, ctx.p, &mut rng);
                        *opposite -= flips;
                        *same = clamp_count(
                            u128::from(*same) + u128::from(flips),
                            ctx.count_mode,
                            &mut approximate,
                            &site,
                            t,
                        )?;
                    }
                }
                cell.red = red_arr;
                cell.blue = blue_arr;
                if !cell.visited {
                    cell.visited = true;
                    state.visited_sites += 1;
                }
            }
            None => {
                // Uncolored site reached this generation.
                let color = if red_arr > 0 && blue_arr > 0 {
                    let mut rng = streams.site_stream(t, &site, labels::SETTLE);
                    let winner = match ctx.tie_break {
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
                            let prob_red = red_arr as f64 / (red_arr as f64 + blue_arr as f64);
                            if rng.gen_bool(prob_red.clamp(0.0, 1.0)) {
                                Color::Red
                            } else {
                                Color::Blue
                            }
                        }
                    };
                    // Under the alternative reading, the losing side's
                    // same-generation arrivals are exposed to recoloring too.
                    if ctx.same_step_recolor && !ctx.p_is_zero {
                        let (same, opposite) = match winner {
                            Color::Red => (&mut red_arr, &mut blue_arr),
                            Color::Blue => (&mut blue_arr, &mut red_arr),
                        };
                        let flips = draw_binomial(*opposite, ctx.p, &mut rng);
                        *opposite -= flips;
                        *same = clamp_count(
                            u128::from(*same) + u128::from(flips),
                            ctx.count_mode,
                            &mut approximate,
                            &site,
                            t,
                        )?;
                    }
                    winner
                } else if red_arr > 0 {
                    Color::Red
                } else {
                    Color::Blue
                };
                state.cells.insert(
                    site,
                    Cell {
                        color,
                        colored_at: next_gen,
                        visited: true,
                        red: red_arr,
                        blue: blue_arr,
                    },
                );
                state.visited_sites += 1;
                state.note_colored(&site, color);
                match color {
                    Color::Red => new_red += 1,
                    Color::Blue => new_blue += 1,
                }
            }
        }
        total_red += u128::from(red_arr);
        total_blue += u128::from(blue_arr);
    }

    state.generation = next_gen;
    state.approximate = approximate;
    state.record_generation(total_red, total_blue, new_red, new_blue);
    Ok(())
}

/// Per-generation hook for event logs and snapshots.
pub trait RunObserver {
    fn on_generation(&mut self, state: &LatticeState) -> std::io::Result<()>;
}

/// Observer that does nothing.
pub struct NoopObserver;

impl RunObserver for NoopObserver {
    fn on_generation(&mut self, _state: &LatticeState) -> std::io::Result<()> {
        Ok(())
    }
}

/// Digest and statistics of one finished replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub replication: u64,
    /// Derived stream seed of this replication (see [`crate::rng`]).
    pub seed: u64,
    pub horizon: u64,
    pub final_digest: StateDigest,
    pub state: LatticeState,
}

impl RunSummary {
    pub fn history(&self) -> &[GenerationStats] {
        &self.state.history
    }

    pub fn final_stats(&self) -> &GenerationStats {
        self.state.stats()
    }
}

/// Runs `horizon` generations of replication `replication`, calling the
/// observer after generation 0 and after every step. Deterministic given
/// (configuration, master seed, replication index).
pub fn run(
    config: &TwoTypeConfig,
    horizon: u64,
    replication: u64,
    observer: &mut dyn RunObserver,
) -> Result<RunSummary, EngineError> {
    let streams = Streams::new(config.master_seed, replication);
    let ctx = StepContext::new(config);
    let mut state = init_state(config)?;
    observer.on_generation(&state)?;
    for _ in 0..horizon {
        step_with(&mut state, &ctx, &streams)?;
        observer.on_generation(&state)?;
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

/// [`run`] without an observer.
pub fn run_quiet(
    config: &TwoTypeConfig,
    horizon: u64,
    replication: u64,
) -> Result<RunSummary, EngineError> {
    run(config, horizon, replication, &mut NoopObserver)
}

/// The sites currently colored red and blue, in canonical order.
pub fn colored_snapshot(state: &LatticeState) -> (Vec<Site>, Vec<Site>) {
    let mut red = Vec::new();
    let mut blue = Vec::new();
    for (site, cell) in &state.cells {
        match cell.color {
            Color::Red => red.push(*site),
            Color::Blue => blue.push(*site),
        }
    }
    (red, blue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialCondition;
    use crate::{rat, Rat};

    /// Engine-level test law (validation deliberately bypassed): every
    /// particle has exactly `k` children, all displaced by `offset`.
    fn delta_law(dimension: usize, k: u64, offset: &[i32]) -> ReproductionLaw {
        ReproductionLaw::new(dimension, &[(k, 1, 1)], &[(offset, 1, 1)])
    }

    fn delta_config(p: Rat) -> TwoTypeConfig {
        TwoTypeConfig::new(
            delta_law(2, 2, &[1, 0]),
            delta_law(2, 2, &[1, 0]),
            p,
            1234,
        )
    }

    #[test]
    fn default_init_matches_model_start() {
        let state = init_state(&delta_config(rat(0, 1))).unwrap();
        assert_eq!(state.cells.len(), 2);
        let origin = &state.cells[&Site::origin(2)];
        assert_eq!((origin.color, origin.red, origin.blue), (Color::Red, 1, 0));
        let one = &state.cells[&Site::new(&[1, 0])];
        assert_eq!((one.color, one.red, one.blue), (Color::Blue, 0, 1));
        assert_eq!(state.stats().total_particles(), 2);
        let (red_sites, blue_sites) = colored_snapshot(&state);
        assert_eq!(red_sites, vec![Site::origin(2)]);
        assert_eq!(blue_sites, vec![Site::new(&[1, 0])]);
    }

    #[test]
    fn single_type_init() {
        let config = TwoTypeConfig::single_type(delta_law(2, 2, &[1, 0]), Color::Red, 1);
        let state = init_state(&config).unwrap();
        assert_eq!(state.cells.len(), 1);
        assert_eq!(state.stats().total_blue, 0);
        let (_, blue_sites) = colored_snapshot(&state);
        assert!(blue_sites.is_empty());
    }

    #[test]
    fn precolored_ring_init() {
        let mut config = delta_config(rat(1, 2));
        config.initial = Some(InitialCondition {
            particles: vec![(Site::origin(2), Color::Red, 1)],
            precolored: Site::unit_neighbors(2)
                .into_iter()
                .map(|s| (s, Color::Blue))
                .collect(),
        });
        let state = init_state(&config).unwrap();
        assert_eq!(state.cells.len(), 5);
        assert_eq!(state.stats().colored_blue, 4);
        assert_eq!(state.stats().visited_sites, 1);
        assert_eq!(state.stats().total_blue, 0);
    }

    #[test]
    fn conflicting_initial_colors_fail() {
        let mut config = delta_config(rat(0, 1));
        config.initial = Some(InitialCondition {
            particles: vec![(Site::origin(2), Color::Red, 1)],
            precolored: vec![(Site::origin(2), Color::Blue)],
        });
        assert!(matches!(
            init_state(&config),
            Err(EngineError::InitialConflict(_))
        ));
    }

    #[test]
    fn deterministic_step_without_recoloring() {
        // Both types send two children one step right; p = 0.
        let config = delta_config(rat(0, 1));
        let streams = Streams::new(config.master_seed, 0);
        let mut state = init_state(&config).unwrap();
        step(&mut state, &config, &streams).unwrap();

        // Red's two children land on the blue site (1,0) and stay red.
        let one = &state.cells[&Site::new(&[1, 0])];
        assert_eq!((one.color, one.red, one.blue), (Color::Blue, 2, 0));
        assert_eq!(one.colored_at, 0);
        // Blue's two children color (2,0).
        let two = &state.cells[&Site::new(&[2, 0])];
        assert_eq!((two.color, two.red, two.blue), (Color::Blue, 0, 2));
        assert_eq!(two.colored_at, 1);
        // The origin keeps its color with no particles.
        let origin = &state.cells[&Site::origin(2)];
        assert_eq!((origin.color, origin.red, origin.blue), (Color::Red, 0, 0));

        let (red_sites, blue_sites) = colored_snapshot(&state);
        assert_eq!(red_sites, vec![Site::origin(2)]);
        assert_eq!(blue_sites, vec![Site::new(&[1, 0]), Site::new(&[2, 0])]);
    }

    #[test]
    fn deterministic_step_with_certain_recoloring() {
        // Same laws but p = 1: red's arrivals at the blue site switch.
        let config = delta_config(rat(1, 1));
        let streams = Streams::new(config.master_seed, 0);
        let mut state = init_state(&config).unwrap();
        step(&mut state, &config, &streams).unwrap();

        let one = &state.cells[&Site::new(&[1, 0])];
        assert_eq!((one.color, one.red, one.blue), (Color::Blue, 0, 2));
        assert_eq!(state.stats().total_red, 0);
        assert_eq!(state.stats().total_blue, 4);
    }

    #[test]
    fn deterministic_count_growth() {
        // With two children per particle the population doubles exactly.
        let config = delta_config(rat(1, 4));
        let summary = run_quiet(&config, 10, 0).unwrap();
        assert_eq!(summary.final_stats().total_particles(), 2 * (1 << 10));
        for (t, gen) in summary.history().iter().enumerate() {
            assert_eq!(gen.total_particles(), 2 * (1u128 << t));
        }
    }

    #[test]
    fn identical_seeds_identical_runs() {
        let red = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 2), (2, 1, 2)]);
        let blue = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 3), (2, 2, 3)]);
        let config = TwoTypeConfig::new(red, blue, rat(1, 3), 777);
        let a = run_quiet(&config, 12, 5).unwrap();
        let b = run_quiet(&config, 12, 5).unwrap();
        assert_eq!(a, b);
        let c = run_quiet(&config, 12, 6).unwrap();
        assert_ne!(a.final_digest, c.final_digest);
    }

    #[test]
    fn colors_are_permanent_and_visited_monotone() {
        let red = ReproductionLaw::nearest_neighbor(1, &[(1, 1, 2), (2, 1, 2)]);
        let blue = red.clone();
        let config = TwoTypeConfig::new(red, blue, rat(1, 2), 31);
        let streams = Streams::new(config.master_seed, 0);
        let mut state = init_state(&config).unwrap();
        let mut colors: BTreeMap<Site, (Color, u64)> = BTreeMap::new();
        let mut last_visited = 0;
        for _ in 0..14 {
            step(&mut state, &config, &streams).unwrap();
            for (site, cell) in &state.cells {
                let entry = colors.insert(*site, (cell.color, cell.colored_at));
                if let Some(previous) = entry {
                    assert_eq!(previous, (cell.color, cell.colored_at));
                }
            }
            assert!(state.stats().visited_sites >= last_visited);
            last_visited = state.stats().visited_sites;
        }
    }

    #[test]
    fn overflow_aborts_in_exact_mode() {
        // One million children per particle overflows u64 within four steps.
        let law = delta_law(1, 1_000_000, &[1]);
        let config = TwoTypeConfig::single_type(law, Color::Red, 3);
        let err = run_quiet(&config, 4, 0).unwrap_err();
        assert!(matches!(err, EngineError::CountOverflow { .. }));
    }

    #[test]
    fn capped_mode_clamps_and_flags() {
        let law = delta_law(1, 1_000_000, &[1]);
        let mut config = TwoTypeConfig::single_type(law, Color::Red, 3);
        config.count_mode = CountMode::Capped(10_000);
        let summary = run_quiet(&config, 6, 0).unwrap();
        assert!(summary.state.approximate);
        assert_eq!(summary.final_stats().total_red, 10_000);
    }

    #[test]
    fn same_step_recolor_flips_tie_break_losers() {
        // Both types throw two children onto the same uncolored site.
        let red = delta_law(1, 2, &[1]);
        let blue = delta_law(1, 2, &[-1]);
        let mut config = TwoTypeConfig::new(red, blue, rat(1, 1), 9);
        config.initial = Some(InitialCondition {
            particles: vec![
                (Site::new(&[-1]), Color::Red, 1),
                (Site::new(&[1]), Color::Blue, 1),
            ],
            precolored: vec![],
        });
        config.tie_break = TieBreak::RedWins;

        let streams = Streams::new(config.master_seed, 0);
        let mut state = init_state(&config).unwrap();
        step(&mut state, &config, &streams).unwrap();
        let origin = &state.cells[&Site::origin(1)];
        // Default reading: the losing blue arrivals keep their color.
        assert_eq!((origin.color, origin.red, origin.blue), (Color::Red, 2, 2));

        config.same_step_recolor = true;
        let mut state = init_state(&config).unwrap();
        step(&mut state, &config, &streams).unwrap();
        let origin = &state.cells[&Site::origin(1)];
        // Alternative reading with p = 1: losers adopt the site color.
        assert_eq!((origin.color, origin.red, origin.blue), (Color::Red, 4, 0));
    }
}
