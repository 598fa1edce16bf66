//! Two-type process configuration and its on-disk schema.
//!
//! The file format is a single JSON document in which every probability is an
//! exact rational: count pmfs are lists of `[count, numerator, denominator]`
//! triples, displacement pmfs are lists of `[[coords...], numerator,
//! denominator]` triples, and `p` is a `[numerator, denominator]` pair.
//! Parsing and re-serializing a configuration preserves it exactly.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::lattice::Site;
use crate::laws::{validate_law, ReproductionLaw, ValidationReport, ViolationCode};
use crate::{Rat, rat};

/// Particle / site color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
        }
    }
}

/// Rule deciding the color of an uncolored site reached by both types in the
/// same generation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Fair independent coin per contested site.
    #[default]
    Coin,
    RedWins,
    BlueWins,
    /// Red wins with probability `k_r / (k_r + k_b)`.
    Proportional,
}

impl TieBreak {
    pub const ALL: [TieBreak; 4] = [
        TieBreak::Coin,
        TieBreak::RedWins,
        TieBreak::BlueWins,
        TieBreak::Proportional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TieBreak::Coin => "coin",
            TieBreak::RedWins => "red_wins",
            TieBreak::BlueWins => "blue_wins",
            TieBreak::Proportional => "proportional",
        }
    }

    pub fn parse(s: &str) -> Option<TieBreak> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Swaps the polarity of the deterministic rules (label exchange).
    pub fn swapped(self) -> TieBreak {
        match self {
            TieBreak::RedWins => TieBreak::BlueWins,
            TieBreak::BlueWins => TieBreak::RedWins,
            other => other,
        }
    }
}

/// How per-site particle counts behave near the 64-bit range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Checked arithmetic; any overflowing count aborts the run.
    Exact,
    /// Counts clamp at the cap and the state is flagged approximate.
    Capped(u64),
}

impl Default for CountMode {
    fn default() -> Self {
        CountMode::Exact
    }
}

/// Initial particles and pre-colored sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// `(site, color, particle count)`; the site is colored at generation 0.
    pub particles: Vec<(Site, Color, u64)>,
    /// Sites colored at generation 0 without any particles.
    #[serde(default)]
    pub precolored: Vec<(Site, Color)>,
}

impl InitialCondition {
    /// The standard start: one red particle at the origin (colored red) and
    /// one blue particle at `(1, 0, ..., 0)` (colored blue).
    pub fn standard(dimension: usize) -> Self {
        InitialCondition {
            particles: vec![
                (Site::origin(dimension), Color::Red, 1),
                (Site::along_first_axis(dimension, 1), Color::Blue, 1),
            ],
            precolored: Vec::new(),
        }
    }

    /// One particle of the given color at the origin, nothing else.
    pub fn single(dimension: usize, color: Color) -> Self {
        InitialCondition {
            particles: vec![(Site::origin(dimension), color, 1)],
            precolored: Vec::new(),
        }
    }
}

/// Full specification of a two-type run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoTypeConfig {
    pub red_law: ReproductionLaw,
    pub blue_law: ReproductionLaw,
    /// Probability that a particle placed at a site of opposite color adopts
    /// the site's color.
    pub p: Rat,
    pub tie_break: TieBreak,
    /// `None` selects the standard start for the laws' dimension.
    pub initial: Option<InitialCondition>,
    pub master_seed: u64,
    pub count_mode: CountMode,
    /// Alternative reading of the recoloring rule: also expose same-step
    /// arrivals on the losing side of a tie-break to recoloring.
    pub same_step_recolor: bool,
}

impl TwoTypeConfig {
    pub fn new(red_law: ReproductionLaw, blue_law: ReproductionLaw, p: Rat, master_seed: u64) -> Self {
        TwoTypeConfig {
            red_law,
            blue_law,
            p,
            tie_break: TieBreak::default(),
            initial: None,
            master_seed,
            count_mode: CountMode::Exact,
            same_step_recolor: false,
        }
    }

    /// A single-type process: one particle of `color` at the origin, moving
    /// under `law`. The opposite law is present but never branches.
    pub fn single_type(law: ReproductionLaw, color: Color, master_seed: u64) -> Self {
        let dimension = law.dimension;
        let mut config = TwoTypeConfig::new(law.clone(), law, rat(0, 1), master_seed);
        config.initial = Some(InitialCondition::single(dimension, color));
        config
    }

    pub fn dimension(&self) -> usize {
        self.red_law.dimension
    }

    pub fn law(&self, color: Color) -> &ReproductionLaw {
        match color {
            Color::Red => &self.red_law,
            Color::Blue => &self.blue_law,
        }
    }

    /// The initial condition actually used by the engine.
    pub fn resolved_initial(&self) -> InitialCondition {
        self.initial
            .clone()
            .unwrap_or_else(|| InitialCondition::standard(self.dimension()))
    }

    /// Swaps the roles of red and blue: laws, initial entries, and tie-break
    /// polarity.
    pub fn label_swapped(&self) -> TwoTypeConfig {
        let mut initial = self.resolved_initial();
        for entry in &mut initial.particles {
            entry.1 = entry.1.opposite();
        }
        for entry in &mut initial.precolored {
            entry.1 = entry.1.opposite();
        }
        TwoTypeConfig {
            red_law: self.blue_law.clone(),
            blue_law: self.red_law.clone(),
            p: self.p.clone(),
            tie_break: self.tie_break.swapped(),
            initial: Some(initial),
            master_seed: self.master_seed,
            count_mode: self.count_mode,
            same_step_recolor: self.same_step_recolor,
        }
    }

    /// Validates both laws and all configuration-level invariants.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let d = self.dimension();
        report.merge(validate_law(&self.red_law, d, &self.p));
        report.merge(validate_law(&self.blue_law, d, &self.p));
        if self.blue_law.dimension != d {
            report.push(
                ViolationCode::ConfigDimensionMismatch,
                format!(
                    "red law dimension {d} differs from blue law dimension {}",
                    self.blue_law.dimension
                ),
            );
        }
        if self.p < Rat::zero() || self.p > Rat::one() {
            report.push(
                ViolationCode::ConfigPOutOfRange,
                format!("p = {} outside [0,1]", self.p),
            );
        }
        if let CountMode::Capped(cap) = self.count_mode {
            if cap == 0 {
                report.push(ViolationCode::ConfigCapZero, "count cap must be positive");
            }
        }
        if let Some(initial) = &self.initial {
            if initial.particles.is_empty() && initial.precolored.is_empty() {
                report.push(ViolationCode::ConfigInitialEmpty, "initial condition is empty");
            }
            let mut colors: BTreeMap<Site, Color> = BTreeMap::new();
            let entries = initial
                .particles
                .iter()
                .map(|(s, c, _)| (*s, *c))
                .chain(initial.precolored.iter().copied());
            for (site, color) in entries {
                if site.dim() != d {
                    report.push(
                        ViolationCode::ConfigDimensionMismatch,
                        format!("initial site {site} has dimension {}", site.dim()),
                    );
                    continue;
                }
                if let Some(existing) = colors.insert(site, color) {
                    if existing != color {
                        report.push(
                            ViolationCode::ConfigInitialConflict,
                            format!("site {site} assigned both colors"),
                        );
                    }
                }
            }
        }
        report
    }
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

/// Exact rational as a `[numerator, denominator]` pair.
pub type RatPair = (i64, i64);

fn pair_to_rat(pair: RatPair) -> Rat {
    Rat::new(pair.0.into(), pair.1.into())
}

fn rat_to_pair(r: &Rat) -> RatPair {
    use num_traits::ToPrimitive;
    let n = r.numer().to_i64().expect("rational numerator fits i64");
    let d = r.denom().to_i64().expect("rational denominator fits i64");
    (n, d)
}

/// On-disk form of a reproduction law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawFile {
    /// `[count, numerator, denominator]` triples.
    pub offspring: Vec<(u64, i64, i64)>,
    /// `[[coords...], numerator, denominator]` triples.
    pub displacement: Vec<(Site, i64, i64)>,
}

impl LawFile {
    pub fn to_law(&self, dimension: usize) -> ReproductionLaw {
        ReproductionLaw {
            dimension,
            offspring_pmf: self
                .offspring
                .iter()
                .map(|&(k, n, d)| (k, pair_to_rat((n, d))))
                .collect(),
            displacement_pmf: self
                .displacement
                .iter()
                .map(|&(s, n, d)| (s, pair_to_rat((n, d))))
                .collect(),
        }
    }

    pub fn from_law(law: &ReproductionLaw) -> LawFile {
        LawFile {
            offspring: law
                .offspring_pmf
                .iter()
                .map(|(&k, m)| {
                    let (n, d) = rat_to_pair(m);
                    (k, n, d)
                })
                .collect(),
            displacement: law
                .displacement_pmf
                .iter()
                .map(|(&s, m)| {
                    let (n, d) = rat_to_pair(m);
                    (s, n, d)
                })
                .collect(),
        }
    }
}

/// On-disk form of a full configuration, plus optional experiment defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub dimension: usize,
    /// `[numerator, denominator]`.
    pub p: RatPair,
    pub red: LawFile,
    pub blue: LawFile,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub count_mode: CountMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub same_step_recolor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentDefaults>,
}

/// Optional experiment parameters carried inside a configuration file;
/// command-line flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape_radius: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_window: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<RatPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Site>>,
}

impl ConfigFile {
    /// Resolves the file into a runnable configuration. A missing master
    /// seed is filled with `fallback_seed` (drawn from entropy by the CLI
    /// and echoed into the manifest).
    pub fn resolve(&self, fallback_seed: u64) -> TwoTypeConfig {
        TwoTypeConfig {
            red_law: self.red.to_law(self.dimension),
            blue_law: self.blue.to_law(self.dimension),
            p: pair_to_rat(self.p),
            tie_break: self.tie_break,
            initial: self.initial.clone(),
            master_seed: self.master_seed.unwrap_or(fallback_seed),
            count_mode: self.count_mode,
            same_step_recolor: self.same_step_recolor,
        }
    }

    /// The fully-resolved file echoed into manifests: seed made explicit.
    pub fn from_config(config: &TwoTypeConfig, experiment: Option<ExperimentDefaults>) -> ConfigFile {
        ConfigFile {
            dimension: config.dimension(),
            p: rat_to_pair(&config.p),
            red: LawFile::from_law(&config.red_law),
            blue: LawFile::from_law(&config.blue_law),
            tie_break: config.tie_break,
            master_seed: Some(config.master_seed),
            count_mode: config.count_mode,
            initial: config.initial.clone(),
            same_step_recolor: config.same_step_recolor,
            experiment,
        }
    }
}
