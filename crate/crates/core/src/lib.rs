//! Two-type competition on the integer lattice driven by branching random walks.
//!
//! Red and blue particles reproduce in discrete generations: each particle is
//! replaced by a random number of children, each child independently displaced
//! by a vector drawn from a finite-support law. The first type to place a
//! particle at a site colors it permanently; a particle later placed at a site
//! of the opposite color adopts the site's color with probability `p`.
//!
//! The crate provides:
//!
//! - [`laws`]: reproduction laws with exact rational probabilities, validation,
//!   means, probability generating functions, and the min-coupling of two
//!   offspring laws.
//! - [`advantage`]: exact directional reach, advantage sets, expected offspring
//!   mass beyond an opponent's reach, recoloring thresholds, and thinned
//!   Galton-Watson extinction probabilities.
//! - [`engine`]: the generation-by-generation two-type dynamics on a sparse
//!   lattice with aggregate per-site counts.
//! - [`oracle`]: independent reference implementations (a per-particle
//!   simulator and an exact outcome-distribution enumerator) used to certify
//!   the engine.
//! - [`shape`]: directional speed and asymptotic-shape estimation for
//!   single-type processes.
//! - [`experiments`]: the Monte Carlo harness that classifies finite-horizon
//!   proxies of the survival/coexistence events and sweeps the recoloring
//!   parameter.
//! - [`output`]: CSV, NDJSON, and portable-pixmap writers with byte-stable
//!   formatting.
//!
//! Probabilities in law and configuration data are exact rationals; floating
//! point enters only in sampling and statistics.

pub mod advantage;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod lattice;
pub mod laws;
pub mod oracle;
pub mod output;
pub mod rng;
pub mod shape;
pub mod stats;
pub mod testkit;

/// Exact rational number used for all probabilities and derived exact values.
pub type Rat = num_rational::BigRational;

/// Shorthand for a small rational `n/d`.
///
/// Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Nearest `f64` to an exact rational.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational convertible to f64")
}
