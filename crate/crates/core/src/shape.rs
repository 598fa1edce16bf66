//! Single-type growth asymptotics: directional speed estimation from
//! hitting-time regressions, radial shape profiles, and paired speed
//! comparisons between two laws.
//!
//! The speed along an integer direction `x` is estimated from first-hitting
//! generations: for each integer radius `r`, the first generation at which
//! some visited site projects at least `r` onto the unit vector `x/|x|`.
//! Hitting is decided in exact integer arithmetic (`<z,x>^2 >= r^2·|x|^2`),
//! so the estimate is invariant under rescaling of `x`. The speed is the
//! least-squares slope of radius against mean hitting generation over the
//! upper half of the observed radii; early generations are transient and
//! discarded.

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Color, TwoTypeConfig};
use crate::engine::{run, EngineError, LatticeState, RunObserver};
use crate::lattice::Site;
use crate::laws::ReproductionLaw;
use crate::rng::absorb;
use crate::stats::{fit_slope, mean_and_se};

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("direction must be a nonzero integer vector")]
    ZeroDirection,
    #[error("direction dimension {direction} does not match law dimension {law}")]
    DimensionMismatch { direction: usize, law: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Directional speed estimate for a single-type process.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedEstimate {
    pub direction: Site,
    /// Sites per generation along the unit direction.
    pub tau_hat: f64,
    pub standard_error: f64,
    pub horizon: u64,
    pub replications: u64,
    /// `(radius, mean first-hitting generation)` for every radius reached in
    /// all replications.
    pub hitting_curve: Vec<(u64, f64)>,
    /// Set when too few radii were hit to fit a slope; `tau_hat` is then 0.
    pub insufficient: bool,
}

/// Radial profile of the rescaled visited set of a single-type process.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEstimate {
    /// Coprime integer directions up to the requested max-norm bound.
    pub directions: Vec<Site>,
    /// Mean over replications of `max <z, x/|x|> / horizon` over visited `z`.
    pub radial: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub horizon: u64,
    pub replications: u64,
}

/// Paired speed estimates for one direction with a difference z-score.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedComparison {
    pub direction: Site,
    pub tau_red: f64,
    pub se_red: f64,
    pub tau_blue: f64,
    pub se_blue: f64,
    /// `(tau_blue − tau_red) / sqrt(se_red² + se_blue²)`.
    pub z_score: f64,
}

struct ProjectionTracker {
    direction: Site,
    max_dot_per_generation: Vec<i128>,
}

impl RunObserver for ProjectionTracker {
    fn on_generation(&mut self, state: &LatticeState) -> std::io::Result<()> {
        // Visited sites only: pre-colored sites are not growth.
        let max_dot = state
            .cells
            .iter()
            .filter(|(_, c)| c.visited)
            .map(|(site, _)| site.dot(&self.direction))
            .max()
            .unwrap_or(0);
        self.max_dot_per_generation.push(max_dot);
        Ok(())
    }
}

fn check_direction(law: &ReproductionLaw, x: &Site) -> Result<(), ShapeError> {
    if x.is_origin() {
        return Err(ShapeError::ZeroDirection);
    }
    if x.dim() != law.dimension {
        return Err(ShapeError::DimensionMismatch {
            direction: x.dim(),
            law: law.dimension,
        });
    }
    Ok(())
}

/// Largest integer radius reached by a projection value `dot` along a
/// direction of squared norm `norm_sq`: `floor(dot / sqrt(norm_sq))`,
/// computed exactly.
fn radius_reached(dot: i128, norm_sq: u128) -> u64 {
    if dot <= 0 {
        return 0;
    }
    let dot = dot as u128;
    ((dot * dot) / norm_sq).isqrt() as u64
}

/// Estimates the growth speed of `law` along direction `x` from one particle
/// at the origin.
pub fn estimate_speed(
    law: &ReproductionLaw,
    x: &Site,
    horizon: u64,
    replications: u64,
    master_seed: u64,
) -> Result<SpeedEstimate, ShapeError> {
    check_direction(law, x)?;
    let norm_sq = x.norm2_sq();
    let config = TwoTypeConfig::single_type(law.clone(), Color::Red, master_seed);

    // Per replication: the first generation at which each radius is reached.
    let per_rep: Result<Vec<Vec<u64>>, ShapeError> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut tracker = ProjectionTracker {
                direction: *x,
                max_dot_per_generation: Vec::with_capacity(horizon as usize + 1),
            };
            run(&config, horizon, rep, &mut tracker)?;
            let mut hits: Vec<u64> = Vec::new();
            for (t, &dot) in tracker.max_dot_per_generation.iter().enumerate() {
                let reached = radius_reached(dot, norm_sq);
                while (hits.len() as u64) < reached {
                    hits.push(t as u64);
                }
            }
            Ok(hits)
        })
        .collect();
    let per_rep = per_rep?;

    let max_common = per_rep.iter().map(|h| h.len() as u64).min().unwrap_or(0);
    let hitting_curve: Vec<(u64, f64)> = (1..=max_common)
        .map(|r| {
            let mean = per_rep
                .iter()
                .map(|h| h[(r - 1) as usize] as f64)
                .sum::<f64>()
                / per_rep.len() as f64;
            (r, mean)
        })
        .collect();

    // Transient cutoff: keep the upper half of the radii.
    let cutoff = max_common / 2;
    let points: Vec<(f64, f64)> = hitting_curve
        .iter()
        .filter(|&&(r, _)| r > cutoff)
        .map(|&(r, t)| (t, r as f64))
        .collect();

    let (tau_hat, standard_error, insufficient) = match fit_slope(&points) {
        Some(fit) => (fit.slope.max(0.0), fit.slope_se, false),
        None => (0.0, 0.0, true),
    };

    Ok(SpeedEstimate {
        direction: *x,
        tau_hat,
        standard_error,
        horizon,
        replications,
        hitting_curve,
        insufficient,
    })
}

/// All coprime integer directions with max-norm at most `bound`.
pub fn coprime_directions(dimension: usize, bound: u32) -> Vec<Site> {
    let bound = bound as i32;
    let mut out: Vec<Site> = Vec::new();
    let mut coords = vec![0i32; dimension];
    fn rec(idx: usize, bound: i32, coords: &mut Vec<i32>, out: &mut Vec<Site>) {
        if idx == coords.len() {
            let gcd = coords
                .iter()
                .map(|&c| c.unsigned_abs())
                .fold(0u32, num_integer::gcd);
            if gcd == 1 {
                out.push(Site::new(coords));
            }
            return;
        }
        for c in -bound..=bound {
            coords[idx] = c;
            rec(idx + 1, bound, coords, out);
        }
    }
    rec(0, bound, &mut coords, &mut out);
    out.sort();
    out
}

/// Estimates the radial profile of the visited set at the horizon, one run
/// set shared by all directions.
pub fn estimate_shape(
    law: &ReproductionLaw,
    horizon: u64,
    replications: u64,
    direction_norm_bound: u32,
    master_seed: u64,
) -> Result<ShapeEstimate, ShapeError> {
    let directions = coprime_directions(law.dimension, direction_norm_bound.max(1));
    let config = TwoTypeConfig::single_type(law.clone(), Color::Red, master_seed);

    let per_rep: Result<Vec<Vec<f64>>, ShapeError> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let summary = crate::engine::run_quiet(&config, horizon, rep)?;
            let values = directions
                .iter()
                .map(|x| {
                    let max_dot = summary
                        .state
                        .cells
                        .iter()
                        .filter(|(_, c)| c.visited)
                        .map(|(site, _)| site.dot(x))
                        .max()
                        .unwrap_or(0)
                        .max(0);
                    max_dot as f64 / x.norm2() / horizon.max(1) as f64
                })
                .collect();
            Ok(values)
        })
        .collect();
    let per_rep = per_rep?;

    let mut radial = Vec::with_capacity(directions.len());
    let mut standard_error = Vec::with_capacity(directions.len());
    for i in 0..directions.len() {
        let values: Vec<f64> = per_rep.iter().map(|v| v[i]).collect();
        let (mean, se) = mean_and_se(&values);
        radial.push(mean);
        standard_error.push(se);
    }

    Ok(ShapeEstimate {
        directions,
        radial,
        standard_error,
        horizon,
        replications,
    })
}

const SPEED_RED_LABEL: u64 = 0xA1;
const SPEED_BLUE_LABEL: u64 = 0xA2;

/// Paired single-type speed estimates for each direction, with z-scores for
/// the blue-minus-red difference.
pub fn compare_speeds(
    red_law: &ReproductionLaw,
    blue_law: &ReproductionLaw,
    directions: &[Site],
    horizon: u64,
    replications: u64,
    master_seed: u64,
) -> Result<Vec<SpeedComparison>, ShapeError> {
    directions
        .iter()
        .enumerate()
        .map(|(idx, x)| {
            let seed_red = absorb(absorb(master_seed, SPEED_RED_LABEL), idx as u64);
            let seed_blue = absorb(absorb(master_seed, SPEED_BLUE_LABEL), idx as u64);
            let red = estimate_speed(red_law, x, horizon, replications, seed_red)?;
            let blue = estimate_speed(blue_law, x, horizon, replications, seed_blue)?;
            let denom = (red.standard_error.powi(2) + blue.standard_error.powi(2)).sqrt();
            let diff = blue.tau_hat - red.tau_hat;
            let z_score = if denom > 0.0 {
                diff / denom
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            Ok(SpeedComparison {
                direction: *x,
                tau_red: red.tau_hat,
                se_red: red.standard_error,
                tau_blue: blue.tau_hat,
                se_blue: blue.standard_error,
                z_score,
            })
        })
        .collect()
}
