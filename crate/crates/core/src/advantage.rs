//! Exact directional advantage geometry.
//!
//! For a law with displacement support K and a nonzero integer direction `x`,
//! the reach `ρ(x)` is the largest scalar product `<x, y>` over `y` in K, and
//! the advantage set `A(x)` is the open half-space of sites strictly beyond
//! that reach. The expected offspring mass an attacker places beyond a
//! defender's reach, `n = E[μ]·ν(A)`, controls the recoloring threshold
//! `(n-1)/n`: below it, the attacker's thinned offspring process stays
//! supercritical.
//!
//! Directions are restricted to nonzero integer vectors, which makes every
//! quantity here exact: the advantage set depends only on the direction, and
//! rational directions rescale to integer ones.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::Site;
use crate::laws::{offspring_mean, CountPmf, ReproductionLaw};
use crate::{rat_to_f64, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdvantageError {
    #[error("direction must be a nonzero integer vector")]
    ZeroDirection,
    #[error("direction dimension {direction} does not match law dimension {law}")]
    DimensionMismatch { direction: usize, law: usize },
    #[error("scalar product exceeds the exact integer range")]
    InnerProductOverflow,
    #[error("keep probability {0} outside [0,1]")]
    KeepProbDomain(String),
    #[error("{0}")]
    Domain(String),
}

fn checked_dot(x: &Site, y: &Site) -> Result<i64, AdvantageError> {
    i64::try_from(x.dot(y)).map_err(|_| AdvantageError::InnerProductOverflow)
}

fn check_direction(law: &ReproductionLaw, x: &Site) -> Result<(), AdvantageError> {
    if x.is_origin() {
        return Err(AdvantageError::ZeroDirection);
    }
    if x.dim() != law.dimension {
        return Err(AdvantageError::DimensionMismatch {
            direction: x.dim(),
            law: law.dimension,
        });
    }
    Ok(())
}

/// Reach `ρ(x) = max{<x, y> : y in supp(ν)}`, exact.
pub fn reach(law: &ReproductionLaw, x: &Site) -> Result<i64, AdvantageError> {
    check_direction(law, x)?;
    law.support()
        .map(|y| checked_dot(x, y))
        .try_fold(None::<i64>, |best, v| Ok(best.max(Some(v?))))?
        .ok_or_else(|| AdvantageError::Domain("displacement support is empty".into()))
}

/// Whether `y` lies in the advantage set `A(x)` of `law`, i.e. strictly
/// beyond the law's reach in direction `x`.
pub fn in_advantage_set(law: &ReproductionLaw, x: &Site, y: &Site) -> Result<bool, AdvantageError> {
    let rho = reach(law, x)?;
    Ok(checked_dot(x, y)? > rho)
}

/// Expected number of attacker offspring placed beyond the defender's reach
/// in direction `x`: `E[μ_att]·ν_att(A_def(x))`, exact.
pub fn advantage_mass(
    attacker: &ReproductionLaw,
    defender: &ReproductionLaw,
    x: &Site,
) -> Result<Rat, AdvantageError> {
    check_direction(attacker, x)?;
    let rho = reach(defender, x)?;
    let mut mass = Rat::zero();
    for (y, m) in &attacker.displacement_pmf {
        if checked_dot(x, y)? > rho {
            mass += m;
        }
    }
    Ok(offspring_mean(&attacker.offspring_pmf) * mass)
}

/// Exact microscopic quantities for one attacker/defender pair in one
/// direction. `advantage_mass` is the attacker's expected offspring count in
/// the defender's advantage set; swap the argument roles for the symmetric
/// report.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageReport {
    pub direction: Site,
    /// Reach of the red (defender) displacement law.
    pub rho_red: i64,
    /// Reach of the blue (attacker) displacement law.
    pub rho_blue: i64,
    /// `n = n_blue(A_red(x))`.
    pub advantage_mass: Rat,
    /// `min{<x,y> : y in supp(ν_blue) ∩ A_red(x)} − ρ_red(x)`; `None` when
    /// the intersection is empty. At least 1 whenever present, because the
    /// scalar products of integer vectors are integers.
    pub epsilon_gap: Option<i64>,
    /// `(n−1)/n` when `n > 1`, the recoloring range on which the embedded
    /// thinned process stays supercritical; `None` otherwise.
    pub p_threshold: Option<Rat>,
}

impl fmt::Display for AdvantageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "direction={} rho_red={} rho_blue={} advantage_mass={} epsilon_gap={} p_threshold={}",
            self.direction,
            self.rho_red,
            self.rho_blue,
            self.advantage_mass,
            match self.epsilon_gap {
                Some(g) => g.to_string(),
                None => "empty".into(),
            },
            match &self.p_threshold {
                Some(t) => t.to_string(),
                None => "none".into(),
            }
        )
    }
}

/// Assembles the full advantage report for blue attacking red in direction
/// `x`.
pub fn supercritical_report(
    red: &ReproductionLaw,
    blue: &ReproductionLaw,
    x: &Site,
) -> Result<AdvantageReport, AdvantageError> {
    let rho_red = reach(red, x)?;
    let rho_blue = reach(blue, x)?;
    let mass = advantage_mass(blue, red, x)?;

    let mut min_beyond: Option<i64> = None;
    for y in blue.support() {
        let dot = checked_dot(x, y)?;
        if dot > rho_red {
            min_beyond = Some(min_beyond.map_or(dot, |m| m.min(dot)));
        }
    }
    let epsilon_gap = min_beyond.map(|m| m - rho_red);

    let p_threshold = if mass > Rat::one() {
        Some((mass.clone() - Rat::one()) / mass.clone())
    } else {
        None
    };

    Ok(AdvantageReport {
        direction: *x,
        rho_red,
        rho_blue,
        advantage_mass: mass,
        epsilon_gap,
        p_threshold,
    })
}

/// Offspring pmf after keeping each child independently with probability
/// `keep`: the binomial mixture `Σ_k μ(k)·Binomial(k, keep)`, exact.
pub fn thinned_offspring_pmf(pmf: &CountPmf, keep: &Rat) -> Result<CountPmf, AdvantageError> {
    check_keep(keep)?;
    let lose = Rat::one() - keep;
    let mut out = CountPmf::new();
    for (&k, mass) in pmf {
        for j in 0..=k {
            let coeff = num_integer::binomial(
                num_bigint::BigInt::from(k),
                num_bigint::BigInt::from(j),
            );
            let mut term = mass.clone() * Rat::from_integer(coeff);
            for _ in 0..j {
                term *= keep;
            }
            for _ in 0..(k - j) {
                term *= &lose;
            }
            if term != Rat::zero() {
                *out.entry(j).or_insert_with(Rat::zero) += term;
            }
        }
    }
    Ok(out)
}

fn check_keep(keep: &Rat) -> Result<(), AdvantageError> {
    if *keep < Rat::zero() || *keep > Rat::one() {
        return Err(AdvantageError::KeepProbDomain(keep.to_string()));
    }
    Ok(())
}

/// Iteration cap for the extinction fixed point.
const EXTINCTION_MAX_ITERS: u64 = 1_000_000;

/// Extinction probability of the Galton-Watson process whose offspring law
/// is `pmf` thinned by keeping each child independently with probability
/// `keep`.
///
/// Returns exactly 1 when the thinned mean `E[μ]·keep` is at most 1
/// (decided in exact arithmetic). Otherwise iterates `q ← f(q)` from
/// `q = 0`, where `f(s) = pgf_μ(1 − keep·(1 − s))` is the thinned pgf, until
/// successive iterates differ by less than `tolerance`; the iteration
/// increases monotonically to the minimal fixed point.
pub fn thinned_extinction_probability(
    pmf: &CountPmf,
    keep: &Rat,
    tolerance: f64,
) -> Result<f64, AdvantageError> {
    check_keep(keep)?;
    if tolerance <= 0.0 {
        return Err(AdvantageError::Domain("tolerance must be positive".into()));
    }
    if offspring_mean(pmf) * keep <= Rat::one() {
        return Ok(1.0);
    }
    let keep_f = rat_to_f64(keep);
    let atoms: Vec<(u64, f64)> = pmf.iter().map(|(&k, m)| (k, rat_to_f64(m))).collect();
    let thinned_pgf = |s: f64| -> f64 {
        let arg = 1.0 - keep_f * (1.0 - s);
        atoms.iter().map(|&(k, m)| m * arg.powi(k as i32)).sum()
    };
    let mut q = 0.0f64;
    for _ in 0..EXTINCTION_MAX_ITERS {
        let next = thinned_pgf(q);
        if (next - q).abs() < tolerance {
            return Ok(next.clamp(0.0, 1.0));
        }
        q = next;
    }
    Ok(q.clamp(0.0, 1.0))
}

/// Maximal reach over real unit directions, which equals the largest
/// Euclidean norm in the displacement support (Cauchy-Schwarz, attained at
/// `x = y/|y|`).
pub fn rho_max(law: &ReproductionLaw) -> f64 {
    law.support()
        .map(|y| y.norm2_sq())
        .max()
        .map(|sq| (sq as f64).sqrt())
        .unwrap_or(0.0)
}

/// Upper bound for the probability that a one-type process with per-child
/// removal probability `p` ever reaches distance `c·n` from its start:
/// `((1-p)·E[μ])^(c·n/ρ)` with `ρ = rho_max(law)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachBound {
    pub value: f64,
    /// True when the base `(1-p)·E[μ]` is at least 1, in which case the
    /// bound carries no information. The value is still returned unclamped.
    pub vacuous: bool,
}

pub fn gw_reach_bound(
    law: &ReproductionLaw,
    p: &Rat,
    c: f64,
    n: u64,
) -> Result<ReachBound, AdvantageError> {
    if *p < Rat::zero() || *p > Rat::one() {
        return Err(AdvantageError::Domain(format!("p = {p} outside [0,1]")));
    }
    if c <= 0.0 {
        return Err(AdvantageError::Domain("c must be positive".into()));
    }
    if n == 0 {
        return Err(AdvantageError::Domain("n must be positive".into()));
    }
    let rho = rho_max(law);
    if rho == 0.0 {
        return Err(AdvantageError::Domain(
            "displacement support has zero range".into(),
        ));
    }
    let base = rat_to_f64(&((Rat::one() - p) * offspring_mean(&law.offspring_pmf)));
    let value = base.powf(c * n as f64 / rho);
    Ok(ReachBound {
        value,
        vacuous: base >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn nn_red() -> ReproductionLaw {
        ReproductionLaw::nearest_neighbor(2, &[(1, 1, 2), (2, 1, 2)])
    }

    /// Blue with mean 3 and half its displacement mass at (2,0).
    fn long_blue() -> ReproductionLaw {
        ReproductionLaw::new(
            2,
            &[(3, 1, 1)],
            &[
                (&[2, 0], 1, 2),
                (&[1, 0], 1, 8),
                (&[-1, 0], 1, 8),
                (&[0, 1], 1, 8),
                (&[0, -1], 1, 8),
            ],
        )
    }

    #[test]
    fn reach_over_supports() {
        let red = nn_red();
        assert_eq!(reach(&red, &Site::new(&[1, 0])).unwrap(), 1);
        // <(1,1), y> over the four neighbors is {1,-1,1,-1}.
        assert_eq!(reach(&red, &Site::new(&[1, 1])).unwrap(), 1);
        assert_eq!(reach(&long_blue(), &Site::new(&[1, 0])).unwrap(), 2);
        assert_eq!(
            reach(&red, &Site::new(&[0, 0])),
            Err(AdvantageError::ZeroDirection)
        );
    }

    #[test]
    fn advantage_set_membership() {
        let red = nn_red();
        let x = Site::new(&[1, 0]);
        assert!(in_advantage_set(&red, &x, &Site::new(&[2, 0])).unwrap());
        // A law's own support never exceeds its reach.
        for y in red.support() {
            assert!(!in_advantage_set(&red, &x, y).unwrap());
        }
        assert!(in_advantage_set(&red, &Site::new(&[1, 1]), &Site::new(&[1, 1])).unwrap());
    }

    #[test]
    fn advantage_mass_hand_values() {
        let red = nn_red();
        let x = Site::new(&[1, 0]);
        // Blue mean 3, mass 1/2 beyond red's reach: 3 * 1/2.
        assert_eq!(advantage_mass(&long_blue(), &red, &x).unwrap(), rat(3, 2));
        // Identical laws have no advantage in any direction.
        assert_eq!(advantage_mass(&red, &red, &x).unwrap(), rat(0, 1));
        assert_eq!(
            advantage_mass(&red, &red, &Site::new(&[3, -2])).unwrap(),
            rat(0, 1)
        );
        // Mass 1/4 at (3,0) with mean 2: 2 * 1/4.
        let sparse = ReproductionLaw::new(
            2,
            &[(2, 1, 1)],
            &[
                (&[3, 0], 1, 4),
                (&[1, 0], 3, 16),
                (&[-1, 0], 3, 16),
                (&[0, 1], 3, 16),
                (&[0, -1], 3, 16),
            ],
        );
        assert_eq!(advantage_mass(&sparse, &red, &x).unwrap(), rat(1, 2));
    }

    #[test]
    fn report_threshold_and_gap() {
        let report = supercritical_report(&nn_red(), &long_blue(), &Site::new(&[1, 0])).unwrap();
        assert_eq!(report.rho_red, 1);
        assert_eq!(report.rho_blue, 2);
        assert_eq!(report.advantage_mass, rat(3, 2));
        // Only (2,0) lies beyond reach 1, so the gap is 2 - 1.
        assert_eq!(report.epsilon_gap, Some(1));
        // (3/2 - 1)/(3/2) = 1/3.
        assert_eq!(report.p_threshold, Some(rat(1, 3)));
        assert_eq!(
            report.to_string(),
            "direction=(1,0) rho_red=1 rho_blue=2 advantage_mass=3/2 epsilon_gap=1 p_threshold=1/3"
        );
    }

    #[test]
    fn report_without_advantage() {
        let red = nn_red();
        let report = supercritical_report(&red, &red, &Site::new(&[1, 0])).unwrap();
        assert_eq!(report.advantage_mass, rat(0, 1));
        assert_eq!(report.epsilon_gap, None);
        assert_eq!(report.p_threshold, None);
    }

    #[test]
    fn thinned_pmf_is_binomial_mixture() {
        let delta2 = CountPmf::from([(2, rat(1, 1))]);
        let thinned = thinned_offspring_pmf(&delta2, &rat(3, 4)).unwrap();
        assert_eq!(
            thinned,
            CountPmf::from([(0, rat(1, 16)), (1, rat(3, 8)), (2, rat(9, 16))])
        );
    }

    #[test]
    fn extinction_against_quadratic_oracle() {
        // Thinned pmf is Binomial(2, 3/4); the fixed point solves
        // (9/16)q^2 - (10/16)q + 1/16 = 0, whose minimal root is 1/9.
        let delta2 = CountPmf::from([(2, rat(1, 1))]);
        let q = thinned_extinction_probability(&delta2, &rat(3, 4), 1e-12).unwrap();
        let (a, b, c) = (9.0f64 / 16.0, -10.0f64 / 16.0, 1.0f64 / 16.0);
        let oracle = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        assert!((q - oracle).abs() < 1e-10);
        assert!((q - 1.0 / 9.0).abs() < 1e-10);
    }

    #[test]
    fn extinction_boundary_cases() {
        let delta2 = CountPmf::from([(2, rat(1, 1))]);
        // Thinned mean 2 * 1/2 = 1: critical, dies out.
        assert_eq!(
            thinned_extinction_probability(&delta2, &rat(1, 2), 1e-12).unwrap(),
            1.0
        );
        assert_eq!(
            thinned_extinction_probability(&delta2, &rat(1, 4), 1e-12).unwrap(),
            1.0
        );
        // No thinning: two children always, never extinct.
        assert_eq!(
            thinned_extinction_probability(&delta2, &rat(1, 1), 1e-12).unwrap(),
            0.0
        );
        assert!(thinned_extinction_probability(&delta2, &rat(5, 4), 1e-12).is_err());
    }

    #[test]
    fn rho_max_norm_characterization() {
        assert_eq!(rho_max(&nn_red()), 1.0);
        assert_eq!(rho_max(&long_blue()), 2.0);
        let diag = ReproductionLaw::uniform_displacement(
            2,
            2,
            &[&[1, 1], &[1, 0], &[-1, 0], &[0, 1], &[0, -1]],
        );
        assert_eq!(rho_max(&diag), 2f64.sqrt());
    }

    #[test]
    fn reach_bound_values() {
        let red = nn_red();
        // Base (1-p)E[mu] = 1: bound 1 for all c, n.
        let b = gw_reach_bound(&red, &rat(1, 3), 2.5, 7).unwrap();
        assert_eq!(b.value, 1.0);
        assert!(b.vacuous);
        // E[mu]=2, p=3/4, exponent 3: (1/2)^3.
        let delta2 = ReproductionLaw::nearest_neighbor(2, &[(2, 1, 1)]);
        let b = gw_reach_bound(&delta2, &rat(3, 4), 3.0, 1).unwrap();
        assert_eq!(b.value, 0.125);
        assert!(!b.vacuous);
        // p=0 with mean 2: vacuous, returned unclamped.
        let b = gw_reach_bound(&delta2, &rat(0, 1), 1.0, 4).unwrap();
        assert!(b.value >= 1.0);
        assert!(b.vacuous);
        assert!(gw_reach_bound(&delta2, &rat(0, 1), 0.0, 4).is_err());
        assert!(gw_reach_bound(&delta2, &rat(0, 1), 1.0, 0).is_err());
    }
}
