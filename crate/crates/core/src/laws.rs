//! Reproduction laws: offspring-count and displacement distributions with
//! exact rational probabilities, validation against the model assumptions,
//! and derived exact quantities.
//!
//! A law is a pair (μ, ν): μ gives the number of children of a particle, ν
//! gives the displacement of each child on a finite support K ⊂ Z^d. The
//! model assumes μ puts mass only on strictly positive integers with mean
//! strictly above 1, and that K contains every nearest neighbor of the
//! origin (plus, when `p = 1` in dimension 1, a site at distance ≥ 2 in each
//! direction).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::{Site, MAX_DIM};
use crate::{rat_to_f64, Rat};

/// Probability mass function over nonnegative integer counts.
///
/// Valid offspring laws have support in `{1, 2, ...}`; derived laws (e.g.
/// thinned offspring laws) may put mass at 0.
pub type CountPmf = BTreeMap<u64, Rat>;

/// Probability mass function over displacement vectors.
pub type SitePmf = BTreeMap<Site, Rat>;

/// Offspring-count distribution plus displacement distribution of one type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReproductionLaw {
    pub dimension: usize,
    pub offspring_pmf: CountPmf,
    pub displacement_pmf: SitePmf,
}

impl ReproductionLaw {
    /// Builds a law from `(count, numerator, denominator)` and
    /// `(coords, numerator, denominator)` atoms. Zero-mass atoms are kept;
    /// validation reports them.
    pub fn new(
        dimension: usize,
        offspring: &[(u64, i64, i64)],
        displacement: &[(&[i32], i64, i64)],
    ) -> Self {
        let offspring_pmf = offspring
            .iter()
            .map(|&(k, n, d)| (k, Rat::new(n.into(), d.into())))
            .collect();
        let displacement_pmf = displacement
            .iter()
            .map(|&(c, n, d)| (Site::new(c), Rat::new(n.into(), d.into())))
            .collect();
        ReproductionLaw {
            dimension,
            offspring_pmf,
            displacement_pmf,
        }
    }

    /// Deterministic offspring count `k`, displacements uniform on `sites`.
    pub fn uniform_displacement(dimension: usize, k: u64, sites: &[&[i32]]) -> Self {
        let n = sites.len() as i64;
        let displacement: Vec<(&[i32], i64, i64)> = sites.iter().map(|&s| (s, 1, n)).collect();
        ReproductionLaw::new(dimension, &[(k, 1, 1)], &displacement)
    }

    /// Nearest-neighbor uniform displacement law with the given offspring pmf.
    pub fn nearest_neighbor(dimension: usize, offspring: &[(u64, i64, i64)]) -> Self {
        let neighbors = Site::unit_neighbors(dimension);
        let n = neighbors.len() as i64;
        let displacement_pmf = neighbors.into_iter().map(|s| (s, Rat::new(1.into(), n.into()))).collect();
        ReproductionLaw {
            dimension,
            offspring_pmf: offspring
                .iter()
                .map(|&(k, num, den)| (k, Rat::new(num.into(), den.into())))
                .collect(),
            displacement_pmf,
        }
    }

    /// Support of the displacement law.
    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.displacement_pmf.keys()
    }
}

/// Machine-readable codes for law and configuration violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum ViolationCode {
    DimensionOutOfRange,
    OffspringEmpty,
    OffspringSupportIncludesZero,
    OffspringMassNotPositive,
    OffspringMassNotOne,
    OffspringMeanNotAboveOne,
    DisplacementEmpty,
    DisplacementMassNotPositive,
    DisplacementMassNotOne,
    DisplacementDimensionMismatch,
    MissingNearestNeighbor,
    D1P1RangeMissing,
    ConfigDimensionMismatch,
    ConfigPOutOfRange,
    ConfigInitialConflict,
    ConfigInitialEmpty,
    ConfigCapZero,
}

/// One violated invariant, with a human-readable detail string.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.detail)
    }
}

/// Result of validating a law or configuration. Violations are data, not
/// failures: an empty `violations` list means valid. Warnings flag
/// assumptions that are only conditionally required.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, code: ViolationCode, detail: impl Into<String>) {
        self.violations.push(Violation {
            code,
            detail: detail.into(),
        });
    }

    pub fn warn(&mut self, code: ViolationCode, detail: impl Into<String>) {
        self.warnings.push(Violation {
            code,
            detail: detail.into(),
        });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.warnings.extend(other.warnings);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")?;
        } else {
            for v in &self.violations {
                writeln!(f, "violation {v}")?;
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning {w}")?;
        }
        Ok(())
    }
}

/// Errors from exact-law operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LawError {
    #[error("coupling requires identical displacement law")]
    DisplacementMismatch,
    #[error("pgf argument {0} outside [0,1]")]
    PgfDomain(String),
}

/// Checks every law invariant and returns the full list of violations.
///
/// `p` is taken because the extra displacement-range assumption is
/// conditional: it is required when `p = 1` in dimension 1, and only worth a
/// warning for `p` in `(0,1)` there.
pub fn validate_law(law: &ReproductionLaw, dimension: usize, p: &Rat) -> ValidationReport {
    let mut report = ValidationReport::default();

    if dimension == 0 || dimension > MAX_DIM {
        report.push(
            ViolationCode::DimensionOutOfRange,
            format!("dimension {dimension} not in 1..={MAX_DIM}"),
        );
        return report;
    }
    if law.dimension != dimension {
        report.push(
            ViolationCode::DisplacementDimensionMismatch,
            format!("law dimension {} differs from required {dimension}", law.dimension),
        );
    }

    if law.offspring_pmf.is_empty() {
        report.push(ViolationCode::OffspringEmpty, "offspring pmf has no atoms");
    }
    let mut offspring_total = Rat::zero();
    for (&k, mass) in &law.offspring_pmf {
        if k == 0 {
            report.push(
                ViolationCode::OffspringSupportIncludesZero,
                "offspring support includes 0",
            );
        }
        if *mass <= Rat::zero() {
            report.push(
                ViolationCode::OffspringMassNotPositive,
                format!("offspring count {k} has nonpositive mass {mass}"),
            );
        }
        offspring_total += mass;
    }
    if !law.offspring_pmf.is_empty() && offspring_total != Rat::one() {
        report.push(
            ViolationCode::OffspringMassNotOne,
            format!("offspring masses sum to {offspring_total}, not 1"),
        );
    }
    if !law.offspring_pmf.is_empty() && offspring_mean(&law.offspring_pmf) <= Rat::one() {
        report.push(
            ViolationCode::OffspringMeanNotAboveOne,
            format!("offspring mean {} is not > 1", offspring_mean(&law.offspring_pmf)),
        );
    }

    if law.displacement_pmf.is_empty() {
        report.push(ViolationCode::DisplacementEmpty, "displacement pmf has no atoms");
    }
    let mut disp_total = Rat::zero();
    for (site, mass) in &law.displacement_pmf {
        if site.dim() != law.dimension {
            report.push(
                ViolationCode::DisplacementDimensionMismatch,
                format!("displacement {site} has dimension {}", site.dim()),
            );
        }
        if *mass <= Rat::zero() {
            report.push(
                ViolationCode::DisplacementMassNotPositive,
                format!("displacement {site} has nonpositive mass {mass}"),
            );
        }
        disp_total += mass;
    }
    if !law.displacement_pmf.is_empty() && disp_total != Rat::one() {
        report.push(
            ViolationCode::DisplacementMassNotOne,
            format!("displacement masses sum to {disp_total}, not 1"),
        );
    }

    if law.dimension == dimension {
        for neighbor in Site::unit_neighbors(dimension) {
            if !law.displacement_pmf.contains_key(&neighbor) {
                report.push(
                    ViolationCode::MissingNearestNeighbor,
                    format!("displacement support lacks neighbor {neighbor}"),
                );
            }
        }
        if dimension == 1 {
            let has_far_right = law.displacement_pmf.keys().any(|s| s.coords()[0] >= 2);
            let has_far_left = law.displacement_pmf.keys().any(|s| s.coords()[0] <= -2);
            if !(has_far_right && has_far_left) {
                let detail = "d=1/p=1 extension: support needs a site with |y| >= 2 in each direction";
                if p == &Rat::one() {
                    report.push(ViolationCode::D1P1RangeMissing, detail);
                } else if *p > Rat::zero() {
                    report.warn(ViolationCode::D1P1RangeMissing, detail);
                }
            }
        }
    }

    report
}

/// Exact mean `Σ k·μ(k)` of a count pmf.
pub fn offspring_mean(pmf: &CountPmf) -> Rat {
    pmf.iter()
        .map(|(&k, mass)| Rat::from_integer(k.into()) * mass)
        .sum()
}

/// The law whose offspring count is the minimum of independent draws from
/// the two given offspring laws, over their common displacement law.
///
/// `P(min = k) = P(X ≥ k)P(Y ≥ k) − P(X ≥ k+1)P(Y ≥ k+1)`, computed exactly.
/// The result keeps every law invariant of its inputs (in particular mean
/// strictly above 1), which callers re-validate.
pub fn min_coupling_law(
    red: &ReproductionLaw,
    blue: &ReproductionLaw,
) -> Result<ReproductionLaw, LawError> {
    if red.displacement_pmf != blue.displacement_pmf {
        return Err(LawError::DisplacementMismatch);
    }
    let max_k = red
        .offspring_pmf
        .keys()
        .chain(blue.offspring_pmf.keys())
        .copied()
        .max()
        .unwrap_or(0);

    // Tail P(X >= k) for k = 0..=max_k+1.
    let tail = |pmf: &CountPmf, k: u64| -> Rat {
        pmf.iter()
            .filter(|&(&j, _)| j >= k)
            .map(|(_, m)| m.clone())
            .sum()
    };

    let mut offspring_pmf = CountPmf::new();
    for k in 0..=max_k {
        let mass = tail(&red.offspring_pmf, k) * tail(&blue.offspring_pmf, k)
            - tail(&red.offspring_pmf, k + 1) * tail(&blue.offspring_pmf, k + 1);
        if mass != Rat::zero() {
            offspring_pmf.insert(k, mass);
        }
    }
    Ok(ReproductionLaw {
        dimension: red.dimension,
        offspring_pmf,
        displacement_pmf: red.displacement_pmf.clone(),
    })
}

/// Probability generating function `Σ pmf(k)·s^k` at a float argument.
pub fn pgf_eval(pmf: &CountPmf, s: f64) -> Result<f64, LawError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(LawError::PgfDomain(format!("{s}")));
    }
    Ok(pmf
        .iter()
        .map(|(&k, mass)| rat_to_f64(mass) * s.powi(k as i32))
        .sum())
}

/// Probability generating function at an exact rational argument.
pub fn pgf_eval_rational(pmf: &CountPmf, s: &Rat) -> Result<Rat, LawError> {
    if *s < Rat::zero() || *s > Rat::one() {
        return Err(LawError::PgfDomain(format!("{s}")));
    }
    let mut out = Rat::zero();
    for (&k, mass) in pmf {
        let mut power = Rat::one();
        for _ in 0..k {
            power *= s;
        }
        out += mass * power;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn valid_d2_law() -> ReproductionLaw {
        ReproductionLaw::nearest_neighbor(2, &[(2, 1, 1)])
    }

    #[test]
    fn validates_clean_law() {
        let report = validate_law(&valid_d2_law(), 2, &rat(1, 2));
        assert!(report.is_valid(), "{report}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn rejects_offspring_mass_at_zero() {
        let law = ReproductionLaw::nearest_neighbor(2, &[(0, 1, 2), (2, 1, 2)]);
        let report = validate_law(&law, 2, &rat(0, 1));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::OffspringSupportIncludesZero));
    }

    #[test]
    fn rejects_subcritical_mean() {
        let law = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 1)]);
        let report = validate_law(&law, 2, &rat(0, 1));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::OffspringMeanNotAboveOne));
    }

    #[test]
    fn rejects_nonunit_mass_sums() {
        let mut law = valid_d2_law();
        law.offspring_pmf.insert(3, rat(1, 3));
        let report = validate_law(&law, 2, &rat(0, 1));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::OffspringMassNotOne));
    }

    #[test]
    fn rejects_missing_neighbor() {
        let law = ReproductionLaw::uniform_displacement(2, 2, &[&[1, 0], &[-1, 0], &[0, 1]]);
        let report = validate_law(&law, 2, &rat(0, 1));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::MissingNearestNeighbor));
    }

    #[test]
    fn d1_p1_needs_long_range_both_ways() {
        let law = ReproductionLaw::uniform_displacement(1, 2, &[&[-1], &[1]]);
        let report = validate_law(&law, 1, &rat(1, 1));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::D1P1RangeMissing));

        // For p strictly between 0 and 1 the same gap is only a warning.
        let report = validate_law(&law, 1, &rat(1, 2));
        assert!(report.is_valid());
        assert!(report
            .warnings
            .iter()
            .any(|v| v.code == ViolationCode::D1P1RangeMissing));

        // And for p = 0 it is not even that.
        let report = validate_law(&law, 1, &rat(0, 1));
        assert!(report.is_valid() && report.warnings.is_empty());

        let long = ReproductionLaw::uniform_displacement(1, 2, &[&[-2], &[-1], &[1], &[2]]);
        assert!(validate_law(&long, 1, &rat(1, 1)).is_valid());
    }

    #[test]
    fn mean_of_fixed_pmfs() {
        assert_eq!(offspring_mean(&CountPmf::from([(2, rat(1, 1))])), rat(2, 1));
        assert_eq!(
            offspring_mean(&CountPmf::from([(1, rat(1, 2)), (3, rat(1, 2))])),
            rat(2, 1)
        );
        // Hand sum: 1/4 + 2/4 + 5/2 = 13/4.
        assert_eq!(
            offspring_mean(&CountPmf::from([
                (1, rat(1, 4)),
                (2, rat(1, 4)),
                (5, rat(1, 2))
            ])),
            rat(13, 4)
        );
    }

    #[test]
    fn min_coupling_of_constants() {
        let a = valid_d2_law();
        let coupled = min_coupling_law(&a, &a).unwrap();
        assert_eq!(coupled.offspring_pmf, CountPmf::from([(2, rat(1, 1))]));

        let one = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 1)]);
        let other = ReproductionLaw::nearest_neighbor(2, &[(2, 1, 3), (5, 2, 3)]);
        let coupled = min_coupling_law(&one, &other).unwrap();
        assert_eq!(coupled.offspring_pmf, CountPmf::from([(1, rat(1, 1))]));
    }

    #[test]
    fn min_coupling_enumerated_pairs() {
        // X uniform{1,2}, Y uniform{1,3}: the four equally likely pairs have
        // minima 1,1,1,2.
        let x = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 2), (2, 1, 2)]);
        let y = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 2), (3, 1, 2)]);
        let coupled = min_coupling_law(&x, &y).unwrap();
        assert_eq!(
            coupled.offspring_pmf,
            CountPmf::from([(1, rat(3, 4)), (2, rat(1, 4))])
        );
    }

    #[test]
    fn min_coupling_requires_matching_displacements() {
        let a = valid_d2_law();
        let mut b = valid_d2_law();
        b.displacement_pmf.insert(Site::new(&[2, 0]), rat(0, 1));
        assert_eq!(min_coupling_law(&a, &b), Err(LawError::DisplacementMismatch));
    }

    #[test]
    fn pgf_fixed_values() {
        let delta2 = CountPmf::from([(2, rat(1, 1))]);
        assert_eq!(pgf_eval(&delta2, 1.0).unwrap(), 1.0);
        assert_eq!(pgf_eval(&delta2, 0.5).unwrap(), 0.25);
        // Hand evaluation: 0.375*0.5 + 0.5625*0.25 + 0.0625 = 0.390625.
        let mixed = CountPmf::from([(0, rat(1, 16)), (1, rat(3, 8)), (2, rat(9, 16))]);
        assert_eq!(pgf_eval(&mixed, 0.5).unwrap(), 0.390625);
        assert_eq!(
            pgf_eval_rational(&mixed, &rat(1, 2)).unwrap(),
            rat(25, 64)
        );
        assert!(pgf_eval(&delta2, 1.5).is_err());
        assert!(pgf_eval(&delta2, -0.1).is_err());
    }

    #[test]
    fn pgf_at_zero_is_mass_at_zero() {
        let mixed = CountPmf::from([(0, rat(1, 16)), (1, rat(3, 8)), (2, rat(9, 16))]);
        assert_eq!(pgf_eval_rational(&mixed, &rat(0, 1)).unwrap(), rat(1, 16));
        let delta2 = CountPmf::from([(2, rat(1, 1))]);
        assert_eq!(pgf_eval_rational(&delta2, &rat(0, 1)).unwrap(), rat(0, 1));
    }
}
