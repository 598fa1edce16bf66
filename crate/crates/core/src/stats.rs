//! Statistical helpers: Wilson score intervals, two-sample chi-square tests,
//! sample moments, and least-squares slopes.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Wilson score interval for a binomial proportion at 95% confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilsonInterval {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

pub fn wilson_interval(successes: u64, trials: u64) -> WilsonInterval {
    if trials == 0 {
        return WilsonInterval {
            estimate: f64::NAN,
            low: 0.0,
            high: 1.0,
        };
    }
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    WilsonInterval {
        estimate: p_hat,
        low: (center - half).max(0.0),
        high: (center + half).min(1.0),
    }
}

/// Normal-approximation standard error of a proportion; used for pooled
/// comparisons between estimates.
pub fn proportion_se(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    (p * (1.0 - p) / n).sqrt()
}

/// Simple least-squares line fit of `y` on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residuals; 0 when there are
    /// fewer than three points or the fit is exact.
    pub slope_se: f64,
    pub points: usize,
}

pub fn fit_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let slope_se = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit {
        slope,
        intercept,
        slope_se,
        points: n,
    })
}

/// Result of a two-sample chi-square homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub bins: usize,
}

/// Minimum pooled count per bin; sparser bins are merged with a neighbor.
const MIN_POOLED_BIN: u64 = 5;

/// Two-sample chi-square test that the integer-valued samples summarized by
/// the two histograms were drawn from the same distribution.
///
/// Adjacent value bins are merged until each pooled bin holds at least
/// [`MIN_POOLED_BIN`] observations. Returns `None` when fewer than two bins
/// remain (the samples are then indistinguishable by this test).
pub fn chi_square_two_sample(
    a: &BTreeMap<u64, u64>,
    b: &BTreeMap<u64, u64>,
) -> Option<ChiSquareTest> {
    let n1: u64 = a.values().sum();
    let n2: u64 = b.values().sum();
    if n1 == 0 || n2 == 0 {
        return None;
    }

    let keys: Vec<u64> = a
        .keys()
        .chain(b.keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut acc = (0u64, 0u64);
    let mut acc_used = false;
    for key in keys {
        acc.0 += a.get(&key).copied().unwrap_or(0);
        acc.1 += b.get(&key).copied().unwrap_or(0);
        acc_used = true;
        if acc.0 + acc.1 >= MIN_POOLED_BIN {
            bins.push(acc);
            acc = (0, 0);
            acc_used = false;
        }
    }
    if acc_used {
        // Fold the undersized tail into the last full bin.
        if let Some(last) = bins.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            bins.push(acc);
        }
    }
    if bins.len() < 2 {
        return None;
    }

    let k1 = (n2 as f64 / n1 as f64).sqrt();
    let k2 = (n1 as f64 / n2 as f64).sqrt();
    let statistic: f64 = bins
        .iter()
        .map(|&(o1, o2)| {
            let num = k1 * o1 as f64 - k2 * o2 as f64;
            num * num / (o1 + o2) as f64
        })
        .sum();
    let degrees_of_freedom = bins.len() as u64 - 1;
    let dist = ChiSquared::new(degrees_of_freedom as f64).expect("df >= 1");
    let p_value = 1.0 - dist.cdf(statistic);
    Some(ChiSquareTest {
        statistic,
        degrees_of_freedom,
        p_value,
        bins: bins.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m, 2.5);
        // Sample sd of 1,2,3,4 is sqrt(5/3); se divides by sqrt(4).
        assert_abs_diff_eq!(se, (5.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn wilson_known_value() {
        // 8 successes out of 10: classic Wilson bounds.
        let w = wilson_interval(8, 10);
        assert_abs_diff_eq!(w.estimate, 0.8);
        assert_abs_diff_eq!(w.low, 0.4901625, epsilon = 1e-6);
        assert_abs_diff_eq!(w.high, 0.9433178, epsilon = 1e-6);
        assert!(wilson_interval(0, 0).estimate.is_nan());
    }

    #[test]
    fn slope_of_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
        let fit = fit_slope(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3.0, epsilon = 1e-12);
        assert_eq!(fit.slope_se, 0.0);
        assert!(fit_slope(&[(1.0, 1.0)]).is_none());
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn chi_square_identical_histograms() {
        let h: BTreeMap<u64, u64> = [(0, 50), (1, 30), (2, 20)].into();
        let t = chi_square_two_sample(&h, &h).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.0);
        assert!(t.p_value > 0.999);
    }

    #[test]
    fn chi_square_detects_gross_difference() {
        let a: BTreeMap<u64, u64> = [(0, 100), (1, 10)].into();
        let b: BTreeMap<u64, u64> = [(0, 10), (1, 100)].into();
        let t = chi_square_two_sample(&a, &b).unwrap();
        assert!(t.p_value < 1e-6, "p = {}", t.p_value);
    }

    #[test]
    fn chi_square_merges_sparse_bins() {
        let a: BTreeMap<u64, u64> = [(0, 40), (1, 1), (2, 1), (3, 40)].into();
        let b: BTreeMap<u64, u64> = [(0, 40), (1, 1), (2, 2), (3, 39)].into();
        let t = chi_square_two_sample(&a, &b).unwrap();
        assert!(t.bins <= 3);
        assert!(t.p_value > 0.5);
    }
}
