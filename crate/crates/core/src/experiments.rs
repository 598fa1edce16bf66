//! Monte Carlo harness for finite-horizon proxies of the survival and
//! coexistence events.
//!
//! Whether a type "colors infinitely many sites" is a tail event no finite
//! run decides, so replications are classified by a proxy: the type must
//! have colored a site at max-norm distance at least `escape_radius` AND
//! have colored at least one new site within the final `stall_window`
//! generations. The stall clause detects strangulation: a surrounded type
//! keeps its particles but stops coloring. Every reported probability is a
//! finite-horizon proxy estimate, never a claim about the asymptotic event.
//!
//! Replications are independent work items with a fixed replication-to-seed
//! mapping, so sweeps are reproducible regardless of thread scheduling, and
//! merging records is order-insensitive.

use std::time::Instant;

use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::advantage::{supercritical_report, AdvantageReport};
use crate::config::{TieBreak, TwoTypeConfig};
use crate::engine::{run_quiet, RunSummary};
use crate::lattice::Site;
use crate::rng::{absorb, derive_master};
use crate::stats::{proportion_se, wilson_interval, WilsonInterval};
use crate::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExperimentError {
    #[error("run horizon {summary} is shorter than proxy horizon {proxy}")]
    HorizonMismatch { summary: u64, proxy: u64 },
    #[error("invalid proxy specification: {0}")]
    InvalidProxy(String),
    #[error("sweep value {0} outside [0,1]")]
    InvalidP(String),
}

/// Finite-horizon stand-in for the asymptotic survival events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventProxySpec {
    /// Max-norm distance a type must color to count as escaping.
    pub escape_radius: u64,
    /// A type must color a new site within this many final generations.
    pub stall_window: u64,
    pub horizon: u64,
}

impl EventProxySpec {
    /// Defaults scale with the horizon: `R = ceil(T/4)`, `W = ceil(T/5)`.
    pub fn defaults(horizon: u64) -> Self {
        EventProxySpec {
            escape_radius: horizon.div_ceil(4).max(1),
            stall_window: horizon.div_ceil(5).max(1).min(horizon.max(1)),
            horizon,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.escape_radius == 0 {
            return Err(ExperimentError::InvalidProxy("escape radius must be >= 1".into()));
        }
        if self.stall_window == 0 || self.stall_window > self.horizon {
            return Err(ExperimentError::InvalidProxy(format!(
                "stall window {} not in 1..=horizon {}",
                self.stall_window, self.horizon
            )));
        }
        Ok(())
    }
}

/// Classification of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub replication: u64,
    pub seed: u64,
    /// Red escaped and was still coloring near the horizon.
    pub proxy_g_r: bool,
    pub proxy_g_b: bool,
    /// Both proxies hold.
    pub proxy_c: bool,
    pub colored_red: u64,
    pub colored_blue: u64,
    pub max_radius_red: Option<u64>,
    pub max_radius_blue: Option<u64>,
    pub approximate: bool,
    /// Wall-clock time of the replication; in-memory only, excluded from
    /// serialized records so reruns stay byte-identical.
    pub runtime_ms: f64,
}

/// One replication either classifies or fails (e.g. count overflow); failed
/// replications are reported as their own category, never dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicationOutcome {
    Classified(OutcomeRecord),
    Failed {
        replication: u64,
        error: String,
    },
}

/// Deterministically classifies a finished run against a proxy spec.
pub fn classify_outcome(
    summary: &RunSummary,
    proxy: &EventProxySpec,
) -> Result<OutcomeRecord, ExperimentError> {
    proxy.validate()?;
    if summary.horizon < proxy.horizon {
        return Err(ExperimentError::HorizonMismatch {
            summary: summary.horizon,
            proxy: proxy.horizon,
        });
    }
    let history = summary.history();
    let at_horizon = &history[proxy.horizon as usize];

    let window_start = proxy.horizon - proxy.stall_window;
    let mut recent_red = 0u64;
    let mut recent_blue = 0u64;
    for stats in &history[(window_start + 1) as usize..=(proxy.horizon as usize)] {
        recent_red += stats.newly_colored_red;
        recent_blue += stats.newly_colored_blue;
    }

    let escaped_red = at_horizon
        .max_colored_radius_red
        .is_some_and(|r| r >= proxy.escape_radius);
    let escaped_blue = at_horizon
        .max_colored_radius_blue
        .is_some_and(|r| r >= proxy.escape_radius);
    let proxy_g_r = escaped_red && recent_red >= 1;
    let proxy_g_b = escaped_blue && recent_blue >= 1;

    Ok(OutcomeRecord {
        replication: summary.replication,
        seed: summary.seed,
        proxy_g_r,
        proxy_g_b,
        proxy_c: proxy_g_r && proxy_g_b,
        colored_red: at_horizon.colored_red,
        colored_blue: at_horizon.colored_blue,
        max_radius_red: at_horizon.max_colored_radius_red,
        max_radius_blue: at_horizon.max_colored_radius_blue,
        approximate: summary.state.approximate,
        runtime_ms: 0.0,
    })
}

/// The estimators reported for every proxy experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    ProxyGr,
    ProxyGb,
    ProxyC,
    RedOnly,
    BlueOnly,
}

impl Estimator {
    pub const ALL: [Estimator; 5] = [
        Estimator::ProxyGr,
        Estimator::ProxyGb,
        Estimator::ProxyC,
        Estimator::RedOnly,
        Estimator::BlueOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::ProxyGr => "proxy_g_r",
            Estimator::ProxyGb => "proxy_g_b",
            Estimator::ProxyC => "proxy_c",
            Estimator::RedOnly => "red_only",
            Estimator::BlueOnly => "blue_only",
        }
    }

    pub fn holds(self, record: &OutcomeRecord) -> bool {
        match self {
            Estimator::ProxyGr => record.proxy_g_r,
            Estimator::ProxyGb => record.proxy_g_b,
            Estimator::ProxyC => record.proxy_c,
            Estimator::RedOnly => record.proxy_g_r && !record.proxy_g_b,
            Estimator::BlueOnly => record.proxy_g_b && !record.proxy_g_r,
        }
    }
}

/// One estimator row: successes over classified replications with a 95%
/// Wilson interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub estimator: Estimator,
    pub successes: u64,
    pub interval: WilsonInterval,
}

/// Proxy probability estimates from one batch of replications.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub proxy: EventProxySpec,
    pub replications: u64,
    pub classified: u64,
    pub failures: u64,
    pub rows: Vec<EstimateRow>,
}

impl EstimateTable {
    /// Builds the table by counting records; any permutation of the records
    /// yields the same table.
    pub fn from_records(proxy: EventProxySpec, records: &[ReplicationOutcome]) -> Self {
        let mut classified = 0u64;
        let mut failures = 0u64;
        let mut successes = [0u64; 5];
        for outcome in records {
            match outcome {
                ReplicationOutcome::Classified(record) => {
                    classified += 1;
                    for (i, estimator) in Estimator::ALL.iter().enumerate() {
                        if estimator.holds(record) {
                            successes[i] += 1;
                        }
                    }
                }
                ReplicationOutcome::Failed { .. } => failures += 1,
            }
        }
        let rows = Estimator::ALL
            .iter()
            .zip(successes)
            .map(|(&estimator, s)| EstimateRow {
                estimator,
                successes: s,
                interval: wilson_interval(s, classified),
            })
            .collect();
        EstimateTable {
            proxy,
            replications: classified + failures,
            classified,
            failures,
            rows,
        }
    }

    pub fn estimate(&self, estimator: Estimator) -> f64 {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator)
            .map(|r| r.interval.estimate)
            .expect("all estimators present")
    }

    pub fn successes(&self, estimator: Estimator) -> u64 {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator)
            .map(|r| r.successes)
            .expect("all estimators present")
    }
}

/// Outcome of one Monte Carlo batch: the per-replication records plus the
/// proxy they were classified against.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub proxy: EventProxySpec,
    pub records: Vec<ReplicationOutcome>,
}

impl MonteCarloRun {
    pub fn table(&self) -> EstimateTable {
        EstimateTable::from_records(self.proxy, &self.records)
    }
}

/// Runs independent seeded replications in parallel and classifies each one.
/// Count-overflow aborts become failure records rather than killing the
/// sweep.
pub fn monte_carlo(
    config: &TwoTypeConfig,
    proxy: EventProxySpec,
    replications: u64,
) -> Result<MonteCarloRun, ExperimentError> {
    proxy.validate()?;
    let records: Vec<ReplicationOutcome> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let start = Instant::now();
            match run_quiet(config, proxy.horizon, rep) {
                Ok(summary) => match classify_outcome(&summary, &proxy) {
                    Ok(mut record) => {
                        record.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                        ReplicationOutcome::Classified(record)
                    }
                    Err(e) => ReplicationOutcome::Failed {
                        replication: rep,
                        error: e.to_string(),
                    },
                },
                Err(e) => ReplicationOutcome::Failed {
                    replication: rep,
                    error: e.to_string(),
                },
            }
        })
        .collect();
    Ok(MonteCarloRun { proxy, records })
}

/// The threshold annotation attached to a sweep: the best supercritical
/// report over the signed axis directions, when any direction gives an
/// advantage mass above 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdAnnotation {
    pub report: AdvantageReport,
}

/// Scans the signed axis directions and keeps the report with the largest
/// threshold.
pub fn axis_threshold(config: &TwoTypeConfig) -> Option<ThresholdAnnotation> {
    let mut best: Option<AdvantageReport> = None;
    for axis in 0..config.dimension() {
        for sign in [1, -1] {
            let x = Site::unit(config.dimension(), axis).scale(sign);
            let report = supercritical_report(&config.red_law, &config.blue_law, &x).ok()?;
            if report.p_threshold.is_some()
                && best
                    .as_ref()
                    .map_or(true, |b| report.p_threshold > b.p_threshold)
            {
                best = Some(report);
            }
        }
    }
    best.map(|report| ThresholdAnnotation { report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: Rat,
    pub run: MonteCarloRun,
}

/// Result of sweeping the recoloring parameter over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub threshold: Option<ThresholdAnnotation>,
}

const SWEEP_LABEL: u64 = 0xB1;

/// Runs one Monte Carlo batch per grid value of `p`, with independent seed
/// streams per grid point, and annotates the sweep with the exact axis
/// threshold when one exists.
pub fn p_sweep(
    base: &TwoTypeConfig,
    p_values: &[Rat],
    proxy: EventProxySpec,
    replications: u64,
) -> Result<SweepResult, ExperimentError> {
    let mut rows = Vec::with_capacity(p_values.len());
    for (idx, p) in p_values.iter().enumerate() {
        if *p < Rat::zero() || *p > Rat::one() {
            return Err(ExperimentError::InvalidP(p.to_string()));
        }
        let mut config = base.clone();
        config.p = p.clone();
        config.master_seed = derive_master(base.master_seed, absorb(SWEEP_LABEL, idx as u64));
        let run = monte_carlo(&config, proxy, replications)?;
        rows.push(SweepRow { p: p.clone(), run });
    }
    Ok(SweepResult {
        rows,
        threshold: axis_threshold(base),
    })
}

/// Difference between two tie-break rules on one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct TieBreakDifference {
    pub rule_a: TieBreak,
    pub rule_b: TieBreak,
    pub estimator: Estimator,
    pub difference: f64,
    pub pooled_se: f64,
    /// Set when the estimates differ by more than three pooled standard
    /// errors. Flagged for inspection rather than treated as a failure.
    pub flagged: bool,
}

/// Outcome of running the same configuration under every tie-break rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TieBreakComparison {
    pub tables: Vec<(TieBreak, EstimateTable)>,
    pub differences: Vec<TieBreakDifference>,
}

const TIE_BREAK_LABEL: u64 = 0xC1;

/// Runs the configuration under each tie-break rule (independent seed
/// streams) and reports all pairwise estimator differences.
pub fn tie_break_sensitivity(
    config: &TwoTypeConfig,
    proxy: EventProxySpec,
    replications: u64,
) -> Result<TieBreakComparison, ExperimentError> {
    let mut tables = Vec::new();
    for (idx, rule) in TieBreak::ALL.into_iter().enumerate() {
        let mut variant = config.clone();
        variant.tie_break = rule;
        variant.master_seed =
            derive_master(config.master_seed, absorb(TIE_BREAK_LABEL, idx as u64));
        let run = monte_carlo(&variant, proxy, replications)?;
        tables.push((rule, run.table()));
    }

    let mut differences = Vec::new();
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            let (rule_a, table_a) = &tables[i];
            let (rule_b, table_b) = &tables[j];
            for estimator in Estimator::ALL {
                let pa = table_a.estimate(estimator);
                let pb = table_b.estimate(estimator);
                let se_a = proportion_se(table_a.successes(estimator), table_a.classified);
                let se_b = proportion_se(table_b.successes(estimator), table_b.classified);
                let pooled_se = (se_a.powi(2) + se_b.powi(2)).sqrt();
                let difference = pa - pb;
                let flagged = difference.abs() > 3.0 * pooled_se && pooled_se.is_finite();
                differences.push(TieBreakDifference {
                    rule_a: *rule_a,
                    rule_b: *rule_b,
                    estimator,
                    difference,
                    pooled_se,
                    flagged,
                });
            }
        }
    }
    Ok(TieBreakComparison {
        tables,
        differences,
    })
}
