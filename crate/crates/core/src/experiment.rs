//! Seeded Monte Carlo harness.
//!
//! Two measurements, both over fresh samples from a synthetic distribution:
//!
//! * [`run_violation`]: how often the exact uniform deviation
//!   `sup_{h ∈ H_n} |L_D(h) - L_S(h)|` exceeds the penalty
//!   `ε_n(m, w(n)·δ)`, per class and simultaneously over the range.
//! * [`run_consistency`]: the exact true risk of the hypothesis each
//!   selection rule returns, as the sample size grows.
//!
//! Trial `t` at the `i`-th sample size draws from
//! `derive_seed(root_seed, t, stream)`, so results are identical for any
//! thread count.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{gml_penalty, WeightScheme};
use crate::error::{Error, Result};
use crate::hypothesis::DepthCap;
use crate::learner::{
    big_to_f64, fixed_select, gml_select, holdout_select, sup_deviation_bruteforce, sup_deviation_from,
    unpenalized_union_erm, CellCounts, LearnerConfig, NRange, Rule, SelectionResult, BRUTEFORCE_MAX_LEVEL,
};
use crate::synth::{derive_seed, DistributionSpec, SyntheticDistribution};

/// Two-sided 95% normal quantile for Wilson intervals.
const Z_95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_HOLDOUT_RATIO: f64 = 0.7;

const VIOLATION_STREAM: u64 = 0;
const CONSISTENCY_STREAM: u64 = 1 << 32;

fn default_rules() -> Vec<Rule> {
    vec![Rule::Gml, Rule::UnionErm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "crate::schema_version")]
    pub schema: u32,
    pub distribution: DistributionSpec,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub weights: WeightScheme,
    pub n_range: NRange,
    #[serde(default = "default_rules")]
    pub rules: Vec<Rule>,
    pub root_seed: u64,
    /// Training fraction for the holdout rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_ratio: Option<f64>,
    /// Class index for the fixed-n rule; required when that rule is listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_n: Option<u32>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks every invariant and builds the distribution.
    pub fn validate(&self, cap: DepthCap) -> Result<SyntheticDistribution> {
        crate::check_schema(self.schema)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.m_values.is_empty() {
            return Err(Error::Config("m_values must be non-empty".into()));
        }
        if self.m_values[0] == 0 || self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("m_values must be positive and strictly ascending".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta {} outside (0, 1)", self.delta)));
        }
        if self.rules.is_empty() {
            return Err(Error::Config("rules must be non-empty".into()));
        }
        cap.check(self.n_range.max())?;
        for n in self.n_range.iter() {
            if self.weights.weight(n) == 0.0 {
                return Err(Error::ZeroWeight { n });
            }
        }
        if let Some(r) = self.holdout_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!("holdout_ratio {r} outside (0, 1)")));
            }
        }
        if self.rules.contains(&Rule::FixedN) {
            let n = self
                .fixed_n
                .ok_or_else(|| Error::Config("rule fixed-n needs fixed_n".into()))?;
            if n == 0 {
                return Err(Error::Config("fixed_n must be at least 1".into()));
            }
            cap.check(n)?;
        }
        let dist = self.distribution.build()?;
        let deepest = self.n_range.max().max(self.fixed_n.unwrap_or(0));
        if deepest as usize > dist.length() {
            return Err(Error::Config(format!(
                "class index {deepest} exceeds instance length {}",
                dist.length()
            )));
        }
        Ok(dist)
    }
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Cross-check every fast supremum against brute force for `n ≤ 3`.
    pub paranoid: bool,
    pub depth_cap: DepthCap,
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Wilson score interval for `successes / trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// One class at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationRow {
    pub n: u32,
    pub m: usize,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub rate_ci_lo: f64,
    pub rate_ci_hi: f64,
    /// The threshold `ε_n(m, w(n)·δ)` compared against.
    pub epsilon: f64,
    pub mean_sup_deviation: f64,
}

/// Trials in which any class in the range violated its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousRow {
    pub m: usize,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub rate_ci_lo: f64,
    pub rate_ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub schema: u32,
    pub delta: f64,
    pub rows: Vec<ViolationRow>,
    pub simultaneous: Vec<SimultaneousRow>,
}

impl ViolationReport {
    pub fn simultaneous_for(&self, m: usize) -> Option<&SimultaneousRow> {
        self.simultaneous.iter().find(|r| r.m == m)
    }

    pub fn per_n_violations(&self, m: usize) -> usize {
        self.rows.iter().filter(|r| r.m == m).map(|r| r.violations).sum()
    }
}

/// Measures per-class and simultaneous violation rates of the penalty bound.
pub fn run_violation(config: &ExperimentConfig, opts: &RunOptions) -> Result<ViolationReport> {
    let dist = config.validate(opts.depth_cap)?;
    let range = config.n_range;
    let masses = range
        .iter()
        .map(|n| dist.cell_error_masses(n))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut simultaneous = Vec::new();
    for (mi, &m) in config.m_values.iter().enumerate() {
        let thresholds = range
            .iter()
            .map(|n| gml_penalty(n, m as u64, config.delta, &config.weights))
            .collect::<Result<Vec<_>>>()?;

        let trial = |t: usize| -> Result<Vec<(f64, bool)>> {
            let seed = derive_seed(config.root_seed, t as u64, VIOLATION_STREAM | mi as u64);
            let sample = dist.sample(m, seed)?;
            let mut counts = CellCounts::build(&sample, range.max())?;
            let mut out = vec![(0.0, false); range.len()];
            for i in (0..range.len()).rev() {
                let n = range.min() + i as u32;
                if n < counts.depth() {
                    counts = counts.coarsen();
                }
                let sup = sup_deviation_from(&masses[i], &counts);
                if opts.paranoid && n <= BRUTEFORCE_MAX_LEVEL {
                    let brute = sup_deviation_bruteforce(n, &sample, &dist)?;
                    if brute != sup {
                        return Err(Error::OracleMismatch(format!(
                            "trial {t}, m={m}, n={n}: fast {sup} vs brute force {brute}"
                        )));
                    }
                }
                let sup = big_to_f64(&sup);
                out[i] = (sup, sup > thresholds[i]);
            }
            Ok(out)
        };
        let per_trial: Vec<Vec<(f64, bool)>> = in_pool(opts.threads, || {
            (0..config.trials)
                .into_par_iter()
                .map(trial)
                .collect::<Result<Vec<_>>>()
        })??;

        let trials = config.trials;
        for (i, n) in range.iter().enumerate() {
            let violations = per_trial.iter().filter(|t| t[i].1).count();
            let (lo, hi) = wilson_interval(violations, trials);
            rows.push(ViolationRow {
                n,
                m,
                trials,
                violations,
                rate: violations as f64 / trials as f64,
                rate_ci_lo: lo,
                rate_ci_hi: hi,
                epsilon: thresholds[i],
                mean_sup_deviation: per_trial.iter().map(|t| t[i].0).sum::<f64>() / trials as f64,
            });
        }
        let violations = per_trial.iter().filter(|t| t.iter().any(|v| v.1)).count();
        let (lo, hi) = wilson_interval(violations, trials);
        simultaneous.push(SimultaneousRow {
            m,
            trials,
            violations,
            rate: violations as f64 / trials as f64,
            rate_ci_lo: lo,
            rate_ci_hi: hi,
        });
    }
    Ok(ViolationReport {
        schema: crate::SCHEMA_VERSION,
        delta: config.delta,
        rows,
        simultaneous,
    })
}

/// Aggregate over trials for one rule at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rule: Rule,
    pub m: usize,
    pub trials: usize,
    pub mean_risk: f64,
    pub median_risk: f64,
    /// Median excess true risk over the Bayes risk.
    pub excess: f64,
    pub mean_excess: f64,
    pub mean_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyCurve {
    pub schema: u32,
    pub bayes_risk: f64,
    pub points: Vec<CurvePoint>,
}

impl ConsistencyCurve {
    pub fn point(&self, rule: Rule, m: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.rule == rule && p.m == m)
    }
}

fn exact_median(sorted: &[BigRational]) -> BigRational {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2].clone()
    } else {
        (&sorted[k / 2 - 1] + &sorted[k / 2]) / BigInt::from(2u8)
    }
}

fn exact_mean(values: &[BigRational]) -> BigRational {
    values.iter().fold(BigRational::zero(), |a, v| a + v) / BigInt::from(values.len())
}

fn select(
    rule: Rule,
    sample: &crate::LabeledSample,
    config: &ExperimentConfig,
    learner: &LearnerConfig,
) -> Result<SelectionResult> {
    match rule {
        Rule::Gml => gml_select(sample, config.delta, &config.weights, config.n_range, learner),
        Rule::UnionErm => unpenalized_union_erm(sample, config.n_range, learner),
        Rule::Holdout => holdout_select(
            sample,
            config.holdout_ratio.unwrap_or(DEFAULT_HOLDOUT_RATIO),
            config.n_range,
            learner,
        ),
        Rule::FixedN => fixed_select(sample, config.fixed_n.expect("validated"), learner),
    }
}

/// Exact true risk of each rule's selection, aggregated per `(rule, m)`.
///
/// All rules see the same sample in a given trial.
pub fn run_consistency(config: &ExperimentConfig, opts: &RunOptions) -> Result<ConsistencyCurve> {
    let dist = config.validate(opts.depth_cap)?;
    let learner = LearnerConfig {
        depth_cap: opts.depth_cap,
        ..LearnerConfig::default()
    };
    let bayes = dist.bayes_risk().clone();

    let mut points = Vec::new();
    for (mi, &m) in config.m_values.iter().enumerate() {
        let trial = |t: usize| -> Result<Vec<(BigRational, u32)>> {
            let seed = derive_seed(config.root_seed, t as u64, CONSISTENCY_STREAM | mi as u64);
            let sample = dist.sample(m, seed)?;
            config
                .rules
                .iter()
                .map(|&rule| {
                    let r = select(rule, &sample, config, &learner)?;
                    Ok((dist.true_risk(&r.chosen)?, r.chosen_n))
                })
                .collect()
        };
        let per_trial: Vec<Vec<(BigRational, u32)>> = in_pool(opts.threads, || {
            (0..config.trials)
                .into_par_iter()
                .map(trial)
                .collect::<Result<Vec<_>>>()
        })??;

        for (ri, &rule) in config.rules.iter().enumerate() {
            let mut risks: Vec<BigRational> = per_trial.iter().map(|t| t[ri].0.clone()).collect();
            risks.sort();
            let mean = exact_mean(&risks);
            let median = exact_median(&risks);
            let mean_n = per_trial.iter().map(|t| f64::from(t[ri].1)).sum::<f64>() / config.trials as f64;
            points.push(CurvePoint {
                rule,
                m,
                trials: config.trials,
                mean_risk: big_to_f64(&mean),
                median_risk: big_to_f64(&median),
                excess: big_to_f64(&(&median - &bayes)),
                mean_excess: big_to_f64(&(&mean - &bayes)),
                mean_n,
            });
        }
    }
    // sorted emission: rule order, then ascending m
    points.sort_by_key(|p| (p.rule, p.m));
    Ok(ConsistencyCurve {
        schema: crate::SCHEMA_VERSION,
        bayes_risk: big_to_f64(&bayes),
        points,
    })
}

/// Agreement counts from [`oracle_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleSweep {
    pub samples: usize,
    /// Problems on which both checks matched.
    pub agreed: usize,
    pub erm_mismatches: usize,
    pub sup_mismatches: usize,
}

impl OracleSweep {
    pub fn passed(&self) -> bool {
        self.erm_mismatches == 0 && self.sup_mismatches == 0
    }
}

/// Compares the per-cell ERM and supremum against exhaustive enumeration
/// on `samples` random problems at level `n ≤ 3`.
///
/// Each problem has a random depth-`n` target over uniform bits of length
/// `n + 2`, noise `1/10`, and a sample size drawn from `1..=max_m`.
pub fn oracle_sweep(n: u32, samples: usize, seed: u64, max_m: usize) -> Result<OracleSweep> {
    use rand::{Rng, SeedableRng};

    if n == 0 || n > BRUTEFORCE_MAX_LEVEL {
        return Err(Error::CapExceeded {
            what: "oracle level",
            limit: u64::from(BRUTEFORCE_MAX_LEVEL),
        });
    }
    if max_m == 0 {
        return Err(Error::Config("max_m must be at least 1".into()));
    }
    let learner = LearnerConfig::default();
    let noise = BigRational::new(BigInt::from(1), BigInt::from(10));
    let mut erm_mismatches = 0;
    let mut sup_mismatches = 0;
    let mut agreed = 0;
    for i in 0..samples {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64, 0));
        let mask = rng.gen_range(0..1u64 << (1u32 << n));
        let m = rng.gen_range(1..=max_m);
        let target = crate::Hypothesis::from_mask(n, mask)?;
        let dist = SyntheticDistribution::uniform(target, noise.clone(), n as usize + 2)?;
        let sample = dist.sample(m, rng.gen())?;
        let fast = crate::learner::erm_in_class(n, &sample, &learner)?;
        let brute = crate::learner::erm_bruteforce(n, &sample)?;
        let erm_ok = fast.risk() == brute.risk();
        let sup_ok = crate::learner::sup_deviation(n, &sample, &dist)? == sup_deviation_bruteforce(n, &sample, &dist)?;
        erm_mismatches += usize::from(!erm_ok);
        sup_mismatches += usize::from(!sup_ok);
        agreed += usize::from(erm_ok && sup_ok);
    }
    Ok(OracleSweep {
        samples,
        agreed,
        erm_mismatches,
        sup_mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Anything [`emit_report`] can write.
pub trait Report: Serialize {
    fn to_csv(&self) -> String;

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

impl Report for ViolationReport {
    /// Header `n,m,trials,violations,rate,rate_ci_lo,rate_ci_hi`. For each
    /// `m`, the per-class rows in ascending `n` are followed by one row with
    /// `n = any` holding the simultaneous count.
    fn to_csv(&self) -> String {
        let mut out = String::from("n,m,trials,violations,rate,rate_ci_lo,rate_ci_hi\n");
        for s in &self.simultaneous {
            for r in self.rows.iter().filter(|r| r.m == s.m) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.9},{:.9},{:.9}",
                    r.n, r.m, r.trials, r.violations, r.rate, r.rate_ci_lo, r.rate_ci_hi
                );
            }
            let _ = writeln!(
                out,
                "any,{},{},{},{:.9},{:.9},{:.9}",
                s.m, s.trials, s.violations, s.rate, s.rate_ci_lo, s.rate_ci_hi
            );
        }
        out
    }
}

impl Report for ConsistencyCurve {
    /// Header `rule,m,mean_risk,median_risk,excess,mean_n`; `excess` is the
    /// median excess risk.
    fn to_csv(&self) -> String {
        let mut out = String::from("rule,m,mean_risk,median_risk,excess,mean_n\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{:.9},{:.9},{:.9},{:.6}",
                p.rule, p.m, p.mean_risk, p.median_risk, p.excess, p.mean_n
            );
        }
        out
    }
}

pub fn render_report(report: &impl Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    }
}

pub fn emit_report(report: &impl Report, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)).map_err(|e| Error::io(path, e))
}
