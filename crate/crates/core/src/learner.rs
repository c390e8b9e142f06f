//! Empirical risk minimization over `H_n`, the penalized selection rule,
//! two baselines, and the uniform-deviation evaluator.
//!
//! ERM over the `2^(2^n)` members of `H_n` decomposes by cell: each
//! occupied cell takes its majority label and the minimum empirical risk is
//! the sum of per-cell minority counts. Nothing here enumerates the class
//! except the brute-force oracles, which are capped at `n ≤ 3`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::{gml_penalty, WeightScheme};
use crate::error::{Error, Result};
use crate::hypothesis::{DepthCap, Hypothesis, LabeledSample};
use crate::synth::{CellErrorMass, SyntheticDistribution};

/// Largest `n` accepted by the exhaustive oracles (256 hypotheses).
pub const BRUTEFORCE_MAX_LEVEL: u32 = 3;

/// Exact fraction of misclassified examples.
pub type EmpiricalRisk = Ratio<u64>;

pub fn risk_to_f64(r: EmpiricalRisk) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn risk_to_big(r: EmpiricalRisk) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnerConfig {
    pub depth_cap: DepthCap,
    /// Label given to cells that no training example falls in.
    pub unoccupied_label: bool,
}

/// Inclusive range of class indices to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u32; 2]", into = "[u32; 2]")]
pub struct NRange {
    min: u32,
    max: u32,
}

impl TryFrom<[u32; 2]> for NRange {
    type Error = Error;

    fn try_from([min, max]: [u32; 2]) -> Result<Self> {
        NRange::new(min, max)
    }
}

impl From<NRange> for [u32; 2] {
    fn from(r: NRange) -> Self {
        [r.min, r.max]
    }
}

impl NRange {
    pub fn new(min: u32, max: u32) -> Result<Self> {
        if min == 0 || min > max {
            return Err(Error::EmptyRange { min, max });
        }
        Ok(NRange { min, max })
    }

    /// `[1, min(⌊log2 m⌋, cap)]`, and at least `[1, 1]`.
    pub fn default_for(m: usize, cap: DepthCap) -> Self {
        let log2 = if m == 0 { 0 } else { usize::BITS - 1 - m.leading_zeros() };
        NRange {
            min: 1,
            max: log2.min(cap.get()).max(1),
        }
    }

    /// [`NRange::default_for`], further limited to the shortest instance.
    pub fn default_for_sample(sample: &LabeledSample, cap: DepthCap) -> Self {
        let r = Self::default_for(sample.len(), cap);
        let len = u32::try_from(sample.min_instance_len()).unwrap_or(u32::MAX);
        NRange {
            min: 1,
            max: r.max.min(len).max(1),
        }
    }

    pub fn min(self) -> u32 {
        self.min
    }

    pub fn max(self) -> u32 {
        self.max
    }

    pub fn iter(self) -> impl DoubleEndedIterator<Item = u32> {
        self.min..=self.max
    }

    pub fn len(self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// `L_S(h)`.
pub fn empirical_risk(h: &Hypothesis, sample: &LabeledSample) -> Result<EmpiricalRisk> {
    sample.require_depth(h.depth())?;
    let errors = sample
        .examples()
        .iter()
        .filter(|e| h.evaluate_unchecked(&e.x) != e.y)
        .count() as u64;
    Ok(Ratio::new(errors, sample.len() as u64))
}

/// A hypothesis together with its exact training error count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErmFit {
    pub hypothesis: Hypothesis,
    pub errors: u64,
    pub m: u64,
}

impl ErmFit {
    pub fn risk(&self) -> EmpiricalRisk {
        Ratio::new(self.errors, self.m)
    }
}

/// Label counts `[y = 0, y = 1]` per occupied cell at a fixed depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCounts {
    depth: u32,
    m: u64,
    counts: BTreeMap<u64, [u64; 2]>,
}

impl CellCounts {
    pub fn build(sample: &LabeledSample, depth: u32) -> Result<Self> {
        sample.require_depth(depth)?;
        let mut counts = BTreeMap::new();
        for e in sample.examples() {
            let entry: &mut [u64; 2] = counts.entry(e.x.prefix_unchecked(depth)).or_default();
            entry[usize::from(e.y)] += 1;
        }
        Ok(CellCounts {
            depth,
            m: sample.len() as u64,
            counts,
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn get(&self, cell: u64) -> [u64; 2] {
        self.counts.get(&cell).copied().unwrap_or_default()
    }

    /// Merges sibling cells into their parent at depth `depth - 1`.
    pub fn coarsen(&self) -> CellCounts {
        assert!(self.depth > 1, "cannot coarsen below depth 1");
        let mut counts: BTreeMap<u64, [u64; 2]> = BTreeMap::new();
        for (&cell, &[zeros, ones]) in &self.counts {
            let entry = counts.entry(cell >> 1).or_default();
            entry[0] += zeros;
            entry[1] += ones;
        }
        CellCounts {
            depth: self.depth - 1,
            m: self.m,
            counts,
        }
    }

    /// Majority vote per occupied cell; ties go to 0.
    pub fn erm(&self, unoccupied_label: bool) -> ErmFit {
        let mut cells = std::collections::BTreeSet::new();
        let mut errors = 0;
        for (&cell, &[zeros, ones]) in &self.counts {
            if ones > zeros {
                cells.insert(cell);
                errors += zeros;
            } else {
                errors += ones;
            }
        }
        if unoccupied_label {
            cells.extend((0..1u64 << self.depth).filter(|c| !self.counts.contains_key(c)));
        }
        ErmFit {
            hypothesis: Hypothesis::from_set_unchecked(self.depth, cells),
            errors,
            m: self.m,
        }
    }
}

/// ERM over all of `H_n` by per-cell majority vote.
pub fn erm_in_class(n: u32, sample: &LabeledSample, config: &LearnerConfig) -> Result<ErmFit> {
    if n == 0 {
        return Err(Error::ZeroDepth(0));
    }
    config.depth_cap.check(n)?;
    Ok(CellCounts::build(sample, n)?.erm(config.unoccupied_label))
}

/// Exhaustive ERM over the `2^(2^n)` members of `H_n`, for `n ≤ 3`.
///
/// Among minimizers it prefers fewer 1-cells, then the smaller cell mask.
pub fn erm_bruteforce(n: u32, sample: &LabeledSample) -> Result<ErmFit> {
    if n == 0 {
        return Err(Error::ZeroDepth(0));
    }
    if n > BRUTEFORCE_MAX_LEVEL {
        return Err(Error::CapExceeded {
            what: "brute-force ERM level",
            limit: u64::from(BRUTEFORCE_MAX_LEVEL),
        });
    }
    sample.require_depth(n)?;
    let mut best: Option<ErmFit> = None;
    for mask in 0..1u64 << (1u32 << n) {
        let h = Hypothesis::from_mask(n, mask)?;
        let errors = sample
            .examples()
            .iter()
            .filter(|e| h.evaluate(&e.x).expect("length checked") != e.y)
            .count() as u64;
        let better = match &best {
            None => true,
            Some(b) => (errors, h.cell_count()) < (b.errors, b.hypothesis.cell_count()),
        };
        if better {
            best = Some(ErmFit {
                hypothesis: h,
                errors,
                m: sample.len() as u64,
            });
        }
    }
    Ok(best.expect("H_n is non-empty"))
}

/// Which selection rule produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Gml,
    UnionErm,
    Holdout,
    FixedN,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Gml => "gml",
            Rule::UnionErm => "union-erm",
            Rule::Holdout => "holdout",
            Rule::FixedN => "fixed-n",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-class line of a selection scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub n: u32,
    pub best_empirical_risk: EmpiricalRisk,
    pub penalty: f64,
    pub objective: f64,
}

/// Output of a selection rule.
///
/// For every rule `objective = empirical_risk + penalty`. The holdout rule
/// reports training risk as `empirical_risk` and validation risk as
/// `objective`, so its `penalty` is the observed generalization gap.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub rule: Rule,
    pub chosen: Hypothesis,
    pub chosen_n: u32,
    pub empirical_risk: EmpiricalRisk,
    pub penalty: f64,
    pub objective: f64,
    pub per_n_trace: Vec<TraceEntry>,
}

impl SelectionResult {
    fn from_scan(rule: Rule, fits: Vec<ErmFit>, trace: Vec<TraceEntry>) -> Self {
        // strict comparison keeps the earliest (smallest n) minimizer
        let mut best = 0;
        for (i, t) in trace.iter().enumerate() {
            let b = &trace[best];
            let key = (t.objective, fits[i].hypothesis.cell_count());
            if key.0 < b.objective || key.0 == b.objective && key.1 < fits[best].hypothesis.cell_count() {
                best = i;
            }
        }
        let chosen = &trace[best];
        SelectionResult {
            rule,
            chosen: fits[best].hypothesis.clone(),
            chosen_n: chosen.n,
            empirical_risk: chosen.best_empirical_risk,
            penalty: chosen.penalty,
            objective: chosen.objective,
            per_n_trace: trace,
        }
    }

    /// The trace as CSV with header `n,best_empirical_risk,penalty,objective`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("n,best_empirical_risk,penalty,objective\n");
        for t in &self.per_n_trace {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9}\n",
                t.n,
                risk_to_f64(t.best_empirical_risk),
                t.penalty,
                t.objective
            ));
        }
        out
    }
}

fn check_range(range: NRange, sample: &LabeledSample, config: &LearnerConfig) -> Result<()> {
    config.depth_cap.check(range.max())?;
    sample.require_depth(range.max())
}

// ERM at every n in range, sharing one pass over the sample.
fn scan_erm(sample: &LabeledSample, range: NRange, config: &LearnerConfig) -> Result<Vec<ErmFit>> {
    check_range(range, sample, config)?;
    let mut counts = CellCounts::build(sample, range.max())?;
    let mut fits = Vec::with_capacity(range.len());
    for n in range.iter().rev() {
        if n < counts.depth() {
            counts = counts.coarsen();
        }
        fits.push(counts.erm(config.unoccupied_label));
    }
    fits.reverse();
    Ok(fits)
}

/// Penalized selection: `argmin_n L_S(ERM_n) + penalty(n, m, δ, w)`.
///
/// Objective ties go to the smaller `n`, then to fewer 1-cells.
pub fn gml_select(
    sample: &LabeledSample,
    delta: f64,
    weights: &WeightScheme,
    range: NRange,
    config: &LearnerConfig,
) -> Result<SelectionResult> {
    let m = sample.len() as u64;
    let penalties = range
        .iter()
        .map(|n| gml_penalty(n, m, delta, weights))
        .collect::<Result<Vec<_>>>()?;
    let fits = scan_erm(sample, range, config)?;
    let trace = range
        .iter()
        .zip(&fits)
        .zip(penalties)
        .map(|((n, fit), penalty)| TraceEntry {
            n,
            best_empirical_risk: fit.risk(),
            penalty,
            objective: risk_to_f64(fit.risk()) + penalty,
        })
        .collect();
    Ok(SelectionResult::from_scan(Rule::Gml, fits, trace))
}

/// Empirical risk minimization over the whole union, with no complexity
/// term. Ties go to the smaller `n`.
pub fn unpenalized_union_erm(sample: &LabeledSample, range: NRange, config: &LearnerConfig) -> Result<SelectionResult> {
    let fits = scan_erm(sample, range, config)?;
    let trace = range
        .iter()
        .zip(&fits)
        .map(|(n, fit)| TraceEntry {
            n,
            best_empirical_risk: fit.risk(),
            penalty: 0.0,
            objective: risk_to_f64(fit.risk()),
        })
        .collect();
    Ok(SelectionResult::from_scan(Rule::UnionErm, fits, trace))
}

/// Validation-based selection: ERM per `n` on the first `⌈ratio·m⌉`
/// examples, chosen by risk on the rest.
pub fn holdout_select(
    sample: &LabeledSample,
    split_ratio: f64,
    range: NRange,
    config: &LearnerConfig,
) -> Result<SelectionResult> {
    let m = sample.len();
    let degenerate = || Error::DegenerateSplit { ratio: split_ratio, m };
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(degenerate());
    }
    let k = (split_ratio * m as f64).ceil() as usize;
    let (train, validation) = sample.split_at(k).ok_or_else(degenerate)?;
    check_range(range, sample, config)?;
    let fits = scan_erm(&train, range, config)?;
    let trace = range
        .iter()
        .zip(&fits)
        .map(|(n, fit)| {
            let val = risk_to_f64(empirical_risk(&fit.hypothesis, &validation)?);
            let train_risk = risk_to_f64(fit.risk());
            Ok(TraceEntry {
                n,
                best_empirical_risk: fit.risk(),
                penalty: val - train_risk,
                objective: val,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionResult::from_scan(Rule::Holdout, fits, trace))
}

/// ERM in a single prescribed class.
pub fn fixed_select(sample: &LabeledSample, n: u32, config: &LearnerConfig) -> Result<SelectionResult> {
    let range = NRange::new(n, n)?;
    let mut result = unpenalized_union_erm(sample, range, config)?;
    result.rule = Rule::FixedN;
    Ok(result)
}

/// `sup_{h ∈ H_n} |L_D(h) - L_S(h)|`, exactly, in `O(2^n + m)`.
pub fn sup_deviation(n: u32, sample: &LabeledSample, dist: &SyntheticDistribution) -> Result<BigRational> {
    let masses = dist.cell_error_masses(n)?;
    let counts = CellCounts::build(sample, n)?;
    Ok(sup_deviation_from(&masses, &counts))
}

/// Supremum from precomputed per-cell masses and counts at the same depth.
///
/// Predicting 1 on cell `c` contributes `d1 = P(c, y=0) - #{c, y=0}/m` to
/// `L_D(h) - L_S(h)`, predicting 0 contributes `d0`; the extremes over all
/// labelings are `Σ max(d1, d0)` and `Σ min(d1, d0)`.
pub fn sup_deviation_from(masses: &[CellErrorMass], counts: &CellCounts) -> BigRational {
    assert_eq!(masses.len(), 1usize << counts.depth(), "depth mismatch");
    let m = BigInt::from(counts.m);
    let mut upper = BigRational::zero();
    let mut lower = BigRational::zero();
    for mass in masses {
        let [zeros, ones] = counts.get(mass.cell);
        let d1 = &mass.if_one - BigRational::new(BigInt::from(zeros), m.clone());
        let d0 = &mass.if_zero - BigRational::new(BigInt::from(ones), m.clone());
        if d1 >= d0 {
            upper += &d1;
            lower += d0;
        } else {
            upper += &d0;
            lower += d1;
        }
    }
    let neg_lower = -lower;
    if upper >= neg_lower {
        upper
    } else {
        neg_lower
    }
}

/// The same supremum by enumerating all of `H_n`, for `n ≤ 3`.
pub fn sup_deviation_bruteforce(n: u32, sample: &LabeledSample, dist: &SyntheticDistribution) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::ZeroDepth(0));
    }
    if n > BRUTEFORCE_MAX_LEVEL {
        return Err(Error::CapExceeded {
            what: "brute-force deviation level",
            limit: u64::from(BRUTEFORCE_MAX_LEVEL),
        });
    }
    let mut best = BigRational::zero();
    for mask in 0..1u64 << (1u32 << n) {
        let h = Hypothesis::from_mask(n, mask)?;
        let gap = dist.true_risk(&h)? - risk_to_big(empirical_risk(&h, sample)?);
        let gap = if gap < BigRational::zero() { -gap } else { gap };
        if gap > best {
            best = gap;
        }
    }
    Ok(best)
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
