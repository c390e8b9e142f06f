//! Closed-form generalization bounds for the prefix hierarchy.
//!
//! `H_n` has `2^(2^n)` members, so Hoeffding plus a union bound gives the
//! finite-class uniform-convergence rate, and weighting the classes by
//! `w(n)` with `Σ w(n) ≤ 1` gives a penalty that holds simultaneously over
//! the whole hierarchy.
//!
//! All logarithms are natural; see [`LOG_BASE`].

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::BitString;
use crate::measure::DyadicRational;

/// Base of every logarithm in this module (natural log).
pub const LOG_BASE: f64 = std::f64::consts::E;

/// Tolerance used when validating that a custom table's total mass is at
/// most one; decimal tables such as `0.5, 0.25, ...` carry rounding error.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(name, value, "(0, 1)"))
    }
}

fn check_index(n: u32) -> Result<()> {
    if n == 0 {
        Err(Error::domain("n", 0.0, "n >= 1"))
    } else {
        Ok(())
    }
}

fn check_sample_size(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::domain("m", 0.0, "m >= 1"))
    } else {
        Ok(())
    }
}

/// How weights continue past the end of a custom table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRule {
    /// `w(n) = 0` past the table.
    Zero,
    /// `w(len + k) = w(len) * ratio^k`, with `ratio ∈ [0, 1)`.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCustomWeights", into = "RawCustomWeights")]
pub struct CustomWeights {
    table: Vec<f64>,
    tail: TailRule,
}

#[derive(Serialize, Deserialize)]
struct RawCustomWeights {
    table: Vec<f64>,
    tail: TailRule,
}

impl TryFrom<RawCustomWeights> for CustomWeights {
    type Error = Error;

    fn try_from(raw: RawCustomWeights) -> Result<Self> {
        CustomWeights::new(raw.table, raw.tail)
    }
}

impl From<CustomWeights> for RawCustomWeights {
    fn from(w: CustomWeights) -> Self {
        RawCustomWeights {
            table: w.table,
            tail: w.tail,
        }
    }
}

impl CustomWeights {
    pub fn new(table: Vec<f64>, tail: TailRule) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidWeights("table must be non-empty".into()));
        }
        if let Some(bad) = table.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidWeights(format!("weight {bad} outside [0, 1]")));
        }
        let tail_mass = match tail {
            TailRule::Zero => 0.0,
            TailRule::Geometric(r) => {
                if !(0.0..1.0).contains(&r) {
                    return Err(Error::InvalidWeights(format!(
                        "geometric tail ratio {r} outside [0, 1)"
                    )));
                }
                table[table.len() - 1] * r / (1.0 - r)
            }
        };
        let total: f64 = table.iter().sum::<f64>() + tail_mass;
        if total > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("total weight {total} exceeds 1")));
        }
        Ok(CustomWeights { table, tail })
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    fn weight(&self, n: u32) -> f64 {
        let i = n as usize - 1;
        match (self.table.get(i), self.tail) {
            (Some(&w), _) => w,
            (None, TailRule::Zero) => 0.0,
            (None, TailRule::Geometric(r)) => {
                let k = i + 1 - self.table.len();
                self.table[self.table.len() - 1] * r.powf(k as f64)
            }
        }
    }
}

/// A prior-like weighting `w: ℕ → [0, 1]` over class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `w(n) = 6 / (π² n²)`.
    Harmonic,
    /// `w(n) = 2^-n`.
    Geometric,
    Custom(CustomWeights),
}

impl WeightScheme {
    /// `w(n)` for `n ≥ 1`.
    pub fn weight(&self, n: u32) -> f64 {
        assert!(n >= 1, "weights are indexed from 1");
        match self {
            WeightScheme::Harmonic => 6.0 / (PI * PI * f64::from(n) * f64::from(n)),
            WeightScheme::Geometric => 2f64.powi(-(n as i32)),
            WeightScheme::Custom(c) => c.weight(n),
        }
    }

    /// `-ln w(n)`, computed without underflow for the built-in schemes.
    /// Infinite when `w(n) = 0`.
    pub fn neg_ln_weight(&self, n: u32) -> f64 {
        assert!(n >= 1, "weights are indexed from 1");
        match self {
            WeightScheme::Harmonic => (PI * PI / 6.0).ln() + 2.0 * f64::from(n).ln(),
            WeightScheme::Geometric => f64::from(n) * LN_2,
            WeightScheme::Custom(c) => -c.weight(n).ln(),
        }
    }

    /// `Σ_{n ≤ count} w(n)`, accumulated smallest term first.
    pub fn partial_sum(&self, count: u32) -> f64 {
        (1..=count).rev().map(|n| self.weight(n)).sum()
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Harmonic => "harmonic",
            WeightScheme::Geometric => "geometric",
            WeightScheme::Custom(_) => "custom",
        }
    }
}

/// Exact geometric partial sum `Σ_{n ≤ count} 2^-n`.
pub fn geometric_partial_sum_exact(count: u32) -> DyadicRational {
    (1..=count).map(|n| DyadicRational::new(1, n)).sum()
}

/// `|H_n| = 2^(2^n)`, exact while `2^n ≤ 62`.
pub fn class_size(n: u32) -> Result<u64> {
    check_index(n)?;
    if n > 5 {
        return Err(Error::ClassSizeOverflow { n });
    }
    Ok(1u64 << (1u32 << n))
}

/// `ln |H_n| = 2^n ln 2`.
pub fn log_class_size(n: u32) -> f64 {
    2f64.powi(n as i32) * LN_2
}

/// Size of a finite class, exact or by its natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassSize {
    Exact(u64),
    Log(f64),
}

impl ClassSize {
    pub fn of_level(n: u32) -> ClassSize {
        ClassSize::Log(log_class_size(n))
    }

    pub fn ln(self) -> f64 {
        match self {
            ClassSize::Exact(k) => (k as f64).ln(),
            ClassSize::Log(l) => l,
        }
    }
}

fn ceil_to_count(value: f64) -> Result<u64> {
    let c = value.ceil();
    if !c.is_finite() || c >= u64::MAX as f64 {
        return Err(Error::domain("sample complexity", value, "representable in u64"));
    }
    Ok(c.max(1.0) as u64)
}

fn check_class_size(size: ClassSize) -> Result<()> {
    match size {
        ClassSize::Exact(0) => Err(Error::domain("|H|", 0.0, "|H| >= 1")),
        ClassSize::Log(l) if l.is_nan() || l < 0.0 => Err(Error::domain("ln |H|", l, "ln |H| >= 0")),
        _ => Ok(()),
    }
}

/// Uniform-convergence sample complexity `⌈ln(2|H|/δ) / (2ε²)⌉`.
pub fn uc_sample_complexity(size: ClassSize, epsilon: f64, delta: f64) -> Result<u64> {
    check_class_size(size)?;
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    let numerator = LN_2 + size.ln() - delta.ln();
    ceil_to_count(numerator / (2.0 * epsilon * epsilon))
}

/// Agnostic ERM sample complexity `⌈2 ln(2|H|/δ) / ε²⌉`.
pub fn agnostic_sample_complexity(size: ClassSize, epsilon: f64, delta: f64) -> Result<u64> {
    check_class_size(size)?;
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    let numerator = LN_2 + size.ln() - delta.ln();
    ceil_to_count(2.0 * numerator / (epsilon * epsilon))
}

/// An accuracy level; `saturated` marks values ≥ 1, where the bound is vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Epsilon {
    pub value: f64,
    pub saturated: bool,
}

impl Epsilon {
    fn new(value: f64) -> Self {
        Epsilon {
            value,
            saturated: value >= 1.0,
        }
    }
}

/// Smallest accuracy that `m` samples buy for `H_n` at confidence `δ`:
/// `√(((2^n + 1) ln 2 + ln(1/δ)) / (2m))`.
pub fn epsilon_n(n: u32, m: u64, delta: f64) -> Result<Epsilon> {
    check_index(n)?;
    check_sample_size(m)?;
    check_open_unit("delta", delta)?;
    let numerator = (2f64.powi(n as i32) + 1.0) * LN_2 - delta.ln();
    Ok(Epsilon::new((numerator / (2.0 * m as f64)).sqrt()))
}

/// The structural penalty for class `n`:
/// `√((-ln w(n) + ln(2^(2^n + 1) / δ)) / (2m))`.
///
/// Algebraically equal to `epsilon_n(n, m, w(n)·δ)`, but evaluated from
/// `-ln w(n)` so tiny weights do not underflow.
pub fn gml_penalty(n: u32, m: u64, delta: f64, weights: &WeightScheme) -> Result<f64> {
    check_index(n)?;
    check_sample_size(m)?;
    check_open_unit("delta", delta)?;
    let neg_ln_w = weights.neg_ln_weight(n);
    if !neg_ln_w.is_finite() {
        return Err(Error::ZeroWeight { n });
    }
    let class_term = (2f64.powi(n as i32) + 1.0) * LN_2 - delta.ln();
    Ok(((neg_ln_w + class_term) / (2.0 * m as f64)).sqrt())
}

/// Upper bound `4d ln(2d) + 2 ln r` on the VC dimension of a union of `r`
/// classes each of VC dimension at most `d`.
pub fn vc_union_bound(d_max: u32, r: u32) -> Result<f64> {
    if d_max == 0 || r == 0 {
        return Err(Error::domain("d_max, r", 0.0, ">= 1"));
    }
    let d = f64::from(d_max);
    Ok(4.0 * d * (2.0 * d).ln() + 2.0 * f64::from(r).ln())
}

/// Nonuniform sample complexity for a comparator in `H_n`: the UC
/// complexity of `H_n` at accuracy `ε/2` and confidence `w(n)·δ`.
pub fn nul_sample_complexity(n: u32, epsilon: f64, delta: f64, weights: &WeightScheme) -> Result<u64> {
    check_index(n)?;
    check_open_unit("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    let w = weights.weight(n);
    if w == 0.0 {
        return Err(Error::ZeroWeight { n });
    }
    uc_sample_complexity(ClassSize::of_level(n), epsilon / 2.0, w * delta)
}

/// Default for the unspecified constant in [`nul_gap_bound`].
pub const DEFAULT_GAP_CONSTANT: f64 = 1.0;

/// Upper bound `8 C ln(2n) / ε²` on the extra samples a nonuniform learner
/// needs relative to one told the class index in advance.
pub fn nul_gap_bound(n: u32, epsilon: f64, c: f64) -> Result<f64> {
    check_index(n)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon", epsilon, "(0, 1]"));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::domain("C", c, "C > 0"));
    }
    Ok(8.0 * c * (2.0 * f64::from(n)).ln() / (epsilon * epsilon))
}

/// Largest level accepted by the brute-force VC search.
pub const VC_BRUTEFORCE_MAX_LEVEL: u32 = 3;

/// Result of an exhaustive shattering search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcDimension {
    pub dimension: u32,
    /// A largest shattered set of instances.
    pub witness: Vec<BitString>,
}

/// Exact VC dimension of `H_n` by exhaustive search.
///
/// Candidate points are all instances of length `n + 1`, so every depth-`n`
/// cell holds two candidates; only sets with distinct prefixes can be
/// shattered. The search stops at `max_points`.
pub fn vc_dim_bruteforce(n: u32, max_points: u32) -> Result<VcDimension> {
    vc_dim_union_bruteforce(&[n], max_points)
}

/// Exact VC dimension of `H_{n_1} ∪ ... ∪ H_{n_r}` by exhaustive search.
pub fn vc_dim_union_bruteforce(levels: &[u32], max_points: u32) -> Result<VcDimension> {
    let top = *levels
        .iter()
        .max()
        .ok_or_else(|| Error::Config("no classes given".into()))?;
    if levels.contains(&0) {
        return Err(Error::domain("n", 0.0, "n >= 1"));
    }
    if top > VC_BRUTEFORCE_MAX_LEVEL {
        return Err(Error::CapExceeded {
            what: "brute-force VC level",
            limit: u64::from(VC_BRUTEFORCE_MAX_LEVEL),
        });
    }
    if max_points > (1 << top) + 1 {
        return Err(Error::CapExceeded {
            what: "max_points",
            limit: (1 << top) + 1,
        });
    }

    let len = top + 1;
    let n_points = 1usize << len;
    // classifier over the candidate points as a bitmask, one per hypothesis
    let mut classifiers: Vec<u32> = Vec::new();
    for &n in levels {
        let n_cells = 1u32 << n;
        for mask in 0..1u64 << n_cells {
            let labels = (0..n_points)
                .filter(|&p| mask >> (p >> (len - n)) & 1 == 1)
                .fold(0u32, |acc, p| acc | 1 << p);
            classifiers.push(labels);
        }
    }
    classifiers.sort_unstable();
    classifiers.dedup();

    let shattered = |subset: u32| -> bool {
        let k = subset.count_ones();
        let mut seen = vec![false; 1 << k];
        let mut distinct = 0usize;
        for &c in &classifiers {
            let pattern = compress(c & subset, subset);
            if !seen[pattern as usize] {
                seen[pattern as usize] = true;
                distinct += 1;
            }
        }
        distinct == 1 << k
    };

    let mut best = VcDimension {
        dimension: 0,
        witness: Vec::new(),
    };
    for k in 1..=max_points.min(n_points as u32) {
        let found = (0u32..1 << n_points)
            .filter(|s| s.count_ones() == k)
            .find(|&s| shattered(s));
        match found {
            Some(subset) => {
                best = VcDimension {
                    dimension: k,
                    witness: (0..n_points)
                        .filter(|p| subset >> p & 1 == 1)
                        .map(|p| BitString::from_u64(p as u64, len as usize).expect("fits"))
                        .collect(),
                };
            }
            // subsets of shattered sets are shattered, so nothing larger works
            None => break,
        }
    }
    Ok(best)
}

// Packs the bits of `value` selected by `mask` into the low bits.
fn compress(value: u32, mask: u32) -> u32 {
    let mut out = 0;
    let mut j = 0;
    for i in 0..32 {
        if mask >> i & 1 == 1 {
            out |= (value >> i & 1) << j;
            j += 1;
        }
    }
    out
}
