//! Instances, prefix hypotheses and the set algebra on them.
//!
//! A hypothesis of depth `n` is the indicator of a union of depth-`n`
//! cylinder sets: it labels an instance 1 exactly when the instance's first
//! `n` bits form one of its cells. Cells are stored as integers in
//! `[0, 2^n)`, most significant bit first, so the prefix `01` is cell `1`
//! and `10` is cell `2`.
//!
//! Depth is never normalized away. `2:00,01` and `1:0` classify every
//! instance identically but live in different classes of the hierarchy;
//! use [`Hypothesis::equivalent`] for semantic comparison.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Hard limit on hypothesis depth; cells and prefixes are `u64`.
pub const MAX_DEPTH: u32 = 62;

/// Default configured depth cap (`GML_DEPTH_CAP` overrides it in the CLI).
pub const DEFAULT_DEPTH_CAP: u32 = 20;

/// Upper bound on any depth a learner or experiment may touch.
///
/// Full ERM output at depth `n` may hold up to `2^n` cells, so the cap is
/// enforced wherever a depth enters from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthCap(u32);

impl DepthCap {
    pub fn new(cap: u32) -> Result<Self> {
        if cap == 0 || cap > MAX_DEPTH {
            return Err(Error::Config(format!(
                "depth cap must be in [1, {MAX_DEPTH}], got {cap}"
            )));
        }
        Ok(DepthCap(cap))
    }

    /// Reads `GML_DEPTH_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var("GML_DEPTH_CAP") {
            Ok(raw) => {
                let cap = raw
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("GML_DEPTH_CAP={raw:?} is not a depth")))?;
                DepthCap::new(cap)
            }
            Err(_) => Ok(DepthCap::default()),
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn check(self, depth: u32) -> Result<()> {
        if depth > self.0 {
            Err(Error::DepthCap { depth, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for DepthCap {
    fn default() -> Self {
        DepthCap(DEFAULT_DEPTH_CAP)
    }
}

/// A finite instance: a non-empty sequence of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    // MSB-first packing; bits past `len` are zero.
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Parse("bit string must be non-empty".into()));
        }
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1u64 << (63 - i % 64);
            }
        }
        Ok(BitString { words, len: bits.len() })
    }

    /// Builds a string of `len` bits whose first `min(len, 64)` bits are the
    /// low bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Parse("bit string must be non-empty".into()));
        }
        let head = len.min(64);
        if head < 64 && value >> head != 0 {
            return Err(Error::Parse(format!("{value} does not fit in {head} bits")));
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        words[0] = if head == 64 { value } else { value << (64 - head) };
        Ok(BitString { words, len })
    }

    pub(crate) fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert!(len >= 1 && words.len() == len.div_ceil(64));
        let mut words = words;
        let tail = len % 64;
        if tail != 0 {
            let last = words.len() - 1;
            words[last] &= !0u64 << (64 - tail);
        }
        BitString { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit at zero-based position `i`.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range");
        self.words[i / 64] >> (63 - i % 64) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    /// The first `depth` bits as a cell index.
    pub fn prefix(&self, depth: u32) -> Result<u64> {
        if (depth as usize) > self.len {
            return Err(Error::InstanceTooShort { len: self.len, depth });
        }
        Ok(self.prefix_unchecked(depth))
    }

    pub(crate) fn prefix_unchecked(&self, depth: u32) -> u64 {
        debug_assert!(depth <= 64 && depth as usize <= self.len);
        if depth == 0 {
            0
        } else {
            self.words[0] >> (64 - depth)
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BitString::from_bits(&bits)
    }
}

/// Cell-set operation applied at the common refined depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersection,
    Difference,
    SymmetricDifference,
}

/// A prefix hypothesis: depth `n` and the set of `n`-bit cells labeled 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypothesis {
    depth: u32,
    cells: BTreeSet<u64>,
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 {
        return Err(Error::ZeroDepth(depth));
    }
    if depth > MAX_DEPTH {
        return Err(Error::DepthCap { depth, cap: MAX_DEPTH });
    }
    Ok(())
}

impl Hypothesis {
    pub fn new(depth: u32, cells: impl IntoIterator<Item = u64>) -> Result<Self> {
        check_depth(depth)?;
        let cells: BTreeSet<u64> = cells.into_iter().collect();
        if let Some(&max) = cells.last() {
            if max >> depth != 0 {
                return Err(Error::CellOutOfRange { cell: max, depth });
            }
        }
        Ok(Hypothesis { depth, cells })
    }

    pub(crate) fn from_set_unchecked(depth: u32, cells: BTreeSet<u64>) -> Self {
        debug_assert!(cells.last().is_none_or(|&c| c >> depth == 0));
        Hypothesis { depth, cells }
    }

    pub fn empty(depth: u32) -> Result<Self> {
        Hypothesis::new(depth, [])
    }

    pub fn full(depth: u32) -> Result<Self> {
        check_depth(depth)?;
        Ok(Hypothesis {
            depth,
            cells: (0..1u64 << depth).collect(),
        })
    }

    /// Dense constructor for brute-force paths: bit `c` of `mask` is cell `c`.
    pub fn from_mask(depth: u32, mask: u64) -> Result<Self> {
        check_depth(depth)?;
        if depth > 6 {
            return Err(Error::CapExceeded {
                what: "dense cell mask depth",
                limit: 6,
            });
        }
        let n_cells = 1u64 << depth;
        if n_cells < 64 && mask >> n_cells != 0 {
            return Err(Error::CellOutOfRange {
                cell: 63 - u64::from(mask.leading_zeros()),
                depth,
            });
        }
        Ok(Hypothesis {
            depth,
            cells: (0..n_cells).filter(|c| mask >> c & 1 == 1).collect(),
        })
    }

    /// The cylinder "bit at one-based `position` equals 1", at depth `position`.
    pub fn bit_is_one(position: u32) -> Result<Self> {
        check_depth(position)?;
        let lower = position - 1;
        // cell = (free upper bits) 1 (free lower bits) with the fixed bit last
        let cells = (0..1u64 << lower).map(|upper| upper << 1 | 1);
        Hypothesis::new(position, cells)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cells(&self) -> &BTreeSet<u64> {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains_cell(&self, cell: u64) -> bool {
        self.cells.contains(&cell)
    }

    pub fn evaluate(&self, x: &BitString) -> Result<bool> {
        Ok(self.cells.contains(&x.prefix(self.depth)?))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &BitString) -> bool {
        self.cells.contains(&x.prefix_unchecked(self.depth))
    }

    /// Re-expresses the hypothesis at a deeper level by splitting each cell
    /// into all of its extensions.
    pub fn refine(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::RefineToShallower {
                from: self.depth,
                to: depth,
            });
        }
        check_depth(depth)?;
        let shift = depth - self.depth;
        if shift == 0 {
            return Ok(self.clone());
        }
        let cells = self
            .cells
            .iter()
            .flat_map(|&c| (0..1u64 << shift).map(move |tail| c << shift | tail))
            .collect();
        Ok(Hypothesis { depth, cells })
    }

    pub fn complement(&self) -> Self {
        let cells = (0..1u64 << self.depth).filter(|c| !self.cells.contains(c)).collect();
        Hypothesis {
            depth: self.depth,
            cells,
        }
    }

    pub fn combine(&self, other: &Hypothesis, op: SetOp) -> Self {
        let depth = self.depth.max(other.depth);
        // both depths are already valid, so refinement cannot fail
        let a = self.refine(depth).expect("valid refinement");
        let b = other.refine(depth).expect("valid refinement");
        let cells = match op {
            SetOp::Union => a.cells.union(&b.cells).copied().collect(),
            SetOp::Intersection => a.cells.intersection(&b.cells).copied().collect(),
            SetOp::Difference => a.cells.difference(&b.cells).copied().collect(),
            SetOp::SymmetricDifference => a.cells.symmetric_difference(&b.cells).copied().collect(),
        };
        Hypothesis { depth, cells }
    }

    pub fn union(&self, other: &Hypothesis) -> Self {
        self.combine(other, SetOp::Union)
    }

    pub fn intersection(&self, other: &Hypothesis) -> Self {
        self.combine(other, SetOp::Intersection)
    }

    pub fn difference(&self, other: &Hypothesis) -> Self {
        self.combine(other, SetOp::Difference)
    }

    /// The disagreement region of two hypotheses.
    pub fn symmetric_difference(&self, other: &Hypothesis) -> Self {
        self.combine(other, SetOp::SymmetricDifference)
    }

    /// Semantic equality at the common refinement.
    pub fn equivalent(&self, other: &Hypothesis) -> bool {
        self.symmetric_difference(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &Hypothesis) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn is_subset(&self, other: &Hypothesis) -> bool {
        self.difference(other).is_empty()
    }

    /// Width-padded binary rendering of a cell at this depth.
    pub fn cell_string(&self, cell: u64) -> String {
        format!("{:0width$b}", cell, width = self.depth as usize)
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.depth)?;
        for (i, &c) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&self.cell_string(c))?;
        }
        Ok(())
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    /// Parses `n:c1,c2,...`, e.g. `2:00,11`; `2:` is the empty hypothesis.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (depth, cells) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing ':' in hypothesis {s:?}")))?;
        let depth: u32 = depth
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad depth in hypothesis {s:?}")))?;
        check_depth(depth)?;
        let mut set = BTreeSet::new();
        for cell in cells.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            if cell.len() != depth as usize || !cell.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::Parse(format!(
                    "cell {cell:?} is not a {depth}-bit binary string"
                )));
            }
            let value = u64::from_str_radix(cell, 2).expect("validated binary");
            if !set.insert(value) {
                return Err(Error::Parse(format!("duplicate cell {cell:?}")));
            }
        }
        Ok(Hypothesis { depth, cells: set })
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub x: BitString,
    pub y: bool,
}

impl LabeledExample {
    pub fn new(x: BitString, y: bool) -> Self {
        LabeledExample { x, y }
    }
}

/// A non-empty ordered sequence of labeled examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    examples: Vec<LabeledExample>,
}

impl LabeledSample {
    pub fn new(examples: Vec<LabeledExample>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(LabeledSample { examples })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Length of the shortest instance.
    pub fn min_instance_len(&self) -> usize {
        self.examples.iter().map(|e| e.x.len()).min().unwrap_or(0)
    }

    pub fn require_depth(&self, depth: u32) -> Result<()> {
        let len = self.min_instance_len();
        if len < depth as usize {
            return Err(Error::InstanceTooShort { len, depth });
        }
        Ok(())
    }

    /// Splits after the first `k` examples; both halves must be non-empty.
    pub fn split_at(&self, k: usize) -> Option<(LabeledSample, LabeledSample)> {
        if k == 0 || k >= self.examples.len() {
            return None;
        }
        let (a, b) = self.examples.split_at(k);
        Some((
            LabeledSample { examples: a.to_vec() },
            LabeledSample { examples: b.to_vec() },
        ))
    }

    /// The same instances with every label flipped.
    pub fn flipped(&self) -> LabeledSample {
        LabeledSample {
            examples: self
                .examples
                .iter()
                .map(|e| LabeledExample::new(e.x.clone(), !e.y))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> Hypothesis {
        s.parse().unwrap()
    }

    fn x(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert!(h("2:00,11").evaluate(&x("0010")).unwrap());
        assert!(!h("2:00,11").evaluate(&x("0110")).unwrap());
        for s in ["0", "1", "0111", "10"] {
            assert!(!h("1:").evaluate(&x(s)).unwrap());
        }
    }

    #[test]
    fn evaluate_rejects_short_instance() {
        let err = h("3:000").evaluate(&x("01")).unwrap_err();
        assert!(matches!(err, Error::InstanceTooShort { len: 2, depth: 3 }));
    }

    #[test]
    fn refine_examples() {
        assert_eq!(h("1:0").refine(2).unwrap(), h("2:00,01"));
        assert_eq!(h("2:00,11").refine(2).unwrap(), h("2:00,11"));
        assert_eq!(h("1:0,1").refine(3).unwrap(), Hypothesis::full(3).unwrap());
        assert!(matches!(
            h("2:00").refine(1),
            Err(Error::RefineToShallower { from: 2, to: 1 })
        ));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(h("2:00,01,10").complement(), h("2:11"));
        assert_eq!(h("1:").complement(), h("1:0,1"));
    }

    #[test]
    fn combine_examples() {
        assert_eq!(h("1:1").intersection(&h("2:10")), h("2:10"));
        assert_eq!(h("1:0").union(&h("1:1")), h("1:0,1"));
        assert_eq!(h("2:01,11").difference(&h("1:1")), h("2:01"));
    }

    #[test]
    fn symmetric_difference_examples() {
        let a = h("2:00,11");
        assert_eq!(a.symmetric_difference(&a), Hypothesis::empty(2).unwrap());
        assert_eq!(h("1:0").symmetric_difference(&h("1:1")), h("1:0,1"));
        assert_eq!(a.symmetric_difference(&h("2:00,01")), h("2:01,11"));
    }

    #[test]
    fn odd_position_intersections_match_enumeration() {
        for k in 1..=4u32 {
            let hs: Vec<_> = (1..=k).map(|j| Hypothesis::bit_is_one(2 * j - 1).unwrap()).collect();
            let meet = hs[1..].iter().fold(hs[0].clone(), |acc, h| acc.intersection(h));
            let depth = 2 * k - 1;
            assert_eq!(meet.depth(), depth);
            // enumerate every prefix and test the odd positions directly
            let expected: BTreeSet<u64> = (0..1u64 << depth)
                .filter(|&c| {
                    (1..=k).all(|j| {
                        let pos = 2 * j - 1; // one-based, MSB first
                        c >> (depth - pos) & 1 == 1
                    })
                })
                .collect();
            assert_eq!(meet.cells(), &expected);
            assert_eq!(meet.cell_count(), 1 << (k - 1));
        }
    }

    #[test]
    fn depth_is_not_normalized() {
        let coarse = h("1:0");
        let fine = h("2:00,01");
        assert_ne!(coarse, fine);
        assert!(coarse.equivalent(&fine));
    }

    #[test]
    fn text_encoding() {
        assert_eq!(h("2:").to_string(), "2:");
        assert_eq!(h(" 3:101,001 ").to_string(), "3:001,101");
        for bad in ["2", "x:00", "2:0", "2:002", "0:", "2:00,00", "63:"] {
            assert!(bad.parse::<Hypothesis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn bitstring_prefix_and_display() {
        let s = x("1011001");
        assert_eq!(s.prefix(3).unwrap(), 0b101);
        assert_eq!(s.to_string(), "1011001");
        assert_eq!(BitString::from_u64(0b0110, 4).unwrap(), x("0110"));
        let long: String = (0..130).map(|i| if i % 3 == 0 { '1' } else { '0' }).collect();
        assert_eq!(long.parse::<BitString>().unwrap().to_string(), long);
        assert!("".parse::<BitString>().is_err());
        assert!("012".parse::<BitString>().is_err());
    }

    #[test]
    fn from_mask_matches_cells() {
        assert_eq!(Hypothesis::from_mask(2, 0b1001).unwrap(), h("2:00,11"));
        assert!(Hypothesis::from_mask(1, 0b100).is_err());
    }

    #[test]
    fn depth_cap() {
        let cap = DepthCap::default();
        assert_eq!(cap.get(), 20);
        assert!(cap.check(20).is_ok());
        assert!(matches!(cap.check(21), Err(Error::DepthCap { depth: 21, cap: 20 })));
        assert!(DepthCap::new(0).is_err());
    }

    #[test]
    fn split_and_flip() {
        let ex = |s: &str, y| LabeledExample::new(x(s), y);
        let sample = LabeledSample::new(vec![ex("00", true), ex("01", false), ex("1", true)]).unwrap();
        assert_eq!(sample.min_instance_len(), 1);
        assert!(sample.require_depth(2).is_err());
        let (a, b) = sample.split_at(2).unwrap();
        assert_eq!((a.len(), b.len()), (2, 1));
        assert!(sample.split_at(3).is_none());
        assert!(!sample.flipped().examples()[0].y);
        assert!(LabeledSample::new(vec![]).is_err());
    }
}
