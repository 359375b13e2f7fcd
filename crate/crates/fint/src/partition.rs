//! Tagged partitions of a rational interval.
//!
//! A tagged partition of `[lo, hi]` is a strictly increasing sequence of
//! breakpoints `lo = b_0 < b_1 < ... < b_n = hi` together with one tag per
//! cell, `t_k` in `[b_{k-1}, b_k]`. Tag values are pairwise distinct across
//! cells; a tag that sits exactly on an interior breakpoint belongs to the
//! cell that lists it. Zero-length cells are rejected: they contribute
//! nothing to any weighted sum and would break the identity axiom of the
//! partition metric.
//!
//! All values are immutable once constructed, so partitions can be shared
//! freely across worker threads.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

/// Validation errors for intervals, partitions and concatenation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("interval is empty or reversed: lo must be < hi (got {lo} .. {hi})")]
    EmptyInterval { lo: Rational, hi: Rational },
    #[error("partition needs at least one cell")]
    NoCells,
    #[error("{breakpoints} breakpoints require {} tags, got {tags}", breakpoints - 1)]
    LengthMismatch { breakpoints: usize, tags: usize },
    #[error("breakpoints must start at the domain's lo and end at its hi")]
    EndpointMismatch,
    #[error("breakpoints must be strictly increasing (violated at position {index})")]
    NonMonotoneBreakpoints { index: usize },
    #[error("tag {tag} lies outside cell {index}")]
    TagOutOfCell { index: usize, tag: Rational },
    #[error("duplicate tag value {tag}")]
    DuplicateTag { tag: Rational },
    #[error("parts do not abut: {left_hi} != {right_lo}")]
    NonAbuttingDomains { left_hi: Rational, right_lo: Rational },
}

/// A nondegenerate closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(Rational, Rational)", into = "(Rational, Rational)")]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, PartitionError> {
        if lo >= hi {
            return Err(PartitionError::EmptyInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Interval {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    /// Closed containment: `lo <= t <= hi`.
    pub fn contains(&self, t: &Rational) -> bool {
        &self.lo <= t && t <= &self.hi
    }

    /// Open containment: `lo < t < hi`.
    pub fn contains_open(&self, t: &Rational) -> bool {
        &self.lo < t && t < &self.hi
    }

    /// Whether `other` lies inside `self` (endpoints may coincide).
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::integer(2)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl TryFrom<(Rational, Rational)> for Interval {
    type Error = PartitionError;
    fn try_from((lo, hi): (Rational, Rational)) -> Result<Self, Self::Error> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (Rational, Rational) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

/// One cell of a tagged partition: `[lo, hi]` tagged at `tag`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell<'a> {
    pub lo: &'a Rational,
    pub hi: &'a Rational,
    pub tag: &'a Rational,
}

impl Cell<'_> {
    pub fn length(&self) -> Rational {
        self.hi - self.lo
    }
}

/// A validated tagged partition of a rational interval.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct TaggedPartition {
    domain: Interval,
    breakpoints: Vec<Rational>,
    tags: Vec<Rational>,
}

/// Wire form of a partition; see the canonical JSON layout in the crate docs.
#[derive(Serialize, Deserialize)]
struct RawPartition {
    domain: (Rational, Rational),
    breakpoints: Vec<Rational>,
    tags: Vec<Rational>,
}

impl TryFrom<RawPartition> for TaggedPartition {
    type Error = PartitionError;
    fn try_from(raw: RawPartition) -> Result<Self, Self::Error> {
        let domain = Interval::new(raw.domain.0, raw.domain.1)?;
        TaggedPartition::new(domain, raw.breakpoints, raw.tags)
    }
}

impl From<TaggedPartition> for RawPartition {
    fn from(tp: TaggedPartition) -> Self {
        RawPartition {
            domain: (tp.domain.lo, tp.domain.hi),
            breakpoints: tp.breakpoints,
            tags: tp.tags,
        }
    }
}

impl TaggedPartition {
    /// Validates and builds a tagged partition.
    ///
    /// Rejects, each with its own error kind: mismatched sequence lengths,
    /// breakpoints that do not span the domain, non-monotone breakpoints,
    /// tags outside their cell, and duplicate tag values.
    pub fn new(
        domain: Interval,
        breakpoints: Vec<Rational>,
        tags: Vec<Rational>,
    ) -> Result<Self, PartitionError> {
        if breakpoints.len() < 2 || tags.is_empty() {
            return Err(PartitionError::NoCells);
        }
        if breakpoints.len() != tags.len() + 1 {
            return Err(PartitionError::LengthMismatch {
                breakpoints: breakpoints.len(),
                tags: tags.len(),
            });
        }
        if breakpoints[0] != *domain.lo() || breakpoints[breakpoints.len() - 1] != *domain.hi() {
            return Err(PartitionError::EndpointMismatch);
        }
        for i in 1..breakpoints.len() {
            if breakpoints[i - 1] >= breakpoints[i] {
                return Err(PartitionError::NonMonotoneBreakpoints { index: i });
            }
        }
        for (k, tag) in tags.iter().enumerate() {
            if tag < &breakpoints[k] || tag > &breakpoints[k + 1] {
                return Err(PartitionError::TagOutOfCell {
                    index: k,
                    tag: tag.clone(),
                });
            }
        }
        // Tags are non-decreasing once each lies in its cell, so duplicates
        // can only be adjacent.
        for k in 1..tags.len() {
            if tags[k - 1] == tags[k] {
                return Err(PartitionError::DuplicateTag {
                    tag: tags[k].clone(),
                });
            }
        }
        Ok(TaggedPartition {
            domain,
            breakpoints,
            tags,
        })
    }

    /// The single-cell partition of `domain` tagged at `tag`.
    pub fn single_cell(domain: Interval, tag: Rational) -> Result<Self, PartitionError> {
        let bps = vec![domain.lo().clone(), domain.hi().clone()];
        TaggedPartition::new(domain, bps, vec![tag])
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn tags(&self) -> &[Rational] {
        &self.tags
    }

    pub fn cell_count(&self) -> usize {
        self.tags.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> {
        self.breakpoints
            .windows(2)
            .zip(self.tags.iter())
            .map(|(w, tag)| Cell {
                lo: &w[0],
                hi: &w[1],
                tag,
            })
    }

    /// Maximum cell length.
    pub fn diameter(&self) -> Rational {
        self.cells()
            .map(|c| c.length())
            .max()
            .expect("partition has at least one cell")
    }

    /// The exact weighted sum `sum_k f(t_k) * (b_k - b_{k-1})`.
    pub fn riemann_sum<F>(&self, mut f: F) -> Rational
    where
        F: FnMut(&Rational) -> Rational,
    {
        self.cells()
            .map(|c| f(c.tag) * c.length())
            .sum()
    }

    /// The sparse map from tag value to covered length.
    pub fn tag_spectrum(&self) -> TagSpectrum {
        let mut entries = BTreeMap::new();
        for c in self.cells() {
            entries.insert(c.tag.clone(), c.length());
        }
        TagSpectrum { entries }
    }
}

impl fmt::Debug for TaggedPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TaggedPartition {{ domain: {:?}, breakpoints: [", self.domain)?;
        for (i, b) in self.breakpoints.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", b)?;
        }
        write!(f, "], tags: [")?;
        for (i, t) in self.tags.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", t)?;
        }
        write!(f, "] }}")
    }
}

/// Sparse association from tag value to the total length it covers.
///
/// The value at a tag `t` is the length of the cell tagged by `t`, and zero
/// (represented by absence) at every other point. Entries always sum to the
/// length of the partition's domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSpectrum {
    entries: BTreeMap<Rational, Rational>,
}

impl TagSpectrum {
    /// Covered length at `t`; zero when `t` is not a tag.
    pub fn coverage(&self, t: &Rational) -> Rational {
        self.entries.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> Rational {
        self.entries.values().cloned().sum()
    }

    /// Exact l1 distance between two spectra.
    pub fn l1_distance(&self, other: &TagSpectrum) -> Rational {
        let mut total = Rational::zero();
        let mut left = self.entries.iter().peekable();
        let mut right = other.entries.iter().peekable();
        loop {
            match (left.peek(), right.peek()) {
                (Some((lt, lv)), Some((rt, rv))) => {
                    use std::cmp::Ordering::*;
                    match lt.cmp(rt) {
                        Less => {
                            total = total + (*lv).clone();
                            left.next();
                        }
                        Greater => {
                            total = total + (*rv).clone();
                            right.next();
                        }
                        Equal => {
                            total = total + (*lv - *rv).abs();
                            left.next();
                            right.next();
                        }
                    }
                }
                (Some((_, lv)), None) => {
                    total = total + (*lv).clone();
                    left.next();
                }
                (None, Some((_, rv))) => {
                    total = total + (*rv).clone();
                    right.next();
                }
                (None, None) => break,
            }
        }
        total
    }
}

/// Concatenates three partitions of abutting intervals into one.
///
/// Errors when the domains do not abut exactly or when a tag value repeats
/// across the pieces.
pub fn concat(
    left: &TaggedPartition,
    mid: &TaggedPartition,
    right: &TaggedPartition,
) -> Result<TaggedPartition, PartitionError> {
    concat_all(&[left, mid, right])
}

/// Concatenates any number of abutting partitions, in order.
pub fn concat_all(parts: &[&TaggedPartition]) -> Result<TaggedPartition, PartitionError> {
    let first = parts.first().ok_or(PartitionError::NoCells)?;
    let last = parts.last().expect("nonempty");
    for w in parts.windows(2) {
        if w[0].domain().hi() != w[1].domain().lo() {
            return Err(PartitionError::NonAbuttingDomains {
                left_hi: w[0].domain().hi().clone(),
                right_lo: w[1].domain().lo().clone(),
            });
        }
    }
    let domain = Interval::new(first.domain().lo().clone(), last.domain().hi().clone())?;
    let mut breakpoints = Vec::new();
    let mut tags = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let skip = usize::from(i > 0); // shared junction breakpoint
        breakpoints.extend(part.breakpoints().iter().skip(skip).cloned());
        tags.extend(part.tags().iter().cloned());
    }
    TaggedPartition::new(domain, breakpoints, tags)
}

/// Parses a partition from its canonical JSON text.
pub fn partition_from_json(json: &str) -> Result<TaggedPartition, serde_json::Error> {
    serde_json::from_str(json)
}

/// Serializes a partition to its canonical (compact) JSON text.
pub fn partition_to_json(tp: &TaggedPartition) -> String {
    serde_json::to_string(tp).expect("partition serialization cannot fail")
}
