//! Restriction of tagged partitions and filters to a subsegment, with
//! complementation witnesses.
//!
//! Restricting a partition to `[alpha, beta]` keeps the interior structure
//! and re-anchors the ends: breakpoints outside `[alpha, beta]` are dropped,
//! `alpha` and `beta` are appended, tags are cut down to `[alpha, beta]`,
//! and at each end the extreme interior breakpoint is dropped exactly when
//! the surviving extreme tag would otherwise be stranded outside its cell.
//! The comparison at the left end is between the least tag in
//! `(alpha, beta)` and the least breakpoint in `(alpha, beta)` — a tag to
//! the right of that breakpoint means the straddling cell lost its tag, so
//! the breakpoint is dropped and the first cell becomes `[alpha, next]`;
//! a tag to its left keeps it. The right end is symmetric with maxima. Ties
//! (tag exactly on the extreme breakpoint) keep the breakpoint. Which ends
//! dropped their breakpoint is recorded as a case id: 1 = both, 2 = right
//! only, 3 = left only, 4 = neither (including the degenerate single-cell
//! restriction when no breakpoint lies strictly inside).
//!
//! The restriction of a base set `B_k` is the set of restriction images of
//! its members. A base is complemented over `[alpha, beta]` at an index
//! when any two restrictions extend back to members of `B_k` using one
//! shared pair of outer partitions; witnesses are constructed per base
//! kind from its mesh bound and avoid set.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::filters::{
    induced_subsegment_base, nudge_off_avoid, FilterBase, FilterError,
};
use crate::integrand::Integrand;
use crate::integrator::{
    estimate_filter_limit, riemann_sum, ConvergenceReport, EstimateOpts, IntegrateError,
};
use crate::partition::{concat_all, Interval, PartitionError, TaggedPartition};
use crate::rational::Rational;
use crate::rng::{derive, SALT_COMPLEMENT};

#[derive(Debug, Error)]
pub enum SubsegmentError {
    #[error("sub-interval {sub} is not inside the partition domain {domain}")]
    NotInside { sub: String, domain: String },
    #[error("no tag lies strictly inside {sub}")]
    NoTagInside { sub: String },
    #[error("restriction output is not a valid partition: {source} (case {})", trace.case_id)]
    InvalidOutput {
        trace: Box<RestrictionTrace>,
        source: PartitionError,
    },
    #[error("no complementation witness strategy for base `{base}`")]
    NoWitnessStrategy { base: String },
    #[error("restricted part has diameter {diameter}, at or above the base's bound {bound}")]
    WitnessInfeasible { diameter: Rational, bound: Rational },
    #[error("assembled witness was rejected by base `{base}` at index {index}")]
    WitnessRejected { base: String, index: u32 },
    #[error("no sampling index with restrictions fine enough for index {index}")]
    ComplementSamplingInfeasible { index: u32 },
    #[error("full-domain estimate did not converge")]
    FullRunNotConverged,
    #[error("base is not complemented over the sub-interval at index {index}")]
    NotComplemented { index: u32 },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Audit record of one restriction: which comparisons were made and what
/// was dropped or added.
#[derive(Debug, Clone, Serialize)]
pub struct RestrictionTrace {
    /// 1 = both extreme interior breakpoints dropped, 2 = right only,
    /// 3 = left only, 4 = neither.
    pub case_id: u8,
    /// Raw left comparison (least tag in the open sub-interval, least
    /// interior breakpoint), when an interior breakpoint exists.
    pub left_comparison: Option<(Rational, Rational)>,
    /// Raw right comparison (greatest tag, greatest interior breakpoint).
    pub right_comparison: Option<(Rational, Rational)>,
    pub dropped_left_breakpoint: Option<Rational>,
    pub dropped_right_breakpoint: Option<Rational>,
    pub dropped_tags: Vec<Rational>,
    pub added_endpoints: (Rational, Rational),
}

/// Restricts `tp` to `sub`, returning the restriction and its trace.
///
/// Requires `sub` inside the domain and at least one tag strictly inside
/// `sub`. Restriction to the full domain is the identity. Output validity
/// is re-checked; corner placements (for example a surviving tag exactly on
/// `alpha` next to an interior tag) surface as `InvalidOutput` with the
/// trace attached.
pub fn restrict(
    tp: &TaggedPartition,
    sub: &Interval,
) -> Result<(TaggedPartition, RestrictionTrace), SubsegmentError> {
    if !tp.domain().contains_interval(sub) {
        return Err(SubsegmentError::NotInside {
            sub: sub.to_string(),
            domain: tp.domain().to_string(),
        });
    }
    let alpha = sub.lo();
    let beta = sub.hi();

    let interior_tags: Vec<&Rational> =
        tp.tags().iter().filter(|t| sub.contains_open(t)).collect();
    if interior_tags.is_empty() {
        return Err(SubsegmentError::NoTagInside {
            sub: sub.to_string(),
        });
    }
    let kept_tags: Vec<Rational> = tp
        .tags()
        .iter()
        .filter(|t| sub.contains(t))
        .cloned()
        .collect();
    let dropped_tags: Vec<Rational> = tp
        .tags()
        .iter()
        .filter(|t| !sub.contains(t))
        .cloned()
        .collect();

    let interior_bps: Vec<&Rational> = tp
        .breakpoints()
        .iter()
        .filter(|b| sub.contains_open(b))
        .collect();

    let mut dropped_left = None;
    let mut dropped_right = None;
    let mut left_comparison = None;
    let mut right_comparison = None;

    if !interior_bps.is_empty() {
        let min_bp = interior_bps[0];
        let max_bp = interior_bps[interior_bps.len() - 1];
        let min_tag = interior_tags[0];
        let max_tag = interior_tags[interior_tags.len() - 1];
        left_comparison = Some((min_tag.clone(), min_bp.clone()));
        right_comparison = Some(((*max_tag).clone(), max_bp.clone()));
        if min_tag > min_bp {
            dropped_left = Some(min_bp.clone());
        }
        if max_tag < max_bp {
            dropped_right = Some(max_bp.clone());
        }
    }

    let mut breakpoints = Vec::with_capacity(interior_bps.len() + 2);
    breakpoints.push(alpha.clone());
    for b in &interior_bps {
        if Some(*b) == dropped_left.as_ref() || Some(*b) == dropped_right.as_ref() {
            continue;
        }
        breakpoints.push((*b).clone());
    }
    breakpoints.push(beta.clone());

    let case_id = match (dropped_left.is_some(), dropped_right.is_some()) {
        (true, true) => 1,
        (false, true) => 2,
        (true, false) => 3,
        (false, false) => 4,
    };
    let trace = RestrictionTrace {
        case_id,
        left_comparison,
        right_comparison,
        dropped_left_breakpoint: dropped_left,
        dropped_right_breakpoint: dropped_right,
        dropped_tags,
        added_endpoints: (alpha.clone(), beta.clone()),
    };

    match TaggedPartition::new(sub.clone(), breakpoints, kept_tags) {
        Ok(out) => Ok((out, trace)),
        Err(source) => Err(SubsegmentError::InvalidOutput {
            trace: Box::new(trace),
            source,
        }),
    }
}

/// Outer partitions extending a restriction back to the full domain, plus
/// the assembled full-domain partition.
#[derive(Debug, Clone, Serialize)]
pub struct ComplementWitness {
    pub left: Option<TaggedPartition>,
    pub right: Option<TaggedPartition>,
    pub assembled: TaggedPartition,
    pub index: u32,
}

/// Uniform midpoint-tagged partition of `[lo, hi]` with diameter strictly
/// below `bound`, tags nudged off the avoid set when one applies.
fn uniform_outer_part(
    domain: Interval,
    bound: &Rational,
    avoid: Option<&crate::filters::AvoidSet>,
) -> Result<TaggedPartition, SubsegmentError> {
    let length = domain.length();
    let cells_big = (&length / bound).floor_int() + 1;
    let cells = num::ToPrimitive::to_u64(&cells_big).ok_or_else(|| {
        SubsegmentError::WitnessInfeasible {
            diameter: length.clone(),
            bound: bound.clone(),
        }
    })?;
    let step = &length / Rational::from(cells);
    let mut breakpoints = Vec::with_capacity(cells as usize + 1);
    for i in 0..=cells {
        if i == cells {
            breakpoints.push(domain.hi().clone());
        } else {
            breakpoints.push(domain.lo() + &step * Rational::from(i));
        }
    }
    let mut tags: Vec<Rational> = Vec::with_capacity(cells as usize);
    let half = Rational::new(1, 2).expect("nonzero");
    for w in breakpoints.windows(2) {
        let mut tag = (&w[0] + &w[1]) * &half;
        if let Some(set) = avoid {
            if set.contains(&tag) {
                tag = nudge_off_avoid(&tag, &w[0], &w[1], set, &tags).ok_or_else(|| {
                    SubsegmentError::WitnessInfeasible {
                        diameter: length.clone(),
                        bound: bound.clone(),
                    }
                })?;
            }
        }
        tags.push(tag);
    }
    TaggedPartition::new(domain, breakpoints, tags).map_err(|source| {
        SubsegmentError::InvalidOutput {
            trace: Box::new(RestrictionTrace {
                case_id: 4,
                left_comparison: None,
                right_comparison: None,
                dropped_left_breakpoint: None,
                dropped_right_breakpoint: None,
                dropped_tags: Vec::new(),
                added_endpoints: (Rational::zero(), Rational::zero()),
            }),
            source,
        }
    })
}

/// Builds the shared outer parts for extending restrictions over `sub` back
/// into members of `base`'s `B_index`. Depends only on the base, the index
/// and the sub-interval, never on the restricted partition, so one pair of
/// outer parts serves every restriction.
pub fn outer_parts(
    base: &dyn FilterBase,
    index: u32,
    sub: &Interval,
) -> Result<(Option<TaggedPartition>, Option<TaggedPartition>), SubsegmentError> {
    let bound = base
        .mesh_bound(index)
        .ok_or_else(|| SubsegmentError::NoWitnessStrategy {
            base: base.describe(),
        })?;
    let domain = base.domain();
    let avoid = base.avoid_set();
    let left = if domain.lo() < sub.lo() {
        Some(uniform_outer_part(
            Interval::new(domain.lo().clone(), sub.lo().clone()).expect("nondegenerate"),
            &bound,
            avoid,
        )?)
    } else {
        None
    };
    let right = if sub.hi() < domain.hi() {
        Some(uniform_outer_part(
            Interval::new(sub.hi().clone(), domain.hi().clone()).expect("nondegenerate"),
            &bound,
            avoid,
        )?)
    } else {
        None
    };
    Ok((left, right))
}

/// Extends `restricted` to a full-domain member of `base`'s `B_index` by
/// attaching constructed outer parts, and proves membership by checking it.
///
/// Errors when the base has no witness strategy (no mesh bound), when the
/// restricted part already violates the mesh bound (the assembled diameter
/// is at least the middle part's diameter, so no witness can exist), or
/// when the assembled partition fails the membership check.
pub fn complement_witness(
    base: &dyn FilterBase,
    index: u32,
    restricted: &TaggedPartition,
) -> Result<ComplementWitness, SubsegmentError> {
    let bound = base
        .mesh_bound(index)
        .ok_or_else(|| SubsegmentError::NoWitnessStrategy {
            base: base.describe(),
        })?;
    let diameter = restricted.diameter();
    if diameter >= bound {
        return Err(SubsegmentError::WitnessInfeasible { diameter, bound });
    }
    let (left, right) = outer_parts(base, index, restricted.domain())?;
    let assembled = assemble(&left, restricted, &right)?;
    if !base.is_member(index, &assembled) {
        return Err(SubsegmentError::WitnessRejected {
            base: base.describe(),
            index,
        });
    }
    Ok(ComplementWitness {
        left,
        right,
        assembled,
        index,
    })
}

fn assemble(
    left: &Option<TaggedPartition>,
    mid: &TaggedPartition,
    right: &Option<TaggedPartition>,
) -> Result<TaggedPartition, SubsegmentError> {
    let mut parts: Vec<&TaggedPartition> = Vec::with_capacity(3);
    if let Some(l) = left {
        parts.push(l);
    }
    parts.push(mid);
    if let Some(r) = right {
        parts.push(r);
    }
    concat_all(&parts).map_err(|e| SubsegmentError::Filter(FilterError::Partition(e)))
}

/// A pair of sampled restrictions with their shared-outer-part extensions.
#[derive(Debug, Clone)]
pub struct ComplementedPair {
    pub first: TaggedPartition,
    pub second: TaggedPartition,
    pub assembled_first: TaggedPartition,
    pub assembled_second: TaggedPartition,
}

/// Samples `pairs` pairs of genuine members of the restriction of `B_index`
/// over `sub` and extends both sides of each pair with one shared pair of
/// outer parts.
///
/// Restrictions are drawn from a finer index `j` (restriction can merge one
/// boundary cell per side, doubling the diameter, so `j` is chosen with
/// `2 * bound(j) <= bound(index)`); members of `B_j` are members of
/// `B_index`, hence their restrictions belong to the restriction of
/// `B_index`.
pub fn complemented_pairs(
    base: &dyn FilterBase,
    sub: &Interval,
    index: u32,
    pairs: usize,
    seed: u64,
) -> Result<Vec<ComplementedPair>, SubsegmentError> {
    let bound = base
        .mesh_bound(index)
        .ok_or_else(|| SubsegmentError::NoWitnessStrategy {
            base: base.describe(),
        })?;
    let two = Rational::integer(2);
    let mut sample_index = None;
    for j in index..=index.saturating_mul(8).max(index + 8) {
        if let Some(dj) = base.mesh_bound(j) {
            if &two * &dj <= bound {
                sample_index = Some(j);
                break;
            }
        }
    }
    let j = sample_index.ok_or(SubsegmentError::ComplementSamplingInfeasible { index })?;

    let identity = sub == base.domain();
    let restrict_one = |lane: u64| -> Result<TaggedPartition, SubsegmentError> {
        for attempt in 0..1000u64 {
            let s = derive(seed, &[SALT_COMPLEMENT, attempt]);
            let parent = base.sample_lane(j, s, lane)?;
            if identity {
                return Ok(parent);
            }
            if let Ok((restricted, _)) = restrict(&parent, sub) {
                return Ok(restricted);
            }
        }
        Err(SubsegmentError::Filter(
            FilterError::RestrictionSamplingExhausted { cap: 1000 },
        ))
    };

    let lanes: Vec<u64> = (0..(2 * pairs) as u64).collect();
    let restrictions: Vec<TaggedPartition> = crate::exec::try_map_ordered(lanes, restrict_one)?;

    let (left, right) = outer_parts(base, index, sub)?;
    let mut out = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let first = restrictions[2 * p].clone();
        let second = restrictions[2 * p + 1].clone();
        let assembled_first = assemble(&left, &first, &right)?;
        let assembled_second = assemble(&left, &second, &right)?;
        out.push(ComplementedPair {
            first,
            second,
            assembled_first,
            assembled_second,
        });
    }
    Ok(out)
}

/// Verdict of the sampled complementation check.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ComplementedVerdict {
    /// Every sampled pair of restrictions extended to members of `B_index`
    /// with one shared pair of outer parts.
    Verified { index: u32, pairs: usize },
    /// Some pair could not be extended by the strategy. Never a disproof.
    Unknown {
        index: u32,
        pair: Box<(TaggedPartition, TaggedPartition)>,
    },
}

impl ComplementedVerdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, ComplementedVerdict::Verified { .. })
    }
}

/// Checks, on `pairs` sampled pairs of restrictions of `B_index` over
/// `sub`, that a single shared pair of outer parts extends both restrictions
/// of each pair to members of `B_index`.
pub fn check_complemented(
    base: &dyn FilterBase,
    sub: &Interval,
    index: u32,
    pairs: usize,
    seed: u64,
) -> Result<ComplementedVerdict, SubsegmentError> {
    let sampled = complemented_pairs(base, sub, index, pairs, seed)?;
    for pair in &sampled {
        let ok = base.is_member(index, &pair.assembled_first)
            && base.is_member(index, &pair.assembled_second);
        if !ok {
            return Ok(ComplementedVerdict::Unknown {
                index,
                pair: Box::new((pair.first.clone(), pair.second.clone())),
            });
        }
    }
    Ok(ComplementedVerdict::Verified {
        index,
        pairs: sampled.len(),
    })
}

/// Report of a subsegment integration run.
#[derive(Debug, Clone, Serialize)]
pub struct SubsegmentIntegrationReport {
    pub full: ConvergenceReport,
    pub sub: ConvergenceReport,
    pub complemented_indices: Vec<u32>,
    pub cancellation_pairs: usize,
    /// Exact identity `S(full_1) - S(full_2) = S(restricted_1) -
    /// S(restricted_2)` held on every sampled complemented pair.
    pub cancellation_exact: bool,
    pub pass: bool,
}

/// Estimates the limit of `f` over the restriction of `base` to `sub`.
///
/// Preconditions, both checked here: the full-domain estimate converges,
/// and the base is complemented over `sub` at every index up to the depth.
/// On the sampled complemented pairs the exact cancellation identity of
/// shared outer parts is also verified.
pub fn check_subsegment_integration(
    f: &Integrand,
    base: &Arc<dyn FilterBase>,
    sub: &Interval,
    opts: &EstimateOpts,
    pairs_per_index: usize,
) -> Result<SubsegmentIntegrationReport, SubsegmentError> {
    let full = estimate_filter_limit(f, &**base, opts)?;
    if !full.verdict.is_converged() {
        return Err(SubsegmentError::FullRunNotConverged);
    }

    let mut complemented_indices = Vec::new();
    let mut cancellation_pairs = 0usize;
    let mut cancellation_exact = true;
    for k in 1..=opts.depth {
        let pairs = complemented_pairs(&**base, sub, k, pairs_per_index, opts.seed)?;
        for pair in &pairs {
            let member = base.is_member(k, &pair.assembled_first)
                && base.is_member(k, &pair.assembled_second);
            if !member {
                return Err(SubsegmentError::NotComplemented { index: k });
            }
            let full_diff =
                riemann_sum(f, &pair.assembled_first) - riemann_sum(f, &pair.assembled_second);
            let restricted_diff = riemann_sum(f, &pair.first) - riemann_sum(f, &pair.second);
            cancellation_pairs += 1;
            if full_diff != restricted_diff {
                cancellation_exact = false;
            }
        }
        complemented_indices.push(k);
    }

    let induced = induced_subsegment_base(Arc::clone(base), sub.clone())?;
    let sub_report = estimate_filter_limit(f, &induced, opts)?;
    let pass = sub_report.verdict.is_converged() && cancellation_exact;
    Ok(SubsegmentIntegrationReport {
        full,
        sub: sub_report,
        complemented_indices,
        cancellation_pairs,
        cancellation_exact,
        pass,
    })
}
