//! Seeded, reproducible partition samplers.
//!
//! All sampling is exact-rational: breakpoints and tags are drawn from
//! finite grids whose resolution is governed by the configured denominator
//! bound, which keeps arithmetic fast and output canonical.
//!
//! Mesh-constrained partitions are drawn by stratified jitter: the cell
//! count is drawn from the smallest range that guarantees the requested
//! diameter bound, interior breakpoints are placed on a uniform grid and
//! jittered by strictly less than an eighth of a cell, and each tag is
//! drawn uniformly from a grid over its cell. Jitter below an eighth cell
//! keeps breakpoints strictly increasing and the diameter under the bound
//! by construction; the draw is still re-checked exactly and retried.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::filters::{AvoidSet, FilterError};
use crate::partition::{Interval, TaggedPartition};
use crate::rational::Rational;
use crate::rng::{rng_for, SALT_FREE_SAMPLE};
use crate::exec;

/// Hard cap on cells per sampled partition; finer meshes are refused.
const MAX_CELLS: u64 = 4_000_000;

/// Knobs for the exact samplers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Grid resolution per cell for tags and jitter (>= 2).
    pub denominator_bound: u32,
    /// Redraw budget per tag before giving up.
    pub tag_retry_cap: u32,
    /// Redraw budget for a whole partition before giving up.
    pub partition_retry_cap: u32,
    /// Redraw budget when sampling through a restriction.
    pub restrict_retry_cap: u32,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            denominator_bound: 64,
            tag_retry_cap: 1000,
            partition_retry_cap: 64,
            restrict_retry_cap: 1000,
        }
    }
}

impl SamplerConfig {
    pub fn with_denominator_bound(bound: u32) -> Result<Self, FilterError> {
        if bound < 2 {
            return Err(FilterError::InvalidDenominatorBound { bound });
        }
        Ok(SamplerConfig {
            denominator_bound: bound,
            ..SamplerConfig::default()
        })
    }
}

/// Draws one partition of `domain` with diameter strictly below `delta`.
pub(crate) fn sample_mesh_partition(
    domain: &Interval,
    delta: &Rational,
    avoid: Option<&AvoidSet>,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TaggedPartition, FilterError> {
    if !delta.is_positive() {
        return Err(FilterError::NonPositiveDelta {
            delta: delta.clone(),
        });
    }
    let length = domain.length();
    // Smallest n with (5/4) * length / n < delta; with jitter under an
    // eighth cell every draw at such n meets the bound.
    let five_quarters = Rational::new(5, 4).expect("nonzero denominator");
    let n_min_big = (five_quarters * &length / delta).floor_int() + 1;
    let n_min = num::ToPrimitive::to_u64(&n_min_big)
        .filter(|n| *n <= MAX_CELLS)
        .ok_or_else(|| FilterError::InfeasibleMesh {
            delta: delta.clone(),
        })?;
    let n_max = n_min + (n_min / 4).max(1);
    if n_max > MAX_CELLS {
        return Err(FilterError::InfeasibleMesh {
            delta: delta.clone(),
        });
    }

    let d = cfg.denominator_bound as i64;
    for _ in 0..=cfg.partition_retry_cap {
        let n = rng.gen_range(n_min..=n_max);
        let step = &length / Rational::from(n);
        let jitter_unit = &step / Rational::integer(8 * d);
        let mut breakpoints = Vec::with_capacity(n as usize + 1);
        breakpoints.push(domain.lo().clone());
        for k in 1..n {
            let j = rng.gen_range(-(d - 1)..=(d - 1));
            let offset = &step * Rational::from(k) + &jitter_unit * Rational::integer(j);
            breakpoints.push(domain.lo() + &offset);
        }
        breakpoints.push(domain.hi().clone());

        let mesh_ok = breakpoints
            .windows(2)
            .all(|w| &w[1] - &w[0] < *delta && w[0] < w[1]);
        if !mesh_ok {
            continue;
        }
        let tags = draw_tags(&breakpoints, avoid, cfg, rng)?;
        let tp = TaggedPartition::new(domain.clone(), breakpoints, tags)?;
        return Ok(tp);
    }
    Err(FilterError::PartitionRetriesExhausted {
        cap: cfg.partition_retry_cap,
    })
}

/// Draws one unconstrained partition of `domain` with at most `max_cells`
/// cells, breakpoints on the `denominator_bound` grid.
pub(crate) fn sample_free_partition(
    domain: &Interval,
    max_cells: u32,
    avoid: Option<&AvoidSet>,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TaggedPartition, FilterError> {
    let grid = cfg.denominator_bound.max(2);
    let max_cells = max_cells.clamp(1, grid - 1);
    let n = rng.gen_range(1..=max_cells) as usize;
    let length = domain.length();

    let mut picks: Vec<u32> = Vec::with_capacity(n - 1);
    let mut attempts = 0u32;
    while picks.len() < n - 1 {
        attempts += 1;
        if attempts > cfg.tag_retry_cap {
            return Err(FilterError::PartitionRetriesExhausted {
                cap: cfg.tag_retry_cap,
            });
        }
        let p = rng.gen_range(1..grid);
        if !picks.contains(&p) {
            picks.push(p);
        }
    }
    picks.sort_unstable();

    let mut breakpoints = Vec::with_capacity(n + 1);
    breakpoints.push(domain.lo().clone());
    for p in picks {
        breakpoints.push(domain.lo() + &length * Rational::new(p as i64, grid as i64).unwrap());
    }
    breakpoints.push(domain.hi().clone());
    let tags = draw_tags(&breakpoints, avoid, cfg, rng)?;
    Ok(TaggedPartition::new(domain.clone(), breakpoints, tags)?)
}

/// One tag per cell, uniform on the cell's grid, distinct from the previous
/// tag and outside `avoid`.
fn draw_tags(
    breakpoints: &[Rational],
    avoid: Option<&AvoidSet>,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Rational>, FilterError> {
    let d = cfg.denominator_bound as i64;
    let mut tags: Vec<Rational> = Vec::with_capacity(breakpoints.len() - 1);
    for w in breakpoints.windows(2) {
        let width = &w[1] - &w[0];
        let unit = &width / Rational::integer(d);
        let mut accepted = None;
        for _ in 0..=cfg.tag_retry_cap {
            let u = rng.gen_range(0..=d);
            let t = &w[0] + &unit * Rational::integer(u);
            if tags.last() == Some(&t) {
                continue;
            }
            if let Some(set) = avoid {
                if set.contains(&t) {
                    continue;
                }
            }
            accepted = Some(t);
            break;
        }
        match accepted {
            Some(t) => tags.push(t),
            None => {
                return Err(FilterError::TagRetriesExhausted {
                    cap: cfg.tag_retry_cap,
                })
            }
        }
    }
    Ok(tags)
}

/// Draws `count` independent unconstrained partitions, reproducibly from
/// `seed`. Lane `i` of a given seed is always the same partition.
pub fn random_partitions(
    domain: &Interval,
    max_cells: u32,
    avoid: Option<&AvoidSet>,
    cfg: &SamplerConfig,
    seed: u64,
    count: usize,
) -> Result<Vec<TaggedPartition>, FilterError> {
    let lanes: Vec<u64> = (0..count as u64).collect();
    exec::try_map_ordered(lanes, |lane| {
        let mut rng = rng_for(seed, &[SALT_FREE_SAMPLE, lane]);
        sample_free_partition(domain, max_cells, avoid, cfg, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sampler_respects_diameter_bound() {
        let cfg = SamplerConfig::default();
        let domain = Interval::unit();
        for k in [1u64, 2, 5, 9] {
            let delta = Rational::new(1, k as i64).unwrap();
            let mut rng = rng_for(1, &[99, k]);
            let tp = sample_mesh_partition(&domain, &delta, None, &cfg, &mut rng).unwrap();
            assert!(tp.diameter() < delta, "k = {k}");
        }
    }

    #[test]
    fn mesh_sampler_is_reproducible() {
        let cfg = SamplerConfig::default();
        let domain = Interval::unit();
        let delta = Rational::new(1, 7).unwrap();
        let a = sample_mesh_partition(&domain, &delta, None, &cfg, &mut rng_for(3, &[0])).unwrap();
        let b = sample_mesh_partition(&domain, &delta, None, &cfg, &mut rng_for(3, &[0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn free_sampler_yields_valid_partitions_on_the_grid() {
        let cfg = SamplerConfig::default();
        let domain = Interval::unit();
        let parts = random_partitions(&domain, 8, None, &cfg, 11, 50).unwrap();
        assert_eq!(parts.len(), 50);
        for tp in &parts {
            assert!(tp.cell_count() <= 8);
            for b in tp.breakpoints() {
                let q = b.denom();
                assert_eq!(
                    num::BigInt::from(64) % q,
                    num::BigInt::from(0),
                    "breakpoint {b} off the 1/64 grid"
                );
            }
        }
    }

    #[test]
    fn avoid_set_rejection_skips_avoided_tags() {
        let cfg = SamplerConfig::default();
        let domain = Interval::unit();
        let avoid = AvoidSet::reciprocal_integers();
        let parts = random_partitions(&domain, 6, Some(&avoid), &cfg, 5, 100).unwrap();
        for tp in &parts {
            for t in tp.tags() {
                assert!(!avoid.contains(t), "tag {t} is a reciprocal integer");
            }
        }
    }

    #[test]
    fn infeasible_mesh_is_an_error() {
        let cfg = SamplerConfig::default();
        let domain = Interval::unit();
        let delta = Rational::new(1, 100_000_000).unwrap();
        let mut rng = rng_for(0, &[]);
        assert!(matches!(
            sample_mesh_partition(&domain, &delta, None, &cfg, &mut rng),
            Err(FilterError::InfeasibleMesh { .. })
        ));
    }
}
