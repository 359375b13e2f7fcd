//! Filter-limit estimation of weighted sums, boundedness probes, linearity
//! checks and weighted cover sums.
//!
//! A limit over a filter quantifies over every member of base sets, which
//! sampling cannot decide, so estimates are certified only as Cauchy-window
//! verdicts over sampled base sets:
//!
//! * `Converged` — all sums in the trailing window of indices lie within the
//!   tolerance; the estimate is their exact mean.
//! * `NotCauchy` — issued from envelope evidence alone: at every index, every
//!   sampled partition admits tag choices spreading the sum by at least the
//!   tolerance (exact, tight envelopes; only for bases that leave tags
//!   unconstrained). Sample spread never triggers this verdict.
//! * `Inconclusive` — anything else.

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::filters::{AvoidSet, FilterBase, FilterError};
use crate::integrand::{Bound, Integrand, IntegrandError};
use crate::partition::{Interval, TaggedPartition};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("depth must be >= 2 (got {depth})")]
    InvalidDepth { depth: u32 },
    #[error("tolerance must be positive (got {tolerance})")]
    NonPositiveTolerance { tolerance: Rational },
    #[error("samples per index must be >= 1")]
    ZeroSamples,
    #[error("window must be >= 1")]
    ZeroWindow,
    #[error("need at least two strictly increasing breakpoints")]
    InvalidBreakpoints,
    #[error("estimate for {which} did not converge")]
    NotConverged { which: String },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
}

/// The exact weighted sum of `f` over a tagged partition.
pub fn riemann_sum(f: &Integrand, tp: &TaggedPartition) -> Rational {
    tp.riemann_sum(|t| f.eval(t))
}

/// Exact sample statistics of the weighted sums at one base index.
#[derive(Debug, Clone, Serialize)]
pub struct IndexStats {
    pub index: u32,
    pub n_samples: usize,
    pub min: Rational,
    pub max: Rational,
    pub mean: Rational,
}

impl IndexStats {
    pub fn width(&self) -> Rational {
        &self.max - &self.min
    }
}

/// Verdict of a limit estimation run.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Converged {
        estimate: Rational,
        window_width: Rational,
    },
    NotCauchy {
        index: u32,
        lower: Bound,
        upper: Bound,
        witness: TaggedPartition,
    },
    Inconclusive,
}

impl Verdict {
    pub fn estimate(&self) -> Option<&Rational> {
        match self {
            Verdict::Converged { estimate, .. } => Some(estimate),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Verdict::Converged { .. })
    }
}

/// Full record of a limit estimation run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub integrand: String,
    pub base: String,
    pub depth: u32,
    pub samples_per_index: usize,
    pub window: usize,
    pub tolerance: Rational,
    pub seed: u64,
    pub indices: Vec<IndexStats>,
    pub verdict: Verdict,
}

/// Options for [`estimate_filter_limit`].
#[derive(Debug, Clone)]
pub struct EstimateOpts {
    pub depth: u32,
    pub samples_per_index: usize,
    pub tolerance: Rational,
    /// Trailing indices forming the Cauchy window.
    pub window: usize,
    pub seed: u64,
}

impl EstimateOpts {
    pub fn new(depth: u32, samples_per_index: usize, tolerance: Rational, seed: u64) -> Self {
        EstimateOpts {
            depth,
            samples_per_index,
            tolerance,
            window: 3,
            seed,
        }
    }
}

struct SampleEval {
    sum: Rational,
    env_width: Option<Bound>,
    witness: Option<(TaggedPartition, Bound, Bound)>,
}

/// Samples the weighted sums of `f` on `B_1 .. B_depth` of `base` and issues
/// a Cauchy-window verdict. Deterministic given the seed, independent of
/// worker count.
pub fn estimate_filter_limit(
    f: &Integrand,
    base: &dyn FilterBase,
    opts: &EstimateOpts,
) -> Result<ConvergenceReport, IntegrateError> {
    if opts.depth < 2 {
        return Err(IntegrateError::InvalidDepth { depth: opts.depth });
    }
    if !opts.tolerance.is_positive() {
        return Err(IntegrateError::NonPositiveTolerance {
            tolerance: opts.tolerance.clone(),
        });
    }
    if opts.samples_per_index == 0 {
        return Err(IntegrateError::ZeroSamples);
    }
    if opts.window == 0 {
        return Err(IntegrateError::ZeroWindow);
    }

    // Envelope (oscillation) evidence is sound only when the base leaves tag
    // placement unconstrained and every envelope is tight.
    let mut env_evidence = !base.constrains_tags();
    let mut indices = Vec::with_capacity(opts.depth as usize);
    let mut sums_per_index: Vec<(Rational, usize)> = Vec::with_capacity(opts.depth as usize);
    let mut extremes: Vec<(Rational, Rational)> = Vec::with_capacity(opts.depth as usize);
    let mut min_env_width: Vec<Bound> = Vec::new();
    let mut witness: Option<(u32, TaggedPartition, Bound, Bound)> = None;

    for k in 1..=opts.depth {
        let keep_witness = env_evidence && k == 1;
        let want_env = env_evidence;
        let lanes: Vec<u64> = (0..opts.samples_per_index as u64).collect();
        let rows: Vec<SampleEval> = exec::try_map_ordered(lanes, |lane| {
            let tp = base.sample_lane(k, opts.seed, lane)?;
            let sum = riemann_sum(f, &tp);
            let mut env_width = None;
            let mut wit = None;
            if want_env {
                let env = envelope_sums_of(f, &tp);
                if env.tight {
                    let width = width_of(&env.lower, &env.upper);
                    if keep_witness {
                        wit = Some((tp, env.lower, env.upper));
                    }
                    env_width = Some(width);
                } else {
                    env_width = None;
                }
            }
            Ok::<SampleEval, IntegrateError>(SampleEval {
                sum,
                env_width,
                witness: wit,
            })
        })?;

        let mut min = rows[0].sum.clone();
        let mut max = rows[0].sum.clone();
        let mut total = Rational::zero();
        for row in &rows {
            min = min.min(row.sum.clone());
            max = max.max(row.sum.clone());
            total = total + &row.sum;
        }
        let n = rows.len();
        let mean = &total / Rational::from(n as u64);
        indices.push(IndexStats {
            index: k,
            n_samples: n,
            min: min.clone(),
            max: max.clone(),
            mean,
        });
        sums_per_index.push((total, n));
        extremes.push((min, max));

        if env_evidence {
            let mut width_min: Option<(usize, Bound)> = None;
            for (i, row) in rows.iter().enumerate() {
                match &row.env_width {
                    None => {
                        // A non-tight envelope disqualifies oscillation
                        // evidence for the whole run.
                        env_evidence = false;
                        width_min = None;
                        break;
                    }
                    Some(w) => {
                        let better = match &width_min {
                            None => true,
                            Some((_, best)) => w < best,
                        };
                        if better {
                            width_min = Some((i, w.clone()));
                        }
                    }
                }
            }
            if let Some((i, w)) = width_min {
                if w < Bound::Finite(opts.tolerance.clone()) {
                    env_evidence = false;
                } else {
                    min_env_width.push(w);
                    if keep_witness {
                        let row = &rows[i];
                        if let Some((tp, lower, upper)) = &row.witness {
                            witness = Some((k, tp.clone(), lower.clone(), upper.clone()));
                        }
                    }
                }
            }
        }
    }

    let verdict = if env_evidence && min_env_width.len() == opts.depth as usize {
        let (index, tp, lower, upper) =
            witness.expect("witness retained at the first index when evidence persists");
        Verdict::NotCauchy {
            index,
            lower,
            upper,
            witness: tp,
        }
    } else {
        let w = opts.window.min(opts.depth as usize);
        let tail = &extremes[extremes.len() - w..];
        let mut lo = tail[0].0.clone();
        let mut hi = tail[0].1.clone();
        for (min, max) in tail.iter().skip(1) {
            lo = lo.min(min.clone());
            hi = hi.max(max.clone());
        }
        let width = &hi - &lo;
        if width < opts.tolerance {
            let mut total = Rational::zero();
            let mut n: usize = 0;
            for (sum, count) in &sums_per_index[sums_per_index.len() - w..] {
                total = total + sum;
                n += count;
            }
            Verdict::Converged {
                estimate: total / Rational::from(n as u64),
                window_width: width,
            }
        } else {
            Verdict::Inconclusive
        }
    };

    Ok(ConvergenceReport {
        integrand: f.describe(),
        base: base.describe(),
        depth: opts.depth,
        samples_per_index: opts.samples_per_index,
        window: opts.window,
        tolerance: opts.tolerance.clone(),
        seed: opts.seed,
        indices,
        verdict,
    })
}

/// Bounds on the weighted sum over all admissible tag choices for a fixed
/// breakpoint sequence, accumulated cell-wise from the envelope oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvelopeSums {
    pub lower: Bound,
    pub upper: Bound,
    /// All per-cell envelopes were tight, so these bounds are the exact
    /// infimum and supremum over real tag choices.
    pub tight: bool,
}

fn width_of(lower: &Bound, upper: &Bound) -> Bound {
    match (lower, upper) {
        (Bound::Finite(lo), Bound::Finite(hi)) => Bound::Finite(hi - lo),
        (Bound::NegInf, _) | (_, Bound::PosInf) => Bound::PosInf,
        _ => Bound::NegInf,
    }
}

fn envelope_sums_of(f: &Integrand, tp: &TaggedPartition) -> EnvelopeSums {
    envelope_sums_over(f, tp.breakpoints()).expect("partition breakpoints are valid")
}

/// Envelope bounds of the weighted sum for a breakpoint-only partition.
pub fn envelope_sums(f: &Integrand, breakpoints: &[Rational]) -> Result<EnvelopeSums, IntegrateError> {
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IntegrateError::InvalidBreakpoints);
    }
    envelope_sums_over(f, breakpoints).ok_or(IntegrateError::InvalidBreakpoints)
}

fn envelope_sums_over(f: &Integrand, breakpoints: &[Rational]) -> Option<EnvelopeSums> {
    let mut lower = Bound::Finite(Rational::zero());
    let mut upper = Bound::Finite(Rational::zero());
    let mut tight = true;
    for w in breakpoints.windows(2) {
        let cell = Interval::new(w[0].clone(), w[1].clone()).ok()?;
        let env = f.envelope(&cell);
        let len = cell.length();
        lower = lower + env.lower.scale(&len);
        upper = upper + env.upper.scale(&len);
        tight = tight && env.tight;
    }
    Some(EnvelopeSums {
        lower,
        upper,
        tight,
    })
}

/// A sampled boundedness certificate: all sampled `|S|` at `index` are
/// strictly below `bound`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundednessCertificate {
    pub index: u32,
    pub bound: Rational,
    pub samples: usize,
}

/// Outcome of the boundedness probe.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundednessOutcome {
    Certificate(BoundednessCertificate),
    /// Sampled `|S|` exceeded the blow-up threshold at every index.
    NotFound {
        max_abs_by_index: Vec<(u32, Rational)>,
    },
}

impl BoundednessOutcome {
    pub fn certificate(&self) -> Option<&BoundednessCertificate> {
        match self {
            BoundednessOutcome::Certificate(c) => Some(c),
            _ => None,
        }
    }
}

/// Options for [`probe_f_boundedness`].
#[derive(Debug, Clone)]
pub struct ProbeOpts {
    pub depth: u32,
    pub samples: usize,
    pub seed: u64,
    /// A per-index max above this is treated as blow-up.
    pub blowup_threshold: Rational,
}

impl ProbeOpts {
    pub fn new(depth: u32, samples: usize, seed: u64) -> Self {
        ProbeOpts {
            depth,
            samples,
            seed,
            blowup_threshold: Rational::integer(1_000_000),
        }
    }
}

/// Largest `|S(f, ., .)|` over sampled members of `B_index`.
pub fn max_abs_sum_at_index(
    f: &Integrand,
    base: &dyn FilterBase,
    index: u32,
    samples: usize,
    seed: u64,
) -> Result<Rational, IntegrateError> {
    let lanes: Vec<u64> = (0..samples as u64).collect();
    let sums: Vec<Rational> = exec::try_map_ordered(lanes, |lane| {
        let tp = base.sample_lane(index, seed, lane)?;
        Ok::<Rational, IntegrateError>(riemann_sum(f, &tp).abs())
    })?;
    Ok(sums
        .into_iter()
        .fold(Rational::zero(), |acc, s| acc.max(s)))
}

/// Searches for the smallest index whose sampled sums stay below the
/// blow-up threshold and certifies `C = max |S| + 1` there.
pub fn probe_f_boundedness(
    f: &Integrand,
    base: &dyn FilterBase,
    opts: &ProbeOpts,
) -> Result<BoundednessOutcome, IntegrateError> {
    if opts.samples == 0 {
        return Err(IntegrateError::ZeroSamples);
    }
    let mut maxima = Vec::new();
    for k in 1..=opts.depth {
        let max_abs = max_abs_sum_at_index(f, base, k, opts.samples, opts.seed)?;
        if max_abs <= opts.blowup_threshold {
            return Ok(BoundednessOutcome::Certificate(BoundednessCertificate {
                index: k,
                bound: max_abs + Rational::one(),
                samples: opts.samples,
            }));
        }
        maxima.push((k, max_abs));
    }
    Ok(BoundednessOutcome::NotFound {
        max_abs_by_index: maxima,
    })
}

/// Result of the linear-combination estimate check.
#[derive(Debug, Clone, Serialize)]
pub struct LinearityReport {
    pub alpha: Rational,
    pub beta: Rational,
    pub estimate_f: Rational,
    pub estimate_g: Rational,
    pub estimate_combined: Rational,
    pub expected: Rational,
    pub error: Rational,
    pub bound: Rational,
    pub pass: bool,
}

/// Estimates `f`, `g` and `alpha*f + beta*g` with one shared seed and checks
/// the combined estimate against the combination of estimates within three
/// tolerances. Errors when any sub-estimate fails to converge.
pub fn check_linearity(
    f: &Integrand,
    g: &Integrand,
    alpha: &Rational,
    beta: &Rational,
    base: &dyn FilterBase,
    opts: &EstimateOpts,
) -> Result<LinearityReport, IntegrateError> {
    let require = |report: ConvergenceReport, which: &str| -> Result<Rational, IntegrateError> {
        match report.verdict {
            Verdict::Converged { estimate, .. } => Ok(estimate),
            _ => Err(IntegrateError::NotConverged {
                which: which.to_string(),
            }),
        }
    };
    let ef = require(estimate_filter_limit(f, base, opts)?, "f")?;
    let eg = require(estimate_filter_limit(g, base, opts)?, "g")?;
    let combo = Integrand::combination(alpha.clone(), f.clone(), beta.clone(), g.clone());
    let ec = require(estimate_filter_limit(&combo, base, opts)?, "alpha*f + beta*g")?;
    let expected = alpha * &ef + beta * &eg;
    let error = (&ec - &expected).abs();
    let bound = Rational::integer(3) * &opts.tolerance;
    Ok(LinearityReport {
        alpha: alpha.clone(),
        beta: beta.clone(),
        estimate_f: ef,
        estimate_g: eg,
        estimate_combined: ec,
        expected,
        error: error.clone(),
        bound: bound.clone(),
        pass: error < bound,
    })
}

/// A truncated weighted cover sum and whether the truncation was exact.
#[derive(Debug, Clone, Serialize)]
pub struct CoverSum {
    pub value: Rational,
    /// True when every tagged point of the partition that belongs to the
    /// point sequence has index at most the cutoff, so the full series was
    /// captured.
    pub truncation_exact: bool,
}

/// `sum_{n <= cutoff} n * coverage(t_n)`, exactly.
///
/// A partition has finitely many tags, so the full series is a finite sum;
/// `truncation_exact` reports whether the cutoff captured all of it.
pub fn weighted_cover_sum(tp: &TaggedPartition, points: &AvoidSet, cutoff: u64) -> CoverSum {
    let spectrum = tp.tag_spectrum();
    let mut value = Rational::zero();
    let mut truncation_exact = true;
    for (tag, coverage) in spectrum.entries() {
        if let Some(n) = points.index_of(tag) {
            if n <= num::BigInt::from(cutoff) {
                value = value + Rational::from(n) * coverage;
            } else {
                truncation_exact = false;
            }
        }
    }
    CoverSum {
        value,
        truncation_exact,
    }
}

/// Builds the spike integrand `f(t_n) = scale * n`, 0 elsewhere, over the
/// given points. Together with [`weighted_cover_sum`] this realizes both
/// directions of the cover-sum equivalence at desk scale.
pub fn build_unbounded_witness(
    points: AvoidSet,
    scale: Rational,
) -> Result<Integrand, IntegrandError> {
    Integrand::spike(points, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{exactly_tagged_base, mesh_base, DeltaSchedule};
    use crate::partition::Interval;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn tp(bps: &[&str], tags: &[&str]) -> TaggedPartition {
        let b: Vec<Rational> = bps.iter().map(|s| r(s)).collect();
        let domain = Interval::new(b[0].clone(), b[b.len() - 1].clone()).unwrap();
        TaggedPartition::new(domain, b, tags.iter().map(|s| r(s)).collect()).unwrap()
    }

    #[test]
    fn constant_converges_to_scaled_domain_length() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InverseLinear);
        let f = Integrand::constant(r("5/3"));
        let opts = EstimateOpts::new(4, 10, r("1/100"), 7);
        let report = estimate_filter_limit(&f, &base, &opts).unwrap();
        match report.verdict {
            Verdict::Converged { estimate, window_width } => {
                assert_eq!(estimate, r("5/3"));
                assert_eq!(window_width, r("0"));
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn identity_converges_to_one_half() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InversePow(2));
        let opts = EstimateOpts::new(8, 12, r("1/100"), 3);
        let report = estimate_filter_limit(&Integrand::identity(), &base, &opts).unwrap();
        let estimate = report.verdict.estimate().expect("converged").clone();
        assert!((estimate - r("1/2")).abs() < r("1/100"), "{report:?}");
    }

    #[test]
    fn spike_is_exactly_zero_over_the_exactly_tagged_base() {
        let base = exactly_tagged_base(
            Interval::unit(),
            AvoidSet::reciprocal_integers(),
            DeltaSchedule::InverseLinear,
        );
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        let opts = EstimateOpts::new(6, 15, r("1/1000"), 21);
        let report = estimate_filter_limit(&spike, &base, &opts).unwrap();
        match &report.verdict {
            Verdict::Converged { estimate, .. } => assert!(estimate.is_zero()),
            other => panic!("expected convergence to zero, got {other:?}"),
        }
        for stats in &report.indices {
            assert!(stats.min.is_zero() && stats.max.is_zero());
        }
    }

    #[test]
    fn dirichlet_like_is_not_cauchy_over_the_mesh_base() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InverseLinear);
        let opts = EstimateOpts::new(5, 8, r("1/100"), 2);
        let report = estimate_filter_limit(&Integrand::dirichlet_like(), &base, &opts).unwrap();
        match &report.verdict {
            Verdict::NotCauchy { lower, upper, .. } => {
                assert_eq!(lower, &Bound::Finite(r("0")));
                assert_eq!(upper, &Bound::Finite(r("1")));
            }
            other => panic!("expected NotCauchy, got {other:?}"),
        }
    }

    #[test]
    fn envelope_sums_examples() {
        // Identity on the uniform 4-cell grid: left and right sums.
        let bps: Vec<Rational> = ["0", "1/4", "1/2", "3/4", "1"].iter().map(|s| r(s)).collect();
        let env = envelope_sums(&Integrand::identity(), &bps).unwrap();
        assert_eq!(env.lower, Bound::Finite(r("3/8")));
        assert_eq!(env.upper, Bound::Finite(r("5/8")));
        assert!(env.tight);

        let env = envelope_sums(&Integrand::constant(r("1")), &bps).unwrap();
        assert_eq!(env.lower, Bound::Finite(r("1")));
        assert_eq!(env.upper, Bound::Finite(r("1")));

        let env = envelope_sums(&Integrand::dirichlet_like(), &bps).unwrap();
        assert_eq!(env.lower, Bound::Finite(r("0")));
        assert_eq!(env.upper, Bound::Finite(r("1")));
    }

    #[test]
    fn envelope_brackets_every_sampled_sum() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InverseLinear);
        let f = Integrand::polynomial(vec![r("0"), r("0"), r("1")]);
        for tp in crate::filters::sample_many(&base, 3, 5, 20).unwrap() {
            let s = riemann_sum(&f, &tp);
            let env = envelope_sums(&f, tp.breakpoints()).unwrap();
            assert!(env.lower <= Bound::Finite(s.clone()));
            assert!(Bound::Finite(s) <= env.upper);
        }
    }

    #[test]
    fn per_sample_linearity_is_exact() {
        let f = Integrand::identity();
        let g = Integrand::dirichlet_like();
        let combo = Integrand::combination(r("2/3"), f.clone(), r("-5"), g.clone());
        let p = tp(&["0", "1/8", "1/2", "1"], &["1/16", "1/4", "3/4"]);
        let lhs = riemann_sum(&combo, &p);
        let rhs = r("2/3") * riemann_sum(&f, &p) + r("-5") * riemann_sum(&g, &p);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn linearity_of_estimates_within_three_tolerances() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InversePow(2));
        let opts = EstimateOpts::new(10, 10, r("1/100"), 5);
        let report = check_linearity(
            &Integrand::identity(),
            &Integrand::constant(r("1")),
            &r("2"),
            &r("3"),
            &base,
            &opts,
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.estimate_combined.clone() - r("4")).abs() < r("1/25"));
    }

    #[test]
    fn cancellation_is_exact_even_without_convergence() {
        // f - f is exactly zero per sample, so the combined run converges to
        // zero even where f alone does not converge.
        let base = mesh_base(Interval::unit(), DeltaSchedule::InverseLinear);
        let f = Integrand::dirichlet_like();
        let combo = Integrand::combination(r("1"), f.clone(), r("-1"), f.clone());
        let p = tp(&["0", "1/3", "1"], &["1/6", "2/3"]);
        assert!(riemann_sum(&combo, &p).is_zero());
        let _ = base;
    }

    #[test]
    fn boundedness_certificate_for_zero_function() {
        let base = mesh_base(Interval::unit(), DeltaSchedule::InverseLinear);
        let f = Integrand::constant(r("0"));
        let outcome = probe_f_boundedness(&f, &base, &ProbeOpts::new(4, 10, 3)).unwrap();
        let cert = outcome.certificate().expect("certificate");
        assert_eq!(cert.index, 1);
        assert_eq!(cert.bound, r("1"));
    }

    /// Mesh-like base whose sampler pins a spike point into a near-mesh-sized
    /// cell, driving the sampled sums to blow up as the index grows.
    struct AdversarialSpikeBase {
        inner: crate::filters::MeshBase,
    }

    impl FilterBase for AdversarialSpikeBase {
        fn domain(&self) -> &Interval {
            self.inner.domain()
        }
        fn is_member(&self, index: u32, tp: &TaggedPartition) -> bool {
            self.inner.is_member(index, tp)
        }
        fn sample_lane(
            &self,
            index: u32,
            seed: u64,
            lane: u64,
        ) -> Result<TaggedPartition, FilterError> {
            let tp = self.inner.sample_lane(index, seed, lane)?;
            // Retag the cell containing 1/n, n chosen so that n * cell
            // length grows with the index (cells at index k are wider than
            // 2^-k / 6, so the sum exceeds 64/6).
            let target_n = 64i64 * (1i64 << index.min(20));
            let point = Rational::new(1, target_n).unwrap();
            let bps = tp.breakpoints().to_vec();
            let mut tags = tp.tags().to_vec();
            for k in 0..tags.len() {
                if bps[k] <= point && point <= bps[k + 1] && !tags.contains(&point) {
                    tags[k] = point.clone();
                    break;
                }
            }
            Ok(TaggedPartition::new(tp.domain().clone(), bps, tags)?)
        }
        fn describe(&self) -> String {
            "adversarial spike-tagged mesh base".to_string()
        }
    }

    #[test]
    fn adversarial_sampler_defeats_boundedness_probe() {
        let base = AdversarialSpikeBase {
            inner: mesh_base(Interval::unit(), DeltaSchedule::InversePow(2)),
        };
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        let mut opts = ProbeOpts::new(6, 5, 11);
        opts.blowup_threshold = r("2");
        let outcome = probe_f_boundedness(&spike, &base, &opts).unwrap();
        match outcome {
            BoundednessOutcome::NotFound { max_abs_by_index } => {
                assert_eq!(max_abs_by_index.len(), 6);
                for (_, m) in &max_abs_by_index {
                    assert!(*m > r("2"));
                }
            }
            other => panic!("expected NotFound, got {other:?}"),
        }
    }

    #[test]
    fn weighted_cover_sum_examples() {
        let points = AvoidSet::reciprocal_integers();
        // Tags avoid all points entirely.
        let clean = tp(&["0", "1/2", "1"], &["2/5", "3/5"]);
        let cs = weighted_cover_sum(&clean, &points, 10);
        assert!(cs.value.is_zero() && cs.truncation_exact);

        // 1/3 tagged with cell length 1/8 contributes 3 * 1/8.
        let p = tp(&["0", "7/24", "5/12", "1"], &["1/6", "1/3", "3/4"]);
        let cs = weighted_cover_sum(&p, &points, 10);
        assert_eq!(cs.value, r("3/8") + r("6") * r("7/24"));
        // Cutoff below a tagged index is reported as inexact.
        let cs = weighted_cover_sum(&p, &points, 3);
        assert_eq!(cs.value, r("3/8"));
        assert!(!cs.truncation_exact);
    }

    #[test]
    fn witness_builder_rejects_bad_inputs() {
        assert!(build_unbounded_witness(AvoidSet::reciprocal_integers(), r("0")).is_err());
        assert!(AvoidSet::points(vec![r("1/2"), r("1/2")]).is_err());
        let w = build_unbounded_witness(AvoidSet::reciprocal_integers(), r("1")).unwrap();
        assert_eq!(w.eval(&r("1/5")), r("5"));
        assert_eq!(w.eval(&r("2/5")), r("0"));
    }
}
