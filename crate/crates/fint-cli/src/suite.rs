//! The theorem suite: a fixed manifest of checks, one per proved statement
//! the library models, each run on a concrete seeded instance.
//!
//! Statuses: `pass` (exact or in-tolerance check succeeded), `fail` (an
//! exact check was refuted), `unknown` (a sampled certificate came back
//! one-sided). Every entry writes its evidence as a JSON artifact.

use std::sync::Arc;

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

use fint::filters::sample_many;
use fint::integrator::max_abs_sum_at_index;
use fint::{
    build_unbounded_witness, check_linearity, check_metric_axioms, check_rho_dominance,
    check_subset, check_subsegment_integration, estimate_filter_limit, exactly_tagged_base,
    induced_subsegment_base, mesh_base, probe_f_boundedness, random_partitions, riemann_sum,
    weighted_cover_sum, AvoidSet, DeltaSchedule, DominanceOpts, EstimateOpts, FilterBase,
    IdentityProjector, Integrand, Interval, ProbeOpts, Rational, SamplerConfig, SubsetOpts,
    Verdict,
};

use crate::report::OutputWriter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub id: String,
    pub description: String,
    pub instance: String,
    pub status: EntryStatus,
    pub artifact: String,
}

pub struct SuiteParams {
    pub seed: u64,
    pub depth: u32,
    pub samples: usize,
}

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

struct EntryResult {
    status: EntryStatus,
    evidence: Value,
}

fn entry<F>(
    writer: &OutputWriter,
    entries: &mut Vec<SuiteEntry>,
    id: &str,
    description: &str,
    instance: &str,
    run: F,
) -> Result<()>
where
    F: FnOnce() -> Result<EntryResult>,
{
    let result = run()?;
    writer.write_artifact(id, &result.evidence)?;
    entries.push(SuiteEntry {
        id: id.to_string(),
        description: description.to_string(),
        instance: instance.to_string(),
        status: result.status,
        // Relative to the output directory, so reports are byte-identical
        // wherever they are written.
        artifact: format!("artifacts/{id}.json"),
    });
    Ok(())
}

/// Runs the whole manifest. Deterministic for a fixed seed.
pub fn run_suite(params: &SuiteParams, writer: &OutputWriter) -> Result<Vec<SuiteEntry>> {
    let seed = params.seed;
    let depth = params.depth;
    let samples = params.samples;
    let unit = Interval::unit();
    let mesh = || mesh_base(unit.clone(), DeltaSchedule::InversePow(2));
    let exact = || {
        exactly_tagged_base(
            unit.clone(),
            AvoidSet::reciprocal_integers(),
            DeltaSchedule::InverseLinear,
        )
    };
    let exact_pow = || {
        exactly_tagged_base(
            unit.clone(),
            AvoidSet::reciprocal_integers(),
            DeltaSchedule::InversePow(2),
        )
    };
    let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
    let mut entries = Vec::new();

    entry(
        writer,
        &mut entries,
        "metric-axioms",
        "the spectrum distance satisfies all metric axioms",
        "40 seeded random partitions, all pairs and triples, exact arithmetic",
        || {
            let cfg = SamplerConfig::with_denominator_bound(64).unwrap();
            let sample = random_partitions(&unit, 8, None, &cfg, seed ^ 0x01, 40)?;
            let report = check_metric_axioms(&sample)?;
            Ok(EntryResult {
                status: if report.all_pass() {
                    EntryStatus::Pass
                } else {
                    EntryStatus::Fail
                },
                evidence: serde_json::to_value(&report)?,
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "boundedness-from-limit",
        "a converged limit estimate yields a sum-boundedness certificate with C <= |estimate| + tolerance + 1",
        "f(t) = t over the mesh base",
        || {
            let base = mesh();
            let tol = r("1/100");
            let opts = EstimateOpts::new(depth, samples, tol.clone(), seed ^ 0x02);
            let report = estimate_filter_limit(&Integrand::identity(), &base, &opts)?;
            let estimate = match report.verdict.estimate() {
                Some(e) => e.clone(),
                None => {
                    return Ok(EntryResult {
                        status: EntryStatus::Unknown,
                        evidence: serde_json::to_value(&report)?,
                    })
                }
            };
            let max_abs = max_abs_sum_at_index(
                &Integrand::identity(),
                &base,
                depth,
                samples,
                seed ^ 0x02,
            )?;
            let certificate = &max_abs + Rational::one();
            let bound = estimate.abs() + &tol + Rational::one();
            Ok(EntryResult {
                status: if certificate <= bound {
                    EntryStatus::Pass
                } else {
                    EntryStatus::Fail
                },
                evidence: json!({
                    "estimate": estimate.to_string(),
                    "certificate": certificate.to_string(),
                    "bound": bound.to_string(),
                }),
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "whole-function-boundedness",
        "when every base set contains a mesh set and the estimate converges, the integrand itself is bounded",
        "f(t) = t over the mesh base (self-inclusion certificate)",
        || {
            let base = mesh();
            let subset = check_subset(&base, &base, &SubsetOpts::new(4, samples.min(12), seed ^ 0x03))?;
            let opts = EstimateOpts::new(depth, samples, r("1/100"), seed ^ 0x03);
            let report = estimate_filter_limit(&Integrand::identity(), &base, &opts)?;
            let converged = report.verdict.is_converged();
            let bounded = Integrand::identity().is_bounded(&unit);
            let status = if !subset.is_verified() || !converged {
                EntryStatus::Unknown
            } else if bounded {
                EntryStatus::Pass
            } else {
                EntryStatus::Fail
            };
            Ok(EntryResult {
                status,
                evidence: json!({
                    "subset": serde_json::to_value(&subset)?,
                    "converged": converged,
                    "integrand_bounded": bounded,
                }),
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "linearity",
        "estimates combine linearly: estimate(a f + b g) matches a estimate(f) + b estimate(g)",
        "a = 2, f(t) = t, b = 3, g = 1 over the mesh base",
        || {
            let base = mesh();
            let opts = EstimateOpts::new(depth.max(10), samples, r("1/100"), seed ^ 0x04);
            let report = check_linearity(
                &Integrand::identity(),
                &Integrand::constant(Rational::one()),
                &r("2"),
                &r("3"),
                &base,
                &opts,
            )?;
            Ok(EntryResult {
                status: if report.pass {
                    EntryStatus::Pass
                } else {
                    EntryStatus::Fail
                },
                evidence: serde_json::to_value(&report)?,
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "subset-implies-dominance",
        "a verified base inclusion yields verified dominance through the identity projector",
        "exactly tagged base inside the mesh base",
        || {
            let mesh = mesh();
            let exact = exact_pow();
            let subset = check_subset(&mesh, &exact, &SubsetOpts::new(4, samples.min(12), seed ^ 0x05))?;
            let dom_opts = DominanceOpts::new(r("1/100"), 4, samples.min(12), seed ^ 0x05);
            let dominance = check_rho_dominance(&mesh, &exact, &IdentityProjector, &dom_opts)?;
            let status = match (&subset, subset.is_verified() && dominance.is_verified()) {
                (_, true) => EntryStatus::Pass,
                _ => EntryStatus::Unknown,
            };
            Ok(EntryResult {
                status,
                evidence: json!({
                    "subset": serde_json::to_value(&subset)?,
                    "dominance": serde_json::to_value(&dominance)?,
                }),
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "dominance-transfer",
        "for a bounded integrand, the limit transfers from a dominated base to the dominating base",
        "f(t) = t, mesh base dominated by the exactly tagged base",
        || {
            let tol = r("1/100");
            let opts = EstimateOpts::new(depth.max(10), samples, tol.clone(), seed ^ 0x06);
            let under_mesh = estimate_filter_limit(&Integrand::identity(), &mesh(), &opts)?;
            let under_exact = estimate_filter_limit(&Integrand::identity(), &exact_pow(), &opts)?;
            match (under_mesh.verdict.estimate(), under_exact.verdict.estimate()) {
                (Some(a), Some(b)) => {
                    let gap = (a - b).abs();
                    let bound = Rational::integer(2) * &tol;
                    Ok(EntryResult {
                        status: if gap < bound {
                            EntryStatus::Pass
                        } else {
                            EntryStatus::Fail
                        },
                        evidence: json!({
                            "dominated_estimate": a.to_string(),
                            "dominating_estimate": b.to_string(),
                            "gap": gap.to_string(),
                            "bound": bound.to_string(),
                        }),
                    })
                }
                _ => Ok(EntryResult {
                    status: EntryStatus::Unknown,
                    evidence: json!({"reason": "an estimate did not converge"}),
                }),
            }
        },
    )?;

    entry(
        writer,
        &mut entries,
        "exactly-tagged-integral",
        "an exactly tagged filter integrates an unbounded function",
        "spike on {1/n} over the base avoiding {1/n}",
        || {
            let base = exact();
            let opts = EstimateOpts::new(depth.max(8), samples, r("1/1000"), seed ^ 0x07);
            let report = estimate_filter_limit(&spike, &base, &opts)?;
            let zero = matches!(
                &report.verdict,
                Verdict::Converged { estimate, .. } if estimate.is_zero()
            );
            let unbounded = !spike.is_bounded(&unit)
                && spike.eval(&Rational::new(1, 1_000_000).unwrap()) == r("1000000");
            Ok(EntryResult {
                status: if zero && unbounded {
                    EntryStatus::Pass
                } else {
                    EntryStatus::Fail
                },
                evidence: json!({
                    "estimate_exactly_zero": zero,
                    "unbounded_on_demand": unbounded,
                    "report": serde_json::to_value(&report)?,
                }),
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "cover-sum-equivalence",
        "sum-boundedness of an unbounded function is equivalent to the weighted cover-sum bound",
        "spike on {1/n} over the exactly tagged base, both directions at desk scale",
        || {
            let base = exact();
            let points = AvoidSet::reciprocal_integers();
            let witness = build_unbounded_witness(AvoidSet::reciprocal_integers(), Rational::one())?;
            let mut cover_ok = true;
            for m in 1..=depth.min(6) {
                for tp in sample_many(&base, m, seed ^ 0x08, samples)? {
                    let cover = weighted_cover_sum(&tp, &points, 10_000);
                    if !(cover.value < Rational::one() && cover.truncation_exact)
                        || riemann_sum(&witness, &tp).abs() >= Rational::one()
                    {
                        cover_ok = false;
                    }
                }
            }
            let probe = probe_f_boundedness(&witness, &base, &ProbeOpts::new(4, samples, seed ^ 0x08))?;
            let reverse_ok = match probe.certificate() {
                None => false,
                Some(cert) => {
                    let factor = num_to_u64(&cert.bound.ceil_int());
                    let scaled = AvoidSet::reciprocal_multiples(factor)?;
                    sample_many(&base, cert.index, seed ^ 0x08, samples)?
                        .iter()
                        .all(|tp| {
                            let c = weighted_cover_sum(tp, &scaled, 10_000);
                            c.value < Rational::one() && c.truncation_exact
                        })
                }
            };
            Ok(EntryResult {
                status: if cover_ok && reverse_ok {
                    EntryStatus::Pass
                } else {
                    EntryStatus::Fail
                },
                evidence: json!({
                    "forward_direction": cover_ok,
                    "reverse_direction": reverse_ok,
                }),
            })
        },
    )?;

    entry(
        writer,
        &mut entries,
        "subsegment-integration",
        "a complemented filter integrates over every subsegment once it integrates over the full interval",
        "f(t) = t restricted to [1/4, 3/4] over the mesh base",
        || {
            let base: Arc<dyn FilterBase> = Arc::new(mesh());
            let sub = Interval::new(r("1/4"), r("3/4")).unwrap();
            let opts = EstimateOpts::new(depth.max(8), samples, r("1/100"), seed ^ 0x09);
            let report = check_subsegment_integration(&Integrand::identity(), &base, &sub, &opts, 2);
            match report {
                Ok(rep) => {
                    let close = rep
                        .sub
                        .verdict
                        .estimate()
                        .map(|e| (e - r("1/4")).abs() < r("1/50"))
                        .unwrap_or(false);
                    Ok(EntryResult {
                        status: if rep.pass && close {
                            EntryStatus::Pass
                        } else {
                            EntryStatus::Fail
                        },
                        evidence: serde_json::to_value(&rep)?,
                    })
                }
                Err(e) => Ok(EntryResult {
                    status: EntryStatus::Unknown,
                    evidence: json!({"reason": e.to_string()}),
                }),
            }
        },
    )?;

    // Induced restriction bases stay usable as bases in their own right.
    entry(
        writer,
        &mut entries,
        "restriction-base-soundness",
        "samples of an induced subsegment base are valid members of its own membership predicate",
        "mesh base restricted to [1/4, 3/4]",
        || {
            let parent: Arc<dyn FilterBase> = Arc::new(mesh());
            let sub = Interval::new(r("1/4"), r("3/4")).unwrap();
            let base = induced_subsegment_base(parent, sub)?;
            let mut ok = true;
            for k in 1..=4u32 {
                for tp in sample_many(&base, k, seed ^ 0x0A, samples.min(12))? {
                    if !base.is_member(k, &tp) {
                        ok = false;
                    }
                }
            }
            Ok(EntryResult {
                status: if ok { EntryStatus::Pass } else { EntryStatus::Fail },
                evidence: json!({"sampler_sound": ok}),
            })
        },
    )?;

    Ok(entries)
}

fn num_to_u64(n: &num::BigInt) -> u64 {
    num::ToPrimitive::to_u64(n).unwrap_or(u64::MAX)
}

/// Exit triage for a finished suite: any fail beats any unknown.
pub fn suite_exit_status(entries: &[SuiteEntry]) -> EntryStatus {
    if entries.iter().any(|e| e.status == EntryStatus::Fail) {
        EntryStatus::Fail
    } else if entries.iter().any(|e| e.status == EntryStatus::Unknown) {
        EntryStatus::Unknown
    } else {
        EntryStatus::Pass
    }
}
