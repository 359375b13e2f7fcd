//! Subcommand implementations.
//!
//! Each command resolves its parameters (flags over config), runs the
//! corresponding library operation, writes `report.json` (and CSV tables
//! where applicable), prints a short human summary, and maps the result
//! onto the exit triage. Reports never embed absolute paths or timestamps,
//! so a fixed configuration yields byte-identical output.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde_json::json;

use fint::{
    check_metric_axioms, check_rho_dominance, check_subset, check_subsegment_integration,
    estimate_filter_limit, partition_from_json, partition_to_json, random_partitions, restrict,
    rho, BaseDescriptor, DominanceOpts, EstimateOpts, FilterBase, IdentityProjector, Integrand,
    Interval, Projector, Rational, SamplerConfig, SubsetOpts, TagPerturbProjector, Verdict,
};

use crate::config::{parse_rational, require, usage, BaseField, FileConfig};
use crate::report::OutputWriter;
use crate::suite::{run_suite, suite_exit_status, EntryStatus, SuiteParams};
use crate::{Command, CommonArgs};

pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

struct Ctx {
    cfg: FileConfig,
    writer: OutputWriter,
    seed: u64,
    sampler: SamplerConfig,
    domain: Interval,
    approx: bool,
}

#[derive(PartialEq)]
enum Seeding {
    Required,
    NotNeeded,
}

fn context(common: &CommonArgs, seeding: Seeding) -> Result<Ctx> {
    let cfg = FileConfig::load(common.config.as_deref())?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let jobs = common.jobs.or(cfg.jobs).unwrap_or(0);
    if let Err(e) = fint::exec::configure_workers(jobs) {
        eprintln!("note: worker pool already configured ({e})");
    }
    let approx = common.approx || cfg.approx.unwrap_or(false);
    // Sampling commands must be seeded explicitly; deterministic commands
    // (rho, restrict) ignore the seed entirely.
    let seed = match seeding {
        Seeding::Required => require(common.seed.or(cfg.seed), "seed")?,
        Seeding::NotNeeded => common.seed.or(cfg.seed).unwrap_or(0),
    };
    let sampler = cfg.sampler_config(common.denominator_bound)?;
    let domain = match &cfg.domain {
        None => Interval::unit(),
        Some((lo, hi)) => Interval::new(
            parse_rational(lo, "domain.lo")?,
            parse_rational(hi, "domain.hi")?,
        )
        .map_err(|e| usage(e.to_string()))?,
    };
    Ok(Ctx {
        cfg,
        writer: OutputWriter::new(&out, approx),
        seed,
        sampler,
        domain,
        approx,
    })
}

fn resolve_base(
    flag: Option<String>,
    file: Option<&BaseField>,
    name: &str,
) -> Result<BaseDescriptor> {
    match flag {
        Some(s) => BaseDescriptor::parse_compact(&s).map_err(|e| usage(e.to_string())),
        None => match file {
            Some(field) => field.resolve(),
            None => Err(usage(format!("missing required value `{name}`"))),
        },
    }
}

fn resolve_function(flag: Option<String>, file: Option<&String>, name: &str) -> Result<Integrand> {
    let text = flag
        .or_else(|| file.cloned())
        .ok_or_else(|| usage(format!("missing required value `{name}`")))?;
    text.parse::<Integrand>().map_err(|e| usage(e.to_string()))
}

fn estimate_opts(
    depth: u32,
    samples: usize,
    tolerance: Rational,
    window: usize,
    seed: u64,
) -> Result<EstimateOpts> {
    if depth < 2 {
        return Err(usage("depth must be >= 2"));
    }
    if samples == 0 {
        return Err(usage("samples must be >= 1"));
    }
    if !tolerance.is_positive() {
        return Err(usage("tolerance must be positive"));
    }
    if window == 0 {
        return Err(usage("window must be >= 1"));
    }
    let mut opts = EstimateOpts::new(depth, samples, tolerance, seed);
    opts.window = window;
    Ok(opts)
}

fn verdict_outcome(verdict: &Verdict) -> Outcome {
    match verdict {
        Verdict::Converged { .. } => Outcome::Pass,
        Verdict::NotCauchy { .. } => Outcome::Fail,
        Verdict::Inconclusive => Outcome::Unknown,
    }
}

fn describe_verdict(verdict: &Verdict, approx: bool) -> String {
    match verdict {
        Verdict::Converged {
            estimate,
            window_width,
        } => {
            let mut s = format!("converged: estimate = {estimate}, window width = {window_width}");
            if approx {
                s.push_str(&format!(" (~ {:.12} lossy)", estimate.to_f64_lossy()));
            }
            s
        }
        Verdict::NotCauchy { lower, upper, .. } => {
            format!("not Cauchy: tag choices spread sums across [{lower}, {upper}]")
        }
        Verdict::Inconclusive => "inconclusive".to_string(),
    }
}

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Integrate {
            common,
            function,
            base,
            depth,
            samples,
            tol,
            window,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let f = resolve_function(function, ctx.cfg.function.as_ref(), "function")?;
            let desc = resolve_base(base, ctx.cfg.base.as_ref(), "base")?;
            let depth = require(depth.or(ctx.cfg.depth), "depth")?;
            let samples = samples.or(ctx.cfg.samples).unwrap_or(50);
            let tol = parse_rational(
                &require(tol.or_else(|| ctx.cfg.tolerance.clone()), "tol")?,
                "tol",
            )?;
            let window = window.or(ctx.cfg.window).unwrap_or(3);
            let opts = estimate_opts(depth, samples, tol, window, ctx.seed)?;
            let built = desc.build(&ctx.domain, &ctx.sampler)?;
            let report = estimate_filter_limit(&f, &*built, &opts)?;
            ctx.writer.write_convergence_csv("convergence", &report)?;
            let value = json!({
                "command": "integrate",
                "params": {
                    "function": f.describe(),
                    "base": desc,
                    "depth": depth,
                    "samples": samples,
                    "tolerance": opts.tolerance,
                    "window": window,
                    "seed": ctx.seed,
                },
                "report": report,
            });
            ctx.writer.write_report(&value)?;
            println!("{}", describe_verdict(&report.verdict, ctx.approx));
            Ok(verdict_outcome(&report.verdict))
        }

        Command::Rho {
            common,
            file_a,
            file_b,
        } => {
            let ctx = context(&common, Seeding::NotNeeded)?;
            let read = |path: &PathBuf| -> Result<_> {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                partition_from_json(&text)
                    .with_context(|| format!("parsing partition {}", path.display()))
            };
            let a = read(&file_a)?;
            let b = read(&file_b)?;
            let distance = rho(&a, &b)?;
            let value = json!({
                "command": "rho",
                "params": {"a": file_a.file_name().map(|s| s.to_string_lossy().into_owned()),
                            "b": file_b.file_name().map(|s| s.to_string_lossy().into_owned())},
                "distance": distance.value(),
            });
            ctx.writer.write_report(&value)?;
            println!("{distance}");
            Ok(Outcome::Pass)
        }

        Command::CheckMetric {
            common,
            count,
            max_cells,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let count = count.or(ctx.cfg.count).unwrap_or(100);
            let max_cells = max_cells.or(ctx.cfg.max_cells).unwrap_or(8);
            if count == 0 {
                return Err(usage("count must be >= 1"));
            }
            let sample =
                random_partitions(&ctx.domain, max_cells, None, &ctx.sampler, ctx.seed, count)?;
            let report = check_metric_axioms(&sample)?;
            let value = json!({
                "command": "check-metric",
                "params": {"count": count, "max_cells": max_cells, "seed": ctx.seed,
                            "denominator_bound": ctx.sampler.denominator_bound},
                "report": report,
            });
            ctx.writer.write_report(&value)?;
            println!(
                "metric axioms on {count} partitions ({} pairs, {} triples): {}",
                report.pairs_checked,
                report.triples_checked,
                if report.all_pass() { "all hold" } else { "VIOLATED" }
            );
            Ok(if report.all_pass() {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }

        Command::Subset {
            common,
            coarser,
            finer,
            depth,
            samples,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let coarser_desc = resolve_base(coarser, ctx.cfg.coarser.as_ref(), "coarser")?;
            let finer_desc = resolve_base(finer, ctx.cfg.finer.as_ref(), "finer")?;
            let depth = depth.or(ctx.cfg.depth).unwrap_or(4);
            let samples = samples.or(ctx.cfg.samples).unwrap_or(20);
            if depth == 0 || samples == 0 {
                return Err(usage("depth and samples must be >= 1"));
            }
            let coarser_base = coarser_desc.build(&ctx.domain, &ctx.sampler)?;
            let finer_base = finer_desc.build(&ctx.domain, &ctx.sampler)?;
            let verdict = check_subset(
                &*coarser_base,
                &*finer_base,
                &SubsetOpts::new(depth, samples, ctx.seed),
            )?;
            let value = json!({
                "command": "subset",
                "params": {"coarser": coarser_desc, "finer": finer_desc,
                            "depth": depth, "samples": samples, "seed": ctx.seed},
                "verdict": verdict,
            });
            ctx.writer.write_report(&value)?;
            if verdict.is_verified() {
                println!("verified: every sampled finer set sits inside the coarser sets");
                Ok(Outcome::Pass)
            } else {
                println!("unknown: a sampled counterexample resisted every tried index");
                Ok(Outcome::Unknown)
            }
        }

        Command::Dominance {
            common,
            dominated,
            dominating,
            epsilon,
            depth,
            samples,
            projector,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let dominated_desc = resolve_base(dominated, ctx.cfg.dominated.as_ref(), "dominated")?;
            let dominating_desc =
                resolve_base(dominating, ctx.cfg.dominating.as_ref(), "dominating")?;
            let epsilon = parse_rational(
                &require(epsilon.or_else(|| ctx.cfg.epsilon.clone()), "epsilon")?,
                "epsilon",
            )?;
            if !epsilon.is_positive() {
                return Err(usage("epsilon must be positive"));
            }
            let depth = depth.or(ctx.cfg.depth).unwrap_or(4);
            let samples = samples.or(ctx.cfg.samples).unwrap_or(20);
            if depth == 0 || samples == 0 {
                return Err(usage("depth and samples must be >= 1"));
            }
            let projector_name = projector
                .or_else(|| ctx.cfg.projector.clone())
                .unwrap_or_else(|| "identity".to_string());
            let projector: Box<dyn Projector> = match projector_name.as_str() {
                "identity" => Box::new(IdentityProjector),
                "tag-perturb" => Box::new(TagPerturbProjector),
                other => return Err(usage(format!("unknown projector `{other}`"))),
            };
            let dominated_base = dominated_desc.build(&ctx.domain, &ctx.sampler)?;
            let dominating_base = dominating_desc.build(&ctx.domain, &ctx.sampler)?;
            let verdict = check_rho_dominance(
                &*dominated_base,
                &*dominating_base,
                &*projector,
                &DominanceOpts::new(epsilon.clone(), depth, samples, ctx.seed),
            )?;
            let value = json!({
                "command": "dominance",
                "params": {"dominated": dominated_desc, "dominating": dominating_desc,
                            "epsilon": epsilon, "depth": depth, "samples": samples,
                            "projector": projector.describe(), "seed": ctx.seed},
                "verdict": verdict,
            });
            ctx.writer.write_report(&value)?;
            match &verdict {
                fint::DominanceVerdict::Verified { max_rho, .. } => {
                    println!("verified: all sampled projections within epsilon (max distance {max_rho})");
                    Ok(Outcome::Pass)
                }
                fint::DominanceVerdict::Unknown { index, .. } => {
                    println!("unknown: no witness index found for dominated index {index}");
                    Ok(Outcome::Unknown)
                }
            }
        }

        Command::Restrict {
            common,
            partition,
            alpha,
            beta,
        } => {
            let ctx = context(&common, Seeding::NotNeeded)?;
            let path = require(partition, "partition")?;
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let tp = partition_from_json(&text)
                .with_context(|| format!("parsing partition {}", path.display()))?;
            let alpha = parse_rational(
                &require(alpha.or_else(|| ctx.cfg.alpha.clone()), "alpha")?,
                "alpha",
            )?;
            let beta = parse_rational(
                &require(beta.or_else(|| ctx.cfg.beta.clone()), "beta")?,
                "beta",
            )?;
            let sub = Interval::new(alpha, beta).map_err(|e| usage(e.to_string()))?;
            match restrict(&tp, &sub) {
                Ok((restricted, trace)) => {
                    let value = json!({
                        "command": "restrict",
                        "params": {"alpha": sub.lo(), "beta": sub.hi()},
                        "restricted": restricted,
                        "trace": trace,
                    });
                    ctx.writer.write_report(&value)?;
                    println!("{}", partition_to_json(&restricted));
                    println!("{}", serde_json::to_string(&trace)?);
                    Ok(Outcome::Pass)
                }
                Err(e) => {
                    let value = json!({
                        "command": "restrict",
                        "params": {"alpha": sub.lo(), "beta": sub.hi()},
                        "error": e.to_string(),
                    });
                    ctx.writer.write_report(&value)?;
                    eprintln!("restriction failed: {e}");
                    Ok(Outcome::Fail)
                }
            }
        }

        Command::SubsegmentIntegrate {
            common,
            function,
            base,
            alpha,
            beta,
            depth,
            samples,
            tol,
            pairs,
            window,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let f = resolve_function(function, ctx.cfg.function.as_ref(), "function")?;
            let desc = resolve_base(base, ctx.cfg.base.as_ref(), "base")?;
            let alpha = parse_rational(
                &require(alpha.or_else(|| ctx.cfg.alpha.clone()), "alpha")?,
                "alpha",
            )?;
            let beta = parse_rational(
                &require(beta.or_else(|| ctx.cfg.beta.clone()), "beta")?,
                "beta",
            )?;
            let sub = Interval::new(alpha, beta).map_err(|e| usage(e.to_string()))?;
            let depth = require(depth.or(ctx.cfg.depth), "depth")?;
            let samples = samples.or(ctx.cfg.samples).unwrap_or(30);
            let tol = parse_rational(
                &require(tol.or_else(|| ctx.cfg.tolerance.clone()), "tol")?,
                "tol",
            )?;
            let window = window.or(ctx.cfg.window).unwrap_or(3);
            let pairs = pairs.or(ctx.cfg.pairs).unwrap_or(2);
            let opts = estimate_opts(depth, samples, tol, window, ctx.seed)?;
            let built: Arc<dyn FilterBase> = desc.build(&ctx.domain, &ctx.sampler)?;
            match check_subsegment_integration(&f, &built, &sub, &opts, pairs) {
                Ok(rep) => {
                    ctx.writer.write_convergence_csv("full_domain", &rep.full)?;
                    ctx.writer.write_convergence_csv("subsegment", &rep.sub)?;
                    let value = json!({
                        "command": "subsegment-integrate",
                        "params": {
                            "function": f.describe(), "base": desc,
                            "alpha": sub.lo(), "beta": sub.hi(),
                            "depth": depth, "samples": samples,
                            "tolerance": opts.tolerance, "window": window,
                            "pairs": pairs, "seed": ctx.seed,
                        },
                        "report": rep,
                    });
                    ctx.writer.write_report(&value)?;
                    println!("{}", describe_verdict(&rep.sub.verdict, ctx.approx));
                    if !rep.cancellation_exact {
                        println!("cancellation identity violated on a sampled pair");
                        return Ok(Outcome::Fail);
                    }
                    Ok(verdict_outcome(&rep.sub.verdict))
                }
                Err(
                    e @ (fint::SubsegmentError::FullRunNotConverged
                    | fint::SubsegmentError::NotComplemented { .. }),
                ) => {
                    let value = json!({
                        "command": "subsegment-integrate",
                        "params": {"function": f.describe(), "base": desc,
                                    "alpha": sub.lo(), "beta": sub.hi(), "seed": ctx.seed},
                        "error": e.to_string(),
                    });
                    ctx.writer.write_report(&value)?;
                    eprintln!("precondition unmet: {e}");
                    Ok(Outcome::Unknown)
                }
                Err(e) => Err(e.into()),
            }
        }

        Command::TheoremSuite {
            common,
            depth,
            samples,
        } => {
            let ctx = context(&common, Seeding::Required)?;
            let params = SuiteParams {
                seed: ctx.seed,
                depth: depth.or(ctx.cfg.depth).unwrap_or(8),
                samples: samples.or(ctx.cfg.samples).unwrap_or(10),
            };
            if params.depth < 2 || params.samples == 0 {
                return Err(usage("depth must be >= 2 and samples >= 1"));
            }
            let entries = run_suite(&params, &ctx.writer)?;
            for e in &entries {
                println!("{:<32} {:?}", e.id, e.status);
            }
            let value = json!({
                "command": "theorem-suite",
                "params": {"seed": params.seed, "depth": params.depth, "samples": params.samples},
                "entries": entries,
            });
            ctx.writer.write_report(&value)?;
            let status = suite_exit_status(&entries);
            println!(
                "suite: {} entries, overall {:?}",
                entries.len(),
                status
            );
            Ok(match status {
                EntryStatus::Pass => Outcome::Pass,
                EntryStatus::Fail => Outcome::Fail,
                EntryStatus::Unknown => Outcome::Unknown,
            })
        }
    }
}
