//! The distance between tagged partitions and its metric axioms.
//!
//! Two partitions of the same interval are compared through their tag
//! spectra: the distance is the exact l1 distance between the spectra. An
//! independent three-sum evaluation (shared tags by coverage difference,
//! unshared tags by full coverage) is kept alongside purely as a
//! cross-check; production paths use the spectrum form.
//!
//! The distance is a genuine metric on partitions of a fixed interval
//! because tag values are pairwise distinct within a partition. Comparing
//! partitions of different intervals is an error, not a distance.

use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::partition::TaggedPartition;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("partitions live on different intervals ({left} vs {right})")]
    DomainMismatch { left: String, right: String },
    #[error("sample is empty")]
    EmptySample,
}

/// A nonnegative exact distance between two tagged partitions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RhoDistance(Rational);

impl RhoDistance {
    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_value(self) -> Rational {
        self.0
    }
}

impl std::fmt::Display for RhoDistance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn require_same_domain(a: &TaggedPartition, b: &TaggedPartition) -> Result<(), MetricError> {
    if a.domain() != b.domain() {
        return Err(MetricError::DomainMismatch {
            left: a.domain().to_string(),
            right: b.domain().to_string(),
        });
    }
    Ok(())
}

/// Exact distance between two partitions of the same interval, computed as
/// the l1 distance of their tag spectra.
pub fn rho(a: &TaggedPartition, b: &TaggedPartition) -> Result<RhoDistance, MetricError> {
    require_same_domain(a, b)?;
    Ok(RhoDistance(a.tag_spectrum().l1_distance(&b.tag_spectrum())))
}

/// Independent three-sum evaluation of the same distance: shared tags
/// contribute the coverage difference, tags private to either side
/// contribute their full coverage. Used only to cross-check [`rho`].
pub fn rho_three_sum(a: &TaggedPartition, b: &TaggedPartition) -> Result<RhoDistance, MetricError> {
    require_same_domain(a, b)?;
    let sa = a.tag_spectrum();
    let sb = b.tag_spectrum();
    let mut total = Rational::zero();
    for (t, cov_a) in sa.entries() {
        let cov_b = sb.coverage(t);
        if cov_b.is_zero() {
            total = total + cov_a.clone();
        } else {
            total = total + (cov_a - &cov_b).abs();
        }
    }
    for (t, cov_b) in sb.entries() {
        if sa.coverage(t).is_zero() {
            total = total + cov_b.clone();
        }
    }
    Ok(RhoDistance(total))
}

/// Outcome of one metric axiom over a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AxiomOutcome {
    Pass,
    Fail { counterexample: String },
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, AxiomOutcome::Pass)
    }
}

/// Per-axiom verdicts over all pairs and triples of a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub sample_size: usize,
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub nonnegativity: AxiomOutcome,
    pub symmetry: AxiomOutcome,
    pub identity: AxiomOutcome,
    pub triangle: AxiomOutcome,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.nonnegativity.passed()
            && self.symmetry.passed()
            && self.identity.passed()
            && self.triangle.passed()
    }
}

/// Checks nonnegativity, symmetry, identity and the triangle inequality on
/// every pair and triple of `sample`, in exact arithmetic.
///
/// All distances are computed once into a matrix (in parallel when enabled),
/// then the axioms are read off the matrix; a failure reports the offending
/// indices and values.
pub fn check_metric_axioms(sample: &[TaggedPartition]) -> Result<AxiomReport, MetricError> {
    if sample.is_empty() {
        return Err(MetricError::EmptySample);
    }
    for tp in sample.iter().skip(1) {
        require_same_domain(&sample[0], tp)?;
    }
    let n = sample.len();
    let mut pair_indices = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pair_indices.push((i, j));
        }
    }
    let pairs_checked = pair_indices.len();
    // For symmetry, evaluate both orientations independently.
    let dists: Vec<(Rational, Rational)> = exec::map_ordered(pair_indices.clone(), |(i, j)| {
        let d_ij = rho(&sample[i], &sample[j]).expect("domains checked").into_value();
        let d_ji = rho(&sample[j], &sample[i]).expect("domains checked").into_value();
        (d_ij, d_ji)
    });

    let mut matrix = vec![vec![Rational::zero(); n]; n];
    let mut nonnegativity = AxiomOutcome::Pass;
    let mut symmetry = AxiomOutcome::Pass;
    let mut identity = AxiomOutcome::Pass;
    for ((i, j), (d_ij, d_ji)) in pair_indices.iter().zip(dists.into_iter()) {
        if d_ij.is_negative() && nonnegativity.passed() {
            nonnegativity = AxiomOutcome::Fail {
                counterexample: format!("rho({i},{j}) = {d_ij} < 0"),
            };
        }
        if d_ij != d_ji && symmetry.passed() {
            symmetry = AxiomOutcome::Fail {
                counterexample: format!("rho({i},{j}) = {d_ij} but rho({j},{i}) = {d_ji}"),
            };
        }
        let equal = sample[*i] == sample[*j];
        if (d_ij.is_zero()) != equal && identity.passed() {
            identity = AxiomOutcome::Fail {
                counterexample: format!(
                    "rho({i},{j}) = {d_ij} while partitions are {}",
                    if equal { "equal" } else { "distinct" }
                ),
            };
        }
        matrix[*i][*j] = d_ij.clone();
        matrix[*j][*i] = d_ij;
    }
    // Self-distances: rho(x, x) must be exactly zero.
    for (i, tp) in sample.iter().enumerate() {
        let d = rho(tp, tp).expect("same instance").into_value();
        if !d.is_zero() && identity.passed() {
            identity = AxiomOutcome::Fail {
                counterexample: format!("rho({i},{i}) = {d} != 0"),
            };
        }
    }

    let mut triangle = AxiomOutcome::Pass;
    let mut triples_checked = 0usize;
    'outer: for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                triples_checked += 3;
                let checks = [
                    (i, k, j), // d(i,k) <= d(i,j) + d(j,k)
                    (i, j, k),
                    (j, k, i),
                ];
                for (x, z, y) in checks {
                    let direct = &matrix[x][z];
                    let via = &matrix[x][y] + &matrix[y][z];
                    if *direct > via {
                        triangle = AxiomOutcome::Fail {
                            counterexample: format!(
                                "rho({x},{z}) = {direct} > rho({x},{y}) + rho({y},{z}) = {via}"
                            ),
                        };
                        break 'outer;
                    }
                }
            }
        }
    }

    Ok(AxiomReport {
        sample_size: n,
        pairs_checked,
        triples_checked,
        nonnegativity,
        symmetry,
        identity,
        triangle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
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
    fn distance_to_self_is_zero() {
        let p = tp(&["0", "1/3", "1"], &["1/6", "2/3"]);
        assert_eq!(rho(&p, &p).unwrap().into_value(), r("0"));
    }

    #[test]
    fn disjoint_tags_add_full_coverage() {
        let a = tp(&["0", "1"], &["1/2"]);
        let b = tp(&["0", "1/2", "1"], &["1/4", "3/4"]);
        assert_eq!(rho(&a, &b).unwrap().into_value(), r("2"));
    }

    #[test]
    fn shared_tag_contributes_coverage_difference() {
        let a = tp(&["0", "1/2", "1"], &["1/4", "3/4"]);
        let b = tp(&["0", "1/2", "1"], &["1/4", "7/8"]);
        assert_eq!(rho(&a, &b).unwrap().into_value(), r("1"));
    }

    #[test]
    fn different_domains_are_an_error() {
        let a = tp(&["0", "1"], &["1/2"]);
        let b = tp(&["0", "1/2"], &["1/4"]);
        assert!(matches!(rho(&a, &b), Err(MetricError::DomainMismatch { .. })));
    }

    #[test]
    fn three_sum_form_matches_spectrum_form() {
        let ps = [
            tp(&["0", "1"], &["1/2"]),
            tp(&["0", "1/2", "1"], &["1/4", "3/4"]),
            tp(&["0", "1/2", "1"], &["1/4", "7/8"]),
            tp(&["0", "1/8", "1/2", "1"], &["1/16", "1/4", "3/4"]),
            tp(&["0", "1/3", "2/3", "1"], &["1/6", "1/2", "5/6"]),
        ];
        for a in &ps {
            for b in &ps {
                assert_eq!(rho(a, b).unwrap(), rho_three_sum(a, b).unwrap());
            }
        }
    }

    #[test]
    fn distance_bounded_by_twice_domain_length() {
        let a = tp(&["0", "1/7", "1"], &["1/14", "2/7"]);
        let b = tp(&["0", "1/2", "1"], &["1/3", "5/6"]);
        let bound = r("2");
        assert!(rho(&a, &b).unwrap().into_value() <= bound);
    }

    #[test]
    fn axioms_hold_on_single_partition() {
        let p = tp(&["0", "1"], &["1/2"]);
        let report = check_metric_axioms(std::slice::from_ref(&p)).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.pairs_checked, 0);
    }

    #[test]
    fn axioms_hold_on_small_handmade_sample() {
        let sample = vec![
            tp(&["0", "1"], &["1/2"]),
            tp(&["0", "1/2", "1"], &["1/4", "3/4"]),
            tp(&["0", "1/2", "1"], &["1/4", "7/8"]),
            tp(&["0", "1/4", "3/4", "1"], &["1/8", "1/2", "7/8"]),
        ];
        let report = check_metric_axioms(&sample).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.pairs_checked, 6);
        assert_eq!(report.triples_checked, 12);
    }
}
