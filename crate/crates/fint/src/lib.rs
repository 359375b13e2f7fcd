//! Exact-arithmetic laboratory for integration with respect to filters on
//! tagged partitions.
//!
//! The classical Riemann integral is the limit of weighted sums
//! `S(f, P, T) = sum f(t_k) (b_k - b_{k-1})` as the mesh of the tagged
//! partition `(P, T)` shrinks. That limit is a limit over one particular
//! filter on the space of tagged partitions; swapping in other filters
//! yields other integrals with different reach (some integrate unbounded
//! functions). This crate makes that construction concrete and testable:
//!
//! * [`partition`] — exact tagged partitions of a rational interval, their
//!   weighted sums and tag spectra;
//! * [`metric`] — the l1 spectrum distance between partitions and its
//!   metric axioms;
//! * [`filters`] — countably-based filters (mesh, exactly tagged,
//!   subsegment restrictions), subset and dominance certificates;
//! * [`integrator`] — Cauchy-window limit estimation, boundedness probes,
//!   linearity checks, weighted cover sums;
//! * [`subsegment`] — the four-case restriction of partitions to a
//!   subsegment, complementation witnesses, subsegment integration.
//!
//! Everything numeric is an exact [`Rational`]; every random draw is seeded
//! and reproducible; every parallel reduction is ordered, so outputs are
//! byte-identical across runs and worker counts (the `parallel` feature
//! only changes how fast you get them).

pub mod exec;
pub mod filters;
pub mod integrand;
pub mod integrator;
pub mod metric;
pub mod partition;
pub mod rational;
pub mod sampler;
pub mod subsegment;

mod rng;

pub use filters::{
    check_rho_dominance, check_subset, exactly_tagged_base, induced_subsegment_base, mesh_base,
    AvoidSet, BaseDescriptor, DeltaSchedule, DominanceOpts, DominanceVerdict, ExactlyTaggedBase,
    FilterBase, FilterError, IdentityProjector, MeshBase, Projector, SubsegmentBase, SubsetOpts,
    SubsetVerdict, TagPerturbProjector,
};
pub use integrand::{Bound, CellEnvelope, Integrand, IntegrandError};
pub use integrator::{
    build_unbounded_witness, check_linearity, envelope_sums, estimate_filter_limit,
    probe_f_boundedness, riemann_sum, weighted_cover_sum, BoundednessCertificate,
    BoundednessOutcome, ConvergenceReport, CoverSum, EnvelopeSums, EstimateOpts, IndexStats,
    IntegrateError, LinearityReport, ProbeOpts, Verdict,
};
pub use metric::{check_metric_axioms, rho, rho_three_sum, AxiomOutcome, AxiomReport, MetricError,
    RhoDistance};
pub use partition::{
    concat, concat_all, partition_from_json, partition_to_json, Cell, Interval, PartitionError,
    TaggedPartition, TagSpectrum,
};
pub use rational::{Rational, RationalError};
pub use sampler::{random_partitions, SamplerConfig};
pub use subsegment::{
    check_complemented, check_subsegment_integration, complement_witness, complemented_pairs,
    outer_parts, restrict, ComplementWitness, ComplementedPair, ComplementedVerdict,
    RestrictionTrace, SubsegmentError, SubsegmentIntegrationReport,
};
