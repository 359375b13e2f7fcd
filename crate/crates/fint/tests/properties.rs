//! Property tests for the core invariants: spectrum normalization, sum-form
//! equivalence, permutation exactness, metric axioms, envelope bracketing,
//! per-sample linearity and restriction validity.

use proptest::prelude::*;

use fint::{
    envelope_sums, restrict, rho, rho_three_sum, riemann_sum, weighted_cover_sum, AvoidSet,
    Bound, Integrand, Interval, Rational, TaggedPartition,
};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

/// Random valid partition of [0, 1]: weighted breakpoints, strictly interior
/// tags (so tags are automatically distinct).
fn arb_partition() -> impl Strategy<Value = TaggedPartition> {
    prop::collection::vec(1u32..=20, 1..=8)
        .prop_flat_map(|weights| {
            let n = weights.len();
            (Just(weights), prop::collection::vec(1i64..=15, n))
        })
        .prop_map(|(weights, tag_positions)| {
            let total: u32 = weights.iter().sum();
            let mut breakpoints = Vec::with_capacity(weights.len() + 1);
            breakpoints.push(Rational::zero());
            let mut acc = 0u32;
            for w in &weights {
                acc += w;
                breakpoints.push(Rational::new(acc as i64, total as i64).unwrap());
            }
            let tags: Vec<Rational> = breakpoints
                .windows(2)
                .zip(tag_positions)
                .map(|(w, u)| &w[0] + (&w[1] - &w[0]) * Rational::new(u, 16).unwrap())
                .collect();
            TaggedPartition::new(Interval::unit(), breakpoints, tags).unwrap()
        })
}

fn catalog() -> Vec<Integrand> {
    vec![
        Integrand::constant(r("3/2")),
        Integrand::identity(),
        Integrand::polynomial(vec![r("1"), r("-2"), r("3")]),
        Integrand::step(vec![r("1/3"), r("2/3")], vec![r("-1"), r("0"), r("2")]).unwrap(),
        Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap(),
        Integrand::dirichlet_like(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spectrum_mass_equals_domain_length(tp in arb_partition()) {
        prop_assert_eq!(tp.tag_spectrum().total_mass(), Rational::one());
    }

    #[test]
    fn sum_form_equals_spectrum_form(tp in arb_partition(), which in 0usize..6) {
        let f = &catalog()[which];
        let direct = riemann_sum(f, &tp);
        let via_spectrum: Rational = tp
            .tag_spectrum()
            .entries()
            .map(|(t, len)| f.eval(t) * len)
            .sum();
        prop_assert_eq!(direct, via_spectrum);
    }

    #[test]
    fn permuted_cell_order_gives_identical_sum(tp in arb_partition(), seed in any::<u64>()) {
        let f = Integrand::polynomial(vec![r("1/7"), r("2"), r("-1/3")]);
        let ordered = riemann_sum(&f, &tp);
        let mut cells: Vec<(Rational, Rational)> = tp
            .cells()
            .map(|c| (c.tag.clone(), c.length()))
            .collect();
        // Cheap deterministic shuffle.
        let n = cells.len();
        for i in (1..n).rev() {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 17) % (i + 1);
            cells.swap(i, j);
        }
        let shuffled: Rational = cells.into_iter().map(|(t, len)| f.eval(&t) * len).sum();
        prop_assert_eq!(ordered, shuffled);
    }

    #[test]
    fn diameter_at_least_length_over_cells(tp in arb_partition()) {
        let n = Rational::integer(tp.cell_count() as i64);
        let bound = Rational::one() / &n;
        let d = tp.diameter();
        prop_assert!(d >= bound);
        let uniform = tp
            .cells()
            .all(|c| c.length() == Rational::one() / &n);
        prop_assert_eq!(d == bound, uniform);
    }

    #[test]
    fn metric_axioms_hold_pairwise(a in arb_partition(), b in arb_partition()) {
        let d_ab = rho(&a, &b).unwrap().into_value();
        let d_ba = rho(&b, &a).unwrap().into_value();
        prop_assert!(!d_ab.is_negative());
        prop_assert_eq!(&d_ab, &d_ba);
        prop_assert_eq!(d_ab.is_zero(), a == b);
        prop_assert_eq!(rho(&a, &a).unwrap().into_value(), Rational::zero());
        // Mass bound: both spectra carry total mass 1.
        prop_assert!(d_ab <= r("2"));
        // Independent three-sum route agrees exactly.
        prop_assert_eq!(d_ab, rho_three_sum(&a, &b).unwrap().into_value());
    }

    #[test]
    fn triangle_inequality_holds(
        a in arb_partition(),
        b in arb_partition(),
        c in arb_partition(),
    ) {
        let ab = rho(&a, &b).unwrap().into_value();
        let bc = rho(&b, &c).unwrap().into_value();
        let ac = rho(&a, &c).unwrap().into_value();
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn envelopes_bracket_every_sum(tp in arb_partition(), which in 0usize..6) {
        let f = &catalog()[which];
        let s = riemann_sum(f, &tp);
        let env = envelope_sums(f, tp.breakpoints()).unwrap();
        prop_assert!(env.lower <= Bound::Finite(s.clone()), "lower {:?} vs {}", env.lower, s);
        prop_assert!(Bound::Finite(s.clone()) <= env.upper, "upper {:?} vs {}", env.upper, s);
    }

    #[test]
    fn per_sample_linearity_is_exact(
        tp in arb_partition(),
        fi in 0usize..6,
        gi in 0usize..6,
        an in -6i64..=6,
        bn in -6i64..=6,
    ) {
        let f = &catalog()[fi];
        let g = &catalog()[gi];
        let alpha = Rational::new(an, 3).unwrap();
        let beta = Rational::new(bn, 2).unwrap();
        let combo = Integrand::combination(alpha.clone(), f.clone(), beta.clone(), g.clone());
        let lhs = riemann_sum(&combo, &tp);
        let rhs = alpha * riemann_sum(f, &tp) + beta * riemann_sum(g, &tp);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn restriction_is_valid_and_idempotent(
        tp in arb_partition(),
        a in 1i64..=95,
        span in 1i64..=95,
    ) {
        let b = (a + span).min(96);
        prop_assume!(a < b);
        let sub = Interval::new(
            Rational::new(a, 97).unwrap(),
            Rational::new(b, 97).unwrap(),
        ).unwrap();
        prop_assume!(tp.tags().iter().any(|t| sub.contains_open(t)));
        // Fraction-of-97 endpoints never coincide with grid-of-2 breakpoints
        // or tags, so the only failure mode is the missing-tag precondition,
        // excluded above.
        let (out, trace) = restrict(&tp, &sub).unwrap();
        prop_assert_eq!(out.domain(), &sub);
        for t in out.tags() {
            prop_assert!(sub.contains(t));
        }
        prop_assert!(trace.case_id >= 1 && trace.case_id <= 4);
        let (again, _) = restrict(&out, &sub).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn cover_sum_matches_brute_force(tp in arb_partition(), cutoff in 1u64..=32) {
        let points = AvoidSet::reciprocal_integers();
        let cs = weighted_cover_sum(&tp, &points, cutoff);
        // Brute force over the generator image.
        let mut expected = Rational::zero();
        for n in 1..=cutoff {
            let t = points.point(n).unwrap();
            expected = expected + Rational::from(n) * tp.tag_spectrum().coverage(&t);
        }
        prop_assert_eq!(cs.value, expected);
    }
}
