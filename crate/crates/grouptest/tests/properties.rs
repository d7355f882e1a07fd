//! Structural invariants checked over generated instances.

use proptest::prelude::*;

use grouptest::bounds::{binary_entropy, test_profile};
use grouptest::decode::{
    comp_decode, dd_decode, possible_defectives, scomp_decode, smallest_satisfying_oracle,
    OracleOutcome, TieRule,
};
use grouptest::design::{compute_outcomes, ItemSet, TestDesign};
use grouptest::lp::{build_relaxation, simplex_solve, CoverLp};

/// Arbitrary small instance: explicit inclusion matrix plus a defective
/// set, with outcomes derived by the noiseless rule.
fn instance() -> impl Strategy<Value = (TestDesign, ItemSet)> {
    (1usize..=15, 1usize..=12)
        .prop_flat_map(|(n, t)| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), t),
                prop::collection::vec(0..n, 0..=4),
            )
        })
        .prop_map(|(n, matrix, defectives)| {
            let pools: Vec<Vec<usize>> = matrix
                .iter()
                .map(|row| {
                    row.iter().enumerate().filter_map(|(item, &set)| set.then_some(item)).collect()
                })
                .collect();
            let design = TestDesign::from_pools(n, &pools).expect("valid pools");
            (design, ItemSet::from_unsorted(defectives))
        })
}

proptest! {
    #[test]
    fn decoder_invariants((design, defectives) in instance(), tie_seed in any::<u64>()) {
        let outcomes = compute_outcomes(&design, &defectives).unwrap();

        let pd = possible_defectives(&design, &outcomes).unwrap();
        let comp = comp_decode(&design, &outcomes).unwrap();
        let dd = dd_decode(&design, &outcomes).unwrap();
        let scomp = scomp_decode(&design, &outcomes, TieRule::Lowest).unwrap();
        let scomp_rand =
            scomp_decode(&design, &outcomes, TieRule::Random { seed: tie_seed }).unwrap();

        // COMP keeps every defective; DD invents none.
        prop_assert!(defectives.is_subset_of(&comp.estimate));
        prop_assert!(dd.estimate.is_subset_of(&defectives));
        prop_assert_eq!(&comp.estimate, &pd);

        // Sandwich: dd_core within SCOMP within the possible defectives.
        prop_assert!(dd.dd_core.is_subset_of(&scomp.estimate));
        prop_assert!(scomp.estimate.is_subset_of(&pd));

        // SCOMP terminates on a satisfying set for noiseless outcomes.
        prop_assert!(scomp.satisfying);
        prop_assert!(scomp_rand.satisfying);

        // Property P under either tie rule.
        if dd.satisfying {
            prop_assert_eq!(&scomp.estimate, &dd.estimate);
            prop_assert_eq!(&scomp_rand.estimate, &dd.estimate);
        }
    }

    #[test]
    fn lp_objective_within_relaxation_bound((design, defectives) in instance()) {
        let outcomes = compute_outcomes(&design, &defectives).unwrap();
        let lp = build_relaxation(&design, &outcomes).unwrap();
        let solution = simplex_solve(&lp, 1e-9).unwrap();

        let minimum_size = match smallest_satisfying_oracle(&design, &outcomes, design.n()).unwrap() {
            OracleOutcome::Unique(set) => set.len(),
            OracleOutcome::Ambiguous { size, .. } => size,
            OracleOutcome::NoneWithinCap { .. } => unreachable!("noiseless instances satisfiable"),
        };
        prop_assert!(
            solution.objective <= minimum_size as f64 + 1e-7,
            "LP {} above integer minimum {}", solution.objective, minimum_size
        );

        // The returned point must actually be feasible.
        for constraint in lp.constraints() {
            let total: f64 = constraint.iter().map(|&i| solution.value_of(i)).sum();
            prop_assert!(total >= 1.0 - 1e-7, "constraint unmet: {total}");
        }
        for (_, value) in solution.entries() {
            prop_assert!(value >= -1e-9);
        }
    }

    #[test]
    fn lp_objective_ignores_duplicates_and_order(
        (design, defectives) in instance(),
        dup_mask in any::<u64>(),
    ) {
        let outcomes = compute_outcomes(&design, &defectives).unwrap();
        let lp = build_relaxation(&design, &outcomes).unwrap();
        if lp.num_constraints() == 0 {
            return Ok(());
        }
        let baseline = simplex_solve(&lp, 1e-9).unwrap().objective;

        let mut shuffled: Vec<Vec<usize>> = lp.constraints().to_vec();
        for (idx, constraint) in lp.constraints().iter().enumerate() {
            if dup_mask >> (idx % 64) & 1 == 1 {
                shuffled.push(constraint.clone());
            }
        }
        shuffled.reverse();
        let rebuilt = CoverLp::new(lp.variables().to_vec(), shuffled).unwrap();
        let objective = simplex_solve(&rebuilt, 1e-9).unwrap().objective;
        prop_assert!((objective - baseline).abs() <= 1e-7);
    }

    #[test]
    fn outcomes_monotone_under_set_growth(
        (design, defectives) in instance(),
        extra in prop::collection::vec(0usize..15, 0..=3),
    ) {
        let extra: Vec<usize> = extra.into_iter().filter(|&i| i < design.n()).collect();
        let mut grown: Vec<usize> = defectives.iter().collect();
        grown.extend(extra);
        let grown = ItemSet::from_unsorted(grown);

        let base = compute_outcomes(&design, &defectives).unwrap();
        let more = compute_outcomes(&design, &grown).unwrap();
        for test in 0..design.t() {
            prop_assert!(!base.is_positive(test) || more.is_positive(test));
        }
    }

    #[test]
    fn profile_invariants(p in 0f64..=1.0, k in 0usize..40) {
        let profile = test_profile(p, k).unwrap();
        prop_assert!((profile.q0 + profile.q1plus - 1.0).abs() < 1e-12);
        prop_assert!(profile.q1 >= -1e-12);
        prop_assert!(profile.q1 <= profile.q1plus + 1e-12);
        prop_assert!(profile.q1plus <= 1.0 + 1e-12);
    }

    #[test]
    fn entropy_bounded_and_symmetric(x in 0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        let mirrored = binary_entropy(1.0 - x).unwrap();
        prop_assert!((h - mirrored).abs() < 1e-9);
    }
}
