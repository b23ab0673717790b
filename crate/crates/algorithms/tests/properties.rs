use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use locomp_algorithms::carto::{carto_initial, carto_same, carto_system};
use locomp_algorithms::catalog::{treesize, treesize_initial, TreeSizeVariant};
use locomp_algorithms::family::FamilySpec;
use locomp_algorithms::gssp::{check_iterated_counters, check_third_lemma, trust_radius, value_convexity_violations};
use locomp_algorithms::mazurkiewicz::{initial_state, mazur_system, numbers, verify_final, MazurState};
use locomp_algorithms::termination::{classify, universal_initial, Mode, UniCounted};
use locomp_core::covering::{covering_minimal, is_covering};
use locomp_core::engine::{run, Scheduler};
use locomp_core::generators::{random_connected, random_tree, ring};
use locomp_core::{Morphism, RunOutcome, State};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mazurkiewicz_final_states(n in 2usize..7, p in 0.0f64..0.5, gseed in any::<u64>(), seed in any::<u64>()) {
        let g = random_connected(n, p, &mut ChaCha8Rng::seed_from_u64(gseed));
        let t = run(&mazur_system(), &initial_state(&g), &Scheduler::Random(seed), 1_000_000);
        prop_assert!(verify_final(&t).unwrap().passed());
        // Every vertex reconstructs a graph covered by the input.
        let fin = &t.final_graph;
        let h = fin.label(0).h().unwrap();
        let map: Vec<usize> = fin.vertices().map(|v| h.index_of(fin.label(v).number).unwrap()).collect();
        let cov = Morphism::total(g.clone(), h.graph.clone(), map).unwrap();
        prop_assert!(is_covering(&cov).is_covering);
        if covering_minimal(&g).unwrap() {
            let mut ns = numbers(fin);
            ns.sort();
            prop_assert_eq!(ns, (1..=n as u32).collect::<Vec<_>>());
        }
        for s in fin.labels() {
            prop_assert_eq!(&MazurState::from_label(&s.to_label()).unwrap(), s);
        }
    }

    #[test]
    fn carto_counters_respect_the_lemmas(n in 3usize..7, seed in any::<u64>()) {
        let family = Arc::new(FamilySpec::rings(6));
        let t = run(&carto_system(family), &carto_initial(&ring(n)), &Scheduler::Random(seed), 200_000);
        prop_assert_eq!(t.outcome, RunOutcome::NormalForm);
        let same = carto_same();
        prop_assert!(check_third_lemma(&t, &*same, &trust_radius).is_empty());
        prop_assert!(check_iterated_counters(&t, &*same).is_empty());
        prop_assert!(value_convexity_violations(&t, &*same).is_empty());
    }

    #[test]
    fn treesize_outputs_and_modes(n in 2usize..9, gseed in any::<u64>(), seed in any::<u64>()) {
        let g = random_tree(n, &mut ChaCha8Rng::seed_from_u64(gseed));
        for (variant, mode) in [
            (TreeSizeVariant::Implicit, Mode::Implicit),
            (TreeSizeVariant::Ltd, Mode::Ltd),
            (TreeSizeVariant::Otd, Mode::Otd),
            (TreeSizeVariant::Gtd, Mode::Gtd),
        ] {
            let t = run(&treesize(variant), &treesize_initial(&g), &Scheduler::Random(seed), 100_000);
            prop_assert_eq!(t.outcome, RunOutcome::NormalForm);
            prop_assert!(t.final_graph.labels().iter().all(|s| s.out.as_int() == Some(n as i64)));
            prop_assert_eq!(classify(&t).mode, mode);
        }
    }

    #[test]
    fn universal_states_round_trip(seed in any::<u64>()) {
        let sys = locomp_algorithms::termination::election_universal(Arc::new(FamilySpec::prime_rings(7)));
        let t = run(&sys, &universal_initial(&ring(3)), &Scheduler::Random(seed), 1_000_000);
        for g in t.graphs() {
            for s in g.labels() {
                prop_assert_eq!(&UniCounted::from_label(&s.to_label()).unwrap(), s);
            }
        }
    }
}
