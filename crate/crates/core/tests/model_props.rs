mod common;

use common::{explored_directly_follows, leaf_labels};
use driftbench::model::{
    accepts, activity_overlap, apply_steps, directly_follows, generate_model_pair,
    generate_random_model, play_out, union_model, GenerationConfig, Node, ProcessModel,
};
use proptest::prelude::*;

fn small_config() -> impl Strategy<Value = GenerationConfig> {
    (1usize..=8, 1usize..=4, 0u32..=2, any::<u64>()).prop_map(
        |(alphabet_size, max_depth, bound, seed)| GenerationConfig {
            alphabet_size,
            max_depth,
            loop_redo_bound: bound,
            seed,
            ..GenerationConfig::default()
        },
    )
}

#[test]
fn oracle_on_hand_built_models() {
    let cases = [
        ("seq(a, b, c)", vec![("a", "b"), ("b", "c")]),
        ("xor(a, b)", vec![]),
        ("and(a, b)", vec![("a", "b"), ("b", "a")]),
        ("loop[1](a, b)", vec![("a", "b"), ("b", "a")]),
        ("loop[0](a, b)", vec![]),
        ("seq(xor(a, b), c)", vec![("a", "c"), ("b", "c")]),
    ];
    for (text, want) in cases {
        let m: ProcessModel = text.parse().unwrap();
        let want: driftbench::model::DirectlyFollows = want
            .into_iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(explored_directly_follows(&m), want, "{text}");
        assert_eq!(directly_follows(&m), want, "{text}");
    }
}

#[test]
fn play_out_df_is_within_footprint() {
    let m: ProcessModel = "seq(a, and(b, loop[2](c, d)), xor(e, f))".parse().unwrap();
    let df = directly_follows(&m);
    let mut seen = std::collections::BTreeSet::new();
    for t in play_out(&m, 3000, 4) {
        for w in t.windows(2) {
            seen.insert((w[0].clone(), w[1].clone()));
        }
    }
    // enough traces reach every pair of this small model
    assert_eq!(seen, df);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn structural_df_matches_exploration(config in small_config()) {
        let m = generate_random_model(&config).unwrap();
        prop_assert_eq!(directly_follows(&m), explored_directly_follows(&m), "{}", m);
    }

    #[test]
    fn generator_respects_size_and_depth(config in small_config()) {
        let m = generate_random_model(&config).unwrap();
        prop_assert_eq!(m.leaf_count(), config.alphabet_size);
        prop_assert_eq!(leaf_labels(m.root()).len(), config.alphabet_size);
        prop_assert!(m.depth() <= config.max_depth);
    }

    #[test]
    fn text_round_trip(config in small_config()) {
        let m = generate_random_model(&config).unwrap();
        let back: ProcessModel = m.to_string().parse().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn play_out_is_replayable(config in small_config(), seed in any::<u64>()) {
        let m = generate_random_model(&config).unwrap();
        for t in play_out(&m, 20, seed) {
            prop_assert!(accepts(&m, &t), "{} rejects {:?}", m, t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairs_satisfy_constraints(seed in any::<u64>()) {
        let pair = generate_model_pair(&GenerationConfig::with_seed(seed)).unwrap();
        let (p, k) = (&pair.p, &pair.k.model);
        let pa = leaf_labels(p.root());
        let ka = leaf_labels(k.root());
        let overlap = ka.intersection(&pa).count() as f64 / ka.len() as f64;
        prop_assert!(overlap >= 0.85);
        prop_assert!((overlap - activity_overlap(p, k)).abs() < 1e-12);
        let dp = explored_directly_follows(p);
        let dk = explored_directly_follows(k);
        prop_assert!(dp.is_disjoint(&dk));
        prop_assert_eq!(&apply_steps(p, &pair.k.steps).unwrap(), k);
        prop_assert_eq!(&pair.w, &union_model(p, k));
        prop_assert!(matches!(pair.w.root(), Node::ExclusiveChoice(c) if c.len() == 2));
    }
}
