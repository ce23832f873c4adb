mod common;

use std::collections::HashMap;

use common::test_rng;
use popnet::bn::parse_bn;
use popnet::population::{
    generate_population, CandidateQuery, CounterConstraint, Counting, Endpoint, LinkType, PopulationStore,
    StoreError,
};
use proptest::prelude::*;
use rand::Rng;

const ATTRS: &str = "variable x { x0, x1, x2 }\n\
    variable y { y0, y1 }\n\
    variable RC_u { 0, 1, 2 }\n\
    variable RC_d { 0, 1, 2, 3 }\n\
    variable RC_in_d { 0, 1 }\n\
    cpt x { 0.5, 0.3, 0.2 }\n\
    cpt y | x {\n  x0: 0.9, 0.1\n  x1: 0.5, 0.5\n  x2: 0, 1\n}\n\
    cpt RC_u | y {\n  y0: 0.2, 0.5, 0.3\n  y1: 0.6, 0.4, 0\n}\n\
    cpt RC_d { 0.4, 0.3, 0.2, 0.1 }\n\
    cpt RC_in_d { 0.3, 0.7 }\n";

fn link_types() -> Vec<LinkType> {
    vec![LinkType::new("u", false), LinkType::new("d", true), LinkType::new("free", false)]
}

fn population(seed: u64, n: usize) -> PopulationStore {
    let bn = parse_bn(ATTRS).unwrap();
    generate_population(&bn, &link_types(), n, &mut test_rng(seed)).unwrap()
}

const COUNTINGS: [Counting; 4] = [Counting::None, Counting::A1, Counting::A2, Counting::Both];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_operations_keep_store_consistent(
        seed in any::<u64>(),
        ops in prop::collection::vec((0u32..25, 0u32..25, 0usize..3, 0usize..4), 1..250),
    ) {
        let mut store = population(seed, 25);
        let mut model: HashMap<(u32, u32), usize> = HashMap::new();
        let mut created: Vec<Vec<u32>> = store.agents().iter().map(|a| a.created.clone()).collect();
        for (a, b, t, c) in ops {
            let counting = COUNTINGS[c];
            let before = store.links().len();
            let key = (a.min(b), a.max(b));
            let consumed: Vec<(u32, usize)> = [(a, Endpoint::Source), (b, Endpoint::Target)]
                .into_iter()
                .filter(|&(_, side)| counting.counts(side))
                .filter_map(|(id, side)| store.schema().counter(t, side).map(|k| (id, k)))
                .collect();
            let exhausted = consumed
                .iter()
                .any(|&(id, k)| created[id as usize][k] >= store.agents()[id as usize].required[k]);
            match store.record_link(a, b, t, counting) {
                Ok(link) => {
                    prop_assert!(a != b && !model.contains_key(&key) && !exhausted);
                    if t == 1 {
                        prop_assert_eq!((link.source, link.target), (a, b));
                    } else {
                        prop_assert_eq!((link.source, link.target), key);
                    }
                    model.insert(key, t);
                    for (id, k) in consumed {
                        created[id as usize][k] += 1;
                    }
                }
                Err(StoreError::SelfLink(_)) => prop_assert_eq!(a, b),
                Err(StoreError::DyadOccupied(..)) => prop_assert!(a != b && model.contains_key(&key)),
                Err(StoreError::DemandExhausted { .. }) => prop_assert!(exhausted && !model.contains_key(&key)),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
            if store.links().len() == before {
                // Failed operations leave counters untouched.
                for ag in store.agents() {
                    prop_assert_eq!(&ag.created, &created[ag.id as usize]);
                }
            }
        }
        let mut seen = HashMap::new();
        for l in store.links() {
            prop_assert!(l.source != l.target);
            prop_assert!(seen.insert((l.source.min(l.target), l.source.max(l.target)), ()).is_none());
            prop_assert!(store.are_linked(l.source, l.target) && store.are_linked(l.target, l.source));
        }
        prop_assert_eq!(seen.len(), model.len());
        for ag in store.agents() {
            prop_assert_eq!(&ag.created, &created[ag.id as usize]);
            for k in 0..ag.required.len() {
                prop_assert!(ag.created[k] <= ag.required[k]);
            }
        }
    }

    #[test]
    fn queries_equal_a_full_scan(seed in any::<u64>(), n in 0usize..120) {
        let mut store = population(seed, n);
        let mut rng = test_rng(seed ^ 0x5eed);
        for _ in 0..n {
            let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
            let _ = store.record_link(a, b, rng.random_range(0..3), COUNTINGS[rng.random_range(0..4)]);
        }
        let cards = [3, 2, 3, 4, 2];
        for _ in 0..20 {
            let mut q = CandidateQuery::new();
            for (var, &card) in cards.iter().enumerate() {
                if rng.random_bool(0.4) {
                    q.attributes.push((var, (0..card).map(|_| rng.random_bool(0.6)).collect()));
                }
            }
            let ncounters = store.schema().counters().len();
            if rng.random_bool(0.5) {
                q = q.counter(CounterConstraint::HasRemaining(rng.random_range(0..ncounters)));
            }
            if rng.random_bool(0.3) {
                let lo = rng.random_range(0..3);
                q = q.counter(CounterConstraint::RequiredBetween(rng.random_range(0..ncounters), lo, lo + 1));
            }
            if n > 0 && rng.random_bool(0.5) {
                let id = rng.random_range(0..n as u32);
                q = q.excluding(id).not_linked_with(id);
            }
            let expected: Vec<u32> = store
                .agents()
                .iter()
                .filter(|a| q.attributes.iter().all(|(v, allowed)| allowed[a.values[*v]]))
                .filter(|a| q.counters.iter().all(|c| match *c {
                    CounterConstraint::HasRemaining(k) => a.created[k] < a.required[k],
                    CounterConstraint::RequiredBetween(k, lo, hi) => (lo..=hi).contains(&a.required[k]),
                }))
                .filter(|a| !q.exclude.contains(&a.id))
                .filter(|a| q.not_linked_with.is_none_or(|o| !store.are_linked(o, a.id)))
                .map(|a| a.id)
                .collect();
            prop_assert_eq!(&store.query_candidates(&q), &expected);
            let limit = rng.random_range(0..10);
            prop_assert_eq!(store.count_candidates(&q, limit), expected.len().min(limit));
        }
        // Value index against a scan.
        for (var, &card) in cards.iter().enumerate() {
            for v in 0..card {
                let scan: Vec<u32> = store.agents().iter().filter(|a| a.values[var] == v).map(|a| a.id).collect();
                prop_assert_eq!(store.ids_with_value(var, v), &scan[..]);
            }
        }
    }
}

#[test]
fn counter_sums_match_link_counts() {
    let mut store = population(9, 400);
    let mut rng = test_rng(10);
    for _ in 0..3000 {
        let (a, b) = (rng.random_range(0..400), rng.random_range(0..400));
        let _ = store.record_link(a, b, rng.random_range(0..2), Counting::Both);
    }
    let schema = store.schema().clone();
    let total = |k: usize| store.agents().iter().map(|a| u64::from(a.created[k])).sum::<u64>();
    let u = schema.counter(0, Endpoint::Source).unwrap();
    assert_eq!(total(u), 2 * store.link_count(0) as u64);
    let out = schema.counter(1, Endpoint::Source).unwrap();
    let inbound = schema.counter(1, Endpoint::Target).unwrap();
    assert_ne!(out, inbound);
    assert_eq!(total(out), store.link_count(1) as u64);
    assert_eq!(total(inbound), store.link_count(1) as u64);
}

#[test]
fn gender_prior_is_reproduced() {
    let bn = parse_bn("variable gender { male, female }\ncpt gender { 0.5, 0.5 }\n").unwrap();
    let store = generate_population(&bn, &[], 10_000, &mut test_rng(77)).unwrap();
    let male = store.ids_with_value(0, 0).len() as f64 / 1e4;
    assert!((male - 0.5).abs() <= 0.015, "{male}");
    let learned = store.learn_marginals(&bn);
    assert!((learned.tables[0].probs[0] - 0.5).abs() <= 0.015);
    assert!(generate_population(&bn, &[], 0, &mut test_rng(1)).unwrap().is_empty());
}
