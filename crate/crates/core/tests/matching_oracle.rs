mod common;

use common::{enumerate_joint, test_rng};
use popnet::bn::{parse_bn, BayesianNetwork, Cpt, NetworkDraft, VariableSpec};
use popnet::matching::{parse_matching_bn, Counts, HomophilyRule, RuleKind, RuleOptions};
use popnet::population::{CandidateQuery, CounterConstraint, LinkType, PopulationStore, Schema};
use popnet::rng::SeedTree;
use rand::Rng;

fn labels(card: usize) -> Vec<String> {
    (0..card).map(|k| format!("s{k}")).collect()
}

fn random_rows<R: Rng>(rng: &mut R, rows: usize, card: usize, zeros: f64) -> Vec<f64> {
    let mut probs = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        let mut row: Vec<f64> = (0..card)
            .map(|_| if rng.random_bool(zeros) { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if row.iter().all(|&p| p == 0.0) {
            row[rng.random_range(0..card)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        probs.extend(row.iter().map(|p| p / s));
    }
    probs
}

/// Attribute network with independent `x`, `y` and a required-link counter.
fn attribute_bn(cx: usize, cy: usize) -> BayesianNetwork {
    let variables = vec![
        VariableSpec::new("x", labels(cx)),
        VariableSpec::new("y", labels(cy)),
        VariableSpec::new("RC_t", ["0", "1"]),
    ];
    let cpts = vec![
        Cpt::prior("x", vec![1.0 / cx as f64; cx]),
        Cpt::prior("y", vec![1.0 / cy as f64; cy]),
        Cpt::prior("RC_t", vec![0.0, 1.0]),
    ];
    NetworkDraft::new(variables, cpts).build().unwrap()
}

/// Matching network over both agents' `x` and `y`, an internal condition
/// node and the link variable, serialized with its header.
fn random_matching_text<R: Rng>(rng: &mut R, cx: usize, cy: usize) -> String {
    let names = ["a1_x", "a1_y", "a2_x", "a2_y"];
    let cards = [cx, cy, cx, cy];
    let mut variables: Vec<VariableSpec> = names
        .iter()
        .zip(cards)
        .map(|(n, c)| VariableSpec::new(*n, labels(c)))
        .collect();
    variables.push(VariableSpec::new("cond", ["yes", "no"]));
    variables.push(VariableSpec::new("link", ["yes", "no"]));
    let mut cpts: Vec<Cpt> = names
        .iter()
        .zip(cards)
        .map(|(n, c)| Cpt::prior(*n, random_rows(rng, 1, c, 0.0)))
        .collect();
    let mut cond_parents: Vec<usize> = (0..4).filter(|_| rng.random_bool(0.6)).collect();
    if cond_parents.is_empty() {
        cond_parents.push(rng.random_range(0..4));
    }
    let rows: usize = cond_parents.iter().map(|&p| cards[p]).product();
    cpts.push(Cpt::new(
        "cond",
        cond_parents.iter().map(|&p| names[p].to_string()).collect(),
        random_rows(rng, rows, 2, 0.5),
    ));
    let mut link_parents = vec!["cond".to_string()];
    let mut link_rows = 2;
    if rng.random_bool(0.5) {
        let p = rng.random_range(0..4);
        link_parents.push(names[p].to_string());
        link_rows *= cards[p];
    }
    cpts.push(Cpt::new("link", link_parents, random_rows(rng, link_rows, 2, 0.4)));
    let bn = NetworkDraft::new(variables, cpts).build().unwrap();
    format!("matching t link=link a1=a1_ a2=a2_ counts=both\n{}", bn.to_text())
}

/// One agent per (x, y) combination, each requiring one link.
fn full_store(attrs: &BayesianNetwork) -> PopulationStore {
    let schema = Schema::new(attrs, &[LinkType::new("t", false)]).unwrap();
    let mut store = PopulationStore::new(schema);
    for x in 0..attrs.cardinality(0) {
        for y in 0..attrs.cardinality(1) {
            store.push_agent(vec![x, y, 1]);
        }
    }
    store
}

struct Oracle {
    joint: Vec<(Vec<usize>, f64)>,
    cards: Vec<usize>,
}

const LINK: usize = 5;
const YES: usize = 0;

impl Oracle {
    fn new(bn: &BayesianNetwork) -> Self {
        Self {
            joint: enumerate_joint(bn),
            cards: bn.variables().iter().map(|v| v.cardinality()).collect(),
        }
    }

    /// Values of matching variable `var` with positive mass jointly with
    /// link=yes and `fixed`.
    fn support(&self, var: usize, fixed: &[(usize, usize)]) -> Vec<bool> {
        let mut mass = vec![0.0; self.cards[var]];
        for (a, p) in &self.joint {
            if a[LINK] == YES && fixed.iter().all(|&(v, k)| a[v] == k) {
                mass[a[var]] += p;
            }
        }
        mass.iter().map(|&m| m > 0.0).collect()
    }

    fn mass(&self, fixed: &[(usize, usize)]) -> f64 {
        self.joint
            .iter()
            .filter(|(a, _)| fixed.iter().all(|&(v, k)| a[v] == k))
            .map(|(_, p)| p)
            .sum()
    }

    fn compatibility(&self, x1: usize, y1: usize, x2: usize, y2: usize) -> f64 {
        let ev = [(0, x1), (1, y1), (2, x2), (3, y2)];
        let z = self.mass(&ev);
        if z == 0.0 {
            return 0.0;
        }
        let mut with = ev.to_vec();
        with.push((LINK, YES));
        self.mass(&with) / z
    }
}

fn constraint(q: &CandidateQuery, attr: usize) -> &[bool] {
    &q.attributes.iter().find(|(a, _)| *a == attr).expect("attribute constrained").1
}

fn admits(q: &CandidateQuery, values: &[usize]) -> bool {
    q.attributes.iter().all(|(a, allowed)| allowed[values[*a]])
}

#[test]
fn candidate_sets_match_enumeration_on_random_networks() {
    let mut rng = test_rng(5);
    let mut vacuous = 0;
    for case in 0..60 {
        let (cx, cy) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let attrs = attribute_bn(cx, cy);
        let store = full_store(&attrs);
        let text = random_matching_text(&mut rng, cx, cy);
        let rule = HomophilyRule::new(parse_matching_bn(&text).unwrap(), store.schema(), None, RuleOptions::default()).unwrap();
        let oracle = Oracle::new(rule.network());

        let link_mass = oracle.mass(&[(LINK, YES)]);
        assert!((rule.link_probability() - link_mass).abs() < 1e-12);
        let sets = rule.derive_candidate_sets(store.schema());
        if link_mass == 0.0 {
            assert!(sets.is_err(), "case {case}");
            vacuous += 1;
            continue;
        }
        let [c1, c2] = sets.unwrap();
        for (q, offset) in [(&c1, 0), (&c2, 2)] {
            assert_eq!(constraint(q, 0), oracle.support(offset, &[]), "case {case}");
            assert_eq!(constraint(q, 1), oracle.support(offset + 1, &[]), "case {case}");
            assert_eq!(q.counters, vec![CounterConstraint::HasRemaining(0)]);
        }

        for a in store.agents() {
            let (x1, y1) = (a.values[0], a.values[1]);
            let fixed = [(0, x1), (1, y1), (LINK, YES)];
            match rule.conditional_candidates(&store, a.id) {
                Err(_) => assert_eq!(oracle.mass(&fixed), 0.0, "case {case}"),
                Ok(q) => {
                    assert_eq!(constraint(&q, 0), oracle.support(2, &fixed[..2]), "case {case}");
                    assert_eq!(constraint(&q, 1), oracle.support(3, &fixed[..2]), "case {case}");
                    assert_eq!(q.exclude, vec![a.id]);
                    assert_eq!(q.not_linked_with, Some(a.id));
                }
            }
            for b in store.agents() {
                let (x2, y2) = (b.values[0], b.values[1]);
                let c = rule.compatibility(&store, a.id, b.id);
                assert!((c - oracle.compatibility(x1, y1, x2, y2)).abs() < 1e-12, "case {case}");
                if c > 0.0 {
                    // Zero pruning never excludes a feasible pair.
                    assert!(admits(&c1, &a.values) && admits(&c2, &b.values), "case {case}");
                    assert!(admits(&rule.conditional_candidates(&store, a.id).unwrap(), &b.values));
                }
            }
        }
    }
    assert!(vacuous < 30, "too few informative cases");
}

const SIDES: &str = "variable side { a, b }\n\
    variable RC_t { 0, 1 }\n\
    cpt side { 0.5, 0.5 }\n\
    cpt RC_t { 0, 1 }\n";

const CROSS: &str = "matching t link=link a1=a1_ a2=a2_ counts=both\n\
    variable a1_side { a, b }\n\
    variable a2_side { a, b }\n\
    variable link { yes, no }\n\
    cpt a1_side { 0.5, 0.5 }\n\
    cpt a2_side { 0.5, 0.5 }\n\
    cpt link | a1_side, a2_side {\n\
      a, a: 0, 1\n\
      a, b: 1, 0\n\
      b, a: 0, 1\n\
      b, b: 0, 1\n\
    }\n";

fn sided_store(a: usize, b: usize) -> PopulationStore {
    let bn = parse_bn(SIDES).unwrap();
    let mut store = PopulationStore::new(Schema::new(&bn, &[LinkType::new("t", false)]).unwrap());
    for _ in 0..a {
        store.push_agent(vec![0, 1]);
    }
    for _ in 0..b {
        store.push_agent(vec![1, 1]);
    }
    store
}

fn cross_rule(store: &PopulationStore, options: RuleOptions) -> HomophilyRule {
    HomophilyRule::new(parse_matching_bn(CROSS).unwrap(), store.schema(), Some(Counts::Both), options).unwrap()
}

/// Maximum bipartite matching over compatible pairs, by augmenting paths.
fn maximum_matching(store: &PopulationStore, rule: &HomophilyRule) -> usize {
    let n = store.len() as u32;
    let edges: Vec<Vec<u32>> = (0..n)
        .map(|a| (0..n).filter(|&b| a != b && rule.compatibility(store, a, b) > 0.0).collect())
        .collect();
    fn augment(a: u32, edges: &[Vec<u32>], seen: &mut [bool], owner: &mut [Option<u32>]) -> bool {
        for &b in &edges[a as usize] {
            if seen[b as usize] {
                continue;
            }
            seen[b as usize] = true;
            if owner[b as usize].is_none_or(|o| augment(o, edges, seen, owner)) {
                owner[b as usize] = Some(a);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n as usize];
    (0..n)
        .filter(|&a| augment(a, &edges, &mut vec![false; n as usize], &mut owner))
        .count()
}

#[test]
fn supply_shortage_leaves_three_of_ten_unmatched() {
    for (small_set, seed) in [(50, 1), (1, 2), (1, 3)] {
        let mut store = sided_store(10, 7);
        let rule = cross_rule(&store, RuleOptions { retries: Some(5), small_set: Some(small_set) });
        assert_eq!(maximum_matching(&store, &rule), 7);
        let report = rule.run(&mut store, &mut SeedTree::new(seed).stream("shortage"));
        assert_eq!(report.kind, RuleKind::Homophily);
        assert_eq!(report.links_created, 7);
        assert_eq!(report.required, 10);
        assert_eq!(report.fulfilled, 7);
        assert_eq!(report.orphans, 3);
        assert!((report.error_rate() - 0.3).abs() < 1e-15);
        assert_eq!(store.links().len(), 7);
    }
}

#[test]
fn single_forced_pair() {
    let mut store = sided_store(1, 1);
    let rule = cross_rule(&store, RuleOptions::default());
    let report = rule.run(&mut store, &mut SeedTree::new(0).stream("pair"));
    assert_eq!((report.links_created, report.orphans), (1, 0));
    assert!(store.are_linked(0, 1));
}

#[test]
fn balanced_population_is_fully_matched() {
    for seed in 0..5 {
        let mut store = sided_store(120, 120);
        let rule = cross_rule(&store, RuleOptions::default());
        let report = rule.run(&mut store, &mut SeedTree::new(seed).stream("balanced"));
        assert_eq!(report.links_created, 120);
        assert_eq!(report.error_rate(), 0.0);
        assert!(report.prototype_successes > 0);
        for l in store.links() {
            assert!(rule.compatibility(&store, l.source, l.target) > 0.0 || rule.compatibility(&store, l.target, l.source) > 0.0);
        }
    }
}

#[test]
fn no_compatible_peer_orphans_everyone() {
    let mut store = sided_store(6, 0);
    let rule = cross_rule(&store, RuleOptions::default());
    let report = rule.run(&mut store, &mut SeedTree::new(0).stream("none"));
    assert_eq!(report.links_created, 0);
    assert_eq!(report.orphans, 6);
    assert_eq!(report.error_rate(), 1.0);
}

#[test]
fn unconditional_link_admits_everything() {
    let text = "matching t link=link a1=a1_ a2=a2_ counts=both\n\
        variable a1_side { a, b }\nvariable a2_side { a, b }\nvariable link { yes, no }\n\
        cpt a1_side { 0.5, 0.5 }\ncpt a2_side { 0.5, 0.5 }\ncpt link { 1, 0 }\n";
    let store = sided_store(3, 3);
    let rule = HomophilyRule::new(parse_matching_bn(text).unwrap(), store.schema(), None, RuleOptions::default()).unwrap();
    let [c1, c2] = rule.derive_candidate_sets(store.schema()).unwrap();
    assert_eq!(constraint(&c1, 0), [true, true]);
    assert_eq!(constraint(&c2, 0), [true, true]);
    let q = rule.conditional_candidates(&store, 0).unwrap();
    assert_eq!(store.query_candidates(&q), vec![1, 2, 3, 4, 5]);
    for a in 0..6 {
        for b in 0..6 {
            assert_eq!(rule.compatibility(&store, a, b), 1.0);
        }
    }
}
