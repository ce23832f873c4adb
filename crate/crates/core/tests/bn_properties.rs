mod common;

use common::{random_bn, test_rng};
use popnet::bn::{parse_bn, BayesianNetwork, Cpt, NetworkDraft, Violation};
use proptest::prelude::*;
use rand::Rng;

fn parts(bn: &BayesianNetwork) -> (Vec<popnet::bn::VariableSpec>, Vec<Cpt>) {
    (bn.variables().to_vec(), bn.cpts().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialized_networks_parse_back_identically(seed in any::<u64>(), n in 1usize..9) {
        let bn = random_bn(&mut test_rng(seed), n, 4, 3);
        let text = bn.to_text();
        let again = parse_bn(&text).unwrap();
        prop_assert_eq!(&again, &bn);
        prop_assert_eq!(again.to_text(), text);
    }

    #[test]
    fn perturbed_networks_are_rejected(seed in any::<u64>(), n in 2usize..8, kind in 0usize..5) {
        let mut rng = test_rng(seed);
        let bn = random_bn(&mut rng, n, 3, 2);
        let (vars, mut cpts) = parts(&bn);
        let target = rng.random_range(0..cpts.len());
        let name = cpts[target].child.clone();
        let found = |v: &[Violation], pred: &dyn Fn(&Violation) -> bool| v.iter().any(pred);
        match kind {
            0 => {
                // Push one entry off the simplex.
                cpts[target].probs[0] += 0.01;
                let v = NetworkDraft::new(vars, cpts).validate().violations;
                let ok = found(&v, &|x| matches!(x, Violation::RowSum { variable, .. } | Violation::ProbabilityOutOfRange { variable, .. } if *variable == name));
                prop_assert!(ok, "{:?}", v);
            }
            1 => {
                cpts[target].probs[0] = -0.5;
                let v = NetworkDraft::new(vars, cpts).validate().violations;
                let ok = found(&v, &|x| matches!(x, Violation::ProbabilityOutOfRange { variable, .. } if *variable == name));
                prop_assert!(ok, "{:?}", v);
            }
            2 => {
                cpts.remove(target);
                let v = NetworkDraft::new(vars, cpts).validate().violations;
                let ok = found(&v, &|x| matches!(x, Violation::MissingCpt { variable } if *variable == name));
                prop_assert!(ok, "{:?}", v);
            }
            3 => {
                cpts[target].probs.pop();
                let v = NetworkDraft::new(vars, cpts).validate().violations;
                let ok = found(&v, &|x| matches!(x, Violation::TableSize { variable, .. } if *variable == name));
                prop_assert!(ok, "{:?}", v);
            }
            _ => {
                // Make the first variable depend on the last one: a cycle
                // for sure when the first is already a parent of the last.
                let first = vars[0].name.clone();
                let last = vars[n - 1].name.clone();
                let c0 = cpts.iter_mut().find(|c| c.child == first).unwrap();
                let card_last = vars[n - 1].cardinality();
                let rows = c0.probs.clone();
                c0.parents.insert(0, last.clone());
                c0.probs = (0..card_last).flat_map(|_| rows.iter().copied()).collect();
                let cyclic = bn.parents(n - 1).contains(&0);
                let v = NetworkDraft::new(vars, cpts).validate().violations;
                let has_cycle = found(&v, &|x| matches!(x, Violation::Cycle { .. }));
                if cyclic {
                    prop_assert!(has_cycle);
                }
                if !has_cycle {
                    prop_assert!(v.is_empty(), "{v:?}");
                }
            }
        }
    }
}

#[test]
fn valid_random_networks_have_no_violations() {
    let mut rng = test_rng(3);
    for _ in 0..100 {
        let bn = random_bn(&mut rng, 8, 4, 3);
        let (vars, cpts) = parts(&bn);
        assert!(NetworkDraft::new(vars, cpts).validate().is_empty());
    }
}
