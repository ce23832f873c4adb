mod common;

use common::*;
use popnet::bn::Evidence;
use popnet::inference::{
    evidence_probability_indexed, joint_probability, joint_probability_indexed, posterior, posterior_indexed,
    InferenceError,
};

#[test]
fn posterior_matches_enumeration_on_six_variable_networks() {
    let mut rng = test_rng(11);
    for _ in 0..100 {
        let bn = random_bn(&mut rng, 6, 3, 3);
        let joint = enumerate_joint(&bn);
        let ev = random_evidence(&mut rng, &bn);
        for q in 0..bn.len() {
            let expected = oracle_posterior(&joint, bn.cardinality(q), &ev, q);
            match (posterior_indexed(&bn, &ev, q), expected) {
                (Ok(got), Some(want)) => {
                    for (g, w) in got.iter().zip(&want) {
                        assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
                    }
                }
                (Err(InferenceError::ZeroEvidence), None) => {}
                (got, want) => panic!("mismatch: {got:?} vs {want:?}"),
            }
        }
        let pe = evidence_probability_indexed(&bn, &ev);
        assert!((pe - oracle_evidence_probability(&joint, &ev)).abs() < 1e-9);
    }
}

#[test]
fn larger_networks_agree_and_sum_to_one() {
    let mut rng = test_rng(12);
    for _ in 0..15 {
        let bn = random_bn(&mut rng, 12, 4, 3);
        let joint = enumerate_joint(&bn);
        let total: f64 = joint.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let ev = random_evidence(&mut rng, &bn);
        let pe = oracle_evidence_probability(&joint, &ev);
        assert!((evidence_probability_indexed(&bn, &ev) - pe).abs() < 1e-9);
        for q in 0..bn.len() {
            let want = oracle_posterior(&joint, bn.cardinality(q), &ev, q);
            let got = posterior_indexed(&bn, &ev, q);
            match (got, want) {
                (Ok(got), Some(want)) => {
                    assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    for (g, w) in got.iter().zip(&want) {
                        assert!((g - w).abs() < 1e-9);
                    }
                }
                (Err(InferenceError::ZeroEvidence), None) => {}
                (got, want) => panic!("mismatch: {got:?} vs {want:?}"),
            }
        }
    }
}

#[test]
fn chain_rule_holds() {
    let mut rng = test_rng(13);
    for _ in 0..50 {
        let bn = random_bn(&mut rng, 7, 3, 2);
        let ev = random_evidence(&mut rng, &bn);
        let pe = evidence_probability_indexed(&bn, &ev);
        for q in (0..bn.len()).filter(|&q| ev[q].is_none()) {
            let Ok(post) = posterior_indexed(&bn, &ev, q) else {
                assert_eq!(pe, 0.0);
                continue;
            };
            for (x, px) in post.iter().enumerate() {
                let mut extended = ev.clone();
                extended[q] = Some(x);
                let lhs = evidence_probability_indexed(&bn, &extended);
                assert!((lhs - pe * px).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn joint_probabilities_sum_to_one() {
    let mut rng = test_rng(14);
    for _ in 0..20 {
        let bn = random_bn(&mut rng, 6, 3, 3);
        let joint = enumerate_joint(&bn);
        let total: f64 = joint.iter().map(|(a, _)| joint_probability_indexed(&bn, a)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for (a, p) in joint.iter().take(5) {
            let named: Evidence = a
                .iter()
                .enumerate()
                .map(|(i, &v)| (bn.variable(i).name.clone(), bn.variable(i).domain[v].clone()))
                .collect();
            assert!((joint_probability(&bn, &named).unwrap() - p).abs() < 1e-12);
        }
    }
}

#[test]
fn name_based_api_agrees_with_indexed() {
    let mut rng = test_rng(15);
    let bn = random_bn(&mut rng, 5, 3, 2);
    let joint = enumerate_joint(&bn);
    let ev = Evidence::new().with("v4", "s0");
    let resolved = ev.resolve(&bn).unwrap();
    if let Some(want) = oracle_posterior(&joint, bn.cardinality(0), &resolved, 0) {
        let got = posterior(&bn, &ev, "v0").unwrap();
        for (g, w) in got.probs.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9);
        }
    }
}
