//! Test-only oracles: random networks and brute-force joint enumeration.
#![allow(dead_code)]

pub mod audit;
pub mod graph;

use popnet::bn::{BayesianNetwork, Cpt, NetworkDraft, VariableSpec};
use rand::Rng;

/// Random DAG over `n` variables (edges only from lower to higher index),
/// domains of 1..=max_card values, CPT rows with occasional exact zeros.
pub fn random_bn<R: Rng>(rng: &mut R, n: usize, max_card: usize, max_parents: usize) -> BayesianNetwork {
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_card)).collect();
    let variables: Vec<VariableSpec> = (0..n)
        .map(|i| VariableSpec::new(format!("v{i}"), (0..cards[i]).map(|k| format!("s{k}"))))
        .collect();
    let mut cpts = Vec::new();
    for i in 0..n {
        let mut parents: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.4)).collect();
        while parents.len() > max_parents {
            let drop = rng.random_range(0..parents.len());
            parents.remove(drop);
        }
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let mut probs = Vec::with_capacity(rows * cards[i]);
        for _ in 0..rows {
            let mut row: Vec<f64> = (0..cards[i])
                .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
                .collect();
            if row.iter().all(|&p| p == 0.0) {
                let k = rng.random_range(0..cards[i]);
                row[k] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            probs.extend(row);
        }
        // Shuffle parent order so table layout is not always index-sorted.
        let mut named: Vec<String> = parents.iter().map(|&p| format!("v{p}")).collect();
        if named.len() > 1 && rng.random_bool(0.5) {
            // Reversing the parent list requires permuting the rows to match.
            let pc: Vec<usize> = parents.iter().map(|&p| cards[p]).collect();
            let mut permuted = vec![0.0; probs.len()];
            for r in 0..rows {
                let mut digits = vec![0; pc.len()];
                let mut rest = r;
                for k in (0..pc.len()).rev() {
                    digits[k] = rest % pc[k];
                    rest /= pc[k];
                }
                let mut r2 = 0;
                for k in (0..pc.len()).rev() {
                    r2 = r2 * pc[k] + digits[k];
                }
                permuted[r2 * cards[i]..(r2 + 1) * cards[i]]
                    .copy_from_slice(&probs[r * cards[i]..(r + 1) * cards[i]]);
            }
            probs = permuted;
            named.reverse();
        }
        cpts.push(Cpt::new(format!("v{i}"), named, probs));
    }
    NetworkDraft::new(variables, cpts).build().expect("random network is valid")
}

/// Every full assignment with its joint probability, computed straight from
/// the CPT storage (independent of the inference code path).
pub fn enumerate_joint(bn: &BayesianNetwork) -> Vec<(Vec<usize>, f64)> {
    let n = bn.len();
    let cards: Vec<usize> = bn.variables().iter().map(|v| v.domain.len()).collect();
    let index = |name: &str| bn.variables().iter().position(|v| v.name == name).unwrap();
    let tables: Vec<(usize, Vec<usize>, &Cpt)> = bn
        .cpts()
        .iter()
        .map(|c| (index(&c.child), c.parents.iter().map(|p| index(p)).collect(), c))
        .collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut a = vec![0usize; n];
    for _ in 0..total {
        let mut p = 1.0;
        for (child, parents, cpt) in &tables {
            let mut row = 0;
            for &q in parents {
                row = row * cards[q] + a[q];
            }
            p *= cpt.probs[row * cards[*child] + a[*child]];
        }
        out.push((a.clone(), p));
        for k in 0..n {
            a[k] += 1;
            if a[k] < cards[k] {
                break;
            }
            a[k] = 0;
        }
    }
    out
}

pub fn compatible(assignment: &[usize], evidence: &[Option<usize>]) -> bool {
    assignment
        .iter()
        .zip(evidence)
        .all(|(a, e)| e.is_none_or(|v| v == *a))
}

pub fn oracle_evidence_probability(joint: &[(Vec<usize>, f64)], evidence: &[Option<usize>]) -> f64 {
    joint
        .iter()
        .filter(|(a, _)| compatible(a, evidence))
        .map(|(_, p)| p)
        .sum()
}

/// `None` when the evidence has probability zero.
pub fn oracle_posterior(
    joint: &[(Vec<usize>, f64)],
    card: usize,
    evidence: &[Option<usize>],
    query: usize,
) -> Option<Vec<f64>> {
    let mut out = vec![0.0; card];
    for (a, p) in joint.iter().filter(|(a, _)| compatible(a, evidence)) {
        out[a[query]] += p;
    }
    let z: f64 = out.iter().sum();
    if z == 0.0 {
        return None;
    }
    out.iter_mut().for_each(|p| *p /= z);
    Some(out)
}

/// Random evidence on roughly a third of the variables.
pub fn random_evidence<R: Rng>(rng: &mut R, bn: &BayesianNetwork) -> Vec<Option<usize>> {
    bn.variables()
        .iter()
        .map(|v| rng.random_bool(0.35).then(|| rng.random_range(0..v.domain.len())))
        .collect()
}

/// Fixed-seed stream for test code.
pub fn test_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
