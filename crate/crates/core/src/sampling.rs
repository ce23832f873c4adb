//! Prototype generation: walk the variables in topological order and draw
//! each unobserved one from its exact posterior given everything fixed so
//! far, then fix the drawn value as evidence.

use std::collections::HashMap;

use rand::Rng;

use crate::bn::{BayesianNetwork, Evidence};
use crate::inference::{evidence_probability_indexed, posterior_indexed, InferenceError};

/// A complete assignment of a network's variables, as value indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Prototype {
    pub values: Vec<usize>,
}

impl Prototype {
    pub fn label<'a>(&self, bn: &'a BayesianNetwork, variable: &str) -> Option<&'a str> {
        let var = bn.index_of(variable)?;
        Some(bn.variable(var).domain[self.values[var]].as_str())
    }

    pub fn to_evidence(&self, bn: &BayesianNetwork) -> Evidence {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (bn.variable(i).name.clone(), bn.variable(i).domain[v].clone()))
            .collect()
    }
}

/// One-shot prototype draw under name-based evidence.
pub fn sample_prototype<R: Rng + ?Sized>(
    bn: &BayesianNetwork,
    ev: &Evidence,
    rng: &mut R,
) -> Result<Prototype, InferenceError> {
    let resolved = ev.resolve(bn)?;
    PrototypeSampler::new(bn).sample(&resolved, rng)
}

/// Inverse-CDF pick over a distribution using one uniform draw; exact zeros
/// are never selected.
pub fn draw_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = Some(i);
            if u < acc {
                return i;
            }
        }
    }
    last.expect("distribution has positive mass")
}

const NONE: u16 = u16::MAX;
const CACHE_LIMIT: usize = 500_000;

/// Repeated prototype sampling on one network. Posteriors are memoized by
/// evidence state: the next variable to draw is a function of that state,
/// so each cached entry is reused by every later draw passing through it.
pub struct PrototypeSampler<'a> {
    bn: &'a BayesianNetwork,
    cache: HashMap<Vec<u16>, Vec<f64>>,
    feasible: HashMap<Vec<u16>, bool>,
}

impl<'a> PrototypeSampler<'a> {
    pub fn new(bn: &'a BayesianNetwork) -> Self {
        Self {
            bn,
            cache: HashMap::new(),
            feasible: HashMap::new(),
        }
    }

    pub fn network(&self) -> &'a BayesianNetwork {
        self.bn
    }

    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        evidence: &[Option<usize>],
        rng: &mut R,
    ) -> Result<Prototype, InferenceError> {
        let bn = self.bn;
        let mut state: Vec<u16> = evidence
            .iter()
            .map(|e| e.map_or(NONE, |v| v as u16))
            .collect();
        let observed = state.iter().filter(|&&s| s != NONE).count();
        if observed == state.len() {
            let values: Vec<usize> = state.iter().map(|&s| usize::from(s)).collect();
            if evidence_probability_indexed(bn, evidence) == 0.0 {
                return Err(InferenceError::ZeroEvidence);
            }
            return Ok(Prototype { values });
        }
        if observed > 0 {
            let feasible = match self.feasible.get(&state) {
                Some(&f) => f,
                None => {
                    let f = evidence_probability_indexed(bn, evidence) > 0.0;
                    self.feasible.insert(state.clone(), f);
                    f
                }
            };
            if !feasible {
                return Err(InferenceError::ZeroEvidence);
            }
        }
        // A variable with no observed descendant, drawn after all its
        // parents, follows its own table row.
        let mut observed_below = vec![false; bn.len()];
        for &v in bn.topo_indices().iter().rev() {
            observed_below[v] = bn
                .children(v)
                .iter()
                .any(|&c| state[c] != NONE || observed_below[c]);
        }
        for &var in bn.topo_indices() {
            if state[var] != NONE {
                continue;
            }
            if !observed_below[var] {
                let card = bn.cardinality(var);
                let row = bn
                    .parents(var)
                    .iter()
                    .fold(0, |r, &p| r * bn.cardinality(p) + usize::from(state[p]));
                let probs = &bn.cpt(var).probs[row * card..(row + 1) * card];
                state[var] = draw_index(probs, rng) as u16;
                continue;
            }
            if self.cache.len() >= CACHE_LIMIT {
                self.cache.clear();
            }
            let probs = match self.cache.get(&state) {
                Some(p) => p,
                None => {
                    let ev: Vec<Option<usize>> = state
                        .iter()
                        .map(|&s| (s != NONE).then_some(usize::from(s)))
                        .collect();
                    let post = posterior_indexed(bn, &ev, var)?;
                    self.cache.entry(state.clone()).or_insert(post)
                }
            };
            state[var] = draw_index(probs, rng) as u16;
        }
        Ok(Prototype {
            values: state.into_iter().map(usize::from).collect(),
        })
    }
}
