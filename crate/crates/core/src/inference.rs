//! Exact inference by variable elimination.
//!
//! Queries first drop every variable that is not an ancestor of the query or
//! of an evidenced variable (such barren nodes sum to one), then eliminate
//! the rest with a greedy min-fill ordering.

use crate::bn::{BayesianNetwork, Evidence};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("evidence has probability zero")]
    ZeroEvidence,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{value}` is not a value of `{variable}`")]
    UnknownValue { variable: String, value: String },
    #[error("assignment does not cover variable `{0}`")]
    IncompleteAssignment(String),
}

/// Posterior distribution of one variable, aligned with its domain order.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub variable: String,
    pub domain: Vec<String>,
    pub probs: Vec<f64>,
}

impl Posterior {
    pub fn get(&self, value: &str) -> Option<f64> {
        self.domain.iter().position(|v| v == value).map(|i| self.probs[i])
    }
}

/// Exact `p(query | ev)`.
pub fn posterior(bn: &BayesianNetwork, ev: &Evidence, query: &str) -> Result<Posterior, InferenceError> {
    let var = bn
        .index_of(query)
        .ok_or_else(|| InferenceError::UnknownVariable(query.to_string()))?;
    let resolved = ev.resolve(bn)?;
    let probs = posterior_indexed(bn, &resolved, var)?;
    Ok(Posterior {
        variable: query.to_string(),
        domain: bn.variable(var).domain.clone(),
        probs,
    })
}

/// Exact `p(ev)`.
pub fn probability_of_evidence(bn: &BayesianNetwork, ev: &Evidence) -> Result<f64, InferenceError> {
    let resolved = ev.resolve(bn)?;
    Ok(evidence_probability_indexed(bn, &resolved))
}

/// Probability of a complete assignment: the product of one CPT entry per
/// variable.
pub fn joint_probability(bn: &BayesianNetwork, assignment: &Evidence) -> Result<f64, InferenceError> {
    let resolved = assignment.resolve(bn)?;
    let mut full = Vec::with_capacity(bn.len());
    for (i, v) in resolved.into_iter().enumerate() {
        full.push(v.ok_or_else(|| InferenceError::IncompleteAssignment(bn.variable(i).name.clone()))?);
    }
    Ok(joint_probability_indexed(bn, &full))
}

pub fn joint_probability_indexed(bn: &BayesianNetwork, values: &[usize]) -> f64 {
    bn.topo_indices()
        .iter()
        .map(|&v| bn.conditional(v, values))
        .product()
}

/// Posterior of `query` given evidence as value indices aligned with the
/// network's variables.
pub fn posterior_indexed(
    bn: &BayesianNetwork,
    evidence: &[Option<usize>],
    query: usize,
) -> Result<Vec<f64>, InferenceError> {
    if let Some(v) = evidence[query] {
        if evidence_probability_indexed(bn, evidence) == 0.0 {
            return Err(InferenceError::ZeroEvidence);
        }
        let mut probs = vec![0.0; bn.cardinality(query)];
        probs[v] = 1.0;
        return Ok(probs);
    }
    let relevant = relevant_variables(bn, evidence, Some(query));
    if bn.parents(query).is_empty() && relevant.iter().filter(|&&r| r).count() == 1 {
        // Unconditioned root: the prior itself, untouched by normalization.
        return Ok(bn.cpt(query).probs.clone());
    }
    let (scale, factor) = eliminate(bn, evidence, &relevant, Some(query));
    if scale == 0.0 {
        return Err(InferenceError::ZeroEvidence);
    }
    let mut probs = factor.values;
    let z: f64 = probs.iter().sum();
    if z == 0.0 {
        return Err(InferenceError::ZeroEvidence);
    }
    if z != 1.0 {
        probs.iter_mut().for_each(|p| *p /= z);
    }
    Ok(probs)
}

pub fn evidence_probability_indexed(bn: &BayesianNetwork, evidence: &[Option<usize>]) -> f64 {
    if evidence.iter().all(Option::is_none) {
        return 1.0;
    }
    let relevant = relevant_variables(bn, evidence, None);
    let (scale, factor) = eliminate(bn, evidence, &relevant, None);
    scale * factor.values.iter().sum::<f64>()
}

/// Ancestors of the query and of every evidenced variable.
fn relevant_variables(bn: &BayesianNetwork, evidence: &[Option<usize>], query: Option<usize>) -> Vec<bool> {
    let mut keep = vec![false; bn.len()];
    let mut stack: Vec<usize> = evidence
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|_| i))
        .chain(query)
        .collect();
    while let Some(v) = stack.pop() {
        if !keep[v] {
            keep[v] = true;
            stack.extend_from_slice(bn.parents(v));
        }
    }
    keep
}

/// Dense table over sorted variable indices, last variable varying fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for k in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    /// Stride of each variable of `scope` inside `self`, 0 when absent.
    fn strides_in(&self, scope: &[usize]) -> Vec<usize> {
        let own = self.strides();
        scope
            .iter()
            .map(|v| self.vars.iter().position(|x| x == v).map_or(0, |k| own[k]))
            .collect()
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|x| x == v)
                    .map(|k| self.cards[k])
                    .unwrap_or_else(|| other.cards[other.vars.iter().position(|x| x == v).unwrap()])
            })
            .collect();
        let size: usize = cards.iter().product();
        let sa = self.strides_in(&vars);
        let sb = other.strides_in(&vars);
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for k in (0..vars.len()).rev() {
                counter[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if counter[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                counter[k] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let k = self.vars.iter().position(|&x| x == var).expect("variable in scope");
        let stride = self.strides()[k];
        let card = self.cards[k];
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        let mut values = vec![0.0; self.values.len() / card];
        for (i, &x) in self.values.iter().enumerate() {
            let high = i / (stride * card);
            let low = i % stride;
            values[high * stride + low] += x;
        }
        Factor { vars, cards, values }
    }
}

/// The CPT of `var` restricted to the evidence.
fn cpt_factor(bn: &BayesianNetwork, var: usize, evidence: &[Option<usize>]) -> Factor {
    let mut scope: Vec<usize> = std::iter::once(var)
        .chain(bn.parents(var).iter().copied())
        .filter(|&v| evidence[v].is_none())
        .collect();
    scope.sort_unstable();
    let cards: Vec<usize> = scope.iter().map(|&v| bn.cardinality(v)).collect();
    let size: usize = cards.iter().product();
    let mut full: Vec<usize> = evidence.iter().map(|e| e.unwrap_or(0)).collect();
    let mut counter = vec![0usize; scope.len()];
    let mut values = Vec::with_capacity(size);
    for _ in 0..size {
        for (k, &v) in scope.iter().enumerate() {
            full[v] = counter[k];
        }
        values.push(bn.conditional(var, &full));
        for k in (0..scope.len()).rev() {
            counter[k] += 1;
            if counter[k] < cards[k] {
                break;
            }
            counter[k] = 0;
        }
    }
    Factor {
        vars: scope,
        cards,
        values,
    }
}

/// Eliminates every relevant unevidenced variable except `keep`. Returns the
/// product of all scalar factors separately from the remaining factor so
/// that posteriors are normalized without the evidence weight.
fn eliminate(
    bn: &BayesianNetwork,
    evidence: &[Option<usize>],
    relevant: &[bool],
    keep: Option<usize>,
) -> (f64, Factor) {
    let mut scale = 1.0;
    let mut factors: Vec<Factor> = Vec::new();
    for var in (0..bn.len()).filter(|&v| relevant[v]) {
        let f = cpt_factor(bn, var, evidence);
        if f.vars.is_empty() {
            scale *= f.values[0];
        } else {
            factors.push(f);
        }
    }
    let n = bn.len();
    let mut pending: Vec<usize> = (0..n)
        .filter(|&v| relevant[v] && evidence[v].is_none() && Some(v) != keep)
        .collect();
    let mut adjacency = vec![vec![false; n]; n];
    for f in &factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b {
                    adjacency[a][b] = true;
                }
            }
        }
    }
    while !pending.is_empty() {
        // Greedy min-fill; ties go to the lowest index for reproducibility.
        let (slot, _) = pending
            .iter()
            .enumerate()
            .map(|(slot, &v)| {
                let neighbors: Vec<usize> = pending
                    .iter()
                    .copied()
                    .chain(keep)
                    .filter(|&u| adjacency[v][u])
                    .collect();
                let mut fill = 0usize;
                for (i, &a) in neighbors.iter().enumerate() {
                    for &b in &neighbors[i + 1..] {
                        if !adjacency[a][b] {
                            fill += 1;
                        }
                    }
                }
                (slot, (fill, v))
            })
            .min_by_key(|&(_, key)| key)
            .expect("pending is non-empty");
        let var = pending.swap_remove(slot);
        let neighbors: Vec<usize> = (0..n).filter(|&u| adjacency[var][u]).collect();
        for &a in &neighbors {
            for &b in &neighbors {
                if a != b {
                    adjacency[a][b] = true;
                }
            }
            adjacency[a][var] = false;
        }
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = without;
        let Some(product) = with.into_iter().reduce(|a, b| a.product(&b)) else {
            continue;
        };
        let summed = product.sum_out(var);
        if summed.vars.is_empty() {
            scale *= summed.values[0];
        } else {
            factors.push(summed);
        }
    }
    let result = factors.into_iter().reduce(|a, b| a.product(&b)).unwrap_or_else(|| {
        let vars: Vec<usize> = keep.into_iter().collect();
        let cards: Vec<usize> = vars.iter().map(|&v| bn.cardinality(v)).collect();
        let size = cards.iter().product();
        Factor {
            vars,
            cards,
            values: vec![1.0; size],
        }
    });
    (scale, result)
}
