//! The synthesized population and its multiplex link registry.
//!
//! Attribute-network variables named `RC_<type>` are not agent attributes:
//! they give the number of links of `<type>` an agent requires. For a
//! directed type, `RC_in_<type>` may additionally bound the links an agent
//! receives as target; without it both endpoints share `RC_<type>`.

use std::collections::HashMap;

use rand::Rng;

use crate::bn::{BayesianNetwork, Cpt, VariableSpec};
use crate::sampling::PrototypeSampler;

pub const COUNTER_PREFIX: &str = "RC_";
pub const INBOUND_PREFIX: &str = "in_";

pub type AgentId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkType {
    pub name: String,
    pub directed: bool,
}

impl LinkType {
    pub fn new(name: impl Into<String>, directed: bool) -> Self {
        Self {
            name: name.into(),
            directed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub source: AgentId,
    pub target: AgentId,
    pub link_type: usize,
}

/// Which end of a link an agent occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Source,
    Target,
}

/// Which endpoint counters a new link consumes, by role (`a1` is the source
/// argument of [`PopulationStore::record_link`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counting {
    None,
    A1,
    A2,
    Both,
}

impl Counting {
    pub fn counts(self, side: Endpoint) -> bool {
        matches!(
            (self, side),
            (Counting::Both, _) | (Counting::A1, Endpoint::Source) | (Counting::A2, Endpoint::Target)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("agents {0} and {1} are already linked")]
    DyadOccupied(AgentId, AgentId),
    #[error("agent {0} cannot be linked to itself")]
    SelfLink(AgentId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("`{value}` is not a value of attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },
    #[error("unknown link type `{0}`")]
    UnknownLinkType(String),
    #[error("agent {agent} has no remaining demand for `{link_type}`")]
    DemandExhausted { agent: AgentId, link_type: String },
    #[error("link count variable `{variable}`: {message}")]
    Counter { variable: String, message: String },
    #[error("link type `{0}` declared twice")]
    DuplicateLinkType(String),
}

/// A link-demand variable of the attribute network.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterSpec {
    pub variable: String,
    /// Index of the variable in the attribute network.
    pub var: usize,
    pub link_type: usize,
    pub inbound: bool,
    /// Numeric value of each domain label.
    pub levels: Vec<u32>,
}

/// Attribute layout and link declarations shared by every agent.
#[derive(Debug, Clone)]
pub struct Schema {
    variables: Vec<VariableSpec>,
    var_index: HashMap<String, usize>,
    attributes: Vec<usize>,
    counters: Vec<CounterSpec>,
    counter_of_var: Vec<Option<usize>>,
    link_types: Vec<LinkType>,
    out_counter: Vec<Option<usize>>,
    in_counter: Vec<Option<usize>>,
}

impl Schema {
    pub fn new(bn: &BayesianNetwork, link_types: &[LinkType]) -> Result<Self, StoreError> {
        let mut type_index = HashMap::new();
        for (i, t) in link_types.iter().enumerate() {
            if type_index.insert(t.name.as_str(), i).is_some() {
                return Err(StoreError::DuplicateLinkType(t.name.clone()));
            }
        }
        let variables = bn.variables().to_vec();
        let mut attributes = Vec::new();
        let mut counters = Vec::new();
        let mut counter_of_var = vec![None; variables.len()];
        let mut out_counter = vec![None; link_types.len()];
        let mut in_counter = vec![None; link_types.len()];
        for (var, spec) in variables.iter().enumerate() {
            let Some(rest) = spec.name.strip_prefix(COUNTER_PREFIX) else {
                attributes.push(var);
                continue;
            };
            let err = |message: String| StoreError::Counter {
                variable: spec.name.clone(),
                message,
            };
            let (type_name, inbound) = match type_index.get(rest) {
                Some(_) => (rest, false),
                None => match rest.strip_prefix(INBOUND_PREFIX) {
                    Some(t) if type_index.contains_key(t) => (t, true),
                    _ => return Err(err(format!("no declared link type `{rest}`"))),
                },
            };
            let t = type_index[type_name];
            if inbound && !link_types[t].directed {
                return Err(err(format!("`{type_name}` is undirected and has no inbound side")));
            }
            let levels = spec
                .domain
                .iter()
                .map(|label| {
                    label
                        .parse::<u32>()
                        .map_err(|_| err(format!("value `{label}` is not a non-negative integer")))
                })
                .collect::<Result<Vec<u32>, StoreError>>()?;
            let slot = if inbound { &mut in_counter[t] } else { &mut out_counter[t] };
            *slot = Some(counters.len());
            counter_of_var[var] = Some(counters.len());
            counters.push(CounterSpec {
                variable: spec.name.clone(),
                var,
                link_type: t,
                inbound,
                levels,
            });
        }
        let var_index = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        Ok(Self {
            variables,
            var_index,
            attributes,
            counters,
            counter_of_var,
            link_types: link_types.to_vec(),
            out_counter,
            in_counter,
        })
    }

    /// Every attribute-network variable, counters included.
    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    /// Indices of the ordinary (non-counter) attributes.
    pub fn attributes(&self) -> &[usize] {
        &self.attributes
    }

    pub fn counters(&self) -> &[CounterSpec] {
        &self.counters
    }

    pub fn counter_of_var(&self, var: usize) -> Option<usize> {
        self.counter_of_var[var]
    }

    pub fn link_types(&self) -> &[LinkType] {
        &self.link_types
    }

    pub fn link_type_index(&self, name: &str) -> Option<usize> {
        self.link_types.iter().position(|t| t.name == name)
    }

    /// The counter bounding links of type `t` at the given endpoint.
    pub fn counter(&self, t: usize, side: Endpoint) -> Option<usize> {
        match side {
            Endpoint::Target if self.link_types[t].directed => self.in_counter[t].or(self.out_counter[t]),
            _ => self.out_counter[t],
        }
    }
}

/// One synthesized individual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    /// Value index of every attribute-network variable, counters included.
    pub values: Vec<usize>,
    /// Required links per counter of the schema.
    pub required: Vec<u32>,
    /// Links created so far per counter of the schema.
    pub created: Vec<u32>,
}

impl Agent {
    pub fn remaining(&self, counter: usize) -> u32 {
        self.required[counter] - self.created[counter]
    }
}

/// Constraint on an agent's link counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterConstraint {
    /// `created < required`.
    HasRemaining(usize),
    /// `lo <= required <= hi`.
    RequiredBetween(usize, u32, u32),
}

/// Conjunctive agent filter, the in-memory counterpart of a generated
/// `SELECT ... FROM agents WHERE ...`.
#[derive(Debug, Clone, Default)]
pub struct CandidateQuery {
    /// Allowed value indices per attribute-network variable.
    pub attributes: Vec<(usize, Vec<bool>)>,
    pub counters: Vec<CounterConstraint>,
    pub exclude: Vec<AgentId>,
    /// Drop agents already linked with this one by a link of any type.
    pub not_linked_with: Option<AgentId>,
}

impl CandidateQuery {
    pub fn new() -> Self {
        Self::default()
    }

    /// Restricts `attribute` to the given labels.
    pub fn attribute_in<I, S>(mut self, schema: &Schema, attribute: &str, labels: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let var = schema
            .var_index(attribute)
            .ok_or_else(|| StoreError::UnknownAttribute(attribute.to_string()))?;
        let spec = &schema.variables[var];
        let mut allowed = vec![false; spec.cardinality()];
        for label in labels {
            let label = label.as_ref();
            let v = spec.value_index(label).ok_or_else(|| StoreError::UnknownValue {
                attribute: attribute.to_string(),
                value: label.to_string(),
            })?;
            allowed[v] = true;
        }
        self.attributes.push((var, allowed));
        Ok(self)
    }

    pub fn counter(mut self, constraint: CounterConstraint) -> Self {
        self.counters.push(constraint);
        self
    }

    pub fn excluding(mut self, id: AgentId) -> Self {
        self.exclude.push(id);
        self
    }

    pub fn not_linked_with(mut self, id: AgentId) -> Self {
        self.not_linked_with = Some(id);
        self
    }
}

/// Population plus dyad-unique multiplex links.
#[derive(Debug, Clone)]
pub struct PopulationStore {
    schema: Schema,
    agents: Vec<Agent>,
    /// `[var][value]` -> ascending agent ids.
    by_value: Vec<Vec<Vec<AgentId>>>,
    links: Vec<Link>,
    dyads: HashMap<(AgentId, AgentId), usize>,
    /// `[type][agent]`: targets of outgoing links (both ends for undirected).
    out_adj: Vec<Vec<Vec<AgentId>>>,
    /// `[type][agent]`: sources of incoming directed links.
    in_adj: Vec<Vec<Vec<AgentId>>>,
}

fn dyad(a: AgentId, b: AgentId) -> (AgentId, AgentId) {
    (a.min(b), a.max(b))
}

impl PopulationStore {
    pub fn new(schema: Schema) -> Self {
        let by_value = schema
            .variables
            .iter()
            .map(|v| vec![Vec::new(); v.cardinality()])
            .collect();
        let types = schema.link_types.len();
        Self {
            schema,
            agents: Vec::new(),
            by_value,
            links: Vec::new(),
            dyads: HashMap::new(),
            out_adj: vec![Vec::new(); types],
            in_adj: vec![Vec::new(); types],
        }
    }

    /// Appends an agent from a full attribute-network assignment; ids are
    /// dense in insertion order.
    pub fn push_agent(&mut self, values: Vec<usize>) -> AgentId {
        let id = self.agents.len() as AgentId;
        let required = self
            .schema
            .counters
            .iter()
            .map(|c| c.levels[values[c.var]])
            .collect();
        for (var, &v) in values.iter().enumerate() {
            self.by_value[var][v].push(id);
        }
        for t in 0..self.schema.link_types.len() {
            self.out_adj[t].push(Vec::new());
            self.in_adj[t].push(Vec::new());
        }
        self.agents.push(Agent {
            id,
            values,
            required,
            created: vec![0; self.schema.counters.len()],
        });
        id
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents.get(id as usize)
    }

    /// Label of an attribute (or counter variable) for one agent.
    pub fn value_label(&self, id: AgentId, attribute: &str) -> Option<&str> {
        let var = self.schema.var_index(attribute)?;
        let agent = self.agent(id)?;
        Some(self.schema.variables[var].domain[agent.values[var]].as_str())
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self, t: usize) -> usize {
        self.links.iter().filter(|l| l.link_type == t).count()
    }

    pub fn are_linked(&self, a: AgentId, b: AgentId) -> bool {
        self.dyads.contains_key(&dyad(a, b))
    }

    pub fn link_between(&self, a: AgentId, b: AgentId) -> Option<&Link> {
        self.dyads.get(&dyad(a, b)).map(|&i| &self.links[i])
    }

    /// Outgoing neighbors by type; for undirected types, all neighbors.
    pub fn out_neighbors(&self, t: usize, id: AgentId) -> &[AgentId] {
        &self.out_adj[t][id as usize]
    }

    /// Sources of incoming links of a directed type; empty for undirected.
    pub fn in_neighbors(&self, t: usize, id: AgentId) -> &[AgentId] {
        &self.in_adj[t][id as usize]
    }

    /// Ids of agents holding `value` for variable `var`, ascending.
    pub fn ids_with_value(&self, var: usize, value: usize) -> &[AgentId] {
        &self.by_value[var][value]
    }

    fn satisfies(&self, agent: &Agent, query: &CandidateQuery, skip_attr: Option<usize>) -> bool {
        for (k, (var, allowed)) in query.attributes.iter().enumerate() {
            if Some(k) != skip_attr && !allowed[agent.values[*var]] {
                return false;
            }
        }
        for c in &query.counters {
            let ok = match *c {
                CounterConstraint::HasRemaining(k) => agent.created[k] < agent.required[k],
                CounterConstraint::RequiredBetween(k, lo, hi) => (lo..=hi).contains(&agent.required[k]),
            };
            if !ok {
                return false;
            }
        }
        if query.exclude.contains(&agent.id) {
            return false;
        }
        if let Some(a1) = query.not_linked_with {
            if self.are_linked(a1, agent.id) {
                return false;
            }
        }
        true
    }

    /// Ids of every agent satisfying all constraints, ascending.
    pub fn query_candidates(&self, query: &CandidateQuery) -> Vec<AgentId> {
        // Seed from the most selective attribute constraint, then filter.
        match self.most_selective(query) {
            None => self
                .agents
                .iter()
                .filter(|a| self.satisfies(a, query, None))
                .map(|a| a.id)
                .collect(),
            Some(k) => {
                let (var, allowed) = &query.attributes[k];
                let mut ids: Vec<AgentId> = allowed
                    .iter()
                    .enumerate()
                    .filter(|(_, &ok)| ok)
                    .flat_map(|(v, _)| self.by_value[*var][v].iter().copied())
                    .filter(|&id| self.satisfies(&self.agents[id as usize], query, Some(k)))
                    .collect();
                ids.sort_unstable();
                ids
            }
        }
    }

    /// Number of agents satisfying `query`, counting stops at `limit`.
    pub fn count_candidates(&self, query: &CandidateQuery, limit: usize) -> usize {
        if limit == 0 {
            return 0;
        }
        let mut count = 0;
        let mut visit = |agent: &Agent, skip: Option<usize>| {
            if self.satisfies(agent, query, skip) {
                count += 1;
            }
            count >= limit
        };
        match self.most_selective(query) {
            None => {
                for a in &self.agents {
                    if visit(a, None) {
                        break;
                    }
                }
            }
            Some(k) => {
                let (var, allowed) = &query.attributes[k];
                'outer: for (v, _) in allowed.iter().enumerate().filter(|(_, &ok)| ok) {
                    for &id in &self.by_value[*var][v] {
                        if visit(&self.agents[id as usize], Some(k)) {
                            break 'outer;
                        }
                    }
                }
            }
        }
        count
    }

    fn most_selective(&self, query: &CandidateQuery) -> Option<usize> {
        query
            .attributes
            .iter()
            .enumerate()
            .map(|(k, (var, allowed))| {
                let size: usize = allowed
                    .iter()
                    .enumerate()
                    .filter(|(_, &ok)| ok)
                    .map(|(v, _)| self.by_value[*var][v].len())
                    .sum();
                (size, k)
            })
            .min()
            .map(|(_, k)| k)
    }

    /// Inserts a link if the dyad carries none yet, consuming the counters
    /// selected by `counting`. Undirected links are stored with the lower id
    /// first.
    pub fn record_link(
        &mut self,
        a1: AgentId,
        a2: AgentId,
        t: usize,
        counting: Counting,
    ) -> Result<&Link, StoreError> {
        if a1 == a2 {
            return Err(StoreError::SelfLink(a1));
        }
        for id in [a1, a2] {
            if id as usize >= self.agents.len() {
                return Err(StoreError::UnknownAgent(id));
            }
        }
        let link_type = self
            .schema
            .link_types
            .get(t)
            .ok_or_else(|| StoreError::UnknownLinkType(format!("#{t}")))?;
        let key = dyad(a1, a2);
        if self.dyads.contains_key(&key) {
            return Err(StoreError::DyadOccupied(a1, a2));
        }
        let mut consumed = Vec::new();
        for (id, side) in [(a1, Endpoint::Source), (a2, Endpoint::Target)] {
            if !counting.counts(side) {
                continue;
            }
            if let Some(k) = self.schema.counter(t, side) {
                let agent = &self.agents[id as usize];
                if agent.created[k] >= agent.required[k] {
                    return Err(StoreError::DemandExhausted {
                        agent: id,
                        link_type: link_type.name.clone(),
                    });
                }
                consumed.push((id, k));
            }
        }
        for (id, k) in consumed {
            self.agents[id as usize].created[k] += 1;
        }
        let link = if link_type.directed {
            self.out_adj[t][a1 as usize].push(a2);
            self.in_adj[t][a2 as usize].push(a1);
            Link {
                source: a1,
                target: a2,
                link_type: t,
            }
        } else {
            self.out_adj[t][a1 as usize].push(a2);
            self.out_adj[t][a2 as usize].push(a1);
            Link {
                source: key.0,
                target: key.1,
                link_type: t,
            }
        };
        self.dyads.insert(key, self.links.len());
        self.links.push(link);
        Ok(self.links.last().expect("just pushed"))
    }

    /// Maximum-likelihood re-estimate of every CPT of `bn` from the agents,
    /// structure unchanged. `bn` must be the network the schema was built on.
    pub fn learn_marginals(&self, bn: &BayesianNetwork) -> LearnedNetwork {
        let tables = (0..bn.len())
            .map(|var| {
                let card = bn.cardinality(var);
                let rows = bn.cpt(var).probs.len() / card;
                let mut counts = vec![0u64; rows * card];
                for agent in &self.agents {
                    let row = bn.row_index(var, &agent.values);
                    counts[row * card + agent.values[var]] += 1;
                }
                let mut probs = vec![0.0; rows * card];
                let mut observed = vec![false; rows];
                for r in 0..rows {
                    let total: u64 = counts[r * card..(r + 1) * card].iter().sum();
                    if total > 0 {
                        observed[r] = true;
                        for k in 0..card {
                            probs[r * card + k] = counts[r * card + k] as f64 / total as f64;
                        }
                    }
                }
                LearnedCpt { probs, observed }
            })
            .collect();
        LearnedNetwork { tables }
    }
}

/// Re-estimated table; rows without any agent in their parent configuration
/// are unobserved and hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedCpt {
    pub probs: Vec<f64>,
    pub observed: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedNetwork {
    /// Aligned with the source network's variables.
    pub tables: Vec<LearnedCpt>,
}

impl LearnedNetwork {
    pub fn unobserved_rows(&self) -> usize {
        self.tables
            .iter()
            .map(|t| t.observed.iter().filter(|o| !**o).count())
            .sum()
    }

    /// The learned network as a regular one; unobserved rows keep the
    /// theoretical probabilities of `source`.
    pub fn to_network(&self, source: &BayesianNetwork) -> BayesianNetwork {
        let cpts = self
            .tables
            .iter()
            .enumerate()
            .map(|(var, table)| {
                let original = source.cpt(var);
                let card = source.cardinality(var);
                let mut probs = table.probs.clone();
                for (r, seen) in table.observed.iter().enumerate() {
                    if !seen {
                        probs[r * card..(r + 1) * card].copy_from_slice(&original.probs[r * card..(r + 1) * card]);
                    }
                }
                Cpt::new(original.child.clone(), original.parents.clone(), probs)
            })
            .collect();
        BayesianNetwork::new(source.variables().to_vec(), cpts).expect("learned rows are normalized")
    }
}

/// Samples `n` agents from the attribute network with empty evidence.
pub fn generate_population<R: Rng + ?Sized>(
    bn: &BayesianNetwork,
    link_types: &[LinkType],
    n: usize,
    rng: &mut R,
) -> Result<PopulationStore, StoreError> {
    let mut store = PopulationStore::new(Schema::new(bn, link_types)?);
    let mut sampler = PrototypeSampler::new(bn);
    let empty = vec![None; bn.len()];
    for _ in 0..n {
        let proto = sampler
            .sample(&empty, rng)
            .expect("empty evidence always has probability one");
        store.push_agent(proto.values);
    }
    Ok(store)
}
