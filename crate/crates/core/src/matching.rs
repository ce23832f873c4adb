//! Homophily rules: pairing agents through a matching network.
//!
//! A matching network holds copies of attribute variables for both agents
//! (names carrying the `a1` or `a2` prefix), internal condition nodes and a
//! `{yes, no}` link variable encoding p(link | attributes).

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bn::{parse_bn, BayesianNetwork, BnError};
use crate::inference::{evidence_probability_indexed, posterior_indexed, InferenceError};
use crate::population::{
    AgentId, CandidateQuery, Counting, CounterConstraint, Endpoint, PopulationStore, Schema,
};
use crate::sampling::PrototypeSampler;

pub const DEFAULT_RETRIES: u32 = 20;
pub const DEFAULT_SMALL_SET: usize = 50;

const OUTSIDE: u16 = u16::MAX;

/// Endpoints whose link-count demand a rule consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counts {
    Both,
    A1,
    A2,
}

impl Counts {
    pub fn counting(self) -> Counting {
        match self {
            Counts::Both => Counting::Both,
            Counts::A1 => Counting::A1,
            Counts::A2 => Counting::A2,
        }
    }
}

impl FromStr for Counts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "both" => Ok(Counts::Both),
            "a1" => Ok(Counts::A1),
            "a2" => Ok(Counts::A2),
            other => Err(format!("counts must be both, a1 or a2, not `{other}`")),
        }
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counts::Both => "both",
            Counts::A1 => "a1",
            Counts::A2 => "a2",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MatchingError {
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error(transparent)]
    Network(#[from] BnError),
    #[error("link variable `{0}`: {1}")]
    LinkVariable(String, String),
    #[error("`{0}` copies no attribute of the population")]
    UnmappedVariable(String),
    #[error("`{variable}` has value `{value}` unknown to the attribute network")]
    ForeignValue { variable: String, value: String },
    #[error("rule declares counts={plan} but its matching network says counts={header}")]
    CountsMismatch { plan: Counts, header: Counts },
    #[error("rule is for `{rule}` but its matching network describes `{header}`")]
    LinkTypeMismatch { rule: String, header: String },
    #[error("unknown link type `{0}`")]
    UnknownLinkType(String),
    #[error("`{link_type}` has no required-link variable for the {side} side")]
    MissingCounter { link_type: String, side: &'static str },
}

/// Matching network text after its header line has been read.
#[derive(Debug, Clone)]
pub struct MatchingNetwork {
    pub link_type: String,
    pub link_variable: String,
    pub prefixes: [String; 2],
    pub counts: Counts,
    pub bn: BayesianNetwork,
}

/// Reads `matching <type> link=<var> a1=<prefix> a2=<prefix> counts=<..>`
/// followed by an ordinary network.
pub fn parse_matching_bn(text: &str) -> Result<MatchingNetwork, MatchingError> {
    let mut lines: Vec<&str> = text.lines().collect();
    let (line_no, header) = lines
        .iter()
        .enumerate()
        .find(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| (i, l.trim()))
        .ok_or(MatchingError::Header {
            line: 1,
            message: "missing `matching` header".into(),
        })?;
    let line = line_no + 1;
    let herr = |message: String| MatchingError::Header { line, message };
    let mut words = header.split('#').next().unwrap_or("").split_whitespace();
    if words.next() != Some("matching") {
        return Err(herr("expected `matching <linktype> ...` header".into()));
    }
    let link_type = words
        .next()
        .ok_or_else(|| herr("missing link type".into()))?
        .to_string();
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| herr(format!("expected key=value, found `{w}`")))?;
        if !["link", "a1", "a2", "counts"].contains(&k) {
            return Err(herr(format!("unknown header key `{k}`")));
        }
        if fields.insert(k, v).is_some() {
            return Err(herr(format!("`{k}` given twice")));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .map(|v| v.to_string())
            .ok_or_else(|| herr(format!("missing `{k}=`")))
    };
    let link_variable = get("link")?;
    let prefixes = [get("a1")?, get("a2")?];
    let counts = get("counts")?.parse().map_err(herr)?;
    if prefixes[0].is_empty() || prefixes[1].is_empty() || prefixes[0] == prefixes[1] {
        return Err(herr("a1 and a2 prefixes must be distinct and non-empty".into()));
    }
    lines[line_no] = "";
    let bn = parse_bn(&lines.join("\n"))?;
    Ok(MatchingNetwork {
        link_type,
        link_variable,
        prefixes,
        counts,
        bn,
    })
}

/// A matching-network copy of one attribute.
#[derive(Debug, Clone)]
struct MappedVar {
    mvar: usize,
    attr: usize,
    /// Attribute value -> matching value, `OUTSIDE` when absent.
    to_match: Vec<u16>,
    /// Matching value -> attribute value.
    to_attr: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleOptions {
    pub retries: Option<u32>,
    pub small_set: Option<usize>,
}

/// A homophily generation rule bound to a population schema.
#[derive(Debug, Clone)]
pub struct HomophilyRule {
    link_type: usize,
    link_type_name: String,
    bn: BayesianNetwork,
    link_var: usize,
    yes: usize,
    roles: [Vec<MappedVar>; 2],
    counts: Counts,
    retries: u32,
    small_set: usize,
}

impl HomophilyRule {
    /// Binds `network` to `schema`. `counts`, when given, must agree with
    /// the network header.
    pub fn new(
        network: MatchingNetwork,
        schema: &Schema,
        counts: Option<Counts>,
        options: RuleOptions,
    ) -> Result<Self, MatchingError> {
        let link_type = schema
            .link_type_index(&network.link_type)
            .ok_or_else(|| MatchingError::UnknownLinkType(network.link_type.clone()))?;
        if let Some(plan) = counts {
            if plan != network.counts {
                return Err(MatchingError::CountsMismatch {
                    plan,
                    header: network.counts,
                });
            }
        }
        let bn = network.bn;
        let link_var = bn.index_of(&network.link_variable).ok_or_else(|| {
            MatchingError::LinkVariable(network.link_variable.clone(), "not declared".into())
        })?;
        let domain = &bn.variable(link_var).domain;
        let mut sorted = domain.clone();
        sorted.sort();
        if sorted != ["no", "yes"] {
            return Err(MatchingError::LinkVariable(
                network.link_variable.clone(),
                "domain must be {yes, no}".into(),
            ));
        }
        let yes = bn.variable(link_var).value_index("yes").expect("checked above");
        let mut roles: [Vec<MappedVar>; 2] = [Vec::new(), Vec::new()];
        for (mvar, spec) in bn.variables().iter().enumerate() {
            if mvar == link_var {
                continue;
            }
            let Some((role, name)) = network
                .prefixes
                .iter()
                .enumerate()
                .find_map(|(r, p)| spec.name.strip_prefix(p.as_str()).map(|n| (r, n)))
            else {
                continue;
            };
            let attr = schema
                .var_index(name)
                .ok_or_else(|| MatchingError::UnmappedVariable(spec.name.clone()))?;
            let attr_spec = &schema.variables()[attr];
            let mut to_match = vec![OUTSIDE; attr_spec.cardinality()];
            let mut to_attr = Vec::with_capacity(spec.cardinality());
            for (mv, label) in spec.domain.iter().enumerate() {
                let av = attr_spec
                    .value_index(label)
                    .ok_or_else(|| MatchingError::ForeignValue {
                        variable: spec.name.clone(),
                        value: label.clone(),
                    })?;
                to_match[av] = mv as u16;
                to_attr.push(av);
            }
            roles[role].push(MappedVar {
                mvar,
                attr,
                to_match,
                to_attr,
            });
        }
        let rule = Self {
            link_type,
            link_type_name: network.link_type,
            bn,
            link_var,
            yes,
            roles,
            counts: network.counts,
            retries: options.retries.unwrap_or(DEFAULT_RETRIES),
            small_set: options.small_set.unwrap_or(DEFAULT_SMALL_SET),
        };
        let driver = rule.driver();
        if schema.counter(link_type, side(driver)).is_none() {
            return Err(MatchingError::MissingCounter {
                link_type: rule.link_type_name.clone(),
                side: if driver == 0 { "a1" } else { "a2" },
            });
        }
        Ok(rule)
    }

    pub fn link_type(&self) -> usize {
        self.link_type
    }

    pub fn link_type_name(&self) -> &str {
        &self.link_type_name
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    pub fn network(&self) -> &BayesianNetwork {
        &self.bn
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }

    pub fn small_set(&self) -> usize {
        self.small_set
    }

    /// Role (0 for a1, 1 for a2) whose agents drive the matching loop.
    fn driver(&self) -> usize {
        match self.counts {
            Counts::A2 => 1,
            _ => 0,
        }
    }

    fn key(&self, role: usize, store: &PopulationStore, id: AgentId) -> Vec<u16> {
        let agent = &store.agents()[id as usize];
        self.roles[role]
            .iter()
            .map(|m| m.to_match[agent.values[m.attr]])
            .collect()
    }

    fn write_evidence(&self, role: usize, key: &[u16], ev: &mut [Option<usize>]) -> bool {
        for (m, &k) in self.roles[role].iter().zip(key) {
            if k == OUTSIDE {
                return false;
            }
            ev[m.mvar] = Some(usize::from(k));
        }
        true
    }

    fn link_evidence(&self) -> Vec<Option<usize>> {
        let mut ev = vec![None; self.bn.len()];
        ev[self.link_var] = Some(self.yes);
        ev
    }

    /// Probability that the link variable is `yes`.
    pub fn link_probability(&self) -> f64 {
        evidence_probability_indexed(&self.bn, &self.link_evidence())
    }

    /// Zero-pruned value sets of one role's attributes under `ev`, as
    /// attribute-index constraints.
    fn supports(&self, role: usize, ev: &[Option<usize>]) -> Result<Vec<(usize, Vec<bool>)>, InferenceError> {
        self.roles[role]
            .iter()
            .map(|m| {
                let post = posterior_indexed(&self.bn, ev, m.mvar)?;
                let mut allowed = vec![false; m.to_match.len()];
                for (mv, p) in post.iter().enumerate() {
                    if *p > 0.0 {
                        allowed[m.to_attr[mv]] = true;
                    }
                }
                Ok((m.attr, allowed))
            })
            .collect()
    }

    /// Predicates for the a1 and a2 candidate sets, each including the
    /// remaining-demand constraint of a counted side.
    pub fn derive_candidate_sets(&self, schema: &Schema) -> Result<[CandidateQuery; 2], InferenceError> {
        let ev = self.link_evidence();
        if evidence_probability_indexed(&self.bn, &ev) == 0.0 {
            return Err(InferenceError::ZeroEvidence);
        }
        let mut out = [CandidateQuery::new(), CandidateQuery::new()];
        for (role, query) in out.iter_mut().enumerate() {
            query.attributes = self.supports(role, &ev)?;
            if self.counts.counting().counts(side(role)) {
                if let Some(k) = schema.counter(self.link_type, side(role)) {
                    query.counters.push(CounterConstraint::HasRemaining(k));
                }
            }
        }
        Ok(out)
    }

    /// Predicate for peers of `a1` given the link and a1's attributes; the
    /// agent is read in the a1 role.
    pub fn conditional_candidates(&self, store: &PopulationStore, a1: AgentId) -> Result<CandidateQuery, InferenceError> {
        self.conditional_for_role(store, 0, a1)
    }

    fn conditional_for_role(
        &self,
        store: &PopulationStore,
        role: usize,
        id: AgentId,
    ) -> Result<CandidateQuery, InferenceError> {
        let key = self.key(role, store, id);
        let attributes = self.peer_supports(role, &key)?;
        let mut query = CandidateQuery {
            attributes,
            ..CandidateQuery::new()
        };
        self.add_peer_constraints(&mut query, store.schema(), 1 - role, id);
        Ok(query)
    }

    fn peer_supports(&self, role: usize, key: &[u16]) -> Result<Vec<(usize, Vec<bool>)>, InferenceError> {
        let mut ev = self.link_evidence();
        if !self.write_evidence(role, key, &mut ev) {
            return Err(InferenceError::ZeroEvidence);
        }
        self.supports(1 - role, &ev)
    }

    fn add_peer_constraints(&self, query: &mut CandidateQuery, schema: &Schema, peer: usize, driver_id: AgentId) {
        if self.counts.counting().counts(side(peer)) {
            if let Some(k) = schema.counter(self.link_type, side(peer)) {
                query.counters.push(CounterConstraint::HasRemaining(k));
            }
        }
        query.exclude.push(driver_id);
        query.not_linked_with = Some(driver_id);
    }

    /// p(link = yes | attributes of a1 and a2), 0 when the attributes are
    /// themselves impossible under the matching network.
    pub fn compatibility(&self, store: &PopulationStore, a1: AgentId, a2: AgentId) -> f64 {
        self.compatibility_keys(&self.key(0, store, a1), &self.key(1, store, a2))
    }

    fn compatibility_keys(&self, k1: &[u16], k2: &[u16]) -> f64 {
        let mut ev = vec![None; self.bn.len()];
        if !self.write_evidence(0, k1, &mut ev) || !self.write_evidence(1, k2, &mut ev) {
            return 0.0;
        }
        match posterior_indexed(&self.bn, &ev, self.link_var) {
            Ok(p) => p[self.yes],
            Err(_) => 0.0,
        }
    }

    /// Pairs agents until every driver's demand is met or no compatible peer
    /// remains.
    pub fn run<R: Rng + ?Sized>(&self, store: &mut PopulationStore, rng: &mut R) -> RuleReport {
        Matcher::new(self).run(store, rng)
    }
}

fn side(role: usize) -> Endpoint {
    if role == 0 {
        Endpoint::Source
    } else {
        Endpoint::Target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Homophily,
    Transitive,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Homophily => "homophily",
            RuleKind::Transitive => "transitive",
        })
    }
}

/// Outcome of one generation rule. Homophily demand is that of the driving
/// candidate set: agents of the counted role (a1 unless only a2 counts)
/// satisfying its predicate at rule start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleReport {
    pub kind: RuleKind,
    pub link_type: String,
    pub links_created: u64,
    /// Remaining driver demand at rule start; for transitive rules, the
    /// number of eligible dyads.
    pub required: u64,
    pub fulfilled: u64,
    /// Driver demand left when no compatible peer remained.
    pub orphans: u64,
    pub prototype_successes: u64,
    pub fallback_successes: u64,
    pub fallback_rejections: u64,
    /// The link variable can never be `yes`.
    pub vacuous: bool,
}

impl RuleReport {
    pub fn new(kind: RuleKind, link_type: impl Into<String>) -> Self {
        Self {
            kind,
            link_type: link_type.into(),
            links_created: 0,
            required: 0,
            fulfilled: 0,
            orphans: 0,
            prototype_successes: 0,
            fallback_successes: 0,
            fallback_rejections: 0,
            vacuous: false,
        }
    }

    pub fn unfulfilled(&self) -> u64 {
        self.required - self.fulfilled
    }

    /// Unfulfilled share of the demand, 0 when nothing was required.
    pub fn error_rate(&self) -> f64 {
        if self.required == 0 {
            0.0
        } else {
            self.unfulfilled() as f64 / self.required as f64
        }
    }
}

type Support = Option<Rc<Vec<(usize, Vec<bool>)>>>;

struct Matcher<'r> {
    rule: &'r HomophilyRule,
    sampler: PrototypeSampler<'r>,
    peer_support: HashMap<Vec<u16>, Support>,
    /// Compatibility by driver key, then peer key.
    compat: HashMap<Vec<u16>, HashMap<Vec<u16>, f64>>,
}

impl<'r> Matcher<'r> {
    fn new(rule: &'r HomophilyRule) -> Self {
        Self {
            rule,
            sampler: PrototypeSampler::new(&rule.bn),
            peer_support: HashMap::new(),
            compat: HashMap::new(),
        }
    }

    fn run<R: Rng + ?Sized>(&mut self, store: &mut PopulationStore, rng: &mut R) -> RuleReport {
        let rule = self.rule;
        let mut report = RuleReport::new(RuleKind::Homophily, rule.link_type_name.clone());
        let schema = store.schema().clone();
        let driver = rule.driver();
        let peer = 1 - driver;
        let counting = rule.counts.counting();
        let driver_counter = schema
            .counter(rule.link_type, side(driver))
            .expect("checked when the rule was built");
        let sets = match rule.derive_candidate_sets(&schema) {
            Ok(s) => s,
            Err(_) => {
                report.vacuous = true;
                report.required = store
                    .agents()
                    .iter()
                    .map(|a| u64::from(a.remaining(driver_counter)))
                    .sum();
                return report;
            }
        };
        let mut drivers = store.query_candidates(&sets[driver]);
        let remaining_over = |store: &PopulationStore, ids: &[AgentId]| -> u64 {
            ids.iter()
                .map(|&id| u64::from(store.agents()[id as usize].remaining(driver_counter)))
                .sum()
        };
        report.required = remaining_over(store, &drivers);
        drivers.shuffle(rng);

        for &a in &drivers {
            let mut remaining = store.agents()[a as usize].remaining(driver_counter);
            if remaining == 0 {
                continue;
            }
            let dk = rule.key(driver, store, a);
            let support = match self.peer_support.get(&dk) {
                Some(s) => s.clone(),
                None => {
                    let s = rule.peer_supports(driver, &dk).ok().map(Rc::new);
                    self.peer_support.insert(dk.clone(), s.clone());
                    s
                }
            };
            let Some(support) = support else {
                report.orphans += u64::from(remaining);
                continue;
            };
            let mut query = CandidateQuery {
                attributes: support.as_ref().clone(),
                ..CandidateQuery::new()
            };
            rule.add_peer_constraints(&mut query, &schema, peer, a);

            while remaining > 0 {
                let mut chosen = None;
                if store.count_candidates(&query, rule.small_set) >= rule.small_set {
                    chosen = self.prototype_search(driver, &dk, &query, store, rng);
                    if chosen.is_some() {
                        report.prototype_successes += 1;
                    }
                }
                if chosen.is_none() {
                    let candidates = store.query_candidates(&query);
                    chosen = self.fallback(driver, &dk, candidates, store, rng, &mut report);
                    if chosen.is_some() {
                        report.fallback_successes += 1;
                    }
                }
                let Some(b) = chosen else {
                    report.orphans += u64::from(remaining);
                    break;
                };
                let (a1, a2) = if driver == 0 { (a, b) } else { (b, a) };
                store
                    .record_link(a1, a2, rule.link_type, counting)
                    .expect("candidates satisfy every record_link precondition");
                report.links_created += 1;
                remaining -= 1;
            }
        }
        report.fulfilled = report.required - remaining_over(store, &drivers);
        report
    }

    fn prototype_search<R: Rng + ?Sized>(
        &mut self,
        driver: usize,
        dk: &[u16],
        base: &CandidateQuery,
        store: &PopulationStore,
        rng: &mut R,
    ) -> Option<AgentId> {
        let rule = self.rule;
        let peer = 1 - driver;
        let mut ev = rule.link_evidence();
        rule.write_evidence(driver, dk, &mut ev);
        for _ in 0..rule.retries {
            let proto = self.sampler.sample(&ev, rng).ok()?;
            let mut query = base.clone();
            for m in &rule.roles[peer] {
                let mut allowed = vec![false; m.to_match.len()];
                allowed[m.to_attr[proto.values[m.mvar]]] = true;
                query.attributes.push((m.attr, allowed));
            }
            let hits = store.query_candidates(&query);
            if !hits.is_empty() {
                return Some(hits[rng.random_range(0..hits.len())]);
            }
        }
        None
    }

    fn fallback<R: Rng + ?Sized>(
        &mut self,
        driver: usize,
        dk: &[u16],
        mut pool: Vec<AgentId>,
        store: &PopulationStore,
        rng: &mut R,
        report: &mut RuleReport,
    ) -> Option<AgentId> {
        let rule = self.rule;
        let peer = 1 - driver;
        let cache = self.compat.entry(dk.to_vec()).or_default();
        let mut pk = Vec::with_capacity(rule.roles[peer].len());
        let mut weights: Vec<f64> = pool
            .iter()
            .map(|&c| {
                let agent = &store.agents()[c as usize];
                pk.clear();
                pk.extend(rule.roles[peer].iter().map(|m| m.to_match[agent.values[m.attr]]));
                if let Some(&w) = cache.get(pk.as_slice()) {
                    return w;
                }
                let w = if driver == 0 {
                    rule.compatibility_keys(dk, &pk)
                } else {
                    rule.compatibility_keys(&pk, dk)
                };
                cache.insert(pk.clone(), w);
                w
            })
            .collect();
        let max = weights.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            report.fallback_rejections += pool.len() as u64;
            return None;
        }
        while !pool.is_empty() {
            let i = rng.random_range(0..pool.len());
            let w = weights[i];
            if w > 0.0 && rng.random::<f64>() * max < w {
                return Some(pool[i]);
            }
            report.fallback_rejections += 1;
            pool.swap_remove(i);
            weights.swap_remove(i);
        }
        None
    }
}
