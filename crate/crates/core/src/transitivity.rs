//! Triad closure: a t3 link between two agents sharing a pivot linked to
//! one of them by t1 and to the other by t2.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::matching::{RuleKind, RuleReport};
use crate::population::{AgentId, Counting, PopulationStore, Schema};

/// Which end of an existing link the pivot occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRole {
    Any,
    Source,
    Target,
}

impl FromStr for PivotRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "any" => Ok(PivotRole::Any),
            "source" => Ok(PivotRole::Source),
            "target" => Ok(PivotRole::Target),
            other => Err(format!("pivot role must be any, source or target, not `{other}`")),
        }
    }
}

impl fmt::Display for PivotRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotRole::Any => "any",
            PivotRole::Source => "source",
            PivotRole::Target => "target",
        })
    }
}

/// Parses `<role>,<role>`: the pivot's end of the t1 link, then of the t2
/// link.
pub fn parse_pattern(s: &str) -> Result<[PivotRole; 2], String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("pattern `{s}` must have the form <role>,<role>"))?;
    Ok([a.trim().parse()?, b.trim().parse()?])
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransitivityError {
    #[error("unknown link type `{0}`")]
    UnknownLinkType(String),
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("`{0}` is undirected: its pivot role must be `any`")]
    UndirectedRole(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitivityRule {
    t1: usize,
    t2: usize,
    t3: usize,
    t3_name: String,
    p: f64,
    pattern: [PivotRole; 2],
}

impl TransitivityRule {
    pub fn new(
        schema: &Schema,
        t3: &str,
        t1: &str,
        t2: &str,
        p: f64,
        pattern: [PivotRole; 2],
    ) -> Result<Self, TransitivityError> {
        let index = |name: &str| {
            schema
                .link_type_index(name)
                .ok_or_else(|| TransitivityError::UnknownLinkType(name.to_string()))
        };
        let (i1, i2, i3) = (index(t1)?, index(t2)?, index(t3)?);
        if !(0.0..=1.0).contains(&p) {
            return Err(TransitivityError::Probability(p));
        }
        for (t, role) in [(i1, pattern[0]), (i2, pattern[1])] {
            let lt = &schema.link_types()[t];
            if !lt.directed && role != PivotRole::Any {
                return Err(TransitivityError::UndirectedRole(lt.name.clone()));
            }
        }
        Ok(Self {
            t1: i1,
            t2: i2,
            t3: i3,
            t3_name: t3.to_string(),
            p,
            pattern,
        })
    }

    pub fn link_type(&self) -> usize {
        self.t3
    }

    pub fn link_type_name(&self) -> &str {
        &self.t3_name
    }

    pub fn sources(&self) -> [usize; 2] {
        [self.t1, self.t2]
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    pub fn pattern(&self) -> [PivotRole; 2] {
        self.pattern
    }

    fn partners<'s>(store: &'s PopulationStore, t: usize, role: PivotRole, pivot: AgentId) -> impl Iterator<Item = AgentId> + 's {
        let out: &[AgentId] = match role {
            PivotRole::Target => &[],
            _ => store.out_neighbors(t, pivot),
        };
        let inc: &[AgentId] = match role {
            PivotRole::Source => &[],
            _ => store.in_neighbors(t, pivot),
        };
        out.iter().chain(inc).copied()
    }

    /// Unlinked dyads (a1, a3) closing an open triad, ascending; undirected
    /// t3 dyads are listed with the lower id first.
    pub fn enumerate_open_triads(&self, store: &PopulationStore) -> Vec<(AgentId, AgentId)> {
        let directed = store.schema().link_types()[self.t3].directed;
        let mut dyads = BTreeSet::new();
        for pivot in 0..store.len() as AgentId {
            for a1 in Self::partners(store, self.t1, self.pattern[0], pivot) {
                for a3 in Self::partners(store, self.t2, self.pattern[1], pivot) {
                    if a1 == a3 || store.are_linked(a1, a3) {
                        continue;
                    }
                    let d = if directed { (a1, a3) } else { (a1.min(a3), a1.max(a3)) };
                    dyads.insert(d);
                }
            }
        }
        dyads.into_iter().collect()
    }

    /// One Bernoulli trial per eligible dyad, in ascending order.
    pub fn run<R: Rng + ?Sized>(&self, store: &mut PopulationStore, rng: &mut R) -> RuleReport {
        let mut report = RuleReport::new(RuleKind::Transitive, self.t3_name.clone());
        let dyads = self.enumerate_open_triads(store);
        report.required = dyads.len() as u64;
        for (a1, a3) in dyads {
            // A directed pair may be listed both ways; the first one wins.
            if store.are_linked(a1, a3) {
                continue;
            }
            if rng.random_bool(self.p) {
                store
                    .record_link(a1, a3, self.t3, Counting::None)
                    .expect("dyad checked free");
                report.links_created += 1;
            }
        }
        report.fulfilled = report.links_created;
        report
    }
}
