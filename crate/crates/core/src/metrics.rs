//! Generation errors and whole-network statistics.

use std::collections::BTreeMap;

use rand::seq::index::sample;

use crate::bn::BayesianNetwork;
use crate::matching::{RuleKind, RuleReport};
use crate::population::PopulationStore;
use crate::rng::SeedTree;

/// Largest component size for which every source is searched.
pub const EXACT_PATH_LIMIT: usize = 20_000;
/// Sources searched when the component is larger.
pub const PATH_SAMPLES: usize = 1_000;

/// Mean absolute difference between learned and theoretical probabilities
/// over the rows with observed parent support, with the count of rows
/// without.
pub fn distribution_error_detail(store: &PopulationStore, bn: &BayesianNetwork) -> (f64, usize) {
    let learned = store.learn_marginals(bn);
    let mut total = 0.0;
    let mut entries = 0usize;
    for (var, table) in learned.tables.iter().enumerate() {
        let card = bn.cardinality(var);
        let theory = &bn.cpt(var).probs;
        for (r, seen) in table.observed.iter().enumerate() {
            if *seen {
                let span = r * card..(r + 1) * card;
                total += table.probs[span.clone()]
                    .iter()
                    .zip(&theory[span])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
                entries += card;
            }
        }
    }
    let mean = if entries == 0 { 0.0 } else { total / entries as f64 };
    (mean, learned.unobserved_rows())
}

pub fn distribution_error(store: &PopulationStore, bn: &BayesianNetwork) -> f64 {
    distribution_error_detail(store, bn).0
}

/// Unfulfilled share of demand per homophily link type, rules of the same
/// type pooled.
pub fn matching_error(reports: &[RuleReport]) -> BTreeMap<String, f64> {
    let mut pooled: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.kind == RuleKind::Homophily) {
        let e = pooled.entry(r.link_type.clone()).or_default();
        e.0 += r.required;
        e.1 += r.fulfilled;
    }
    pooled
        .into_iter()
        .map(|(t, (req, met))| {
            let rate = if req == 0 { 0.0 } else { (req - met) as f64 / req as f64 };
            (t, rate)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub distribution_error: f64,
    pub unobserved_rows: usize,
    pub matching_error: BTreeMap<String, f64>,
}

impl ErrorReport {
    pub fn compute(store: &PopulationStore, bn: &BayesianNetwork, reports: &[RuleReport]) -> Self {
        let (distribution_error, unobserved_rows) = distribution_error_detail(store, bn);
        Self {
            distribution_error,
            unobserved_rows,
            matching_error: matching_error(reports),
        }
    }
}

/// Simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<u32>>,
    links: usize,
}

impl UndirectedGraph {
    /// Builds from edges in any orientation; repeated edges and self-loops
    /// are dropped.
    pub fn new<I: IntoIterator<Item = (u32, u32)>>(n: usize, edges: I) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            if a != b {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        let mut links = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            links += list.len();
        }
        Self { adj, links: links / 2 }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn link_count(&self) -> usize {
        self.links
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn triangles(&self) -> u64 {
        let mut count = 0;
        for (u, nu) in self.adj.iter().enumerate() {
            let u = u as u32;
            for &v in nu.iter().filter(|&&v| v > u) {
                // Common neighbors above v, by sorted merge.
                let nv = &self.adj[v as usize];
                let (mut i, mut j) = (nu.partition_point(|&w| w <= v), nv.partition_point(|&w| w <= v));
                while i < nu.len() && j < nv.len() {
                    match nu[i].cmp(&nv[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            count += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        count
    }

    pub fn connected_triples(&self) -> u64 {
        self.adj
            .iter()
            .map(|n| {
                let d = n.len() as u64;
                d * d.saturating_sub(1) / 2
            })
            .sum()
    }

    /// Components as sorted node lists, ordered by their smallest node.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.adj.len()];
        let mut out = Vec::new();
        for start in 0..self.adj.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start as u32];
            let mut k = 0;
            while k < comp.len() {
                for &w in &self.adj[comp[k] as usize] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Sum over `sources` of the BFS distances to every node reached. Runs
    /// 64 searches at once, one bit per source.
    fn distance_sums(&self, sources: &[u32]) -> u64 {
        let n = self.adj.len();
        let mut visited = vec![0u64; n];
        let mut frontier = vec![0u64; n];
        let mut next = vec![0u64; n];
        let mut total = 0u64;
        for chunk in sources.chunks(64) {
            visited.fill(0);
            frontier.fill(0);
            for (bit, &s) in chunk.iter().enumerate() {
                visited[s as usize] |= 1 << bit;
                frontier[s as usize] |= 1 << bit;
            }
            let mut depth = 0u64;
            loop {
                depth += 1;
                let mut grew = false;
                for v in 0..n {
                    let reach = self.adj[v].iter().fold(0u64, |acc, &u| acc | frontier[u as usize]);
                    let fresh = reach & !visited[v];
                    next[v] = fresh;
                    if fresh != 0 {
                        visited[v] |= fresh;
                        total += depth * u64::from(fresh.count_ones());
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
                std::mem::swap(&mut frontier, &mut next);
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub nodes: usize,
    pub links: usize,
    pub density: f64,
    pub average_degree: f64,
    pub clustering: f64,
    pub triangles: u64,
    pub connected_triples: u64,
    pub components: usize,
    pub largest_component: usize,
    /// Mean geodesic over ordered pairs of the largest component; absent
    /// when it has fewer than two nodes.
    pub average_path_length: Option<f64>,
    pub path_length_estimated: bool,
}

impl NetworkStats {
    /// `seed` only matters when path length is estimated.
    pub fn compute(graph: &UndirectedGraph, seed: u64) -> Self {
        let n = graph.node_count();
        let l = graph.link_count();
        let density = if n < 2 { 0.0 } else { 2.0 * l as f64 / (n as f64 * (n as f64 - 1.0)) };
        let average_degree = if n == 0 { 0.0 } else { 2.0 * l as f64 / n as f64 };
        let triangles = graph.triangles();
        let connected_triples = graph.connected_triples();
        let clustering = if connected_triples == 0 {
            0.0
        } else {
            3.0 * triangles as f64 / connected_triples as f64
        };
        let comps = graph.components();
        // Largest component; ties go to the one holding the smallest id.
        let largest = comps.iter().fold(None::<&Vec<u32>>, |best, c| match best {
            Some(b) if b.len() >= c.len() => Some(b),
            _ => Some(c),
        });
        let size = largest.map_or(0, Vec::len);
        let (average_path_length, path_length_estimated) = match largest {
            Some(comp) if size >= 2 => {
                let estimated = size > EXACT_PATH_LIMIT;
                let sources: Vec<u32> = if estimated {
                    let mut rng = SeedTree::new(seed).stream("path-length");
                    let mut picked: Vec<u32> = sample(&mut rng, size, PATH_SAMPLES)
                        .into_iter()
                        .map(|i| comp[i])
                        .collect();
                    picked.sort_unstable();
                    picked
                } else {
                    comp.clone()
                };
                let total = graph.distance_sums(&sources);
                let pairs = sources.len() as f64 * (size as f64 - 1.0);
                (Some(total as f64 / pairs), estimated)
            }
            _ => (None, false),
        };
        Self {
            nodes: n,
            links: l,
            density,
            average_degree,
            clustering,
            triangles,
            connected_triples,
            components: comps.len(),
            largest_component: size,
            average_path_length,
            path_length_estimated,
        }
    }
}

/// Which links a statistic covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Collapsed,
    Type(usize),
}

/// Statistics of the store's links, directions ignored.
pub fn graph_statistics(store: &PopulationStore, scope: Scope, seed: u64) -> NetworkStats {
    let edges = store
        .links()
        .iter()
        .filter(|l| match scope {
            Scope::Collapsed => true,
            Scope::Type(t) => l.link_type == t,
        })
        .map(|l| (l.source, l.target));
    NetworkStats::compute(&UndirectedGraph::new(store.len(), edges), seed)
}
