//! Files written after generation, and their readers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::bn::BayesianNetwork;
use crate::matching::{RuleKind, RuleReport};
use crate::metrics::{ErrorReport, NetworkStats, UndirectedGraph};
use crate::population::{Link, PopulationStore};

/// Networks with more agents get no graph description file.
pub const DOT_NODE_LIMIT: usize = 2_000;

pub const AGENTS_FILE: &str = "agents.csv";
pub const EDGES_ALL_FILE: &str = "edges_all.csv";
pub const DOT_FILE: &str = "network.dot";
pub const INTERACTION_FILE: &str = "interaction.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const LEARNED_BN_FILE: &str = "learned_attributes.bn";

pub fn edges_file(link_type: &str) -> String {
    format!("edges_{link_type}.csv")
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no interaction probability for link type `{0}`")]
    MissingWeight(String),
    #[error("interaction probability {1} of `{0}` is outside [0, 1]")]
    WeightRange(String, f64),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

fn write(path: &Path, text: &str) -> Result<(), ExportError> {
    fs::write(path, text).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read(path: &Path) -> Result<String, ExportError> {
    fs::read_to_string(path).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Links sorted by type name, then source, then target.
pub fn canonical_links(store: &PopulationStore) -> Vec<Link> {
    let types = store.schema().link_types();
    let mut links = store.links().to_vec();
    links.sort_by(|a, b| {
        (&types[a.link_type].name, a.source, a.target).cmp(&(&types[b.link_type].name, b.source, b.target))
    });
    links
}

pub fn agents_csv(store: &PopulationStore) -> String {
    let schema = store.schema();
    let columns: Vec<usize> = schema
        .attributes()
        .iter()
        .copied()
        .chain(schema.counters().iter().map(|c| c.var))
        .collect();
    let mut out = String::from("id");
    for &c in &columns {
        out.push(',');
        out.push_str(&schema.variables()[c].name);
    }
    out.push('\n');
    for agent in store.agents() {
        write!(out, "{}", agent.id).unwrap();
        for &c in &columns {
            out.push(',');
            out.push_str(&schema.variables()[c].domain[agent.values[c]]);
        }
        out.push('\n');
    }
    out
}

/// `source,target` of one type, ascending.
pub fn edges_csv(store: &PopulationStore, t: usize) -> String {
    let mut pairs: Vec<(u32, u32)> = store
        .links()
        .iter()
        .filter(|l| l.link_type == t)
        .map(|l| (l.source, l.target))
        .collect();
    pairs.sort_unstable();
    let mut out = String::from("source,target\n");
    for (s, t) in pairs {
        writeln!(out, "{s},{t}").unwrap();
    }
    out
}

pub fn edges_all_csv(store: &PopulationStore) -> String {
    let types = store.schema().link_types();
    let mut out = String::from("source,target,type\n");
    for l in canonical_links(store) {
        writeln!(out, "{},{},{}", l.source, l.target, types[l.link_type].name).unwrap();
    }
    out
}

/// Graph description with `a -- b` lines for undirected links and `a -> b`
/// for directed ones.
pub fn dot(store: &PopulationStore) -> String {
    let types = store.schema().link_types();
    let mut out = String::from("graph network {\n");
    for id in 0..store.len() {
        writeln!(out, "  {id};").unwrap();
    }
    for l in canonical_links(store) {
        let t = &types[l.link_type];
        let edge = if t.directed { "->" } else { "--" };
        writeln!(out, "  {} {edge} {} [type={}];", l.source, l.target, t.name).unwrap();
    }
    out.push_str("}\n");
    out
}

/// `source,target,probability`, one row per link in canonical order.
pub fn interaction_csv(store: &PopulationStore, weights: &BTreeMap<String, f64>) -> Result<String, ExportError> {
    for (t, &w) in weights {
        if !(0.0..=1.0).contains(&w) {
            return Err(ExportError::WeightRange(t.clone(), w));
        }
    }
    let types = store.schema().link_types();
    let mut out = String::from("source,target,probability\n");
    for l in canonical_links(store) {
        let name = &types[l.link_type].name;
        let w = weights
            .get(name)
            .ok_or_else(|| ExportError::MissingWeight(name.clone()))?;
        writeln!(out, "{},{},{w}", l.source, l.target).unwrap();
    }
    Ok(out)
}

/// Population, one edge file per declared type, the collapsed edge list
/// and, for small networks, the graph description.
pub fn export_network(store: &PopulationStore, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<(), ExportError> {
        let path = dir.join(name);
        write(&path, &text)?;
        written.push(path);
        Ok(())
    };
    emit(AGENTS_FILE, agents_csv(store))?;
    for (t, lt) in store.schema().link_types().iter().enumerate() {
        emit(&edges_file(&lt.name), edges_csv(store, t))?;
    }
    emit(EDGES_ALL_FILE, edges_all_csv(store))?;
    if store.len() <= DOT_NODE_LIMIT {
        emit(DOT_FILE, dot(store))?;
    }
    Ok(written)
}

pub fn export_interaction_network(
    store: &PopulationStore,
    weights: &BTreeMap<String, f64>,
    dir: &Path,
) -> Result<PathBuf, ExportError> {
    let path = dir.join(INTERACTION_FILE);
    write(&path, &interaction_csv(store, weights)?)?;
    Ok(path)
}

/// Everything measured on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub seed: u64,
    pub population: usize,
    pub errors: ErrorReport,
    pub rules: Vec<RuleReport>,
    /// `all` for the collapsed network, then one entry per link type.
    pub stats: Vec<(String, NetworkStats)>,
}

fn push(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "{key}={value}").unwrap();
}

fn stats_lines(out: &mut String, prefix: &str, s: &NetworkStats) {
    push(out, &format!("{prefix}.nodes"), s.nodes);
    push(out, &format!("{prefix}.links"), s.links);
    push(out, &format!("{prefix}.density"), s.density);
    push(out, &format!("{prefix}.average_degree"), s.average_degree);
    push(out, &format!("{prefix}.clustering"), s.clustering);
    push(out, &format!("{prefix}.triangles"), s.triangles);
    push(out, &format!("{prefix}.connected_triples"), s.connected_triples);
    push(out, &format!("{prefix}.components"), s.components);
    push(out, &format!("{prefix}.largest_component"), s.largest_component);
    match s.average_path_length {
        Some(v) => push(out, &format!("{prefix}.average_path_length"), v),
        None => push(out, &format!("{prefix}.average_path_length"), "none"),
    }
    push(out, &format!("{prefix}.path_length_estimated"), s.path_length_estimated);
}

/// Key=value lines for a statistics set, as in the report.
pub fn stats_text(stats: &[(String, NetworkStats)]) -> String {
    let mut out = String::new();
    for (scope, s) in stats {
        stats_lines(&mut out, &format!("stats.{scope}"), s);
    }
    out
}

impl GenerationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        push(&mut out, "seed", self.seed);
        push(&mut out, "population", self.population);
        push(&mut out, "distribution_error", self.errors.distribution_error);
        push(&mut out, "unobserved_rows", self.errors.unobserved_rows);
        for (t, e) in &self.errors.matching_error {
            push(&mut out, &format!("matching_error.{t}"), e);
        }
        push(&mut out, "rules", self.rules.len());
        for (i, r) in self.rules.iter().enumerate() {
            let k = |f: &str| format!("rule.{i}.{f}");
            push(&mut out, &k("kind"), r.kind);
            push(&mut out, &k("link_type"), &r.link_type);
            push(&mut out, &k("links_created"), r.links_created);
            push(&mut out, &k("required"), r.required);
            push(&mut out, &k("fulfilled"), r.fulfilled);
            push(&mut out, &k("orphans"), r.orphans);
            push(&mut out, &k("prototype_successes"), r.prototype_successes);
            push(&mut out, &k("fallback_successes"), r.fallback_successes);
            push(&mut out, &k("fallback_rejections"), r.fallback_rejections);
            push(&mut out, &k("vacuous"), r.vacuous);
        }
        out.push_str(&stats_text(&self.stats));
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let kv = KeyValues::parse(text)?;
        let mut matching_error = BTreeMap::new();
        let mut scopes: Vec<String> = Vec::new();
        for key in &kv.order {
            if let Some(t) = key.strip_prefix("matching_error.") {
                matching_error.insert(t.to_string(), kv.get(key)?);
            }
            if let Some(rest) = key.strip_prefix("stats.") {
                if let Some(scope) = rest.strip_suffix(".nodes") {
                    scopes.push(scope.to_string());
                }
            }
        }
        let n_rules: usize = kv.get("rules")?;
        let mut rules = Vec::with_capacity(n_rules);
        for i in 0..n_rules {
            let k = |f: &str| format!("rule.{i}.{f}");
            let kind = match kv.raw(&k("kind"))? {
                "homophily" => RuleKind::Homophily,
                "transitive" => RuleKind::Transitive,
                other => return Err(format!("unknown rule kind `{other}`")),
            };
            rules.push(RuleReport {
                kind,
                link_type: kv.raw(&k("link_type"))?.to_string(),
                links_created: kv.get(&k("links_created"))?,
                required: kv.get(&k("required"))?,
                fulfilled: kv.get(&k("fulfilled"))?,
                orphans: kv.get(&k("orphans"))?,
                prototype_successes: kv.get(&k("prototype_successes"))?,
                fallback_successes: kv.get(&k("fallback_successes"))?,
                fallback_rejections: kv.get(&k("fallback_rejections"))?,
                vacuous: kv.get(&k("vacuous"))?,
            });
        }
        let stats = scopes
            .into_iter()
            .map(|scope| {
                let k = |f: &str| format!("stats.{scope}.{f}");
                let apl = match kv.raw(&k("average_path_length"))? {
                    "none" => None,
                    v => Some(v.parse().map_err(|_| format!("bad path length `{v}`"))?),
                };
                let s = NetworkStats {
                    nodes: kv.get(&k("nodes"))?,
                    links: kv.get(&k("links"))?,
                    density: kv.get(&k("density"))?,
                    average_degree: kv.get(&k("average_degree"))?,
                    clustering: kv.get(&k("clustering"))?,
                    triangles: kv.get(&k("triangles"))?,
                    connected_triples: kv.get(&k("connected_triples"))?,
                    components: kv.get(&k("components"))?,
                    largest_component: kv.get(&k("largest_component"))?,
                    average_path_length: apl,
                    path_length_estimated: kv.get(&k("path_length_estimated"))?,
                };
                Ok((scope, s))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Self {
            seed: kv.get("seed")?,
            population: kv.get("population")?,
            errors: ErrorReport {
                distribution_error: kv.get("distribution_error")?,
                unobserved_rows: kv.get("unobserved_rows")?,
                matching_error,
            },
            rules,
            stats,
        })
    }
}

/// Flat `key=value` lines in file order.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    pub order: Vec<String>,
    pub values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut kv = KeyValues::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            if kv.values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{k}`", i + 1));
            }
            kv.order.push(k.to_string());
        }
        Ok(kv)
    }

    pub fn raw(&self, key: &str) -> Result<&str, String> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| format!("missing key `{key}`"))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, String> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| format!("bad value `{raw}` for `{key}`"))
    }
}

/// Writes the report and the learned attribute network.
pub fn export_reports(
    report: &GenerationReport,
    learned: &BayesianNetwork,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExportError> {
    let report_path = dir.join(REPORT_FILE);
    write(&report_path, &report.to_text())?;
    let bn_path = dir.join(LEARNED_BN_FILE);
    write(&bn_path, &learned.to_text())?;
    Ok(vec![report_path, bn_path])
}

/// Reads `edges_all.csv` back as (source, target, type) rows.
pub fn read_edges_all(path: &Path) -> Result<Vec<(u32, u32, String)>, ExportError> {
    let text = read(path)?;
    let perr = |line: usize, message: &str| ExportError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "source,target,type")) => {}
        _ => return Err(perr(1, "expected header `source,target,type`")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let mut f = l.split(',');
            let (Some(s), Some(t), Some(ty), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(perr(i + 1, "expected three fields"));
            };
            let s = s.parse().map_err(|_| perr(i + 1, "bad source id"))?;
            let t = t.parse().map_err(|_| perr(i + 1, "bad target id"))?;
            Ok((s, t, ty.to_string()))
        })
        .collect()
}

/// Number of agent rows in `agents.csv`.
pub fn read_agent_count(path: &Path) -> Result<usize, ExportError> {
    let text = read(path)?;
    let mut lines = text.lines().filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h == "id" || h.starts_with("id,") => Ok(lines.count()),
        _ => Err(ExportError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected a header starting with `id`".into(),
        }),
    }
}

/// Statistics recomputed from an export directory: the collapsed network,
/// then each link type with at least one edge, by name. The path-length
/// sampling seed is taken from `report.txt` when present.
pub fn stats_from_dir(dir: &Path) -> Result<Vec<(String, NetworkStats)>, ExportError> {
    let n = read_agent_count(&dir.join(AGENTS_FILE))?;
    let edges = read_edges_all(&dir.join(EDGES_ALL_FILE))?;
    let seed = match fs::read_to_string(dir.join(REPORT_FILE)) {
        Ok(text) => KeyValues::parse(&text).and_then(|kv| kv.get("seed")).unwrap_or(0),
        Err(_) => 0,
    };
    for (s, t, _) in &edges {
        if (*s.max(t) as usize) >= n {
            return Err(ExportError::Parse {
                path: dir.join(EDGES_ALL_FILE),
                line: 0,
                message: format!("edge {s},{t} names an agent beyond the {n} in {AGENTS_FILE}"),
            });
        }
    }
    let graph = |filter: Option<&str>| {
        UndirectedGraph::new(
            n,
            edges
                .iter()
                .filter(|(_, _, ty)| filter.is_none_or(|f| f == ty))
                .map(|(s, t, _)| (*s, *t)),
        )
    };
    let mut out = vec![("all".to_string(), NetworkStats::compute(&graph(None), seed))];
    let types: std::collections::BTreeSet<&str> = edges.iter().map(|(_, _, t)| t.as_str()).collect();
    for t in types {
        out.push((t.to_string(), NetworkStats::compute(&graph(Some(t)), seed)));
    }
    Ok(out)
}
