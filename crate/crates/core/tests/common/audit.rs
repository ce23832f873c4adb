//! Post-run checks shared by the pipeline tests and the acceptance run.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use popnet::matching::{RuleKind, RuleReport};
use popnet::pipeline::{PreparedPlan, Rule};
use popnet::population::PopulationStore;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Every invariant a finished run must satisfy.
pub fn audit(prepared: &PreparedPlan, store: &PopulationStore, reports: &[RuleReport]) -> Result<(), String> {
    let mut dyads = HashSet::new();
    for l in store.links() {
        if l.source == l.target {
            return Err(format!("self link on {}", l.source));
        }
        if !dyads.insert((l.source.min(l.target), l.source.max(l.target))) {
            return Err(format!("dyad {}-{} linked twice", l.source, l.target));
        }
    }
    let homophily: Vec<_> = prepared
        .rules
        .iter()
        .filter_map(|r| match r {
            Rule::Homophily(h) => Some(h),
            Rule::Transitive(_) => None,
        })
        .collect();
    for l in store.links() {
        let rules: Vec<_> = homophily.iter().filter(|h| h.link_type() == l.link_type).collect();
        if rules.is_empty() {
            continue;
        }
        let directed = store.schema().link_types()[l.link_type].directed;
        let ok = rules.iter().any(|h| {
            h.compatibility(store, l.source, l.target) > 0.0
                || (!directed && h.compatibility(store, l.target, l.source) > 0.0)
        });
        if !ok {
            return Err(format!("incompatible link {} {} {}", l.source, l.target, l.link_type));
        }
    }
    for a in store.agents() {
        for k in 0..a.required.len() {
            if a.created[k] > a.required[k] {
                return Err(format!("agent {} over demand on counter {k}", a.id));
            }
        }
    }
    let mut total = 0;
    for r in reports {
        if r.fulfilled + r.unfulfilled() != r.required {
            return Err(format!("report for {} does not add up", r.link_type));
        }
        // A link meets one unit of demand, or two when both endpoints draw
        // on the same counter.
        if r.kind == RuleKind::Homophily && !(r.links_created..=2 * r.links_created).contains(&r.fulfilled) {
            return Err(format!("{}: {} links for {} fulfilled", r.link_type, r.links_created, r.fulfilled));
        }
        total += r.links_created;
    }
    if total as usize != store.links().len() {
        return Err("rule reports miss links".into());
    }
    Ok(())
}

const KENYA_RULES: [&str; 6] = [
    "rule homophily spouses bn={dir}/spouses.bn counts=both",
    "rule homophily motherOf bn={dir}/motherOf.bn counts=both",
    "rule transitive fatherOf from spouses motherOf p={p} pattern=any,source",
    "rule transitive siblings from motherOf motherOf p={p} pattern=source,source",
    "rule homophily friendship bn={dir}/friendship.bn counts=both",
    "rule homophily colleagues bn={dir}/colleagues.bn counts=both",
];

/// Kenya plan text with a chosen subset and order of its rules.
pub fn fuzzed_plan(n: usize, seed: u64, order: &[usize], p: f64, retries: u32, smallset: usize) -> String {
    let dir = fixture("kenya");
    let dir = dir.display();
    let mut text = format!("population N={n} seed={seed} attributes={dir}/attributes.bn\n");
    for (t, d) in [
        ("spouses", "undirected"),
        ("motherOf", "directed"),
        ("fatherOf", "directed"),
        ("siblings", "undirected"),
        ("friendship", "undirected"),
        ("colleagues", "undirected"),
    ] {
        text.push_str(&format!("linktype {t} {d}\n"));
    }
    for &i in order {
        text.push_str(&KENYA_RULES[i].replace("{dir}", &dir.to_string()).replace("{p}", &p.to_string()));
        text.push('\n');
    }
    text.push_str(&format!("matcher retries={retries} smallset={smallset}\n"));
    text
}
