//! Generation plan: a line-oriented file naming the population size,
//! seed, attribute network, link types and the ordered rule list.
//!
//! ```text
//! population N=1000 seed=7 attributes=attributes.bn
//! linktype spouses undirected
//! rule homophily spouses bn=spouses.bn counts=both retries=20 smallset=50
//! rule transitive fatherOf from spouses motherOf p=1 pattern=any,source
//! interact spouses p=0.9
//! matcher retries=20 smallset=50
//! output out
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::matching::{Counts, RuleOptions};
use crate::population::LinkType;
use crate::transitivity::{parse_pattern, PivotRole};

#[derive(Debug, Clone, PartialEq)]
pub enum RuleSpec {
    Homophily {
        line: usize,
        link_type: String,
        bn: PathBuf,
        counts: Counts,
        options: RuleOptions,
    },
    Transitive {
        line: usize,
        link_type: String,
        from: [String; 2],
        p: f64,
        pattern: [PivotRole; 2],
    },
}

impl RuleSpec {
    pub fn link_type(&self) -> &str {
        match self {
            RuleSpec::Homophily { link_type, .. } | RuleSpec::Transitive { link_type, .. } => link_type,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            RuleSpec::Homophily { line, .. } | RuleSpec::Transitive { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationPlan {
    pub population: usize,
    pub seed: u64,
    /// Resolved against the plan's directory.
    pub attributes: PathBuf,
    pub link_types: Vec<LinkType>,
    pub rules: Vec<RuleSpec>,
    pub interactions: BTreeMap<String, f64>,
    /// Defaults for rules that do not set their own.
    pub matcher: RuleOptions,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for PlanError {}

struct Fields<'a> {
    line: usize,
    map: HashMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(line: usize, words: &[&'a str], allowed: &[&str]) -> Result<Self, PlanError> {
        let mut map = HashMap::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| PlanError {
                line,
                message: format!("expected key=value, found `{w}`"),
            })?;
            if !allowed.contains(&k) {
                return Err(PlanError {
                    line,
                    message: format!("unknown key `{k}`"),
                });
            }
            if map.insert(k, v).is_some() {
                return Err(PlanError {
                    line,
                    message: format!("`{k}` given twice"),
                });
            }
        }
        Ok(Self { line, map })
    }

    fn required(&self, key: &str) -> Result<&'a str, PlanError> {
        self.map.get(key).copied().ok_or_else(|| PlanError {
            line: self.line,
            message: format!("missing `{key}=`"),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, PlanError> {
        self.map
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| PlanError {
                    line: self.line,
                    message: format!("bad value `{v}` for `{key}`"),
                })
            })
            .transpose()
    }
}

fn probability(line: usize, raw: &str) -> Result<f64, PlanError> {
    match raw.parse::<f64>() {
        Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
        _ => Err(PlanError {
            line,
            message: format!("probability `{raw}` must be a number in [0, 1]"),
        }),
    }
}

fn rule_options(f: &Fields) -> Result<RuleOptions, PlanError> {
    Ok(RuleOptions {
        retries: f.parsed("retries")?,
        small_set: f.parsed("smallset")?,
    })
}

impl GenerationPlan {
    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlanError {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Parses plan text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PlanError> {
        let mut population = None;
        let mut link_types: Vec<(usize, LinkType)> = Vec::new();
        let mut rules = Vec::new();
        let mut interactions: Vec<(usize, String, f64)> = Vec::new();
        let mut matcher = None;
        let mut output = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let words: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            let Some((&head, rest)) = words.split_first() else {
                continue;
            };
            let err = |message: String| PlanError { line, message };
            match head {
                "population" => {
                    if population.is_some() {
                        return Err(err("`population` given twice".into()));
                    }
                    let f = Fields::new(line, rest, &["N", "seed", "attributes"])?;
                    let n: usize = f.parsed("N")?.ok_or_else(|| err("missing `N=`".into()))?;
                    let seed: u64 = f.parsed("seed")?.ok_or_else(|| err("missing `seed=`".into()))?;
                    population = Some((n, seed, base.join(f.required("attributes")?)));
                }
                "linktype" => {
                    let [name, dir] = rest else {
                        return Err(err("expected `linktype <name> <directed|undirected>`".into()));
                    };
                    let directed = match *dir {
                        "directed" => true,
                        "undirected" => false,
                        other => return Err(err(format!("`{other}` is neither directed nor undirected"))),
                    };
                    if link_types.iter().any(|(_, t)| t.name == *name) {
                        return Err(err(format!("link type `{name}` declared twice")));
                    }
                    link_types.push((line, LinkType::new(*name, directed)));
                }
                "rule" => match rest {
                    ["homophily", t, fields @ ..] => {
                        let f = Fields::new(line, fields, &["bn", "counts", "retries", "smallset"])?;
                        rules.push(RuleSpec::Homophily {
                            line,
                            link_type: t.to_string(),
                            bn: base.join(f.required("bn")?),
                            counts: f.required("counts")?.parse().map_err(err)?,
                            options: rule_options(&f)?,
                        });
                    }
                    ["transitive", t3, "from", t1, t2, fields @ ..] => {
                        let f = Fields::new(line, fields, &["p", "pattern"])?;
                        rules.push(RuleSpec::Transitive {
                            line,
                            link_type: t3.to_string(),
                            from: [t1.to_string(), t2.to_string()],
                            p: probability(line, f.required("p")?)?,
                            pattern: parse_pattern(f.required("pattern")?).map_err(err)?,
                        });
                    }
                    _ => {
                        return Err(err(
                            "expected `rule homophily <type> bn=.. counts=..` or \
                             `rule transitive <t3> from <t1> <t2> p=.. pattern=..`"
                                .into(),
                        ))
                    }
                },
                "interact" => {
                    let [t, p] = rest else {
                        return Err(err("expected `interact <linktype> p=<prob>`".into()));
                    };
                    let f = Fields::new(line, &[p], &["p"])?;
                    if interactions.iter().any(|(_, name, _)| name == t) {
                        return Err(err(format!("interaction for `{t}` given twice")));
                    }
                    interactions.push((line, t.to_string(), probability(line, f.required("p")?)?));
                }
                "matcher" => {
                    if matcher.is_some() {
                        return Err(err("`matcher` given twice".into()));
                    }
                    matcher = Some(rule_options(&Fields::new(line, rest, &["retries", "smallset"])?)?);
                }
                "output" => {
                    let [dir] = rest else {
                        return Err(err("expected `output <dir>`".into()));
                    };
                    output = Some(base.join(dir));
                }
                other => return Err(err(format!("unknown statement `{other}`"))),
            }
        }
        let (population, seed, attributes) = population.ok_or(PlanError {
            line: 0,
            message: "missing `population N=.. seed=.. attributes=..` line".into(),
        })?;
        let declared = |name: &str| link_types.iter().any(|(_, t)| t.name == name);
        for rule in &rules {
            let mut names = vec![rule.link_type()];
            if let RuleSpec::Transitive { from, .. } = rule {
                names.extend(from.iter().map(String::as_str));
            }
            for name in names {
                if !declared(name) {
                    return Err(PlanError {
                        line: rule.line(),
                        message: format!("undeclared link type `{name}`"),
                    });
                }
            }
        }
        for (line, t, _) in &interactions {
            if !declared(t) {
                return Err(PlanError {
                    line: *line,
                    message: format!("undeclared link type `{t}`"),
                });
            }
        }
        if !interactions.is_empty() {
            if let Some((line, t)) = link_types
                .iter()
                .find(|(_, t)| !interactions.iter().any(|(_, n, _)| *n == t.name))
            {
                return Err(PlanError {
                    line: *line,
                    message: format!("link type `{}` has no `interact` probability", t.name),
                });
            }
        }
        Ok(Self {
            population,
            seed,
            attributes,
            link_types: link_types.into_iter().map(|(_, t)| t).collect(),
            rules,
            interactions: interactions.into_iter().map(|(_, t, p)| (t, p)).collect(),
            matcher: matcher.unwrap_or_default(),
            output,
        })
    }

    /// Effective options of a rule: its own, then the plan's, then defaults.
    pub fn options_for(&self, own: RuleOptions) -> RuleOptions {
        RuleOptions {
            retries: own.retries.or(self.matcher.retries),
            small_set: own.small_set.or(self.matcher.small_set),
        }
    }
}
