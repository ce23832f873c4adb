//! The whole generation: population, rules in plan order, measurements
//! and export.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::bn::{parse_bn, BayesianNetwork, BnError};
use crate::export::{self, ExportError, GenerationReport};
use crate::matching::{parse_matching_bn, HomophilyRule, MatchingError, RuleKind, RuleReport};
use crate::metrics::{graph_statistics, ErrorReport, Scope};
use crate::plan::{GenerationPlan, PlanError, RuleSpec};
use crate::population::{generate_population, PopulationStore, Schema, StoreError};
use crate::rng::SeedTree;
use crate::transitivity::{TransitivityError, TransitivityRule};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("plan: {0}")]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Network { path: PathBuf, source: BnError },
    #[error("attribute network: {0}")]
    Schema(#[from] StoreError),
    #[error("plan line {line}: {path}: {source}")]
    Matching {
        line: usize,
        path: PathBuf,
        source: MatchingError,
    },
    #[error("plan line {line}: {source}")]
    Transitivity { line: usize, source: TransitivityError },
    #[error("export: {0}")]
    Export(#[from] ExportError),
}

impl PipelineError {
    /// Whether the failure lies in the plan or its networks rather than in
    /// running them.
    pub fn is_configuration(&self) -> bool {
        !matches!(self, PipelineError::Export(_))
    }
}

#[derive(Debug, Clone)]
pub enum Rule {
    Homophily(Box<HomophilyRule>),
    Transitive(TransitivityRule),
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        match self {
            Rule::Homophily(_) => RuleKind::Homophily,
            Rule::Transitive(_) => RuleKind::Transitive,
        }
    }

    pub fn link_type_name(&self) -> &str {
        match self {
            Rule::Homophily(r) => r.link_type_name(),
            Rule::Transitive(r) => r.link_type_name(),
        }
    }
}

/// A plan with every referenced file loaded and bound.
#[derive(Debug, Clone)]
pub struct PreparedPlan {
    pub plan: GenerationPlan,
    pub attributes: BayesianNetwork,
    pub schema: Schema,
    pub rules: Vec<Rule>,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn load_attributes(plan: &GenerationPlan) -> Result<(BayesianNetwork, Schema), PipelineError> {
    let attributes = parse_bn(&read(&plan.attributes)?).map_err(|source| PipelineError::Network {
        path: plan.attributes.clone(),
        source,
    })?;
    let schema = Schema::new(&attributes, &plan.link_types)?;
    Ok((attributes, schema))
}

fn bind_rule(plan: &GenerationPlan, schema: &Schema, spec: &RuleSpec) -> Result<Rule, PipelineError> {
    match spec {
        RuleSpec::Homophily {
            line,
            link_type,
            bn,
            counts,
            options,
        } => {
            let wrap = |source| PipelineError::Matching {
                line: *line,
                path: bn.clone(),
                source,
            };
            let network = parse_matching_bn(&read(bn)?).map_err(wrap)?;
            if network.link_type != *link_type {
                return Err(wrap(MatchingError::LinkTypeMismatch {
                    rule: link_type.clone(),
                    header: network.link_type,
                }));
            }
            let rule = HomophilyRule::new(network, schema, Some(*counts), plan.options_for(*options)).map_err(wrap)?;
            Ok(Rule::Homophily(Box::new(rule)))
        }
        RuleSpec::Transitive {
            line,
            link_type,
            from,
            p,
            pattern,
        } => TransitivityRule::new(schema, link_type, &from[0], &from[1], *p, *pattern)
            .map(Rule::Transitive)
            .map_err(|source| PipelineError::Transitivity { line: *line, source }),
    }
}

impl PreparedPlan {
    pub fn new(plan: GenerationPlan) -> Result<Self, PipelineError> {
        let (attributes, schema) = load_attributes(&plan)?;
        let rules = plan
            .rules
            .iter()
            .map(|spec| bind_rule(&plan, &schema, spec))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            plan,
            attributes,
            schema,
            rules,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::new(GenerationPlan::load(path)?)
    }
}

/// Findings of a dry run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanCheck {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl PlanCheck {
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

/// Checks a plan and its networks without generating anything.
pub fn validate_plan(path: &Path) -> PlanCheck {
    let mut check = PlanCheck::default();
    let plan = match GenerationPlan::load(path) {
        Ok(p) => p,
        Err(e) => {
            check.errors.push(format!("plan: {e}"));
            return check;
        }
    };
    let schema = match load_attributes(&plan) {
        Ok((_, s)) => s,
        Err(e) => {
            check.errors.push(e.to_string());
            return check;
        }
    };
    let mut created: Vec<&str> = Vec::new();
    for spec in &plan.rules {
        if let RuleSpec::Transitive { line, from, .. } = spec {
            for t in from {
                if !created.contains(&t.as_str()) {
                    check.warnings.push(format!(
                        "plan line {line}: transitive rule for `{}` uses `{t}`, which no earlier rule creates",
                        spec.link_type()
                    ));
                }
            }
        }
        created.push(spec.link_type());
        match bind_rule(&plan, &schema, spec) {
            Err(e) => check.errors.push(e.to_string()),
            Ok(Rule::Homophily(rule)) => {
                if rule.link_probability() == 0.0 {
                    check.warnings.push(format!(
                        "plan line {}: homophily rule for `{}` is vacuous: its link variable is never yes",
                        spec.line(),
                        spec.link_type()
                    ));
                }
            }
            Ok(Rule::Transitive(_)) => {}
        }
    }
    check
}

/// A finished generation.
#[derive(Debug, Clone)]
pub struct Generation {
    pub store: PopulationStore,
    pub report: GenerationReport,
    pub learned: BayesianNetwork,
}

/// Draws the population and applies every rule in order, without any
/// measurement; `progress` sees each rule's report as it completes.
pub fn populate(
    prepared: &PreparedPlan,
    population: usize,
    seed: u64,
    progress: &mut dyn FnMut(&RuleReport),
) -> (PopulationStore, Vec<RuleReport>) {
    let tree = SeedTree::new(seed);
    let mut store = generate_population(
        &prepared.attributes,
        &prepared.plan.link_types,
        population,
        &mut tree.stream("population"),
    )
    .expect("schema was checked when the plan was prepared");
    let mut occurrences: HashMap<String, usize> = HashMap::new();
    let mut reports = Vec::with_capacity(prepared.rules.len());
    for rule in &prepared.rules {
        let label = format!("rule:{}:{}", rule.kind(), rule.link_type_name());
        let occurrence = occurrences.entry(label.clone()).or_default();
        let mut rng = tree.stream(&format!("{label}:{occurrence}"));
        *occurrence += 1;
        let report = match rule {
            Rule::Homophily(r) => r.run(&mut store, &mut rng),
            Rule::Transitive(r) => r.run(&mut store, &mut rng),
        };
        progress(&report);
        reports.push(report);
    }
    (store, reports)
}

/// [`populate`], then errors, statistics and the learned network.
pub fn generate(
    prepared: &PreparedPlan,
    population: usize,
    seed: u64,
    progress: &mut dyn FnMut(&RuleReport),
) -> Generation {
    let (store, reports) = populate(prepared, population, seed, progress);
    let errors = ErrorReport::compute(&store, &prepared.attributes, &reports);
    let mut stats = vec![("all".to_string(), graph_statistics(&store, Scope::Collapsed, seed))];
    for (t, lt) in prepared.schema.link_types().iter().enumerate() {
        stats.push((lt.name.clone(), graph_statistics(&store, Scope::Type(t), seed)));
    }
    let learned = store.learn_marginals(&prepared.attributes).to_network(&prepared.attributes);
    Generation {
        report: GenerationReport {
            seed,
            population,
            errors,
            rules: reports,
            stats,
        },
        store,
        learned,
    }
}

/// Writes every artifact of `generation` into `dir`.
pub fn write_outputs(
    prepared: &PreparedPlan,
    generation: &Generation,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExportError> {
    let mut files = export::export_network(&generation.store, dir)?;
    if !prepared.plan.interactions.is_empty() {
        files.push(export::export_interaction_network(
            &generation.store,
            &prepared.plan.interactions,
            dir,
        )?);
    }
    files.extend(export::export_reports(&generation.report, &generation.learned, dir)?);
    Ok(files)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub population: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Output directory: the override, else the plan's, else `out` beside the
/// plan file.
pub fn output_dir(plan_path: &Path, plan: &GenerationPlan, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| plan.output.clone())
        .unwrap_or_else(|| plan_path.parent().unwrap_or(Path::new("")).join("out"))
}

/// Loads, generates and exports.
pub fn run(
    plan_path: &Path,
    overrides: &Overrides,
    progress: &mut dyn FnMut(&RuleReport),
) -> Result<(Generation, PathBuf), PipelineError> {
    let prepared = PreparedPlan::load(plan_path)?;
    let dir = output_dir(plan_path, &prepared.plan, overrides);
    let generation = generate(
        &prepared,
        overrides.population.unwrap_or(prepared.plan.population),
        overrides.seed.unwrap_or(prepared.plan.seed),
        progress,
    );
    write_outputs(&prepared, &generation, &dir)?;
    Ok((generation, dir))
}
