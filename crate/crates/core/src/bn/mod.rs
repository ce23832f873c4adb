//! Discrete Bayesian networks: variables with finite domains, dense
//! conditional probability tables, structural validation and a
//! line-oriented text format.

mod evidence;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use evidence::Evidence;
pub use parse::parse_bn;

/// Maximum distance from 1 tolerated for the sum of a CPT row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Rows closer to 1 than this are left untouched when normalizing, so that
/// serialization followed by parsing reproduces the stored values bit for bit.
const RENORMALIZE_EPSILON: f64 = 1e-12;

/// A named discrete variable and its ordered domain of value labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<String>,
}

impl VariableSpec {
    pub fn new<S: Into<String>, I, V>(name: S, domain: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        Self {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// Conditional probability table `p(child | parents)`.
///
/// Storage is dense over the cross product of parent domains. Rows are laid
/// out in mixed-radix order with the first parent most significant; inside a
/// row the probabilities follow the child's domain order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub probs: Vec<f64>,
}

impl Cpt {
    pub fn new<S: Into<String>>(child: S, parents: Vec<String>, probs: Vec<f64>) -> Self {
        Self {
            child: child.into(),
            parents,
            probs,
        }
    }

    /// A root table holding a single prior row.
    pub fn prior<S: Into<String>>(child: S, probs: Vec<f64>) -> Self {
        Self::new(child, Vec::new(), probs)
    }
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyDomain { variable: String },
    DuplicateVariable { variable: String },
    DuplicateValue { variable: String, value: String },
    MissingCpt { variable: String },
    DuplicateCpt { variable: String },
    CptForUndeclared { variable: String },
    UndeclaredParent { variable: String, parent: String },
    RepeatedParent { variable: String, parent: String },
    TableSize { variable: String, expected: usize, found: usize },
    ProbabilityOutOfRange { variable: String, row: String, value: f64 },
    RowSum { variable: String, row: String, sum: f64 },
    Cycle { variables: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDomain { variable } => write!(f, "variable `{variable}` has an empty domain"),
            Violation::DuplicateVariable { variable } => write!(f, "variable `{variable}` declared twice"),
            Violation::DuplicateValue { variable, value } => {
                write!(f, "variable `{variable}` repeats domain value `{value}`")
            }
            Violation::MissingCpt { variable } => write!(f, "variable `{variable}` has no cpt"),
            Violation::DuplicateCpt { variable } => write!(f, "variable `{variable}` has more than one cpt"),
            Violation::CptForUndeclared { variable } => {
                write!(f, "cpt given for undeclared variable `{variable}`")
            }
            Violation::UndeclaredParent { variable, parent } => {
                write!(f, "cpt of `{variable}` names undeclared parent `{parent}`")
            }
            Violation::RepeatedParent { variable, parent } => {
                write!(f, "cpt of `{variable}` lists parent `{parent}` twice")
            }
            Violation::TableSize { variable, expected, found } => write!(
                f,
                "cpt of `{variable}` holds {found} probabilities, expected {expected}"
            ),
            Violation::ProbabilityOutOfRange { variable, row, value } => write!(
                f,
                "cpt of `{variable}`, row [{row}]: probability {value} outside [0,1]"
            ),
            Violation::RowSum { variable, row, sum } => write!(
                f,
                "cpt of `{variable}`, row [{row}]: probabilities sum to {sum}, not 1"
            ),
            Violation::Cycle { variables } => {
                write!(f, "parent graph has a cycle through {}", variables.join(", "))
            }
        }
    }
}

/// Result of [`validate`]: empty iff every structural invariant holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BnError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: reference to undeclared variable `{name}`")]
    UndeclaredVariable { name: String, line: usize },
    #[error("line {line}: variable `{name}` declared twice")]
    DuplicateVariable { name: String, line: usize },
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
}

/// Unchecked network parts, as read from a document or assembled in code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkDraft {
    pub variables: Vec<VariableSpec>,
    pub cpts: Vec<Cpt>,
}

impl NetworkDraft {
    pub fn new(variables: Vec<VariableSpec>, cpts: Vec<Cpt>) -> Self {
        Self { variables, cpts }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.variables, &self.cpts)
    }

    pub fn build(self) -> Result<BayesianNetwork, BnError> {
        BayesianNetwork::new(self.variables, self.cpts)
    }
}

/// Mixed-radix label of a CPT row, e.g. `gender=male, ageSlices=15-19`.
fn row_label(parent_specs: &[&VariableSpec], mut row: usize) -> String {
    if parent_specs.is_empty() {
        return "prior".to_string();
    }
    let mut labels = vec![String::new(); parent_specs.len()];
    for (slot, spec) in parent_specs.iter().enumerate().rev() {
        let card = spec.cardinality();
        labels[slot] = format!("{}={}", spec.name, spec.domain[row % card]);
        row /= card;
    }
    labels.join(", ")
}

/// Checks every structural invariant of a network and lists what is broken.
pub fn validate(variables: &[VariableSpec], cpts: &[Cpt]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, var) in variables.iter().enumerate() {
        if index.insert(var.name.as_str(), i).is_some() {
            violations.push(Violation::DuplicateVariable {
                variable: var.name.clone(),
            });
        }
        if var.domain.is_empty() {
            violations.push(Violation::EmptyDomain {
                variable: var.name.clone(),
            });
        }
        let mut seen = BTreeSet::new();
        for value in &var.domain {
            if !seen.insert(value.as_str()) {
                violations.push(Violation::DuplicateValue {
                    variable: var.name.clone(),
                    value: value.clone(),
                });
            }
        }
    }

    let mut cpt_count = vec![0usize; variables.len()];
    let mut parents_of: Vec<Vec<usize>> = vec![Vec::new(); variables.len()];
    for cpt in cpts {
        let Some(&child) = index.get(cpt.child.as_str()) else {
            violations.push(Violation::CptForUndeclared {
                variable: cpt.child.clone(),
            });
            continue;
        };
        cpt_count[child] += 1;
        if cpt_count[child] > 1 {
            violations.push(Violation::DuplicateCpt {
                variable: cpt.child.clone(),
            });
            continue;
        }
        let mut parent_specs = Vec::with_capacity(cpt.parents.len());
        let mut resolved = true;
        let mut seen = BTreeSet::new();
        for parent in &cpt.parents {
            if !seen.insert(parent.as_str()) {
                violations.push(Violation::RepeatedParent {
                    variable: cpt.child.clone(),
                    parent: parent.clone(),
                });
            }
            match index.get(parent.as_str()) {
                Some(&p) => {
                    parents_of[child].push(p);
                    parent_specs.push(&variables[p]);
                }
                None => {
                    resolved = false;
                    violations.push(Violation::UndeclaredParent {
                        variable: cpt.child.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        if !resolved {
            continue;
        }
        let card = variables[child].cardinality();
        let rows: usize = parent_specs.iter().map(|s| s.cardinality()).product();
        if cpt.probs.len() != rows * card {
            violations.push(Violation::TableSize {
                variable: cpt.child.clone(),
                expected: rows * card,
                found: cpt.probs.len(),
            });
            continue;
        }
        if card == 0 {
            continue;
        }
        for (r, row) in cpt.probs.chunks(card).enumerate() {
            if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                violations.push(Violation::ProbabilityOutOfRange {
                    variable: cpt.child.clone(),
                    row: row_label(&parent_specs, r),
                    value: bad,
                });
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                violations.push(Violation::RowSum {
                    variable: cpt.child.clone(),
                    row: row_label(&parent_specs, r),
                    sum,
                });
            }
        }
    }
    for (i, var) in variables.iter().enumerate() {
        if cpt_count[i] == 0 {
            violations.push(Violation::MissingCpt {
                variable: var.name.clone(),
            });
        }
    }
    if let Err(cycle) = topological_sort(&parents_of) {
        violations.push(Violation::Cycle {
            variables: cycle.into_iter().map(|i| variables[i].name.clone()).collect(),
        });
    }
    ValidationReport { violations }
}

/// Kahn's algorithm, always releasing the lowest-index ready node first.
/// On failure returns the nodes that could not be ordered.
fn topological_sort(parents: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (child, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(child);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(next) = ready.pop_first() {
        order.push(next);
        for &c in &children[next] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| pending[i] > 0).collect())
    }
}

/// A validated, immutable discrete Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<VariableSpec>,
    /// Aligned with `variables`.
    cpts: Vec<Cpt>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    index: HashMap<String, usize>,
}

impl BayesianNetwork {
    pub fn new(variables: Vec<VariableSpec>, cpts: Vec<Cpt>) -> Result<Self, BnError> {
        let report = validate(&variables, &cpts);
        if !report.is_empty() {
            return Err(BnError::Invalid(report));
        }
        let index: HashMap<String, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let mut aligned: Vec<Option<Cpt>> = vec![None; variables.len()];
        for mut cpt in cpts {
            let card = variables[index[&cpt.child]].cardinality();
            for row in cpt.probs.chunks_mut(card) {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > RENORMALIZE_EPSILON {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
            }
            let slot = index[&cpt.child];
            aligned[slot] = Some(cpt);
        }
        let cpts: Vec<Cpt> = aligned.into_iter().map(|c| c.expect("validated")).collect();
        let parents: Vec<Vec<usize>> = cpts
            .iter()
            .map(|c| c.parents.iter().map(|p| index[p]).collect())
            .collect();
        let mut children = vec![Vec::new(); variables.len()];
        for (child, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(child);
            }
        }
        let topo = topological_sort(&parents).expect("validated acyclic");
        Ok(Self {
            variables,
            cpts,
            parents,
            children,
            topo,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, var: usize) -> &VariableSpec {
        &self.variables[var]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.variables[var].cardinality()
    }

    /// The table of `var`, with parents in declaration order of the table.
    pub fn cpt(&self, var: usize) -> &Cpt {
        &self.cpts[var]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn parents(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn children(&self, var: usize) -> &[usize] {
        &self.children[var]
    }

    /// Variable indices with every parent before its children; ties follow
    /// declaration order.
    pub fn topo_indices(&self) -> &[usize] {
        &self.topo
    }

    /// Row index of `var`'s table selected by a full parent assignment.
    pub fn row_index(&self, var: usize, values: &[usize]) -> usize {
        self.parents[var]
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + values[p])
    }

    /// `p(var = value | parents)` read from `values`, which must assign
    /// every parent of `var`.
    pub fn conditional(&self, var: usize, values: &[usize]) -> f64 {
        let row = self.row_index(var, values);
        self.cpts[var].probs[row * self.cardinality(var) + values[var]]
    }

    /// Serializes in the canonical form of the text format: variables and
    /// tables in declaration order, rows in dense order.
    pub fn to_text(&self) -> String {
        parse::write_bn(self)
    }
}

/// Variable names in an order where every parent precedes its children.
pub fn topological_order(bn: &BayesianNetwork) -> Vec<&str> {
    bn.topo.iter().map(|&i| bn.variables[i].name.as_str()).collect()
}
