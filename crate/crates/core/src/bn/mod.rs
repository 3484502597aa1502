//! Discrete Bayesian network data model.
//!
//! A [`Structure`] is a validated DAG of [`Variable`]s. A [`Network`] pairs a
//! structure with one [`Cpt`] per variable. CPT rows are stored in canonical
//! parent-configuration order: an odometer over the parents as declared, with
//! the last parent's state varying fastest.
//!
//! [`RawNetwork`] is the unchecked form produced by parsers; it is what
//! [`validate_network`] inspects.

mod bif;
mod json;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Prob;

pub use bif::parse_bif;
pub use json::{format_prob, parse_native, serialize_native};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid network:\n{0}")]
    Invalid(ValidationReport),
    #[error("cycle detected among variables: {0:?}")]
    Cycle(Vec<String>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("state index {index} out of range for `{variable}` ({cardinality} states)")]
    StateOutOfRange {
        variable: String,
        index: usize,
        cardinality: usize,
    },
    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A probability vector over the states of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution needs at least one entry")]
    Empty,
    #[error("entry {0} is negative or not finite")]
    BadEntry(usize),
    #[error("entries sum to {0}, not 1")]
    BadSum(f64),
}

impl<T: Prob> Distribution<T> {
    /// Checked constructor. Rows summing to one within the type's row
    /// tolerance are renormalized, except those already within
    /// [`Prob::sum_noise`] of one, which are kept as given so that printed
    /// networks reload to the same digits.
    pub fn new(probs: Vec<T>) -> Result<Self, DistributionError> {
        if probs.is_empty() {
            return Err(DistributionError::Empty);
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < T::zero()) {
            return Err(DistributionError::BadEntry(i));
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::row_tolerance() {
            return Err(DistributionError::BadSum(sum.as_f64()));
        }
        let mut d = Distribution { probs };
        if (sum - T::one()).abs() > T::sum_noise() {
            d.probs.iter_mut().for_each(|p| *p = *p / sum);
        }
        Ok(d)
    }

    /// Wraps a vector the caller already knows to be normalized.
    pub(crate) fn from_normalized(probs: Vec<T>) -> Self {
        Distribution { probs }
    }

    pub fn uniform(m: usize) -> Self {
        let p = T::one() / T::from_usize(m).expect("state count fits");
        Distribution { probs: vec![p; m] }
    }

    /// Point mass on `state`.
    pub fn point(m: usize, state: usize) -> Self {
        let mut probs = vec![T::zero(); m];
        probs[state] = T::one();
        Distribution { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest entry, first one on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<usize> for Distribution<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.probs[i]
    }
}

/// A discrete random variable and its declared parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
}

impl Variable {
    pub fn new(
        name: impl Into<String>,
        states: impl IntoIterator<Item = impl Into<String>>,
        parents: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Variable {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
            parents: parents.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// One joint assignment to a variable's parents, in declared parent order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ParentConfig {
    assignments: Vec<(String, usize)>,
}

impl ParentConfig {
    pub fn new(assignments: Vec<(String, usize)>) -> Self {
        ParentConfig { assignments }
    }

    pub fn assignments(&self) -> &[(String, usize)] {
        &self.assignments
    }

    pub fn get(&self, parent: &str) -> Option<usize> {
        self.assignments.iter().find(|(n, _)| n == parent).map(|(_, s)| *s)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// The conditional probability table of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt<T> {
    pub variable: String,
    pub rows: Vec<Distribution<T>>,
}

/// Unchecked network as it appears in the native JSON format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Prob")]
pub struct RawNetwork<T> {
    pub name: String,
    pub variables: Vec<RawVariable<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Prob")]
pub struct RawVariable<T> {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    DuplicateVariable,
    TooFewStates,
    DuplicateState,
    DuplicateParent,
    SelfParent,
    UnknownParent,
    Cycle,
    RowCount,
    RowArity,
    NegativeEntry,
    NonFinite,
    RowSum,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::DuplicateVariable => "duplicate variable",
            Rule::TooFewStates => "too few states",
            Rule::DuplicateState => "duplicate state",
            Rule::DuplicateParent => "duplicate parent",
            Rule::SelfParent => "self parent",
            Rule::UnknownParent => "unknown parent",
            Rule::Cycle => "cycle",
            Rule::RowCount => "row count mismatch",
            Rule::RowArity => "row arity",
            Rule::NegativeEntry => "negative entry",
            Rule::NonFinite => "non-finite entry",
            Rule::RowSum => "row sum",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub variable: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}: {}", self.variable, self.rule, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, variable: &str, rule: Rule, detail: impl Into<String>) {
        self.violations.push(Violation {
            variable: variable.to_string(),
            rule,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural and parametric invariant of a raw network.
pub fn validate_network<T: Prob>(raw: &RawNetwork<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let variables: Vec<Variable> = raw
        .variables
        .iter()
        .map(|v| Variable::new(v.name.clone(), v.states.clone(), v.parents.clone()))
        .collect();
    let structural_ok = check_structure(&variables, &mut report);

    let cards: HashMap<&str, usize> = variables.iter().map(|v| (v.name.as_str(), v.cardinality())).collect();
    for var in &raw.variables {
        let m = var.states.len();
        if structural_ok {
            let expected: usize = var.parents.iter().map(|p| cards[p.as_str()]).product();
            if var.cpt.len() != expected {
                report.push(
                    &var.name,
                    Rule::RowCount,
                    format!("expected {expected} rows, found {}", var.cpt.len()),
                );
            }
        }
        for (r, row) in var.cpt.iter().enumerate() {
            if row.len() != m {
                report.push(
                    &var.name,
                    Rule::RowArity,
                    format!("row {r} has {} entries, variable has {m} states", row.len()),
                );
                continue;
            }
            if row.iter().any(|p| !p.is_finite()) {
                report.push(&var.name, Rule::NonFinite, format!("row {r}"));
                continue;
            }
            if row.iter().any(|p| *p < T::zero()) {
                report.push(&var.name, Rule::NegativeEntry, format!("row {r}"));
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > T::row_tolerance() {
                report.push(&var.name, Rule::RowSum, format!("row {r} sums to {sum}"));
            }
        }
    }
    report
}

/// Structural rules only. Returns true when parent references resolve and the
/// graph is acyclic, so that row counts are meaningful.
fn check_structure(variables: &[Variable], report: &mut ValidationReport) -> bool {
    let mut seen = HashSet::new();
    for v in variables {
        if !seen.insert(v.name.as_str()) {
            report.push(&v.name, Rule::DuplicateVariable, "declared more than once");
        }
    }
    let mut resolvable = true;
    for v in variables {
        if v.states.len() < 2 {
            report.push(
                &v.name,
                Rule::TooFewStates,
                format!("{} states, need at least 2", v.states.len()),
            );
        }
        let mut states = HashSet::new();
        for s in &v.states {
            if !states.insert(s.as_str()) {
                report.push(&v.name, Rule::DuplicateState, format!("state `{s}`"));
            }
        }
        let mut parents = HashSet::new();
        for p in &v.parents {
            if !parents.insert(p.as_str()) {
                report.push(&v.name, Rule::DuplicateParent, format!("parent `{p}`"));
            }
            if p == &v.name {
                report.push(&v.name, Rule::SelfParent, "variable lists itself as parent");
                resolvable = false;
            } else if !seen.contains(p.as_str()) {
                report.push(&v.name, Rule::UnknownParent, format!("parent `{p}`"));
                resolvable = false;
            }
        }
    }
    if !resolvable || report.has(Rule::DuplicateVariable) {
        return false;
    }
    if let Err(NetworkError::Cycle(names)) = topological_order(variables) {
        for n in names {
            report.push(&n, Rule::Cycle, "variable lies on or behind a directed cycle");
        }
        return false;
    }
    true
}

/// Orders variables so every parent precedes its children.
///
/// Among the variables whose parents are all placed, the earliest declared is
/// taken first. Parent references must resolve.
pub fn topological_order(variables: &[Variable]) -> Result<Vec<usize>, NetworkError> {
    let index: HashMap<&str, usize> = variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let parent_ids: Vec<Vec<usize>> = variables
        .iter()
        .map(|v| {
            v.parents
                .iter()
                .map(|p| {
                    index
                        .get(p.as_str())
                        .copied()
                        .ok_or_else(|| NetworkError::UnknownVariable(p.clone()))
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;

    let n = variables.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !placed[i] && parent_ids[i].iter().all(|&p| placed[p]));
        match next {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                let stuck = (0..n)
                    .filter(|&i| !placed[i])
                    .map(|i| variables[i].name.clone())
                    .collect();
                return Err(NetworkError::Cycle(stuck));
            }
        }
    }
    Ok(order)
}

/// A validated DAG over discrete variables, without parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Structure {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    parent_ids: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl Structure {
    pub fn new(variables: Vec<Variable>) -> Result<Self, NetworkError> {
        let mut report = ValidationReport::default();
        if !check_structure(&variables, &mut report) || !report.is_empty() {
            return Err(NetworkError::Invalid(report));
        }
        let index: HashMap<String, usize> = variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let parent_ids = variables
            .iter()
            .map(|v| v.parents.iter().map(|p| index[p]).collect())
            .collect();
        let order = topological_order(&variables)?;
        Ok(Structure {
            variables,
            index,
            parent_ids,
            order,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: usize) -> &Variable {
        &self.variables[id]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn id(&self, name: &str) -> Result<usize, NetworkError> {
        self.index_of(name)
            .ok_or_else(|| NetworkError::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.variables[id].name
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parent_ids[id]
    }

    pub fn cardinality(&self, id: usize) -> usize {
        self.variables[id].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Number of parent configurations, i.e. CPT rows.
    pub fn row_count(&self, id: usize) -> usize {
        self.parent_ids[id].iter().map(|&p| self.cardinality(p)).product()
    }

    pub fn total_rows(&self) -> usize {
        (0..self.len()).map(|i| self.row_count(i)).sum()
    }

    /// Variable ids, parents before children, ties by declaration order.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn topological_names(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.name(i)).collect()
    }

    /// CPT row selected by a full assignment (indexed by variable id).
    pub fn row_index(&self, id: usize, assignment: &[usize]) -> usize {
        self.parent_ids[id]
            .iter()
            .fold(0, |acc, &p| acc * self.cardinality(p) + assignment[p])
    }

    /// Parent state indices for a row index, in declared parent order.
    pub fn row_assignment(&self, id: usize, mut row: usize) -> Vec<usize> {
        let parents = &self.parent_ids[id];
        let mut states = vec![0; parents.len()];
        for (k, &p) in parents.iter().enumerate().rev() {
            let c = self.cardinality(p);
            states[k] = row % c;
            row /= c;
        }
        states
    }

    /// All parent configurations of `name` in canonical (odometer) order.
    pub fn parent_configurations(&self, name: &str) -> Result<Vec<ParentConfig>, NetworkError> {
        let id = self.id(name)?;
        Ok((0..self.row_count(id)).map(|r| self.parent_config(id, r)).collect())
    }

    pub fn parent_config(&self, id: usize, row: usize) -> ParentConfig {
        let states = self.row_assignment(id, row);
        ParentConfig::new(
            self.parent_ids[id]
                .iter()
                .zip(states)
                .map(|(&p, s)| (self.name(p).to_string(), s))
                .collect(),
        )
    }

    /// Row index of a parent configuration given by name.
    pub fn config_row(&self, id: usize, config: &ParentConfig) -> Result<usize, NetworkError> {
        let mut row = 0;
        for &p in &self.parent_ids[id] {
            let s = config
                .get(self.name(p))
                .ok_or_else(|| NetworkError::UnknownVariable(self.name(p).to_string()))?;
            let c = self.cardinality(p);
            if s >= c {
                return Err(NetworkError::StateOutOfRange {
                    variable: self.name(p).to_string(),
                    index: s,
                    cardinality: c,
                });
            }
            row = row * c + s;
        }
        Ok(row)
    }

    /// True when `other` declares the same variables, states and parents in
    /// the same order.
    pub fn same_shape(&self, other: &Structure) -> bool {
        self.variables == other.variables
    }

    /// Whether adding the edge `from -> to` keeps the graph acyclic.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        reaches(&self.parent_ids, from, to)
    }
}

/// Whether `to` is reachable from `from` following child edges.
pub(crate) fn reaches(parent_ids: &[Vec<usize>], from: usize, to: usize) -> bool {
    let n = parent_ids.len();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parent_ids.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut stack = vec![from];
    let mut seen = vec![false; n];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(children[v].iter().copied());
    }
    false
}

/// A parameterized, validated Bayesian network.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    name: String,
    structure: Structure,
    cpts: Vec<Cpt<T>>,
}

impl<T: Prob> Network<T> {
    /// Builds a network from a structure and per-variable rows, in
    /// declaration order.
    pub fn new(
        name: impl Into<String>,
        structure: Structure,
        rows: Vec<Vec<Distribution<T>>>,
    ) -> Result<Self, NetworkError> {
        let mut report = ValidationReport::default();
        if rows.len() != structure.len() {
            report.push(
                "",
                Rule::RowCount,
                format!("{} CPTs for {} variables", rows.len(), structure.len()),
            );
            return Err(NetworkError::Invalid(report));
        }
        for (id, var_rows) in rows.iter().enumerate() {
            let v = structure.variable(id);
            if var_rows.len() != structure.row_count(id) {
                report.push(
                    &v.name,
                    Rule::RowCount,
                    format!("expected {} rows, found {}", structure.row_count(id), var_rows.len()),
                );
            }
            for (r, d) in var_rows.iter().enumerate() {
                if d.len() != v.cardinality() {
                    report.push(&v.name, Rule::RowArity, format!("row {r}"));
                }
            }
        }
        if !report.is_empty() {
            return Err(NetworkError::Invalid(report));
        }
        let cpts = rows
            .into_iter()
            .zip(structure.variables())
            .map(|(rows, v)| Cpt {
                variable: v.name.clone(),
                rows,
            })
            .collect();
        Ok(Network {
            name: name.into(),
            structure,
            cpts,
        })
    }

    /// Validates a raw network, renormalizing rows within tolerance.
    pub fn from_raw(raw: RawNetwork<T>) -> Result<Self, NetworkError> {
        let report = validate_network(&raw);
        if !report.is_empty() {
            return Err(NetworkError::Invalid(report));
        }
        let mut variables = Vec::with_capacity(raw.variables.len());
        let mut rows = Vec::with_capacity(raw.variables.len());
        for v in raw.variables {
            variables.push(Variable {
                name: v.name,
                states: v.states,
                parents: v.parents,
            });
            rows.push(
                v.cpt
                    .into_iter()
                    .map(|r| Distribution::new(r).expect("validated row"))
                    .collect(),
            );
        }
        Network::new(raw.name, Structure::new(variables)?, rows)
    }

    pub fn to_raw(&self) -> RawNetwork<T> {
        RawNetwork {
            name: self.name.clone(),
            variables: self
                .structure
                .variables()
                .iter()
                .zip(&self.cpts)
                .map(|(v, cpt)| RawVariable {
                    name: v.name.clone(),
                    states: v.states.clone(),
                    parents: v.parents.clone(),
                    cpt: cpt.rows.iter().map(|d| d.probs().to_vec()).collect(),
                })
                .collect(),
        }
    }

    /// Reads a network, choosing the format from the file extension
    /// (`.bif` for BIF, anything else native JSON).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bif")) {
            parse_bif(&text)
        } else {
            parse_native(&text)
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn cpts(&self) -> &[Cpt<T>] {
        &self.cpts
    }

    pub fn cpt(&self, id: usize) -> &Cpt<T> {
        &self.cpts[id]
    }

    pub fn row(&self, id: usize, row: usize) -> &Distribution<T> {
        &self.cpts[id].rows[row]
    }

    /// Product of the CPT entries selected by a full assignment.
    pub fn joint_probability(&self, assignment: &[usize]) -> T {
        (0..self.structure.len()).fold(T::one(), |acc, id| {
            let r = self.structure.row_index(id, assignment);
            acc * self.cpts[id].rows[r][assignment[id]]
        })
    }

    /// Checks that `other` has the same variables, states and parents.
    pub fn check_same_structure(&self, other: &Network<T>) -> Result<(), NetworkError> {
        if self.structure.same_shape(&other.structure) {
            Ok(())
        } else {
            Err(NetworkError::StructureMismatch(format!(
                "`{}` and `{}` differ in variables, states or parents",
                self.name, other.name
            )))
        }
    }

    /// Converts entries to another float type.
    pub fn cast<U: Prob>(&self) -> Network<U> {
        Network {
            name: self.name.clone(),
            structure: self.structure.clone(),
            cpts: self
                .cpts
                .iter()
                .map(|c| Cpt {
                    variable: c.variable.clone(),
                    rows: c
                        .rows
                        .iter()
                        .map(|d| {
                            let v: Vec<U> = d.probs().iter().map(|p| U::lit(p.as_f64())).collect();
                            let s: U = v.iter().copied().sum();
                            Distribution::from_normalized(v.into_iter().map(|p| p / s).collect())
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Re-validates a network. Always empty for a constructed [`Network`], since
/// construction enforces the same rules.
pub fn validate<T: Prob>(net: &Network<T>) -> ValidationReport {
    validate_network(&net.to_raw())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_chain() -> RawNetwork<f64> {
        RawNetwork {
            name: "chain".into(),
            variables: vec![
                RawVariable {
                    name: "A".into(),
                    states: vec!["t".into(), "f".into()],
                    parents: vec![],
                    cpt: vec![vec![0.3, 0.7]],
                },
                RawVariable {
                    name: "B".into(),
                    states: vec!["t".into(), "f".into()],
                    parents: vec!["A".into()],
                    cpt: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                },
            ],
        }
    }

    fn names(vars: &[Variable], order: &[usize]) -> Vec<String> {
        order.iter().map(|&i| vars[i].name.clone()).collect()
    }

    #[test]
    fn valid_two_node_net_has_empty_report() {
        assert!(validate_network(&raw_chain()).is_empty());
        let net = Network::from_raw(raw_chain()).unwrap();
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn two_cycle_is_reported() {
        let mut raw = raw_chain();
        raw.variables[0].parents = vec!["B".into()];
        raw.variables[0].cpt = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let report = validate_network(&raw);
        assert!(report.has(Rule::Cycle), "{report}");
        assert!(report.violations.iter().all(|v| v.rule == Rule::Cycle));
    }

    #[test]
    fn bad_row_sum_is_reported() {
        let mut raw = raw_chain();
        raw.variables[1].cpt[0] = vec![0.6, 0.5];
        let report = validate_network(&raw);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].rule, Rule::RowSum);
        assert_eq!(report.violations[0].variable, "B");
    }

    #[test]
    fn other_rules_are_reported() {
        let mut raw = raw_chain();
        raw.variables[1].parents = vec!["A".into(), "A".into(), "B".into(), "Z".into()];
        raw.variables[0].states = vec!["t".into(), "t".into()];
        let report = validate_network(&raw);
        for rule in [
            Rule::DuplicateParent,
            Rule::SelfParent,
            Rule::UnknownParent,
            Rule::DuplicateState,
        ] {
            assert!(report.has(rule), "missing {rule}: {report}");
        }

        let mut raw = raw_chain();
        raw.variables[1].cpt.pop();
        raw.variables[0].cpt[0] = vec![1.2, -0.2];
        let report = validate_network(&raw);
        assert!(report.has(Rule::RowCount));
        assert!(report.has(Rule::NegativeEntry));
        assert!(report.to_string().contains("row count mismatch"));
    }

    #[test]
    fn rows_within_tolerance_are_renormalized() {
        let mut raw = raw_chain();
        raw.variables[0].cpt[0] = vec![0.3 + 4e-10, 0.7];
        let net = Network::from_raw(raw).unwrap();
        let row = net.row(0, 0);
        let s: f64 = row.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn topological_order_examples() {
        let chain = vec![
            Variable::new("A", ["0", "1"], Vec::<String>::new()),
            Variable::new("B", ["0", "1"], ["A"]),
            Variable::new("C", ["0", "1"], ["B"]),
        ];
        assert_eq!(names(&chain, &topological_order(&chain).unwrap()), ["A", "B", "C"]);

        let free = vec![
            Variable::new("X", ["0", "1"], Vec::<String>::new()),
            Variable::new("Y", ["0", "1"], Vec::<String>::new()),
        ];
        assert_eq!(names(&free, &topological_order(&free).unwrap()), ["X", "Y"]);

        let collider = vec![
            Variable::new("C", ["0", "1"], ["A", "B"]),
            Variable::new("A", ["0", "1"], Vec::<String>::new()),
            Variable::new("B", ["0", "1"], Vec::<String>::new()),
        ];
        assert_eq!(
            names(&collider, &topological_order(&collider).unwrap()),
            ["A", "B", "C"]
        );

        let cyclic = vec![
            Variable::new("A", ["0", "1"], ["B"]),
            Variable::new("B", ["0", "1"], ["A"]),
        ];
        assert!(matches!(topological_order(&cyclic), Err(NetworkError::Cycle(_))));
    }

    #[test]
    fn parent_configurations_are_odometer_ordered() {
        let s = Structure::new(vec![
            Variable::new("A", ["0", "1"], Vec::<String>::new()),
            Variable::new("B", ["0", "1", "2"], Vec::<String>::new()),
            Variable::new("C", ["0", "1"], ["A", "B"]),
            Variable::new("D", ["0", "1"], ["A"]),
        ])
        .unwrap();
        assert_eq!(s.parent_configurations("A").unwrap(), vec![ParentConfig::default()]);
        let configs = s.parent_configurations("C").unwrap();
        assert_eq!(configs.len(), 6);
        let pairs: Vec<(usize, usize)> = configs
            .iter()
            .map(|c| (c.get("A").unwrap(), c.get("B").unwrap()))
            .collect();
        assert_eq!(pairs, [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
        for (r, c) in configs.iter().enumerate() {
            assert_eq!(s.config_row(2, c).unwrap(), r);
        }
        let d = s.parent_configurations("D").unwrap();
        assert_eq!(d.len(), 2);
        assert!(matches!(
            s.parent_configurations("nope"),
            Err(NetworkError::UnknownVariable(_))
        ));
    }

    #[test]
    fn two_binary_parents_enumerate_four_configs() {
        let s = Structure::new(vec![
            Variable::new("A", ["0", "1"], Vec::<String>::new()),
            Variable::new("B", ["0", "1"], Vec::<String>::new()),
            Variable::new("C", ["0", "1"], ["A", "B"]),
        ])
        .unwrap();
        let got: Vec<Vec<(String, usize)>> = s
            .parent_configurations("C")
            .unwrap()
            .into_iter()
            .map(|c| c.assignments().to_vec())
            .collect();
        let want: Vec<Vec<(String, usize)>> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(a, b)| vec![("A".to_string(), a), ("B".to_string(), b)])
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn argmax_breaks_ties_to_first_state() {
        let d = Distribution::<f64>::uniform(3);
        assert_eq!(d.argmax(), 0);
        let d = Distribution::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(d.argmax(), 1);
    }
}
