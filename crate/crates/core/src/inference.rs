//! Exact inference by variable elimination.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bn::{Distribution, Network, NetworkError};
use crate::scalar::Prob;

/// Largest joint table [`joint_table`] will build by default.
pub const DEFAULT_JOINT_CAP: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("query is empty")]
    EmptyQuery,
    #[error("variable `{0}` appears twice in the query")]
    DuplicateQuery(String),
    #[error("query variable `{0}` is also observed")]
    QueryIsEvidence(String),
    #[error("impossible evidence: probability 0 under the network")]
    ImpossibleEvidence,
    #[error("joint table would have {size} entries, cap is {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("elimination order is not a permutation of the hidden variables: {0}")]
    BadOrder(String),
    #[error("factor has {found} values, scope implies {expected}")]
    FactorShape { expected: usize, found: usize },
}

/// Observed states by variable name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<String, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: impl Into<String>, state: usize) -> Self {
        self.assignments.insert(variable.into(), state);
        self
    }

    pub fn insert(&mut self, variable: impl Into<String>, state: usize) {
        self.assignments.insert(variable.into(), state);
    }

    pub fn get(&self, variable: &str) -> Option<usize> {
        self.assignments.get(variable).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    fn resolve<T: Prob>(&self, net: &Network<T>) -> Result<Vec<(usize, usize)>, NetworkError> {
        let s = net.structure();
        self.assignments
            .iter()
            .map(|(name, &state)| {
                let id = s.id(name)?;
                if state >= s.cardinality(id) {
                    return Err(NetworkError::StateOutOfRange {
                        variable: name.clone(),
                        index: state,
                        cardinality: s.cardinality(id),
                    });
                }
                Ok((id, state))
            })
            .collect()
    }
}

/// A dense non-negative table over the joint states of its scope.
///
/// Scope entries are variable ids of the owning network; the last scope
/// variable varies fastest in `values`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor<T> {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<T>,
}

impl<T: Prob> Factor<T> {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<T>) -> Result<Self, InferenceError> {
        let expected: usize = cards.iter().product();
        if values.len() != expected || vars.len() != cards.len() {
            return Err(InferenceError::FactorShape {
                expected,
                found: values.len(),
            });
        }
        Ok(Factor { vars, cards, values })
    }

    fn scalar(v: T) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![v],
        }
    }

    /// The factor `P(var | parents)` with scope `parents ++ [var]`.
    pub fn from_cpt(net: &Network<T>, id: usize) -> Self {
        let s = net.structure();
        let mut vars = s.parents(id).to_vec();
        vars.push(id);
        let cards = vars.iter().map(|&v| s.cardinality(v)).collect();
        let values = net
            .cpt(id)
            .rows
            .iter()
            .flat_map(|d| d.probs().iter().copied())
            .collect();
        Factor { vars, cards, values }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn scope_names<'a, U: Prob>(&self, net: &'a Network<U>) -> Vec<&'a str> {
        self.vars.iter().map(|&v| net.structure().name(v)).collect()
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for k in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }

    /// Pointwise product over the union of both scopes.
    pub fn product(&self, other: &Factor<T>) -> Factor<T> {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(&v) {
                vars.push(v);
                cards.push(c);
            }
        }
        let a_strides = self.strides();
        let b_strides = other.strides();
        // stride of each result variable inside a and b (0 when absent)
        let sa: Vec<usize> = vars
            .iter()
            .map(|&v| self.position(v).map_or(0, |k| a_strides[k]))
            .collect();
        let sb: Vec<usize> = vars
            .iter()
            .map(|&v| other.position(v).map_or(0, |k| b_strides[k]))
            .collect();

        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut state = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for k in (0..vars.len()).rev() {
                state[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if state[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                state[k] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    /// Sums `var` out of the scope. No-op when `var` is absent.
    pub fn sum_out(&self, var: usize) -> Factor<T> {
        let Some(k) = self.position(var) else {
            return self.clone();
        };
        let strides = self.strides();
        let (outer, card, inner) = (
            self.values.len() / (strides[k] * self.cards[k]),
            self.cards[k],
            strides[k],
        );
        let mut values = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for i in 0..inner {
                    values[o * inner + i] = values[o * inner + i] + self.values[base + i];
                }
            }
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        Factor { vars, cards, values }
    }

    /// Restricts `var` to `state` and drops it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor<T> {
        let Some(k) = self.position(var) else {
            return self.clone();
        };
        let strides = self.strides();
        let (outer, card, inner) = (
            self.values.len() / (strides[k] * self.cards[k]),
            self.cards[k],
            strides[k],
        );
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * card + state) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        Factor { vars, cards, values }
    }

    /// Reorders the scope. `order` must be a permutation of the scope.
    pub fn permuted(&self, order: &[usize]) -> Factor<T> {
        let strides = self.strides();
        let src: Vec<usize> = order
            .iter()
            .map(|v| strides[self.position(*v).expect("order is a permutation of the scope")])
            .collect();
        let cards: Vec<usize> = order
            .iter()
            .map(|v| self.cards[self.position(*v).expect("in scope")])
            .collect();
        let mut values = Vec::with_capacity(self.values.len());
        let mut state = vec![0usize; order.len()];
        let mut idx = 0usize;
        for _ in 0..self.values.len() {
            values.push(self.values[idx]);
            for k in (0..order.len()).rev() {
                state[k] += 1;
                idx += src[k];
                if state[k] < cards[k] {
                    break;
                }
                idx -= src[k] * cards[k];
                state[k] = 0;
            }
        }
        Factor {
            vars: order.to_vec(),
            cards,
            values,
        }
    }

    /// Marginal over `keep`, in that order.
    pub fn marginal(&self, keep: &[usize]) -> Factor<T> {
        let mut f = self.clone();
        for v in self.vars.iter().filter(|v| !keep.contains(v)) {
            f = f.sum_out(*v);
        }
        f.permuted(keep)
    }
}

struct Query {
    query: Vec<usize>,
    evidence: Vec<(usize, usize)>,
    hidden: Vec<usize>,
}

fn prepare<T: Prob>(net: &Network<T>, query: &[&str], ev: &Evidence) -> Result<Query, InferenceError> {
    if query.is_empty() {
        return Err(InferenceError::EmptyQuery);
    }
    let s = net.structure();
    let mut q = Vec::with_capacity(query.len());
    for name in query {
        let id = s.id(name)?;
        if q.contains(&id) {
            return Err(InferenceError::DuplicateQuery(name.to_string()));
        }
        if ev.get(name).is_some() {
            return Err(InferenceError::QueryIsEvidence(name.to_string()));
        }
        q.push(id);
    }
    let evidence = ev.resolve(net)?;

    // Only ancestors of the query and evidence influence the answer.
    let mut relevant = vec![false; s.len()];
    let mut stack: Vec<usize> = q.iter().copied().chain(evidence.iter().map(|e| e.0)).collect();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut relevant[v], true) {
            stack.extend(s.parents(v).iter().copied());
        }
    }
    let hidden = (0..s.len())
        .filter(|&v| relevant[v] && !q.contains(&v) && !evidence.iter().any(|e| e.0 == v))
        .collect();
    Ok(Query {
        query: q,
        evidence,
        hidden,
    })
}

fn initial_factors<T: Prob>(net: &Network<T>, prep: &Query) -> Vec<Factor<T>> {
    let mut ids: BTreeSet<usize> = prep.query.iter().copied().collect();
    ids.extend(prep.hidden.iter().copied());
    ids.extend(prep.evidence.iter().map(|e| e.0));
    ids.into_iter()
        .map(|id| {
            let mut f = Factor::from_cpt(net, id);
            for &(v, s) in &prep.evidence {
                f = f.reduce(v, s);
            }
            f
        })
        .collect()
}

/// Greedy min-degree order over the interaction graph, ties by name.
fn min_degree_order<T: Prob>(net: &Network<T>, factors: &[Factor<T>], hidden: &[usize]) -> Vec<usize> {
    let mut scopes: Vec<BTreeSet<usize>> = factors.iter().map(|f| f.vars().iter().copied().collect()).collect();
    let mut remaining: Vec<usize> = hidden.to_vec();
    let mut order = Vec::with_capacity(hidden.len());
    while !remaining.is_empty() {
        let neighbours = |v: usize, scopes: &[BTreeSet<usize>]| -> BTreeSet<usize> {
            scopes
                .iter()
                .filter(|sc| sc.contains(&v))
                .flat_map(|sc| sc.iter().copied())
                .filter(|&u| u != v)
                .collect()
        };
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                neighbours(a, &scopes)
                    .len()
                    .cmp(&neighbours(b, &scopes).len())
                    .then_with(|| net.structure().name(a).cmp(net.structure().name(b)))
            })
            .expect("nonempty");
        let merged = neighbours(best, &scopes);
        scopes.retain(|sc| !sc.contains(&best));
        scopes.push(merged);
        remaining.remove(pos);
        order.push(best);
    }
    order
}

fn run_elimination<T: Prob>(
    mut factors: Vec<Factor<T>>,
    order: &[usize],
    query: &[usize],
) -> Result<Distribution<T>, InferenceError> {
    for &v in order {
        let (with, without): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.vars().contains(&v));
        factors = without;
        let merged = with.iter().fold(Factor::scalar(T::one()), |acc, f| acc.product(f));
        factors.push(merged.sum_out(v));
    }
    let joint = factors
        .iter()
        .fold(Factor::scalar(T::one()), |acc, f| acc.product(f))
        .permuted(query);
    let z = joint.total();
    if z.is_nan() || z <= T::zero() {
        return Err(InferenceError::ImpossibleEvidence);
    }
    Ok(Distribution::from_normalized(
        joint.values.into_iter().map(|v| v / z).collect(),
    ))
}

/// `P(query | evidence)` as a distribution over the joint query states, in
/// odometer order over `query` (last fastest).
pub fn eliminate<T: Prob>(net: &Network<T>, query: &[&str], ev: &Evidence) -> Result<Distribution<T>, InferenceError> {
    let prep = prepare(net, query, ev)?;
    let factors = initial_factors(net, &prep);
    let order = min_degree_order(net, &factors, &prep.hidden);
    run_elimination(factors, &order, &prep.query)
}

/// Like [`eliminate`] with a caller-chosen order over the hidden variables
/// (the non-query, non-evidence ancestors of query and evidence).
pub fn eliminate_with_order<T: Prob>(
    net: &Network<T>,
    query: &[&str],
    ev: &Evidence,
    order: &[&str],
) -> Result<Distribution<T>, InferenceError> {
    let prep = prepare(net, query, ev)?;
    let s = net.structure();
    let ids: Vec<usize> = order
        .iter()
        .filter_map(|n| s.index_of(n))
        .filter(|id| prep.hidden.contains(id))
        .collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let mut hidden = prep.hidden.clone();
    hidden.sort_unstable();
    if sorted != hidden || ids.len() != hidden.len() {
        return Err(InferenceError::BadOrder(format!(
            "hidden variables are {:?}",
            hidden.iter().map(|&h| s.name(h)).collect::<Vec<_>>()
        )));
    }
    let factors = initial_factors(net, &prep);
    run_elimination(factors, &ids, &prep.query)
}

pub fn posterior<T: Prob>(net: &Network<T>, target: &str, ev: &Evidence) -> Result<Distribution<T>, InferenceError> {
    eliminate(net, &[target], ev)
}

/// `p(pa = u)` for every parent configuration `u` of `var`, canonical order.
pub fn parent_marginal<T: Prob>(net: &Network<T>, var: &str) -> Result<Distribution<T>, InferenceError> {
    let s = net.structure();
    let id = s.id(var)?;
    let parents: Vec<&str> = s.parents(id).iter().map(|&p| s.name(p)).collect();
    if parents.is_empty() {
        return Ok(Distribution::from_normalized(vec![T::one()]));
    }
    eliminate(net, &parents, &Evidence::new())
}

/// The full joint as a factor over all variables in declaration order.
pub fn joint_table<T: Prob>(net: &Network<T>, cap: usize) -> Result<Factor<T>, InferenceError> {
    let s = net.structure();
    let cards = s.cardinalities();
    let size = cards
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .unwrap_or(usize::MAX);
    if size > cap {
        return Err(InferenceError::CapExceeded { size, cap });
    }
    let mut values = Vec::with_capacity(size);
    let mut state = vec![0usize; cards.len()];
    for _ in 0..size {
        values.push(net.joint_probability(&state));
        for k in (0..cards.len()).rev() {
            state[k] += 1;
            if state[k] < cards[k] {
                break;
            }
            state[k] = 0;
        }
    }
    Ok(Factor {
        vars: (0..cards.len()).collect(),
        cards,
        values,
    })
}
